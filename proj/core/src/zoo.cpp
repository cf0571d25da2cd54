#include "blochtk/zoo.hpp"

#include <cmath>
#include <random>

namespace blochtk {

namespace {

constexpr double kTau = 6.283185307179586476925286766559;

// -- random scalar Fourier fields with exact grid parity ---------------------

struct Mode {
  std::array<int, 3> n{0, 0, 0};
  double coeff = 0.0;
};

std::vector<Mode> draw_modes(const TorusGrid& grid, std::mt19937_64& rng, double scale,
                             int count = 3) {
  std::uniform_int_distribution<int> pick(-1, 1);
  std::uniform_real_distribution<double> amp(-scale, scale);
  std::vector<Mode> modes;
  while (static_cast<int>(modes.size()) < count) {
    Mode m;
    bool nonzero = false;
    for (int a = 0; a < grid.dim; ++a) {
      m.n[a] = pick(rng);
      nonzero = nonzero || m.n[a] != 0;
    }
    if (!nonzero) continue;
    m.coeff = amp(rng);
    modes.push_back(m);
  }
  return modes;
}

enum class parity { even, odd };

// sampled field with the exact grid symmetry v(-k) = +-v(k)
std::vector<double> scalar_field(const TorusGrid& grid, const std::vector<Mode>& modes,
                                 double offset, parity par) {
  std::vector<double> v(grid.size(), par == parity::even ? offset : 0.0);
  for (size_t i = 0; i < v.size(); ++i) {
    for (const Mode& m : modes) {
      double phase = 0.0;
      for (int a = 0; a < grid.dim; ++a) phase += m.n[a] * grid.coordinate(i, a);
      v[i] += m.coeff * (par == parity::even ? std::cos(kTau * phase) : std::sin(kTau * phase));
    }
  }
  for (size_t i = 0; i < v.size(); ++i) { // enforce the parity bitwise
    size_t r = grid.reflect(i);
    if (i < r)
      v[r] = (par == parity::even) ? v[i] : -v[i];
    else if (i == r && par == parity::odd)
      v[i] = 0.0;
  }
  return v;
}

// extra deterministic mode pinned to one axis (used to prescribe structure)
std::vector<double> axis_wave(const TorusGrid& grid, int axis, int mult, double coeff,
                              parity par) {
  Mode m;
  m.n[axis] = mult;
  m.coeff = coeff;
  return scalar_field(grid, {m}, 0.0, par);
}

// -- random Hermitian Fourier fields -----------------------------------------

CMatrix rand_herm(int n, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  CMatrix h(n, n);
  for (int i = 0; i < n; ++i) {
    h(i, i) = g(rng);
    for (int j = i + 1; j < n; ++j) {
      cplx v(g(rng), g(rng));
      h(i, j) = v;
      h(j, i) = std::conj(v);
    }
  }
  return h;
}

// H(k) = A + sum_axis B_a cos(2 pi k_a) + C_a sin(2 pi k_a)
std::vector<CMatrix> hermitian_field(const TorusGrid& grid, int n, std::mt19937_64& rng,
                                     double scale) {
  CMatrix a = rand_herm(n, rng, scale);
  std::vector<CMatrix> bc, bs;
  for (int ax = 0; ax < grid.dim; ++ax) {
    bc.push_back(rand_herm(n, rng, scale));
    bs.push_back(rand_herm(n, rng, scale));
  }
  std::vector<CMatrix> h(grid.size());
  for (size_t i = 0; i < h.size(); ++i) {
    CMatrix x = a;
    for (int ax = 0; ax < grid.dim; ++ax) {
      double k = kTau * grid.coordinate(i, ax);
      x += cplx(std::cos(k)) * bc[static_cast<size_t>(ax)];
      x += cplx(std::sin(k)) * bs[static_cast<size_t>(ax)];
    }
    h[i] = x;
  }
  return h;
}

const CMatrix& sigma(int j) {
  static const CMatrix s1 = [] {
    CMatrix s(2, 2);
    s(0, 1) = 1.0;
    s(1, 0) = 1.0;
    return s;
  }();
  static const CMatrix s2 = [] {
    CMatrix s(2, 2);
    s(0, 1) = cplx(0.0, -1.0);
    s(1, 0) = cplx(0.0, 1.0);
    return s;
  }();
  static const CMatrix s3 = [] {
    CMatrix s(2, 2);
    s(0, 0) = 1.0;
    s(1, 1) = -1.0;
    return s;
  }();
  return j == 1 ? s1 : (j == 2 ? s2 : s3);
}

// -- matching-family generators ----------------------------------------------

UnitaryFamily make_identity(const ModelSpec& spec) {
  UnitaryFamily fam;
  fam.grid = TorusGrid(spec.dim, spec.n_pts);
  fam.m = spec.m;
  fam.symmetry = spec.kind == sym_kind::bosonic ? SymmetryKind::bosonic(spec.m)
                                                : SymmetryKind::fermionic(spec.m);
  fam.samples.assign(fam.grid.size(), CMatrix::identity(spec.m));
  return fam;
}

UnitaryFamily make_diag_winding(const ModelSpec& spec) {
  if (spec.kind != sym_kind::fermionic)
    throw error(errc::invalid_input, "zoo: diag-winding is a fermionic construction");
  if (spec.m < 2) throw error(errc::shape, "zoo: diag-winding needs m >= 2");
  UnitaryFamily fam = make_identity(spec);
  for (size_t i = 0; i < fam.samples.size(); ++i) {
    double k1 = fam.grid.coordinate(i, 0);
    fam.samples[i](0, 0) = std::polar(1.0, kTau * spec.winding * k1);
    fam.samples[i](1, 1) = std::polar(1.0, -kTau * spec.winding * k1);
  }
  return fam;
}

UnitaryFamily make_factorized(const ModelSpec& spec) {
  if (spec.kind == sym_kind::fermionic && spec.m % 2 != 0)
    throw error(errc::shape, "zoo: fermionic factorized needs even m");
  std::mt19937_64 rng(spec.seed);
  TorusGrid grid(spec.dim, spec.n_pts);
  std::vector<CMatrix> h = hermitian_field(grid, spec.m, rng, spec.scale);

  SymmetryKind sym = spec.kind == sym_kind::bosonic ? SymmetryKind::bosonic(spec.m)
                                                    : SymmetryKind::fermionic(spec.m);
  CMatrix eps = sym.epsilon();
  CMatrix eps_inv = inverse(eps);

  std::vector<CMatrix> gamma(grid.size());
  for (size_t i = 0; i < gamma.size(); ++i) {
    CMatrix u = exp_i(h[i]);
    double k1 = grid.coordinate(i, 0);
    for (int col = 0; col < spec.m; ++col)
      u(0, col) *= std::polar(1.0, kTau * spec.winding * k1);
    gamma[i] = u;
  }

  UnitaryFamily fam;
  fam.grid = grid;
  fam.m = spec.m;
  fam.symmetry = sym;
  fam.samples.resize(grid.size());
  for (size_t i = 0; i < gamma.size(); ++i) {
    size_t r = grid.reflect(i);
    fam.samples[i] = eps_inv * gamma[r].transpose() * eps * gamma[i];
  }
  return fam;
}

UnitaryFamily make_su2_random(const ModelSpec& spec) {
  if (spec.m != 2) throw error(errc::shape, "zoo: su2-random is rank 2");
  std::mt19937_64 rng(spec.seed);
  TorusGrid grid(spec.dim, spec.n_pts);
  double small = std::min(spec.scale, 0.05);

  std::vector<double> q0, f1, f2, f3;
  if (spec.kind == sym_kind::bosonic) {
    q0 = scalar_field(grid, draw_modes(grid, rng, spec.scale), 1.0, parity::even);
    f1 = scalar_field(grid, draw_modes(grid, rng, spec.scale), 0.0, parity::even);
    f2 = scalar_field(grid, draw_modes(grid, rng, spec.scale), 0.0, parity::odd);
    f3 = scalar_field(grid, draw_modes(grid, rng, spec.scale), 0.0, parity::even);
  } else {
    if (spec.winding % 2 != 0) {
      // sign of q0 flips between k1 = 0 and k1 = 1/2: GP index 1
      q0 = axis_wave(grid, 0, 1, 0.8, parity::even);
      std::vector<double> wob = scalar_field(grid, draw_modes(grid, rng, small), 0.0, parity::even);
      for (size_t i = 0; i < q0.size(); ++i) q0[i] += wob[i];
      f2 = axis_wave(grid, 0, 1, 0.7, parity::odd);
      std::vector<double> fo = scalar_field(grid, draw_modes(grid, rng, small), 0.0, parity::odd);
      for (size_t i = 0; i < f2.size(); ++i) f2[i] += fo[i];
    } else {
      q0 = scalar_field(grid, draw_modes(grid, rng, small), 0.8, parity::even);
      f2 = scalar_field(grid, draw_modes(grid, rng, spec.scale), 0.0, parity::odd);
    }
    f1 = scalar_field(grid, draw_modes(grid, rng, small), 0.0, parity::odd);
    f3 = scalar_field(grid, draw_modes(grid, rng, small), 0.0, parity::odd);
  }

  UnitaryFamily fam;
  fam.grid = grid;
  fam.m = 2;
  fam.symmetry = spec.kind == sym_kind::bosonic ? SymmetryKind::bosonic(2)
                                                : SymmetryKind::fermionic(2);
  fam.samples.resize(grid.size());
  for (size_t i = 0; i < fam.samples.size(); ++i) {
    double norm = std::sqrt(q0[i] * q0[i] + f1[i] * f1[i] + f2[i] * f2[i] + f3[i] * f3[i]);
    if (norm < 0.1)
      throw error(errc::invalid_input, "zoo: su2-random field nearly vanishes, pick another seed");
    CMatrix a = CMatrix::identity(2);
    a *= cplx(q0[i] / norm);
    a += cplx(0.0, f1[i] / norm) * sigma(1);
    a += cplx(0.0, f2[i] / norm) * sigma(2);
    a += cplx(0.0, f3[i] / norm) * sigma(3);
    fam.samples[i] = a;
  }
  return fam;
}

UnitaryFamily make_product(const ModelSpec& spec) {
  if (spec.kind != sym_kind::fermionic)
    throw error(errc::invalid_input, "zoo: product is a fermionic construction");
  if (spec.m < 4 || spec.m % 2 != 0)
    throw error(errc::shape, "zoo: product needs even m >= 4");
  ModelSpec head = spec;
  head.name = "diag-winding";
  head.m = 2;
  ModelSpec tail = spec;
  tail.name = "factorized";
  tail.m = spec.m - 2;
  tail.seed = spec.seed + 1;
  tail.winding = 0;
  return direct_sum(make_diag_winding(head), make_factorized(tail));
}

// -- projection-family generators ---------------------------------------------

CMatrix leading_projector(int amb, int m) {
  CMatrix p(amb, amb);
  for (int i = 0; i < m; ++i) p(i, i) = 1.0;
  return p;
}

ProjectionFamily make_constant(const ModelSpec& spec) {
  if (spec.m > spec.amb) throw error(errc::shape, "zoo: rank exceeds ambient dimension");
  if (spec.kind == sym_kind::fermionic && (spec.m % 2 != 0 || spec.amb % 2 != 0))
    throw error(errc::shape, "zoo: fermionic constant needs even rank and ambient dimension");
  ProjectionFamily fam;
  fam.grid = TorusGrid(spec.dim, spec.n_pts);
  fam.amb = spec.amb;
  fam.m = spec.m;
  fam.symmetry = spec.kind == sym_kind::bosonic ? SymmetryKind::bosonic(spec.amb)
                                                : SymmetryKind::fermionic(spec.amb);
  fam.samples.assign(fam.grid.size(), leading_projector(spec.amb, spec.m));
  return fam;
}

ProjectionFamily make_gauged(const ModelSpec& spec) {
  ProjectionFamily fam = make_constant(spec);
  std::mt19937_64 rng(spec.seed);
  std::vector<CMatrix> kk = hermitian_field(fam.grid, spec.amb, rng, spec.scale);

  CMatrix eps = fam.symmetry.epsilon();
  CMatrix eps_inv = inverse(eps);
  for (size_t i = 0; i < kk.size(); ++i) { // exact W(-k) = theta W(k) theta^-1
    size_t r = fam.grid.reflect(i);
    if (i > r) continue;
    CMatrix sym = cplx(0.5) * (kk[i] - eps * kk[r].conj() * eps_inv);
    kk[i] = sym;
    kk[r] = cplx(-1.0) * (eps * sym.conj() * eps_inv);
  }
  CMatrix p0 = leading_projector(spec.amb, spec.m);
  for (size_t i = 0; i < kk.size(); ++i) {
    CMatrix w = exp_i(kk[i]);
    fam.samples[i] = w * p0 * w.adjoint();
  }
  return fam;
}

ProjectionFamily make_stacked_2d(const ModelSpec& spec) {
  int w = spec.winding;
  TorusGrid grid(3, spec.n_pts);
  TorusGrid plane(2, spec.n_pts);

  // gapped rank-1 band projector Q = (1 - n.sigma)/2 with Chern number w
  double mass = (w == 0) ? 3.0 : 1.0;
  int mult = (w == 0) ? 1 : w;
  std::vector<CMatrix> q(plane.size());
  for (size_t i = 0; i < q.size(); ++i) {
    double k1 = kTau * mult * plane.coordinate(i, 0);
    double k2 = kTau * plane.coordinate(i, 1);
    double h1 = std::sin(k1), h2 = std::sin(k2), h3 = mass - std::cos(k1) - std::cos(k2);
    double nrm = std::sqrt(h1 * h1 + h2 * h2 + h3 * h3);
    CMatrix m = CMatrix::identity(2);
    m -= cplx(h1 / nrm) * sigma(1);
    m -= cplx(h2 / nrm) * sigma(2);
    m -= cplx(h3 / nrm) * sigma(3);
    q[i] = cplx(0.5) * m;
  }

  // P = Q(k) on the (x1,x2) legs and conj(Q(-k)) on the (y1,y2) legs, in the
  // interleaved basis (x1, y1, x2, y2) where theta has epsilon = diag(J, J)
  ProjectionFamily fam;
  fam.grid = grid;
  fam.amb = 4;
  fam.m = 2;
  fam.symmetry = SymmetryKind::fermionic(4);
  fam.samples.resize(grid.size());
  const int xi[2] = {0, 2}, yi[2] = {1, 3};
  for (size_t i = 0; i < fam.samples.size(); ++i) {
    auto c = grid.unflatten(i);
    size_t f = plane.flatten({c[0], c[1], 0});
    size_t fr = plane.reflect(f);
    CMatrix p(4, 4);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        p(xi[a], xi[b]) = q[f](a, b);
        p(yi[a], yi[b]) = std::conj(q[fr](a, b));
      }
    fam.samples[i] = p;
  }
  return fam;
}

} // namespace

UnitaryFamily direct_sum(const UnitaryFamily& a, const UnitaryFamily& b) {
  if (a.grid.dim != b.grid.dim || a.grid.n != b.grid.n)
    throw error(errc::shape, "direct_sum: grids differ");
  bool ferm_a = a.symmetry && a.symmetry->kind == sym_kind::fermionic;
  bool ferm_b = b.symmetry && b.symmetry->kind == sym_kind::fermionic;
  if (a.symmetry.has_value() != b.symmetry.has_value() || ferm_a != ferm_b)
    throw error(errc::symmetry, "direct_sum: symmetry kinds differ");
  UnitaryFamily out;
  out.grid = a.grid;
  out.m = a.m + b.m;
  if (a.symmetry)
    out.symmetry = ferm_a ? SymmetryKind::fermionic(out.m) : SymmetryKind::bosonic(out.m);
  out.samples.resize(out.grid.size());
  for (size_t i = 0; i < out.samples.size(); ++i) {
    CMatrix s(out.m, out.m);
    for (int r = 0; r < a.m; ++r)
      for (int c = 0; c < a.m; ++c) s(r, c) = a.samples[i](r, c);
    for (int r = 0; r < b.m; ++r)
      for (int c = 0; c < b.m; ++c) s(a.m + r, a.m + c) = b.samples[i](r, c);
    out.samples[i] = s;
  }
  return out;
}

UnitaryFamily make_matching(const ModelSpec& spec) {
  if (spec.name == "identity") return make_identity(spec);
  if (spec.name == "diag-winding") return make_diag_winding(spec);
  if (spec.name == "factorized") return make_factorized(spec);
  if (spec.name == "su2-random") return make_su2_random(spec);
  if (spec.name == "product") return make_product(spec);
  throw error(errc::invalid_input, "zoo: unknown matching family '" + spec.name + "'");
}

ProjectionFamily make_projections(const ModelSpec& spec) {
  if (spec.name == "constant") return make_constant(spec);
  if (spec.name == "gauged") return make_gauged(spec);
  if (spec.name == "stacked-2d") return make_stacked_2d(spec);
  throw error(errc::invalid_input, "zoo: unknown projection family '" + spec.name + "'");
}

std::vector<std::string> matching_catalog() {
  return {"identity", "diag-winding", "factorized", "su2-random", "product"};
}

std::vector<std::string> projection_catalog() { return {"constant", "gauged", "stacked-2d"}; }

} // namespace blochtk
