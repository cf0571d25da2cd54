#include "blochtk/genericize.hpp"

#include <algorithm>
#include <cmath>

namespace blochtk {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kTau = 2.0 * kPi;

const CMatrix& sigma(int j) {
  static const CMatrix s1 = [] {
    CMatrix m(2, 2);
    m(0, 1) = 1.0;
    m(1, 0) = 1.0;
    return m;
  }();
  static const CMatrix s2 = [] {
    CMatrix m(2, 2);
    m(0, 1) = cplx(0.0, -1.0);
    m(1, 0) = cplx(0.0, 1.0);
    return m;
  }();
  static const CMatrix s3 = [] {
    CMatrix m(2, 2);
    m(0, 0) = 1.0;
    m(1, 1) = -1.0;
    return m;
  }();
  switch (j) {
    case 1: return s1;
    case 2: return s2;
    default: return s3;
  }
}

int axis_dist(int n, int a, int b) {
  int d = std::abs(a - b) % n;
  return std::min(d, n - d);
}

int cheb_dist(const TorusGrid& g, size_t x, size_t y) {
  auto cx = g.unflatten(x);
  auto cy = g.unflatten(y);
  int best = 0;
  for (int a = 0; a < g.dim; ++a) best = std::max(best, axis_dist(g.n, cx[a], cy[a]));
  return best;
}

int dist_to_sharps(const TorusGrid& g, size_t x, const std::vector<size_t>& sharps) {
  int best = g.n;
  for (size_t s : sharps) best = std::min(best, cheb_dist(g, x, s));
  return best;
}

// all m eigenphases (with multiplicity), ascending in (-pi, pi]
std::vector<double> all_phases(const CMatrix& u) {
  SpectralDecomp d = unitary_eig(u, 1e-12);
  std::vector<double> out;
  for (size_t j = 0; j < d.values.size(); ++j)
    for (int r = 0; r < d.multiplicities[j]; ++r) out.push_back(d.values[j]);
  std::sort(out.begin(), out.end());
  return out;
}

double min_circ_gap(const std::vector<double>& ph) {
  if (ph.size() < 2) return kTau;
  double best = kTau - (ph.back() - ph.front());
  for (size_t i = 0; i + 1 < ph.size(); ++i) best = std::min(best, ph[i + 1] - ph[i]);
  return best;
}

// simple gap at a mandatory-pair point: phases must come in near-exact pairs;
// returns the smallest inter-pair circular distance.
double inter_pair_gap(const std::vector<double>& ph, double pair_tol, bool* pairs_ok) {
  size_t m = ph.size();
  *pairs_ok = (m % 2 == 0);
  if (!*pairs_ok) return 0.0;
  std::vector<double> reps;
  for (size_t t = 0; t + 1 < m; t += 2) {
    if (ph[t + 1] - ph[t] > pair_tol) *pairs_ok = false;
    reps.push_back(0.5 * (ph[t] + ph[t + 1]));
  }
  return min_circ_gap(reps);
}

std::vector<double> bump_field(const TorusGrid& g, const std::array<double, 3>& center,
                               double plateau, double support) {
  std::vector<BumpProfile> per;
  for (int a = 0; a < g.dim; ++a) per.push_back(make_bump(center[a], plateau, support, g.n));
  std::vector<double> out(g.size(), 1.0);
  for (size_t f = 0; f < g.size(); ++f) {
    auto c = g.unflatten(f);
    for (int a = 0; a < g.dim; ++a) out[f] *= per[a][c[a]];
  }
  return out;
}

std::array<double, 3> coords_of(const TorusGrid& g, size_t flat) {
  std::array<double, 3> c{0.0, 0.0, 0.0};
  for (int a = 0; a < g.dim; ++a) c[a] = g.coordinate(flat, a);
  return c;
}

CMatrix hermitize(const CMatrix& x) {
  CMatrix h = x;
  CMatrix ad = x.adjoint();
  h += ad;
  h *= 0.5;
  return h;
}

// eps^-1 B^t eps; for Hermitian B this is again Hermitian and the map whose
// fixed points are the TRS-invariant Hermitians.
CMatrix trs_partner(const CMatrix& b, const SymmetryKind& sym) {
  CMatrix eps = sym.epsilon();
  return inverse(eps) * b.transpose() * eps;
}

// h(k) = chi(k) B + chi(-k) eps^-1 B^t eps: exactly TRS on the grid for any
// Hermitian B and any localization profile chi.
SelfAdjointFamily localized_trs_field(const TorusGrid& g, const SymmetryKind& sym,
                                      const std::vector<double>& chi, const CMatrix& b) {
  SelfAdjointFamily h;
  h.grid = g;
  h.m = sym.m;
  h.symmetry = sym;
  h.samples.resize(g.size());
  CMatrix partner = trs_partner(b, sym);
  for (size_t f = 0; f < g.size(); ++f) {
    CMatrix v = chi[f] * b;
    v += chi[g.reflect(f)] * partner;
    h.samples[f] = std::move(v);
  }
  return h;
}

CMatrix column_of(const CMatrix& m, int j) {
  CMatrix c(m.rows, 1);
  for (int i = 0; i < m.rows; ++i) c(i, 0) = m(i, j);
  return c;
}

cplx dotc(const CMatrix& a, const CMatrix& b) {
  cplx s = 0.0;
  for (int i = 0; i < a.rows; ++i) s += std::conj(a(i, 0)) * b(i, 0);
  return s;
}

// orthonormal basis of Ran(proj) consisting of theta-fixed vectors (bosonic
// theta^2 = +1 only)
std::vector<CMatrix> theta_real_basis(const CMatrix& proj, const SymmetryKind& sym, int rank) {
  std::vector<CMatrix> basis;
  int m = proj.rows;
  for (int j = 0; j < 2 * m && static_cast<int>(basis.size()) < rank; ++j) {
    CMatrix w = column_of(proj, j % m);
    if (j >= m) w = cplx(0.0, 1.0) * w;
    for (const CMatrix& b : basis) w -= dotc(b, w) * b;
    if (fro_norm(w) < 1e-8) continue;
    CMatrix u = w + sym.theta(w);
    if (fro_norm(u) < 1e-8) u = cplx(0.0, 1.0) * (w - sym.theta(w));
    for (const CMatrix& b : basis) u -= dotc(b, u) * b;
    double nn = fro_norm(u);
    if (nn < 1e-8) continue;
    u *= 1.0 / nn;
    basis.push_back(u);
  }
  if (static_cast<int>(basis.size()) < rank)
    throw error(errc::symmetry, "could not build a theta-fixed eigenbasis");
  return basis;
}

// Kramers pairs (v, theta v) spanning Ran(proj) (fermionic)
std::vector<std::pair<CMatrix, CMatrix>> kramers_pairs(const CMatrix& proj,
                                                       const SymmetryKind& sym, int rank) {
  if (rank % 2 != 0)
    throw error(errc::symmetry, "odd-dimensional eigenspace cannot carry Kramers pairs");
  std::vector<std::pair<CMatrix, CMatrix>> pairs;
  std::vector<CMatrix> chosen;
  int m = proj.rows;
  for (int j = 0; j < 2 * m && static_cast<int>(pairs.size()) < rank / 2; ++j) {
    CMatrix w = column_of(proj, j % m);
    for (const CMatrix& b : chosen) w -= dotc(b, w) * b;
    double nn = fro_norm(w);
    if (nn < 1e-8) continue;
    w *= 1.0 / nn;
    CMatrix tw = sym.theta(w);
    for (const CMatrix& b : chosen) tw -= dotc(b, tw) * b;
    tw -= dotc(w, tw) * w;
    double tn = fro_norm(tw);
    if (tn < 1e-8) throw error(errc::symmetry, "Kramers partner collapsed during extraction");
    tw *= 1.0 / tn;
    pairs.emplace_back(w, tw);
    chosen.push_back(w);
    chosen.push_back(tw);
  }
  if (static_cast<int>(pairs.size()) < rank / 2)
    throw error(errc::symmetry, "could not extract a full set of Kramers pairs");
  return pairs;
}

CMatrix outer(const CMatrix& v) {
  int m = v.rows;
  CMatrix o(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) o(i, j) = v(i, 0) * std::conj(v(j, 0));
  return o;
}

double sup_distance(const UnitaryFamily& a, const UnitaryFamily& b) {
  double d = 0.0;
  for (size_t f = 0; f < a.samples.size(); ++f)
    d = std::max(d, fro_norm(a.samples[f] - b.samples[f]));
  return d;
}

// ladder field splitting the degenerate eigenspaces of alpha(k#): a
// TRS-invariant Hermitian built from eigenprojectors, tapered by an even bump
SelfAdjointFamily make_local_ladder_field(const UnitaryFamily& a, size_t ks, double budget,
                                          int ball_radius, bool* nontrivial) {
  const SymmetryKind& sym = *a.symmetry;
  SpectralDecomp dec = unitary_eig(a.at(ks), 1e-8);
  double a_pt = min_circ_gap(dec.values);
  double cap = std::min(budget, a_pt / 3.0);
  CMatrix b = CMatrix::zero(a.m, a.m);
  bool any = false;
  for (size_t j = 0; j < dec.values.size(); ++j) {
    int l = dec.multiplicities[j];
    if (sym.kind == sym_kind::bosonic) {
      if (l < 2) continue;
      any = true;
      auto basis = theta_real_basis(dec.projectors[j], sym, l);
      double step = cap / static_cast<double>(l - 1);
      for (int p = 1; p < l; ++p) b += (p * step) * outer(basis[static_cast<size_t>(p)]);
    } else {
      int pairs = l / 2;
      if (2 * pairs != l)
        throw error(errc::symmetry, "fermionic eigenspace with odd multiplicity at k#");
      if (pairs < 2) continue;
      any = true;
      auto pp = kramers_pairs(dec.projectors[j], sym, l);
      double step = cap / static_cast<double>(pairs - 1);
      for (int p = 1; p < pairs; ++p) {
        b += (p * step) * outer(pp[static_cast<size_t>(p)].first);
        b += (p * step) * outer(pp[static_cast<size_t>(p)].second);
      }
    }
  }
  *nontrivial = any;
  SelfAdjointFamily h;
  h.grid = a.grid;
  h.m = a.m;
  h.symmetry = sym;
  h.samples.assign(a.grid.size(), CMatrix::zero(a.m, a.m));
  if (!any || cap <= 0.0) return h;
  b = hermitize(0.5 * (b + trs_partner(b, sym)));
  // budget is a Frobenius distance bound: ||e^{ih/2} a e^{ih/2} - a||_F <= ||h||_F
  double bn = fro_norm(b);
  if (bn > 0.85 * budget) b *= 0.85 * budget / bn;
  double n = a.grid.n;
  std::vector<double> chi =
      bump_field(a.grid, coords_of(a.grid, ks), 0.5 * ball_radius / n, ball_radius / n);
  for (size_t f = 0; f < a.grid.size(); ++f) h.samples[f] = chi[f] * b;
  return h;
}

struct Signature {
  int max_mult = 1;
  int count = 0;
  bool operator<(const Signature& o) const {
    return max_mult != o.max_mult ? max_mult < o.max_mult : count < o.count;
  }
};

Signature region_signature(const UnitaryFamily& a, const std::vector<size_t>& region,
                           double eps1, size_t* worst = nullptr) {
  Signature sig;
  for (size_t f : region) {
    SpectralDecomp d = unitary_eig(a.at(f), eps1);
    int mm = 1;
    for (int mult : d.multiplicities) mm = std::max(mm, mult);
    if (mm > sig.max_mult) {
      sig.max_mult = mm;
      sig.count = 1;
      if (worst) *worst = f;
    } else if (mm == sig.max_mult && mm > 1) {
      ++sig.count;
    }
  }
  return sig;
}

CMatrix random_hermitian(int m, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMatrix h(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) h(i, j) = cplx(g(rng), g(rng));
  return hermitize(h);
}

// smooth random Hermitian field (constant plus one Fourier mode per axis),
// made exactly TRS by pairwise grid symmetrization, sup Frobenius norm <= amp
SelfAdjointFamily global_trs_field(const TorusGrid& g, const SymmetryKind& sym, double amp,
                                   std::mt19937_64& rng) {
  int m = sym.m;
  CMatrix a0 = random_hermitian(m, rng);
  std::vector<CMatrix> bc, bs;
  for (int ax = 0; ax < g.dim; ++ax) {
    bc.push_back(random_hermitian(m, rng));
    bs.push_back(random_hermitian(m, rng));
  }
  SelfAdjointFamily h;
  h.grid = g;
  h.m = m;
  h.symmetry = sym;
  h.samples.resize(g.size());
  for (size_t f = 0; f < g.size(); ++f) {
    CMatrix v = a0;
    for (int ax = 0; ax < g.dim; ++ax) {
      double k = g.coordinate(f, ax);
      v += std::cos(kTau * k) * bc[static_cast<size_t>(ax)];
      v += std::sin(kTau * k) * bs[static_cast<size_t>(ax)];
    }
    h.samples[f] = std::move(v);
  }
  for (size_t f = 0; f < g.size(); ++f) {
    size_t r = g.reflect(f);
    if (r < f) continue;
    CMatrix v = 0.5 * (h.samples[f] + trs_partner(h.samples[r], sym));
    h.samples[f] = v;
    h.samples[r] = trs_partner(v, sym);
  }
  double worst = 0.0;
  for (const CMatrix& v : h.samples) worst = std::max(worst, fro_norm(v));
  if (worst > 1e-12)
    for (CMatrix& v : h.samples) v *= amp / worst;
  return h;
}

UnitaryFamily split_on_region(const UnitaryFamily& alpha, const std::vector<size_t>& region,
                              double s, std::mt19937_64& rng, int ball_radius, int trials,
                              std::vector<SelfAdjointFamily>* fields_out) {
  const SymmetryKind& sym = *alpha.symmetry;
  const TorusGrid& g = alpha.grid;
  double eps1 = std::min(1e-7, s / 64.0);
  std::vector<size_t> sharps = g.high_symmetry_points();
  bool fermionic = sym.kind == sym_kind::fermionic;
  UnitaryFamily cur = alpha;
  for (int pass = 0; pass < 12; ++pass) {
    size_t worst = region.empty() ? 0 : region.front();
    Signature sig = region_signature(cur, region, eps1, &worst);
    if (sig.max_mult == 1) return cur;
    double budget = s / static_cast<double>(1 << (pass + 1));
    SpectralDecomp d = unitary_eig(cur.at(worst), eps1);
    CMatrix proj;
    for (size_t j = 0; j < d.values.size(); ++j)
      if (d.multiplicities[j] == sig.max_mult) {
        proj = d.projectors[j];
        break;
      }
    int support_steps = 2;
    if (fermionic) support_steps = std::max(1, std::min(2, dist_to_sharps(g, worst, sharps) - 1));
    std::vector<double> chi = bump_field(g, coords_of(g, worst),
                                         0.5 * support_steps / static_cast<double>(g.n),
                                         support_steps / static_cast<double>(g.n));
    bool accepted = false;
    for (int t = 0; t < trials && !accepted; ++t) {
      // global smooth fields split extended degeneracies in one shot;
      // localized bumps handle stubborn isolated points
      SelfAdjointFamily h;
      if (t % 2 == 0) {
        h = global_trs_field(g, sym, 0.85 * budget, rng);
      } else {
        CMatrix b = hermitize(proj * random_hermitian(alpha.m, rng) * proj);
        double nrm = fro_norm(b);
        if (nrm < 1e-12) continue;
        b *= 0.4 * budget / nrm;
        h = localized_trs_field(g, sym, chi, b);
      }
      UnitaryFamily cand = apply_symmetric_sandwich(cur, h);
      Signature sig2 = region_signature(cand, region, eps1);
      if (sig2 < sig) {
        cur = std::move(cand);
        if (fields_out) fields_out->push_back(std::move(h));
        accepted = true;
      }
    }
    if (!accepted)
      throw error(errc::search_exhausted,
                  "bulk splitting: no certified perturbation found after retries");
  }
  throw error(errc::search_exhausted, "bulk splitting: pass budget exhausted");
}

std::vector<size_t> off_ball_region(const TorusGrid& g, int ball_radius, bool exclude_balls) {
  std::vector<size_t> sharps = g.high_symmetry_points();
  std::vector<size_t> region;
  for (size_t f = 0; f < g.size(); ++f)
    if (!exclude_balls || dist_to_sharps(g, f, sharps) > ball_radius) region.push_back(f);
  return region;
}

// 1D genericization of a symmetric family, recording the applied sandwich
// fields so callers (line_lift) can replay them with a transverse blend
UnitaryFamily genericize_1d_fields(const UnitaryFamily& a1d, double s, std::mt19937_64& rng,
                                   int ball_radius, int trials,
                                   std::vector<SelfAdjointFamily>& fields) {
  UnitaryFamily cur = a1d;
  for (size_t ks : a1d.grid.high_symmetry_points()) {
    bool nontrivial = false;
    SelfAdjointFamily h = make_local_ladder_field(cur, ks, s / 2.0, ball_radius, &nontrivial);
    if (nontrivial) {
      cur = apply_symmetric_sandwich(cur, h);
      fields.push_back(std::move(h));
    }
  }
  bool fermionic = cur.symmetry->kind == sym_kind::fermionic;
  std::vector<size_t> region = off_ball_region(cur.grid, ball_radius, fermionic);
  return split_on_region(cur, region, s / 4.0, rng, ball_radius, trials, &fields);
}

// -- SU(2) internals -----------------------------------------------------------

void enforce_parity(std::vector<double>& v, const TorusGrid& g, bool even, double& dev) {
  for (size_t f = 0; f < g.size(); ++f) {
    size_t r = g.reflect(f);
    if (r < f) continue;
    if (even) {
      double avg = 0.5 * (v[f] + v[r]);
      dev = std::max(dev, std::abs(v[f] - avg));
      v[f] = avg;
      v[r] = avg;
    } else {
      double d = 0.5 * (v[f] - v[r]);
      dev = std::max(dev, std::abs(v[f] - d));
      v[f] = d;
      v[r] = -d;
    }
  }
}

std::vector<double> odd_wave(const TorusGrid& g, const std::array<int, 3>& mode) {
  std::vector<double> v(g.size());
  for (size_t f = 0; f < g.size(); ++f) {
    double x = 0.0;
    for (int a = 0; a < g.dim; ++a) x += mode[a] * g.coordinate(f, a);
    v[f] = std::sin(kTau * x);
  }
  double dev = 0.0;
  enforce_parity(v, g, false, dev);
  return v;
}

double norm3(const std::array<double, 3>& x) {
  return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
}

// Per-point certificate that the field has no zero within half a grid step of
// any participating sample: |f(p)| must exceed half the largest adjacent
// per-step change (a local Lipschitz proxy). Points in `skip` are exempt.
bool field_nonvanishing_certified(const TorusGrid& g, const std::vector<std::array<double, 3>>& f,
                                  const std::vector<bool>& skip) {
  for (size_t i = 0; i < g.size(); ++i) {
    if (!skip.empty() && skip[i]) continue;
    double local = 0.0;
    for (int a = 0; a < g.dim; ++a)
      for (int d : {-1, 1}) {
        size_t j = g.shift(i, a, d);
        std::array<double, 3> df{f[j][0] - f[i][0], f[j][1] - f[i][1], f[j][2] - f[i][2]};
        local = std::max(local, norm3(df));
      }
    if (norm3(f[i]) <= 0.5 * local) return false;
  }
  return true;
}

struct Su2Cert {
  SU2Decomposition d;
  double min_gap = 0.0; // over the points where simplicity is claimed
  double a = 0.0;       // off-ball floor
};

double phase_gap(double m, double fnorm) {
  double phi = std::atan2(fnorm, m); // in [0, pi]
  return 2.0 * std::min(phi, kPi - phi);
}

void renormalize_quaternion(SU2Decomposition& d) {
  for (size_t f = 0; f < d.m.size(); ++f) {
    double nn = std::sqrt(d.m[f] * d.m[f] + d.f1[f] * d.f1[f] + d.f2[f] * d.f2[f] +
                          d.f3[f] * d.f3[f]);
    if (nn < 0.1) throw error(errc::invalid_input, "SU(2) field norm collapsed");
    d.m[f] /= nn;
    d.f1[f] /= nn;
    d.f2[f] /= nn;
    d.f3[f] /= nn;
  }
}

} // namespace

// -- public: census --------------------------------------------------------------

ClusterDecomposition cluster_census(const UnitaryFamily& alpha, double eps1) {
  ClusterDecomposition out;
  out.eps1 = eps1;
  out.A = kTau;
  out.points.reserve(alpha.grid.size());
  for (size_t f = 0; f < alpha.grid.size(); ++f) {
    SpectralDecomp d = unitary_eig(alpha.at(f), eps1);
    PointClusters pc;
    pc.phases = d.values;
    pc.mult = d.multiplicities;
    pc.projectors = d.projectors;
    pc.min_gap = min_circ_gap(d.values);
    int mm = 1;
    for (int mult : pc.mult) mm = std::max(mm, mult);
    if (mm > out.max_mult) {
      out.max_mult = mm;
      out.count_max = 1;
    } else if (mm == out.max_mult && mm > 1) {
      ++out.count_max;
    }
    out.A = std::min(out.A, pc.min_gap);
    out.points.push_back(std::move(pc));
  }
  return out;
}

// -- public: SU(2) ----------------------------------------------------------------

SU2Decomposition su2_decompose(const UnitaryFamily& alpha, double tol) {
  if (alpha.m != 2) throw error(errc::shape, "SU(2) decomposition requires rank 2");
  SU2Decomposition d;
  size_t n = alpha.grid.size();
  d.m.resize(n);
  d.f1.resize(n);
  d.f2.resize(n);
  d.f3.resize(n);
  double worst = 0.0;
  for (size_t f = 0; f < n; ++f) {
    const CMatrix& u = alpha.at(f);
    d.m[f] = 0.5 * std::real(trace(u));
    d.f1[f] = 0.5 * std::imag(trace(u * sigma(1)));
    d.f2[f] = 0.5 * std::imag(trace(u * sigma(2)));
    d.f3[f] = 0.5 * std::imag(trace(u * sigma(3)));
    CMatrix rec = d.m[f] * CMatrix::identity(2);
    rec += cplx(0.0, 1.0) * (d.f1[f] * sigma(1) + d.f2[f] * sigma(2) + d.f3[f] * sigma(3));
    worst = std::max(worst, fro_norm(rec - u));
  }
  if (worst > tol)
    throw error(errc::invalid_input,
                "family is not in SU(2) form (det != 1?); normalize the determinant first");
  return d;
}

UnitaryFamily su2_compose(const TorusGrid& grid, const std::optional<SymmetryKind>& sym,
                          const SU2Decomposition& d) {
  UnitaryFamily out;
  out.grid = grid;
  out.m = 2;
  out.symmetry = sym;
  out.samples.resize(grid.size());
  for (size_t f = 0; f < grid.size(); ++f) {
    CMatrix u = d.m[f] * CMatrix::identity(2);
    u += cplx(0.0, 1.0) * (d.f1[f] * sigma(1) + d.f2[f] * sigma(2) + d.f3[f] * sigma(3));
    out.samples[f] = std::move(u);
  }
  return out;
}

// -- public: perturbation primitives ----------------------------------------------

UnitaryFamily apply_symmetric_sandwich(const UnitaryFamily& a, const SelfAdjointFamily& h) {
  if (h.grid.dim != a.grid.dim || h.grid.n != a.grid.n || h.m != a.m)
    throw error(errc::shape, "sandwich field does not match the family");
  UnitaryFamily out;
  out.grid = a.grid;
  out.m = a.m;
  out.symmetry = (a.symmetry && h.symmetry) ? a.symmetry : std::nullopt;
  out.samples.resize(a.samples.size());
  for (size_t f = 0; f < a.samples.size(); ++f) {
    CMatrix e = exp_i(cplx(0.5, 0.0) * h.samples[f]);
    out.samples[f] = e * a.samples[f] * e;
  }
  return out;
}

std::array<double, 3> certified_direction_search(const std::vector<std::array<double, 3>>& f,
                                                 double s, int trials, double margin_floor,
                                                 std::mt19937_64& rng, double* margin_out) {
  std::normal_distribution<double> g(0.0, 1.0);
  for (int t = 0; t < trials; ++t) {
    std::array<double, 3> v{g(rng), g(rng), g(rng)};
    double nn = norm3(v);
    if (nn < 1e-12) continue;
    for (double& x : v) x *= s / nn;
    double margin = 1e300;
    for (const auto& p : f) {
      std::array<double, 3> q{p[0] + v[0], p[1] + v[1], p[2] + v[2]};
      margin = std::min(margin, norm3(q));
    }
    if (margin > margin_floor) {
      if (margin_out) *margin_out = margin;
      return v;
    }
  }
  throw error(errc::search_exhausted, "no direction with a certified margin found");
}

// -- public: splitting stages -------------------------------------------------------

UnitaryFamily local_split(const UnitaryFamily& alpha, size_t ksharp, double s, int ball_radius) {
  if (!alpha.symmetry) throw error(errc::invalid_input, "local splitting requires a symmetry");
  if (!alpha.grid.is_high_symmetry(ksharp))
    throw error(errc::invalid_input, "splitting point is not a high-symmetry point");
  if (s == 0.0) return alpha;
  bool nontrivial = false;
  SelfAdjointFamily h = make_local_ladder_field(alpha, ksharp, s, ball_radius, &nontrivial);
  if (!nontrivial) return alpha;
  return apply_symmetric_sandwich(alpha, h);
}

// Phase surgery on the ball around k#: every eigenphase pair descending from a
// Kramers doublet is pushed from mean +- dev to mean +- sqrt(dev^2 + (delta
// chi)^2) while keeping the eigenprojectors. The shift depends on k only
// through even quantities (the bump chi and the spectra of a TRS family), so
// the eigenphase multisets stay exactly even under k -> -k; at k# itself the
// perturbation commutes with alpha(k#) and the split is exact.
UnitaryFamily full_split_at_point(const UnitaryFamily& alpha, size_t ksharp, double s,
                                  int ball_radius) {
  if (!alpha.symmetry || alpha.symmetry->kind != sym_kind::fermionic)
    throw error(errc::invalid_input, "full splitting applies to fermionic families");
  if (!alpha.grid.is_high_symmetry(ksharp))
    throw error(errc::invalid_input, "splitting point is not a high-symmetry point");
  const TorusGrid& g = alpha.grid;
  const SymmetryKind& sym = *alpha.symmetry;
  UnitaryFamily out = alpha;
  out.symmetry = std::nullopt;
  if (s == 0.0) return out;

  SpectralDecomp at_sharp = unitary_eig(alpha.at(ksharp), 1e-6);
  const std::vector<double>& lam = at_sharp.values; // doublet reference phases
  double a_pt = min_circ_gap(lam);
  double delta = std::min(0.85 * s, a_pt / 4.0);
  std::vector<double> chi = bump_field(g, coords_of(g, ksharp),
                                       0.5 * ball_radius / static_cast<double>(g.n),
                                       static_cast<double>(ball_radius) / static_cast<double>(g.n));

  for (size_t f = 0; f < g.size(); ++f) {
    if (chi[f] <= 0.0) continue;
    SpectralDecomp dec = unitary_eig(alpha.at(f), 1e-12);
    // collect (phase, rank-1 projector) items per reference doublet
    std::vector<std::vector<std::pair<double, CMatrix>>> groups(lam.size());
    for (size_t c = 0; c < dec.values.size(); ++c) {
      size_t best = 0;
      double best_d = 1e300;
      for (size_t j = 0; j < lam.size(); ++j) {
        double d = std::abs(std::remainder(dec.values[c] - lam[j], kTau));
        if (d < best_d) {
          best_d = d;
          best = j;
        }
      }
      int l = dec.multiplicities[c];
      if (l == 1) {
        groups[best].emplace_back(dec.values[c], dec.projectors[c]);
      } else if (l == 2) {
        if (f == ksharp) {
          auto pp = kramers_pairs(dec.projectors[c], sym, l);
          groups[best].emplace_back(dec.values[c], outer(pp[0].first));
          groups[best].emplace_back(dec.values[c], outer(pp[0].second));
        } else {
          // generic orthonormal basis of the cluster range (theta maps it to
          // the mirror point's cluster, so Kramers extraction does not apply)
          std::vector<CMatrix> basis;
          for (int col = 0; col < alpha.m && static_cast<int>(basis.size()) < 2; ++col) {
            CMatrix w = column_of(dec.projectors[c], col);
            for (const CMatrix& b : basis) w -= dotc(b, w) * b;
            double nn = fro_norm(w);
            if (nn < 1e-8) continue;
            w *= 1.0 / nn;
            basis.push_back(w);
          }
          if (basis.size() < 2)
            throw error(errc::refinement, "full splitting: degenerate cluster basis collapsed");
          groups[best].emplace_back(dec.values[c], outer(basis[0]));
          groups[best].emplace_back(dec.values[c], outer(basis[1]));
        }
      } else {
        throw error(errc::refinement,
                    "full splitting: cluster of multiplicity > 2 inside the k# ball");
      }
    }
    CMatrix nb = CMatrix::zero(alpha.m, alpha.m);
    for (size_t j = 0; j < groups.size(); ++j) {
      if (groups[j].size() != 2)
        throw error(errc::refinement, "full splitting: doublet tracking lost inside the k# ball");
      double p0 = lam[j] + std::remainder(groups[j][0].first - lam[j], kTau);
      double p1 = lam[j] + std::remainder(groups[j][1].first - lam[j], kTau);
      if (p0 < p1) {
        std::swap(p0, p1);
        std::swap(groups[j][0], groups[j][1]);
      }
      double mean = 0.5 * (p0 + p1);
      double dev = 0.5 * (p0 - p1);
      double dev_new = std::hypot(dev, delta * chi[f]);
      nb += cplx(std::polar(1.0, mean + dev_new)) * groups[j][0].second;
      nb += cplx(std::polar(1.0, mean - dev_new)) * groups[j][1].second;
    }
    out.at(f) = nb;
  }
  return out;
}

UnitaryFamily line_lift(const UnitaryFamily& alpha, double s, std::mt19937_64& rng,
                        int ball_radius, int trials) {
  if (alpha.grid.dim != 2) throw error(errc::shape, "line lifting applies to 2D families");
  if (!alpha.symmetry) throw error(errc::invalid_input, "line lifting requires a symmetry");
  const TorusGrid& g = alpha.grid;
  const SymmetryKind& sym = *alpha.symmetry;
  int n = g.n;
  std::vector<size_t> sharps = g.high_symmetry_points();
  double eps1 = std::min(1e-7, s / 64.0);
  int plateau_steps = std::max(1, ball_radius / 2);
  for (int attempt = 0; attempt < trials; ++attempt) {
    UnitaryFamily cur = alpha;
    for (int axis = 0; axis < 2; ++axis) {
      for (double p : {0.0, 0.5}) {
        UnitaryFamily a1d = restrict_family(cur, axis, p);
        std::vector<SelfAdjointFamily> fields;
        genericize_1d_fields(a1d, s / 4.0, rng, ball_radius, trials, fields);
        BumpProfile chi = make_bump(p, 0.5 * ball_radius / n, static_cast<double>(ball_radius) / n, n);
        for (const SelfAdjointFamily& f1 : fields) {
          SelfAdjointFamily h2;
          h2.grid = g;
          h2.m = alpha.m;
          h2.symmetry = sym;
          h2.samples.resize(g.size());
          for (size_t f = 0; f < g.size(); ++f) {
            auto c = g.unflatten(f);
            int along = (axis == 0) ? c[1] : c[0];
            int trans = (axis == 0) ? c[0] : c[1];
            h2.samples[f] = chi[trans] * f1.samples[static_cast<size_t>(along)];
          }
          cur = apply_symmetric_sandwich(cur, h2);
        }
      }
    }
    // certification on the slabs (plateau region of the blends, off the balls)
    std::vector<size_t> slab;
    for (size_t f = 0; f < g.size(); ++f) {
      auto c = g.unflatten(f);
      bool on_slab = false;
      for (int axis = 0; axis < 2 && !on_slab; ++axis)
        for (int half : {0, n / 2})
          if (axis_dist(n, c[axis], half) <= plateau_steps) {
            on_slab = true;
            break;
          }
      if (on_slab && dist_to_sharps(g, f, sharps) > ball_radius) slab.push_back(f);
    }
    if (region_signature(cur, slab, eps1).max_mult == 1) return cur;
  }
  throw error(errc::search_exhausted, "line lifting: slab certification kept failing");
}

UnitaryFamily close_contour(const UnitaryFamily& alpha, double s, std::mt19937_64& rng,
                            int ball_radius, int trials) {
  if (alpha.grid.dim != 2) throw error(errc::shape, "contour closing applies to 2D families");
  if (!alpha.symmetry) throw error(errc::invalid_input, "contour closing requires a symmetry");
  const TorusGrid& g = alpha.grid;
  std::vector<size_t> sharps = g.high_symmetry_points();
  std::vector<size_t> ring;
  for (size_t f = 0; f < g.size(); ++f) {
    int d = dist_to_sharps(g, f, sharps);
    if (d > ball_radius && d <= 2 * ball_radius) ring.push_back(f);
  }
  double eps1 = std::min(1e-7, s / 64.0);
  if (region_signature(alpha, ring, eps1).max_mult == 1) return alpha;
  return split_on_region(alpha, ring, s, rng, ball_radius, trials, nullptr);
}

UnitaryFamily bulk_split(const UnitaryFamily& alpha, double s, std::mt19937_64& rng,
                         int ball_radius, int trials) {
  if (!alpha.symmetry) throw error(errc::invalid_input, "bulk splitting requires a symmetry");
  bool fermionic = alpha.symmetry->kind == sym_kind::fermionic;
  std::vector<size_t> region = off_ball_region(alpha.grid, ball_radius, fermionic);
  double eps1 = std::min(1e-7, s / 64.0);
  if (region_signature(alpha, region, eps1).max_mult == 1) return alpha;
  return split_on_region(alpha, region, s, rng, ball_radius, trials, nullptr);
}

// -- public: SU(2) pipeline ------------------------------------------------------------

GenericFormCertificate su2_path(const UnitaryFamily& alpha, double s, generic_mode mode,
                                std::uint64_t seed) {
  if (alpha.m != 2) throw error(errc::shape, "SU(2) path requires rank 2");
  if (!alpha.symmetry)
    throw error(errc::invalid_input, "generic form requires a symmetric input family");
  const TorusGrid& g = alpha.grid;
  const SymmetryKind& sym = *alpha.symmetry;
  bool fermionic = sym.kind == sym_kind::fermionic;
  std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ULL);
  std::vector<size_t> sharps = g.high_symmetry_points();
  const int ball_radius = std::max(1, std::min(3, g.n / 8));

  SU2Decomposition d = su2_decompose(alpha);
  // snap the coefficient fields to their exact parities (bit-exact on the grid)
  double dev = 0.0;
  if (fermionic) {
    enforce_parity(d.m, g, true, dev);
    enforce_parity(d.f1, g, false, dev);
    enforce_parity(d.f2, g, false, dev);
    enforce_parity(d.f3, g, false, dev);
  } else {
    enforce_parity(d.m, g, true, dev);
    enforce_parity(d.f1, g, true, dev);
    enforce_parity(d.f2, g, false, dev);
    enforce_parity(d.f3, g, true, dev);
  }
  if (dev > 1e-6)
    throw error(errc::symmetry, "SU(2) coefficient fields violate the required parities");
  renormalize_quaternion(d);

  double stage1_budget = (mode == generic_mode::trs_broken && fermionic) ? s / 2.0 : s;

  // stage 1: symmetric splitting of the F field by a certified perturbation
  if (stage1_budget > 0.0) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<std::vector<double>> etas;
    if (fermionic) {
      if (g.dim == 1) {
        etas.push_back(odd_wave(g, {1, 0, 0}));
        etas.push_back(odd_wave(g, {2, 0, 0}));
      } else {
        etas.push_back(odd_wave(g, {1, 0, 0}));
        etas.push_back(odd_wave(g, {0, 1, 0}));
        etas.push_back(odd_wave(g, {1, 1, 0}));
      }
    }
    bool accepted = false;
    for (int t = 0; t < 64 && !accepted; ++t) {
      std::vector<std::array<double, 3>> pert(g.size(), {0.0, 0.0, 0.0});
      if (fermionic) {
        std::vector<std::array<double, 3>> vs;
        for (size_t a = 0; a < etas.size(); ++a)
          vs.push_back({gauss(rng), gauss(rng), gauss(rng)});
        double gmax = 0.0;
        for (size_t f = 0; f < g.size(); ++f) {
          for (size_t a = 0; a < etas.size(); ++a)
            for (int j = 0; j < 3; ++j) pert[f][j] += etas[a][f] * vs[a][j];
          gmax = std::max(gmax, norm3(pert[f]));
        }
        if (gmax < 1e-12) continue;
        // 0.6 keeps the Frobenius distance (factor sqrt(2)) inside the budget
        for (auto& p : pert)
          for (double& x : p) x *= 0.6 * stage1_budget / gmax;
      } else {
        std::array<double, 3> v{gauss(rng), 0.0, gauss(rng)};
        double nn = norm3(v);
        if (nn < 1e-12) continue;
        for (double& x : v) x *= 0.6 * stage1_budget / nn;
        for (auto& p : pert) p = v;
      }
      std::vector<std::array<double, 3>> fs(g.size());
      // the continuum zero-freeness certificate applies off the k# balls; on
      // the balls (where F must vanish at the center) the claim is grid-level
      std::vector<bool> skip(g.size(), false);
      bool grid_positive = true;
      double grid_margin = 1e300;
      for (size_t f = 0; f < g.size(); ++f) {
        fs[f] = {d.f1[f] + pert[f][0], d.f2[f] + pert[f][1], d.f3[f] + pert[f][2]};
        if (fermionic && dist_to_sharps(g, f, sharps) <= ball_radius) skip[f] = true;
        if (!(fermionic && g.is_high_symmetry(f))) {
          double nf = norm3(fs[f]);
          if (nf <= 1e-10) grid_positive = false;
          grid_margin = std::min(grid_margin, nf);
        }
      }
      // Preferred acceptance is the continuum Lipschitz proxy; families whose
      // F field vanishes on sets larger than the k# points (lines inherited
      // from a transverse phase, say) can never satisfy it, so after half the
      // trials fall back to a grid-level margin -- the certificate numbers
      // (A, min_gap) are grid quantities either way. TRS-broken mode only
      // promises grid-level simplicity from the start.
      bool certified = mode == generic_mode::trs_broken ||
                       (t >= 32 && grid_margin > 0.6 * stage1_budget / 8.0) ||
                       field_nonvanishing_certified(g, fs, skip);
      if (grid_positive && certified) {
        for (size_t f = 0; f < g.size(); ++f) {
          d.f1[f] = fs[f][0];
          d.f2[f] = fs[f][1];
          d.f3[f] = fs[f][2];
        }
        accepted = true;
      }
    }
    if (!accepted)
      throw error(errc::search_exhausted, "SU(2) splitting: no certified direction found");
    renormalize_quaternion(d);
  }

  std::optional<SymmetryKind> out_sym = sym;

  // stage 2 (fermionic TRS-broken): split the mandatory pairs through exact
  // spectral coordinates so the eigenphase multisets stay exactly even
  if (mode == generic_mode::trs_broken && fermionic) {
    double budget = s / 2.0;
    int r_ball = ball_radius;
    std::vector<double> c;
    double m_min = 0.0;
    while (r_ball >= 1) {
      c.assign(g.size(), 0.0);
      for (size_t ks : sharps) {
        std::vector<double> b = bump_field(g, coords_of(g, ks),
                                           0.5 * r_ball / static_cast<double>(g.n),
                                           r_ball / static_cast<double>(g.n));
        for (size_t f = 0; f < g.size(); ++f) c[f] += b[f];
      }
      m_min = 1e300;
      for (size_t f = 0; f < g.size(); ++f)
        if (c[f] > 0.0) m_min = std::min(m_min, std::abs(d.m[f]));
      if (m_min > 1e-3) break;
      --r_ball;
    }
    if (m_min <= 1e-3)
      throw error(errc::refinement,
                  "the SU(2) scalar part vanishes near a high-symmetry point; refine the grid");
    double delta = std::min(0.6 * budget, 0.7 * m_min);

    // direction for the in-ball F shift; inside the ball the non-vanishing
    // claim is grid-level (the shifted field must clear delta/8 at every
    // support sample)
    std::vector<size_t> support;
    for (size_t f = 0; f < g.size(); ++f)
      if (c[f] > 0.0) support.push_back(f);
    std::normal_distribution<double> gauss(0.0, 1.0);
    bool accepted = false;
    std::array<double, 3> u{0.0, 0.0, 0.0};
    for (int t = 0; t < 64 && !accepted; ++t) {
      std::array<double, 3> cand{gauss(rng), gauss(rng), gauss(rng)};
      double nn = norm3(cand);
      if (nn < 1e-12) continue;
      for (double& x : cand) x /= nn;
      double margin = 1e300;
      for (size_t f : support) {
        std::array<double, 3> w{d.f1[f] + delta * c[f] * cand[0],
                                d.f2[f] + delta * c[f] * cand[1],
                                d.f3[f] + delta * c[f] * cand[2]};
        margin = std::min(margin, norm3(w));
      }
      if (margin > delta / 8.0) {
        u = cand;
        accepted = true;
      }
    }
    if (!accepted)
      throw error(errc::search_exhausted, "pair splitting: no certified direction found");

    for (size_t f : support) {
      std::array<double, 3> fv{d.f1[f], d.f2[f], d.f3[f]};
      double fn2 = fv[0] * fv[0] + fv[1] * fv[1] + fv[2] * fv[2];
      double dc = delta * c[f];
      double r2 = fn2 + dc * dc;      // bit-exact even in k: fn2 and c are
      double r = std::sqrt(r2);       // computed from exactly-odd/even fields
      std::array<double, 3> w{fv[0] + dc * u[0], fv[1] + dc * u[1], fv[2] + dc * u[2]};
      double wn = norm3(w);
      double mt = (d.m[f] >= 0.0 ? 1.0 : -1.0) * std::sqrt(std::max(0.0, 1.0 - r2));
      d.m[f] = mt;
      d.f1[f] = r * w[0] / wn;
      d.f2[f] = r * w[1] / wn;
      d.f3[f] = r * w[2] / wn;
    }
    out_sym = std::nullopt;
  }

  GenericFormCertificate cert;
  cert.approximant = su2_compose(g, out_sym, d);
  cert.distance = sup_distance(cert.approximant, alpha);
  cert.mode = mode;
  cert.seed = seed;
  cert.ball_radius = ball_radius;
  bool keep_pairs = fermionic && mode == generic_mode::symmetric;
  cert.min_gap = kTau;
  cert.A = kTau;
  for (size_t f = 0; f < g.size(); ++f) {
    double fn = std::sqrt(d.f1[f] * d.f1[f] + d.f2[f] * d.f2[f] + d.f3[f] * d.f3[f]);
    double gap = phase_gap(d.m[f], fn);
    if (!(keep_pairs && g.is_high_symmetry(f))) cert.min_gap = std::min(cert.min_gap, gap);
    if (dist_to_sharps(g, f, sharps) > ball_radius) cert.A = std::min(cert.A, gap);
  }
  return cert;
}

// -- public: top level --------------------------------------------------------------------

GenericFormCertificate to_generic_form(const UnitaryFamily& alpha, double s, generic_mode mode,
                                       std::uint64_t seed) {
  if (!alpha.symmetry)
    throw error(errc::invalid_input, "generic form requires a symmetric input family");
  if (s < 0.0 || s >= 2.0)
    throw error(errc::invalid_input, "splitting budget must lie in [0, 2)");
  const TorusGrid& g = alpha.grid;
  const SymmetryKind& sym = *alpha.symmetry;
  bool fermionic = sym.kind == sym_kind::fermionic;
  const int ball_radius = std::max(1, std::min(3, g.n / 8));
  std::vector<size_t> sharps = g.high_symmetry_points();

  auto finish = [&](UnitaryFamily fam) {
    GenericFormCertificate cert;
    cert.distance = sup_distance(fam, alpha);
    cert.mode = mode;
    cert.seed = seed;
    cert.ball_radius = ball_radius;
    cert.min_gap = kTau;
    cert.A = kTau;
    bool keep_pairs = fermionic && mode == generic_mode::symmetric;
    for (size_t f = 0; f < g.size(); ++f) {
      std::vector<double> ph = all_phases(fam.at(f));
      double gap;
      if (keep_pairs && g.is_high_symmetry(f)) {
        bool ok = false;
        gap = inter_pair_gap(ph, 1e-8, &ok);
        if (!ok)
          throw error(errc::symmetry, "mandatory Kramers pairs lost at a high-symmetry point");
      } else {
        gap = min_circ_gap(ph);
      }
      cert.min_gap = std::min(cert.min_gap, gap);
      if (dist_to_sharps(g, f, sharps) > ball_radius) cert.A = std::min(cert.A, gap);
    }
    cert.approximant = std::move(fam);
    return cert;
  };

  if (alpha.m == 1 || s == 0.0) return finish(alpha);
  if (alpha.m == 2) return su2_path(alpha, s, mode, seed);
  if (g.dim > 2)
    throw error(errc::invalid_input, "rank >= 3 generic form is implemented for dim <= 2");

  std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ULL);
  const int trials = 32;
  UnitaryFamily cur = alpha;
  if (g.dim == 1) {
    std::vector<SelfAdjointFamily> fields;
    cur = genericize_1d_fields(cur, s / 2.0, rng, ball_radius, trials, fields);
  } else {
    cur = line_lift(cur, s / 2.0, rng, ball_radius, trials);
    cur = close_contour(cur, s / 8.0, rng, ball_radius, trials);
    cur = bulk_split(cur, s / 8.0, rng, ball_radius, trials);
  }
  if (mode == generic_mode::trs_broken && fermionic) {
    for (size_t ks : sharps) {
      UnitaryFamily next = full_split_at_point(cur, ks, s / 8.0, ball_radius);
      next.symmetry = cur.symmetry; // keep metadata until all points are done
      cur = std::move(next);
    }
    cur.symmetry = std::nullopt;
  }
  return finish(cur);
}

} // namespace blochtk
