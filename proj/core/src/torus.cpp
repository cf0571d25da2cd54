#include "blochtk/torus.hpp"

#include <cmath>
#include <deque>

namespace blochtk {

namespace {
void require(bool ok, errc kind, const char* msg) {
  if (!ok) throw error(kind, msg);
}
constexpr double kPi = 3.141592653589793238462643383279502884;
} // namespace

TorusGrid::TorusGrid(int d, int pts) : dim(d), n(pts) {
  require(d >= 1 && d <= 3, errc::shape, "TorusGrid: dim must be 1, 2 or 3");
  require(pts >= 8 && pts % 2 == 0, errc::shape, "TorusGrid: N must be even and >= 8");
}

size_t TorusGrid::size() const {
  size_t s = 1;
  for (int a = 0; a < dim; ++a) s *= static_cast<size_t>(n);
  return s;
}

std::array<int, 3> TorusGrid::unflatten(size_t flat) const {
  std::array<int, 3> c{0, 0, 0};
  for (int a = dim - 1; a >= 0; --a) {
    c[a] = static_cast<int>(flat % n);
    flat /= n;
  }
  return c;
}

size_t TorusGrid::flatten(const std::array<int, 3>& c) const {
  size_t flat = 0;
  for (int a = 0; a < dim; ++a) {
    int x = ((c[a] % n) + n) % n;
    flat = flat * n + static_cast<size_t>(x);
  }
  return flat;
}

size_t TorusGrid::reflect(size_t flat) const {
  auto c = unflatten(flat);
  for (int a = 0; a < dim; ++a) c[a] = (n - c[a]) % n;
  return flatten(c);
}

size_t TorusGrid::shift(size_t flat, int axis, int delta) const {
  auto c = unflatten(flat);
  c[axis] += delta;
  return flatten(c);
}

double TorusGrid::coordinate(size_t flat, int axis) const {
  return static_cast<double>(unflatten(flat)[axis]) / n;
}

std::vector<size_t> TorusGrid::high_symmetry_points() const {
  std::vector<size_t> pts;
  int count = 1 << dim;
  for (int mask = 0; mask < count; ++mask) {
    std::array<int, 3> c{0, 0, 0};
    for (int a = 0; a < dim; ++a)
      if (mask & (1 << a)) c[a] = n / 2;
    pts.push_back(flatten(c));
  }
  return pts;
}

bool TorusGrid::is_high_symmetry(size_t flat) const {
  auto c = unflatten(flat);
  for (int a = 0; a < dim; ++a)
    if (c[a] != 0 && c[a] != n / 2) return false;
  return true;
}

SymmetryKind SymmetryKind::fermionic(int m) {
  if (m % 2 != 0) throw error(errc::shape, "fermionic symmetry requires even m");
  return {sym_kind::fermionic, m};
}

CMatrix SymmetryKind::epsilon() const {
  if (kind == sym_kind::bosonic) return CMatrix::identity(m);
  CMatrix e(m, m);
  for (int b = 0; b + 1 < m; b += 2) {
    e(b, b + 1) = 1.0;
    e(b + 1, b) = -1.0;
  }
  return e;
}

// ---------------------------------------------------------------------------
// Residuals and validation.

double trs_residual(const UnitaryFamily& fam) {
  if (!fam.symmetry) return 0.0;
  CMatrix eps = fam.symmetry->epsilon();
  double worst = 0.0;
  for (size_t i = 0; i < fam.samples.size(); ++i) {
    size_t r = fam.grid.reflect(i);
    worst = std::max(worst, fro_norm(eps * fam.samples[i] - fam.samples[r].transpose() * eps));
  }
  return worst;
}

double trs_residual(const SelfAdjointFamily& fam) {
  if (!fam.symmetry) return 0.0;
  CMatrix eps = fam.symmetry->epsilon();
  double worst = 0.0;
  for (size_t i = 0; i < fam.samples.size(); ++i) {
    size_t r = fam.grid.reflect(i);
    worst = std::max(worst, fro_norm(eps * fam.samples[i] - fam.samples[r].transpose() * eps));
  }
  return worst;
}

double trs_residual(const ProjectionFamily& fam) {
  CMatrix eps = fam.symmetry.epsilon();
  CMatrix eps_inv = inverse(eps);
  double worst = 0.0;
  for (size_t i = 0; i < fam.samples.size(); ++i) {
    size_t r = fam.grid.reflect(i);
    CMatrix lhs = eps * fam.samples[i].conj() * eps_inv;
    worst = std::max(worst, fro_norm(lhs - fam.samples[r]));
  }
  return worst;
}

double step_norm(const TorusGrid& grid, const std::vector<CMatrix>& samples) {
  double worst = 0.0;
  for (size_t i = 0; i < samples.size(); ++i)
    for (int a = 0; a < grid.dim; ++a)
      worst = std::max(worst, fro_norm(samples[grid.shift(i, a, 1)] - samples[i]));
  return worst;
}

ValidationReport validate_matching(const UnitaryFamily& fam, const ValidationConfig& cfg) {
  ValidationReport rep;
  for (size_t i = 0; i < fam.samples.size(); ++i) {
    double u = unitary_residual(fam.samples[i]);
    if (u > rep.unitarity_residual) {
      rep.unitarity_residual = u;
      rep.worst_index = i;
    }
  }
  rep.trs_residual = trs_residual(fam);
  rep.step_norm = step_norm(fam.grid, fam.samples);
  rep.pass = rep.unitarity_residual <= cfg.unitarity_tol && rep.trs_residual <= cfg.trs_tol &&
             rep.step_norm <= cfg.step_tol;
  if (!rep.pass) {
    if (rep.unitarity_residual > cfg.unitarity_tol)
      rep.note = "unitarity residual above tolerance";
    else if (rep.trs_residual > cfg.trs_tol)
      rep.note = "TRS residual above tolerance";
    else
      rep.note = "discrete step norm above tolerance (family too rough)";
  }
  return rep;
}

ValidationReport validate_projections(const ProjectionFamily& fam, const ValidationConfig& cfg) {
  ValidationReport rep;
  for (size_t i = 0; i < fam.samples.size(); ++i) {
    const CMatrix& p = fam.samples[i];
    double idem = fro_norm(p * p - p);
    double herm = herm_residual(p);
    double rank = std::abs(trace(p).real() - fam.m);
    if (std::max(idem, std::max(herm, rank)) >
        std::max(rep.idempotency_residual, std::max(rep.hermiticity_residual, rep.rank_deviation)))
      rep.worst_index = i;
    rep.idempotency_residual = std::max(rep.idempotency_residual, idem);
    rep.hermiticity_residual = std::max(rep.hermiticity_residual, herm);
    rep.rank_deviation = std::max(rep.rank_deviation, rank);
  }
  rep.trs_residual = trs_residual(fam);
  rep.step_norm = step_norm(fam.grid, fam.samples);
  rep.pass = rep.idempotency_residual <= cfg.projection_tol &&
             rep.hermiticity_residual <= cfg.projection_tol &&
             rep.rank_deviation <= cfg.projection_tol && rep.trs_residual <= cfg.trs_tol &&
             rep.step_norm <= cfg.step_tol;
  if (!rep.pass) rep.note = "projection family failed validation";
  return rep;
}

// ---------------------------------------------------------------------------
// Smoothing.

namespace {
// normalized even kernel with half-width `width` (fraction of the period)
std::vector<double> smoothing_kernel(int n, double width, int& half) {
  half = static_cast<int>(std::floor(width * n));
  std::vector<double> k(2 * half + 1, 0.0);
  double sum = 0.0;
  for (int j = -half; j <= half; ++j) {
    double v = bump_value(0.0, 0.0, width, static_cast<double>(std::abs(j)) / n);
    k[j + half] = v;
    sum += v;
  }
  for (auto& v : k) v /= sum;
  return k;
}

std::vector<CMatrix> convolve_axes(const TorusGrid& grid, const std::vector<CMatrix>& in,
                                   double width) {
  if (width >= 0.25 || width <= 0.0)
    throw error(errc::invalid_input, "smooth_even_convolve: width must be in (0, 1/4)");
  int half = 0;
  std::vector<double> kern = smoothing_kernel(grid.n, width, half);
  std::vector<CMatrix> cur = in;
  for (int axis = 0; axis < grid.dim; ++axis) {
    std::vector<CMatrix> next(cur.size(), CMatrix(in.front().rows, in.front().cols));
    for (size_t i = 0; i < cur.size(); ++i) {
      CMatrix acc(in.front().rows, in.front().cols);
      for (int j = -half; j <= half; ++j) {
        double w = kern[j + half];
        if (w == 0.0) continue;
        const CMatrix& s = cur[grid.shift(i, axis, -j)];
        for (size_t t = 0; t < acc.a.size(); ++t) acc.a[t] += w * s.a[t];
      }
      next[i] = std::move(acc);
    }
    cur = std::move(next);
  }
  return cur;
}
} // namespace

UnitaryFamily smooth_even_convolve(const UnitaryFamily& fam, double width) {
  UnitaryFamily out = fam;
  out.samples = convolve_axes(fam.grid, fam.samples, width);
  for (auto& s : out.samples) s = polar_unitary(s);
  return out;
}

SelfAdjointFamily smooth_even_convolve(const SelfAdjointFamily& fam, double width) {
  SelfAdjointFamily out = fam;
  out.samples = convolve_axes(fam.grid, fam.samples, width);
  return out;
}

// ---------------------------------------------------------------------------
// Determinant phase normalization.

DetNormalization det_phase_normalize(const UnitaryFamily& fam) {
  size_t npts = fam.samples.size();
  std::vector<cplx> dets(npts);
  for (size_t i = 0; i < npts; ++i) {
    dets[i] = det(fam.samples[i]);
    if (std::abs(std::abs(dets[i]) - 1.0) > 1e-6)
      throw error(errc::unitarity, "det_phase_normalize: |det| far from 1");
  }
  // unwrap along a BFS spanning tree rooted at k = 0, neighbors in axis order
  std::vector<double> phi(npts, 0.0);
  std::vector<char> seen(npts, 0);
  phi[0] = std::arg(dets[0]);
  seen[0] = 1;
  std::deque<size_t> queue{0};
  while (!queue.empty()) {
    size_t u = queue.front();
    queue.pop_front();
    for (int a = 0; a < fam.grid.dim; ++a) {
      for (int d : {+1, -1}) {
        size_t v = fam.grid.shift(u, a, d);
        if (seen[v]) continue;
        seen[v] = 1;
        phi[v] = phi[u] + std::arg(dets[v] / dets[u]);
        queue.push_back(v);
      }
    }
  }
  // every non-tree edge must close consistently, otherwise det winds
  for (size_t u = 0; u < npts; ++u) {
    for (int a = 0; a < fam.grid.dim; ++a) {
      size_t v = fam.grid.shift(u, a, 1);
      double mismatch = phi[v] - phi[u] - std::arg(dets[v] / dets[u]);
      if (std::abs(mismatch) > kPi)
        throw error(errc::invalid_input,
                    "det_phase_normalize: determinant winds along a fundamental cycle");
    }
  }
  DetNormalization out;
  out.phase = std::move(phi);
  out.normalized = fam;
  for (size_t i = 0; i < npts; ++i) {
    cplx f = std::polar(1.0, -out.phase[i] / fam.m);
    out.normalized.samples[i] *= f;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Restriction.

namespace {
int coordinate_to_index(const TorusGrid& grid, double value) {
  double scaled = value * grid.n;
  long idx = std::lround(scaled);
  if (std::abs(scaled - idx) > 1e-9)
    throw error(errc::invalid_input, "restrict: value is not a grid coordinate");
  return static_cast<int>(((idx % grid.n) + grid.n) % grid.n);
}

bool half_integer_line(const TorusGrid& grid, int idx) { return idx == 0 || idx == grid.n / 2; }

template <typename F>
std::vector<CMatrix> restricted_samples(const TorusGrid& grid, int axis, int fixed, F&& sample) {
  TorusGrid sub(grid.dim - 1, grid.n);
  std::vector<CMatrix> out(sub.size());
  for (size_t i = 0; i < sub.size(); ++i) {
    auto sc = sub.unflatten(i);
    std::array<int, 3> c{0, 0, 0};
    int w = 0;
    for (int a = 0; a < grid.dim; ++a) c[a] = (a == axis) ? fixed : sc[w++];
    out[i] = sample(grid.flatten(c));
  }
  return out;
}
} // namespace

UnitaryFamily restrict_family(const UnitaryFamily& fam, int axis, double value) {
  require(fam.grid.dim >= 2, errc::shape, "restrict: needs dim >= 2");
  require(axis >= 0 && axis < fam.grid.dim, errc::shape, "restrict: bad axis");
  int fixed = coordinate_to_index(fam.grid, value);
  UnitaryFamily out;
  out.grid = TorusGrid(fam.grid.dim - 1, fam.grid.n);
  out.m = fam.m;
  out.symmetry = half_integer_line(fam.grid, fixed) ? fam.symmetry : std::nullopt;
  out.samples = restricted_samples(fam.grid, axis, fixed,
                                   [&](size_t flat) { return fam.samples[flat]; });
  return out;
}

ProjectionFamily restrict_family(const ProjectionFamily& fam, int axis, double value) {
  require(fam.grid.dim >= 2, errc::shape, "restrict: needs dim >= 2");
  require(axis >= 0 && axis < fam.grid.dim, errc::shape, "restrict: bad axis");
  int fixed = coordinate_to_index(fam.grid, value);
  require(half_integer_line(fam.grid, fixed), errc::invalid_input,
          "restrict: projection families restrict on half-integer lines only");
  ProjectionFamily out;
  out.grid = TorusGrid(fam.grid.dim - 1, fam.grid.n);
  out.amb = fam.amb;
  out.m = fam.m;
  out.symmetry = fam.symmetry;
  out.samples = restricted_samples(fam.grid, axis, fixed,
                                   [&](size_t flat) { return fam.samples[flat]; });
  return out;
}

// ---------------------------------------------------------------------------
// Bumps.

double bump_value(double center, double plateau, double support, double x) {
  double d = std::abs(x - center);
  d = std::min(d, 1.0 - d); // periodized min-image (widths < 1/4 make this exact)
  d = std::abs(d);
  if (d <= plateau) return 1.0;
  if (d >= support) return 0.0;
  double t = (support - d) / (support - plateau);
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t)); // quintic smoothstep
}

BumpProfile make_bump(double center, double plateau, double support, int grid_n) {
  if (!(plateau >= 0.0 && plateau < support && support < 0.25))
    throw error(errc::invalid_input, "make_bump: need 0 <= plateau < support < 1/4");
  BumpProfile b;
  b.center = center;
  b.plateau = plateau;
  b.support = support;
  b.values.resize(static_cast<size_t>(grid_n));
  long cidx = std::lround(center * grid_n);
  bool on_grid = std::abs(center * grid_n - cidx) < 1e-12;
  for (int i = 0; i < grid_n; ++i) {
    double x;
    if (on_grid) {
      // exact integer distance keeps the profile exactly even about center
      long d = std::abs(i - cidx) % grid_n;
      d = std::min(d, grid_n - d);
      x = center + static_cast<double>(d) / grid_n;
    } else {
      x = static_cast<double>(i) / grid_n;
    }
    b.values[static_cast<size_t>(i)] = bump_value(center, plateau, support, x);
  }
  return b;
}

} // namespace blochtk
