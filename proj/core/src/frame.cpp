#include "blochtk/frame.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "blochtk/invariants.hpp"
#include "blochtk/logsmith.hpp"
#include "blochtk/transport.hpp"

namespace blochtk {

namespace {

constexpr double pi = std::numbers::pi;

CMatrix column(const CMatrix& m, int j) {
  CMatrix c(m.rows, 1);
  for (int i = 0; i < m.rows; ++i) c(i, 0) = m(i, j);
  return c;
}

cplx inner(const CMatrix& a, const CMatrix& b) {
  cplx s = 0.0;
  for (int i = 0; i < a.rows; ++i) s += std::conj(a(i, 0)) * b(i, 0);
  return s;
}

void project_out(CMatrix& w, const std::vector<CMatrix>& basis) {
  for (const auto& u : basis) {
    cplx c = inner(u, w);
    for (int i = 0; i < w.rows; ++i) w(i, 0) -= c * u(i, 0);
  }
}

double norm2(const CMatrix& v) { return std::sqrt(std::abs(inner(v, v).real())); }

// transport step between two neighboring projections (exact intertwiner)
CMatrix transport_step(const CMatrix& pa, const CMatrix& pb) {
  CMatrix id = CMatrix::identity(pa.rows);
  return polar_unitary(pb * pa + (id - pb) * (id - pa));
}

// self-adjoint log of a unitary, cut at the midpoint of its largest
// eigenphase gap; inherits eps h = h^t eps from eps u = u^t eps because the
// whole spectrum stays on one branch
CMatrix widest_gap_log(const CMatrix& u) {
  SpectralDecomp d = unitary_eig(u, 1e-10);
  const size_t nc = d.values.size();
  // single cluster at phi: cut at the antipode so the log lands on phi itself
  double best_gap = 2 * pi, cut = d.values[0] - pi;
  if (nc > 1) {
    best_gap = 0.0;
    for (size_t i = 0; i < nc; ++i) {
      double lo = d.values[i];
      double hi = i + 1 < nc ? d.values[i + 1] : d.values[0] + 2 * pi;
      if (hi - lo > best_gap) {
        best_gap = hi - lo;
        cut = lo + (hi - lo) / 2;
      }
    }
  }
  return principal_log(u, cut, best_gap / 4);
}

} // namespace

CMatrix frame_point(const CMatrix& p, const SymmetryKind& sym) {
  const int amb = p.rows;
  if (p.cols != amb || sym.m != amb)
    throw error(errc::shape, "frame_point: projection/symmetry size mismatch");
  if (herm_residual(p) > 1e-6)
    throw error(errc::unitarity, "frame_point: input not Hermitian");
  double tr = trace(p).real();
  int rank = static_cast<int>(std::lround(tr));
  if (std::abs(tr - rank) > 1e-6 || rank < 1 || rank > amb)
    throw error(errc::unitarity, "frame_point: trace is not a valid rank");
  if (sym.kind == sym_kind::fermionic && rank % 2 != 0)
    throw error(errc::invalid_input, "frame_point: fermionic rank must be even");

  std::vector<double> evals;
  CMatrix vecs;
  herm_eig_vectors(p, 1e-12, evals, vecs);
  std::vector<CMatrix> raw;
  for (int j = 0; j < amb; ++j)
    if (evals[static_cast<size_t>(j)] > 0.5) raw.push_back(column(vecs, j));
  if (static_cast<int>(raw.size()) != rank)
    throw error(errc::unitarity, "frame_point: eigenvalues not clustered at 0 and 1");

  std::vector<CMatrix> cols;
  if (sym.kind == sym_kind::bosonic) {
    // theta-real Gram-Schmidt: u = w + theta w (or i(w - theta w)) stays in
    // Ran P and orthogonal to previously fixed theta-real vectors exactly
    for (const CMatrix& w0 : raw) {
      if (static_cast<int>(cols.size()) == rank) break;
      CMatrix w = w0;
      project_out(w, cols);
      for (int variant = 0; variant < 2; ++variant) {
        CMatrix tw = sym.theta(w);
        CMatrix u = variant == 0 ? w + tw : cplx(0, 1) * (w - tw);
        double nu = norm2(u);
        if (nu < 1e-6) continue;
        u *= cplx(1.0 / nu, 0);
        cols.push_back(u);
        break;
      }
    }
  } else {
    // Kramers pairs (v, theta v); theta v is automatically orthogonal to v
    // and to every previously chosen pair
    for (const CMatrix& w0 : raw) {
      if (static_cast<int>(cols.size()) == rank) break;
      CMatrix w = w0;
      project_out(w, cols);
      double nw = norm2(w);
      if (nw < 1e-6) continue;
      w *= cplx(1.0 / nw, 0);
      cols.push_back(w);
      cols.push_back(sym.theta(w));
    }
  }
  if (static_cast<int>(cols.size()) != rank)
    throw error(errc::symmetry, "frame_point: could not complete a symmetric basis");

  CMatrix out(amb, rank);
  for (int j = 0; j < rank; ++j)
    for (int i = 0; i < amb; ++i) out(i, j) = cols[static_cast<size_t>(j)](i, 0);
  return orthonormalize_columns(out);
}

BlochFrame frame_1d(const ProjectionFamily& p, const FrameBuildConfig& cfg) {
  (void)cfg; // 1D is never obstructed and needs no generic-form budget
  if (p.grid.dim != 1) throw error(errc::shape, "frame_1d: needs a 1D family");
  const TorusGrid& g = p.grid;
  CMatrix f0 = frame_point(p.samples[0], p.symmetry);

  // cumulative transport around the period, then the holonomy correction
  std::vector<CMatrix> transported(g.size());
  transported[0] = f0;
  CMatrix cur = f0;
  for (size_t i = 1; i <= g.size(); ++i) {
    cur = transport_step(p.samples[i - 1], p.samples[i % g.size()]) * cur;
    if (i < g.size()) transported[i] = cur;
  }
  CMatrix hol = polar_unitary(f0.adjoint() * cur); // eps hol = hol^t eps exactly
  CMatrix h = widest_gap_log(hol);

  BlochFrame frame;
  frame.grid = g;
  frame.amb = p.amb;
  frame.m = p.m;
  frame.kind = p.symmetry.kind;
  frame.columns.resize(g.size());
  for (size_t i = 0; i < g.size(); ++i) {
    CMatrix th = h;
    th *= cplx(-static_cast<double>(i) / g.n, 0);
    frame.columns[i] = orthonormalize_columns(transported[i] * exp_i(th));
  }
  return frame;
}

BlochFrame inductive_step(const ProjectionFamily& p, const BlochFrame& frame_d,
                          const FrameBuildConfig& cfg) {
  const TorusGrid& g = p.grid;
  if (g.dim < 2) throw error(errc::shape, "inductive_step: needs dim >= 2");
  if (frame_d.grid.dim != g.dim - 1 || frame_d.grid.n != g.n)
    throw error(errc::shape, "inductive_step: frame grid does not match the restriction");

  UnitaryFamily alpha = matching_matrix(p, frame_d);
  MultiStepLog log = two_step_log(alpha, cfg.s, cfg.mode == frame_mode::symmetric, cfg.seed);

  const TorusGrid& gt = frame_d.grid;
  BlochFrame frame;
  frame.grid = g;
  frame.amb = p.amb;
  frame.m = p.m;
  frame.kind = p.symmetry.kind;
  frame.columns.resize(g.size());

  for (size_t kt = 0; kt < gt.size(); ++kt) {
    auto ct = gt.unflatten(kt);
    auto full = [&](int i1) {
      std::array<int, 3> c{i1, 0, 0};
      for (int a = 1; a < g.dim; ++a) c[static_cast<size_t>(a)] = ct[static_cast<size_t>(a - 1)];
      return g.flatten(c);
    };
    CMatrix carried = frame_d.columns[kt]; // T(k1 <- 0) xi(0, k)
    for (int i1 = 0; i1 < g.n; ++i1) {
      if (i1 > 0)
        carried = transport_step(p.samples[full(i1 - 1)], p.samples[full(i1)]) * carried;
      CMatrix beta = beta_eval(log, static_cast<double>(i1) / g.n, kt);
      frame.columns[full(i1)] = orthonormalize_columns(carried * beta);
    }
  }
  return frame;
}

BlochFrame build_frame(const ProjectionFamily& p, const FrameBuildConfig& cfg) {
  if (p.grid.dim > 3) throw error(errc::invalid_input, "build_frame: dim <= 3 only");
  if (p.grid.dim == 1) return frame_1d(p, cfg);
  ProjectionFamily sub = restrict_family(p, 0, 0.0);
  BlochFrame frame_d = build_frame(sub, cfg);
  if (cfg.mode == frame_mode::periodic_only) {
    // stay symmetric on every unobstructed stage (keeps the matching families
    // of later stages time-reversal symmetric) and break TRS only where the
    // index actually obstructs
    FrameBuildConfig sym_cfg = cfg;
    sym_cfg.mode = frame_mode::symmetric;
    try {
      return inductive_step(p, frame_d, sym_cfg);
    } catch (const obstruction_error&) {
      return inductive_step(p, frame_d, cfg);
    }
  }
  return inductive_step(p, frame_d, cfg);
}

ValidationReport check_frame(const BlochFrame& frame, const ProjectionFamily& p,
                             const ValidationConfig& cfg, bool require_trs) {
  if (frame.grid.dim != p.grid.dim || frame.grid.n != p.grid.n || frame.amb != p.amb ||
      frame.m != p.m)
    throw error(errc::shape, "check_frame: frame/family shapes differ");
  ValidationReport rep;
  rep.note = "unitarity = orthonormality, idempotency = span residual";
  const CMatrix idm = CMatrix::identity(frame.m);
  const SymmetryKind amb_sym = frame.ambient_symmetry();
  const CMatrix eps_m = frame.frame_symmetry().epsilon();
  for (size_t f = 0; f < frame.grid.size(); ++f) {
    const CMatrix& xi = frame.columns[f];
    double ortho = fro_norm(xi.adjoint() * xi - idm);
    double span = fro_norm(p.samples[f] - xi * xi.adjoint());
    double trs = fro_norm(frame.columns[frame.grid.reflect(f)] - amb_sym.theta(xi) * eps_m);
    if (std::max({ortho, span, trs}) >
        std::max({rep.unitarity_residual, rep.idempotency_residual, rep.trs_residual}))
      rep.worst_index = f;
    rep.unitarity_residual = std::max(rep.unitarity_residual, ortho);
    rep.idempotency_residual = std::max(rep.idempotency_residual, span);
    rep.trs_residual = std::max(rep.trs_residual, trs);
  }
  rep.step_norm = step_norm(frame.grid, frame.columns);
  rep.pass = rep.unitarity_residual <= cfg.unitarity_tol &&
             rep.idempotency_residual <= cfg.projection_tol && rep.step_norm <= cfg.step_tol &&
             (!require_trs || rep.trs_residual <= cfg.trs_tol);
  return rep;
}

DecayReport fourier_decay(const BlochFrame& frame, double width) {
  const TorusGrid& g = frame.grid;
  const int n = g.n;
  DecayReport rep;
  rep.width = width;

  // separable DFT, one axis at a time; afterwards the grid index along each
  // axis is a frequency q in [0, n), signed as q - n past n/2
  std::vector<CMatrix> data = frame.columns;
  for (int axis = 0; axis < g.dim; ++axis) {
    std::vector<CMatrix> next(data.size(), CMatrix::zero(frame.amb, frame.m));
    for (size_t f = 0; f < data.size(); ++f) {
      int q = g.unflatten(f)[static_cast<size_t>(axis)];
      for (int j = 0; j < n; ++j) {
        auto c = g.unflatten(f);
        c[static_cast<size_t>(axis)] = j;
        cplx w = std::exp(cplx(0, -2 * pi * q * j / n));
        CMatrix term = data[g.flatten(c)];
        term *= w;
        next[f] += term;
      }
    }
    data = std::move(next);
  }
  const double norm = 1.0 / static_cast<double>(g.size());

  // smoothing kernel acts as a per-axis multiplier on the coefficients
  std::vector<double> ker_hat(static_cast<size_t>(n), 1.0);
  if (width > 0) {
    BumpProfile bump = make_bump(0.0, 0.0, width, n);
    double total = 0.0;
    for (int j = 0; j < n; ++j) total += bump[j];
    for (int q = 0; q < n; ++q) {
      cplx s = 0.0;
      for (int j = 0; j < n; ++j) s += bump[j] / total * std::exp(cplx(0, -2 * pi * q * j / n));
      ker_hat[static_cast<size_t>(q)] = std::abs(s);
    }
  }

  rep.shell_max.assign(static_cast<size_t>(n / 2 + 1), 0.0);
  for (size_t f = 0; f < data.size(); ++f) {
    auto c = g.unflatten(f);
    int shell = 0;
    double mult = norm;
    for (int a = 0; a < g.dim; ++a) {
      int q = c[static_cast<size_t>(a)];
      int sq = q > n / 2 ? q - n : q;
      shell = std::max(shell, std::abs(sq));
      mult *= ker_hat[static_cast<size_t>(q)];
    }
    double mag = 0.0;
    for (const cplx& z : data[f].a) mag = std::max(mag, std::abs(z));
    size_t su = static_cast<size_t>(shell);
    rep.shell_max[su] = std::max(rep.shell_max[su], mag * mult);
  }

  // least-squares slope of log(shell max) over nonzero shells
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (size_t sidx = 1; sidx < rep.shell_max.size(); ++sidx) {
    double y = std::log(std::max(rep.shell_max[sidx], 1e-300));
    double x = static_cast<double>(sidx);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
  }
  if (cnt > 1) rep.exponent = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  return rep;
}

} // namespace blochtk
