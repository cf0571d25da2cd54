#include "blochtk/logsmith.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "blochtk/invariants.hpp"

namespace blochtk {

namespace {

constexpr double pi = std::numbers::pi;

double principal(double x) {
  x = std::remainder(x, 2 * pi); // (-pi, pi]... remainder gives [-pi, pi]
  if (x <= -pi) x += 2 * pi;
  return x;
}

double circ_dist(double a, double b) { return std::abs(principal(a - b)); }

// all m eigenphases of a unitary, principal values, ascending
std::vector<double> all_phases(const CMatrix& u, double tol) {
  SpectralDecomp d = unitary_eig(u, tol);
  std::vector<double> out;
  for (size_t c = 0; c < d.values.size(); ++c)
    out.insert(out.end(), static_cast<size_t>(d.multiplicities[c]), d.values[c]);
  std::sort(out.begin(), out.end());
  return out;
}

CMatrix scaled_exp(const CMatrix& h, double t) {
  CMatrix th = h;
  th *= cplx(t, 0.0);
  return exp_i(th);
}

// Chebyshev distance on the torus to the nearest high-symmetry point
int dist_to_sharps(const TorusGrid& g, size_t flat) {
  auto c = g.unflatten(flat);
  int best = g.n;
  for (size_t s : g.high_symmetry_points()) {
    auto cs = g.unflatten(s);
    int d = 0;
    for (int a = 0; a < g.dim; ++a) {
      int diff = std::abs(c[static_cast<size_t>(a)] - cs[static_cast<size_t>(a)]);
      d = std::max(d, std::min(diff, g.n - diff));
    }
    best = std::min(best, d);
  }
  return best;
}

// -- star-shaped regions -------------------------------------------------------

// Half cell of the TRS torus: i1 in [0, n/2] (all other axes full, treated
// cut-open), staircase predecessors toward the center. When ball_radius >= 0
// the points within that Chebyshev distance of a high-symmetry point are left
// out (they get their branch cut by inward continuation instead).
GridRegion half_cell_region(const TorusGrid& g, int ball_radius) {
  GridRegion reg;
  std::array<int, 3> cc{};
  cc[0] = g.n / 4;
  if (g.dim == 2) cc[1] = g.n / 2;
  reg.center = g.flatten(cc);
  auto pred_of = [&](const std::array<int, 3>& c) {
    std::array<int, 3> p = c;
    if (c[0] != cc[0]) {
      p[0] += c[0] > cc[0] ? -1 : 1; // cut-open: plain integer offsets
    } else if (g.dim == 2 && c[1] != cc[1]) {
      p[1] += c[1] > cc[1] ? -1 : 1;
    }
    return p;
  };
  for (size_t f = 0; f < g.size(); ++f) {
    auto c = g.unflatten(f);
    if (c[0] > g.n / 2) continue;
    if (ball_radius >= 0 && dist_to_sharps(g, f) <= ball_radius) continue;
    reg.points.push_back(f);
    reg.pred.push_back(g.flatten(pred_of(c)));
  }
  return reg;
}

// the whole grid, cut open along every axis at the 0 <-> n-1 seam
GridRegion full_grid_region(const TorusGrid& g) {
  GridRegion reg;
  std::array<int, 3> cc{};
  for (int a = 0; a < g.dim; ++a) cc[static_cast<size_t>(a)] = g.n / 2;
  reg.center = g.flatten(cc);
  for (size_t f = 0; f < g.size(); ++f) {
    auto c = g.unflatten(f);
    std::array<int, 3> p = c;
    for (int a = 0; a < g.dim; ++a) {
      size_t ax = static_cast<size_t>(a);
      if (c[ax] != cc[ax]) {
        p[ax] += c[ax] > cc[ax] ? -1 : 1;
        break;
      }
    }
    reg.points.push_back(f);
    reg.pred.push_back(g.flatten(p));
  }
  return reg;
}

} // namespace

// -- labeling --------------------------------------------------------------------

LabeledSpectrum label_eigenvalues(const UnitaryFamily& ahat, const GridRegion& domain, double A) {
  if (A <= 0) throw error(errc::invalid_input, "labeling: gap certificate A must be positive");
  const TorusGrid& g = ahat.grid;
  const int m = ahat.m;
  const double eig_tol = std::min(1e-9, A / 10);

  std::map<size_t, size_t> local; // flat -> index into domain.points
  for (size_t i = 0; i < domain.points.size(); ++i) local[domain.points[i]] = i;
  if (!local.count(domain.center))
    throw error(errc::invalid_input, "labeling: region center not in region");

  LabeledSpectrum ls;
  ls.region = domain;
  ls.A = A;
  ls.phases.resize(domain.points.size());
  ls.projectors.resize(domain.points.size());
  // nearest-phase matching is unambiguous while the jump stays below half the
  // local spacing (>= A/2 by the certificate, often much wider)
  std::vector<double> half_gap(domain.points.size(), A / 2);

  // simple eigendecomposition at one point
  auto decompose = [&](size_t flat, std::vector<double>& ph, std::vector<CMatrix>& pr) {
    SpectralDecomp d = unitary_eig(ahat.at(flat), eig_tol);
    for (int mu : d.multiplicities)
      if (mu != 1)
        throw error(errc::refinement, "labeling: spectrum not simple at grid point " +
                                          std::to_string(flat));
    ph = d.values;
    pr = d.projectors;
  };

  // process along the predecessor tree (iterative depth-first from each point)
  std::vector<char> done(domain.points.size(), 0);
  auto process = [&](size_t start) {
    std::vector<size_t> chain; // local indices with unprocessed predecessors
    size_t i = start;
    while (!done[i]) {
      chain.push_back(i);
      size_t pflat = domain.pred[i];
      if (domain.points[i] == domain.center) break;
      auto it = local.find(pflat);
      if (it == local.end())
        throw error(errc::invalid_input, "labeling: predecessor outside region");
      i = it->second;
    }
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      size_t j = *it;
      size_t flat = domain.points[j];
      std::vector<double> ph;
      std::vector<CMatrix> pr;
      decompose(flat, ph, pr);
      {
        double gmin = 2 * pi;
        for (size_t e = 0; e < ph.size(); ++e)
          gmin = std::min(gmin, circ_dist(ph[e], ph[(e + 1) % ph.size()]));
        half_gap[j] = std::max(A / 2, gmin / 2);
      }
      if (flat == domain.center) {
        ls.phases[j] = ph; // ascending principal values fix the label order
        ls.projectors[j] = pr;
      } else {
        size_t pj = local.at(domain.pred[j]);
        const std::vector<double>& prev = ls.phases[pj];
        ls.phases[j].assign(static_cast<size_t>(m), 0.0);
        ls.projectors[j].resize(static_cast<size_t>(m));
        std::vector<char> used(static_cast<size_t>(m), 0);
        for (int lab = 0; lab < m; ++lab) {
          size_t lu = static_cast<size_t>(lab);
          int best = -1;
          double bestd = 1e300;
          for (int e = 0; e < m; ++e) {
            double d = circ_dist(prev[lu], ph[static_cast<size_t>(e)]);
            if (d < bestd) {
              bestd = d;
              best = e;
            }
          }
          if (bestd >= half_gap[j])
            throw error(errc::refinement,
                        "labeling: eigenphase jump " + std::to_string(bestd) +
                            " exceeds half the local gap across one grid step; "
                            "refine the grid");
          size_t bu = static_cast<size_t>(best);
          if (used[bu])
            throw error(errc::refinement, "labeling: nearest-phase matching not bijective");
          used[bu] = 1;
          ls.phases[j][lu] = prev[lu] + principal(ph[bu] - prev[lu]);
          ls.projectors[j][lu] = pr[bu];
        }
      }
      done[j] = 1;
    }
  };
  for (size_t i = 0; i < domain.points.size(); ++i) process(i);

  // consistency between neighboring rays: every intra-region grid edge must
  // carry label jumps < A/2 as well (catches monodromy on cut-open regions)
  for (size_t i = 0; i < domain.points.size(); ++i) {
    for (int a = 0; a < g.dim; ++a) {
      size_t q = g.shift(domain.points[i], a, 1);
      auto it = local.find(q);
      if (it == local.end()) continue;
      double thr = std::min(half_gap[i], half_gap[it->second]);
      for (int lab = 0; lab < m; ++lab) {
        size_t lu = static_cast<size_t>(lab);
        if (circ_dist(ls.phases[i][lu], ls.phases[it->second][lu]) >= thr)
          throw error(errc::refinement,
                      "labeling: inconsistent labels between neighboring rays (monodromy); "
                      "refine the grid");
      }
    }
  }
  return ls;
}

// -- branch cuts -----------------------------------------------------------------

BranchCutField branch_cut(const GenericFormCertificate& cert) {
  const UnitaryFamily& fam = cert.approximant;
  const TorusGrid& g = fam.grid;
  const int m = fam.m;
  const double A = cert.A;
  if (m < 3)
    throw error(errc::invalid_input, "branch_cut: needs m >= 3 (m <= 2 has closed forms)");
  if (A <= 0) throw error(errc::refinement, "branch_cut: certificate carries no gap");
  const bool symmetric = fam.symmetry.has_value();
  const bool fermionic = symmetric && fam.symmetry->kind == sym_kind::fermionic;

  // channel below which the cut runs: between labels c and c+1 (1-based).
  // Fermionic spectra move in Kramers pairs at k#, so the channel count below
  // the cut must be even to stay between pairs.
  int c = fermionic ? m / 2 : (m + 1) / 2;
  if (fermionic && c % 2 == 1) ++c;
  if (c >= m) c = m - 1;

  GridRegion region = symmetric ? half_cell_region(g, fermionic ? cert.ball_radius : -1)
                                : full_grid_region(g);
  LabeledSpectrum ls = label_eigenvalues(fam, region, A);

  std::vector<double> lambda(g.size(), 0.0);
  std::vector<char> assigned(g.size(), 0);
  for (size_t i = 0; i < region.points.size(); ++i) {
    size_t f = region.points[i];
    lambda[f] = 0.5 * (ls.phases[i][static_cast<size_t>(c - 1)] +
                       ls.phases[i][static_cast<size_t>(c)]);
    assigned[f] = 1;
  }

  const double eig_tol = std::min(1e-9, A / 10);

  if (fermionic) {
    // continue the cut inward through each k#-ball: at every new point keep
    // the cut just above the eigenphase cluster sitting below the previous
    // cut value ("lower cluster + min(A/4, half channel)")
    std::vector<size_t> ballpts;
    for (size_t f = 0; f < g.size(); ++f) {
      if (g.unflatten(f)[0] > g.n / 2) continue;
      if (dist_to_sharps(g, f) <= cert.ball_radius) ballpts.push_back(f);
    }
    bool progress = true;
    size_t remaining = ballpts.size();
    while (remaining > 0 && progress) {
      progress = false;
      for (size_t f : ballpts) {
        if (assigned[f]) continue;
        // find an assigned neighbor in the half cell
        double prev = 0.0;
        bool have = false;
        for (int a = 0; a < g.dim && !have; ++a)
          for (int d : {1, -1}) {
            size_t q = g.shift(f, a, d);
            if (g.unflatten(q)[0] > g.n / 2) continue;
            if (assigned[q]) {
              prev = lambda[q];
              have = true;
              break;
            }
          }
        if (!have) continue;
        std::vector<double> psis;
        for (double p : all_phases(fam.at(f), eig_tol)) psis.push_back(principal(p - prev));
        std::sort(psis.begin(), psis.end());
        double lower, upper;
        auto it = std::upper_bound(psis.begin(), psis.end(), 0.0);
        if (it == psis.begin()) lower = psis.back() - 2 * pi; // all phases above the cut
        else lower = *std::prev(it);
        if (it == psis.end()) upper = psis.front() + 2 * pi; // all phases below the cut
        else upper = *it;
        lambda[f] = prev + lower + std::min(A / 4, 0.5 * (upper - lower));
        assigned[f] = 1;
        progress = true;
        --remaining;
      }
    }
    if (remaining > 0)
      throw error(errc::refinement, "branch_cut: k#-ball not reachable from the labeled region");
  }

  if (symmetric) {
    // evenness on the fixed columns of k -> -k (both the point and its mirror
    // were assigned independently): check to tolerance A/2 and average
    for (size_t f = 0; f < g.size(); ++f) {
      size_t r = g.reflect(f);
      if (!assigned[f] || !assigned[r] || r <= f) continue;
      if (std::abs(lambda[f] - lambda[r]) > A / 2)
        throw error(errc::refinement, "branch_cut: evenness violated on a fixed column");
      double avg = 0.5 * (lambda[f] + lambda[r]);
      lambda[f] = lambda[r] = avg;
    }
    // extend to the other half cell by evenness
    for (size_t f = 0; f < g.size(); ++f) {
      if (assigned[f]) continue;
      size_t r = g.reflect(f);
      if (!assigned[r])
        throw error(errc::refinement, "branch_cut: point not covered by half cell or mirror");
      lambda[f] = lambda[r];
      assigned[f] = 1;
    }
  }

  // grid certificate: the cut must clear every eigenphase by A/4 everywhere
  BranchCutField bc;
  bc.lambda = std::move(lambda);
  bc.margin = 1e300;
  for (size_t f = 0; f < g.size(); ++f) {
    for (double p : all_phases(fam.at(f), eig_tol))
      bc.margin = std::min(bc.margin, circ_dist(bc.lambda[f], p));
  }
  if (bc.margin < A / 4 - 1e-12)
    throw error(errc::refinement, "branch_cut: margin " + std::to_string(bc.margin) +
                                      " below A/4; refine the grid");
  return bc;
}

// -- two-step logarithm ------------------------------------------------------------

namespace {

SelfAdjointFamily zero_field(const TorusGrid& g, int m, std::optional<SymmetryKind> sym) {
  SelfAdjointFamily h;
  h.grid = g;
  h.m = m;
  h.symmetry = std::move(sym);
  h.samples.assign(g.size(), CMatrix::zero(m, m));
  return h;
}

// h2 for an m = 2 approximant, in closed form from the su2 fields. `shifted`
// adds pi*1 and logs -alpha-hat instead (needed when m-hat = -1 at the
// high-symmetry points, where F vanishes).
SelfAdjointFamily su2_h2(const UnitaryFamily& ahat, bool shifted,
                         std::optional<SymmetryKind> sym) {
  static const CMatrix s1 = [] {
    CMatrix s(2, 2);
    s(0, 1) = s(1, 0) = 1.0;
    return s;
  }();
  static const CMatrix s2 = [] {
    CMatrix s(2, 2);
    s(0, 1) = cplx(0, -1);
    s(1, 0) = cplx(0, 1);
    return s;
  }();
  static const CMatrix s3 = [] {
    CMatrix s(2, 2);
    s(0, 0) = 1.0;
    s(1, 1) = -1.0;
    return s;
  }();
  SU2Decomposition d = su2_decompose(ahat);
  SelfAdjointFamily h = zero_field(ahat.grid, 2, std::move(sym));
  for (size_t f = 0; f < ahat.grid.size(); ++f) {
    double m0 = d.m[f], f1 = d.f1[f], f2 = d.f2[f], f3 = d.f3[f];
    if (shifted) {
      m0 = -m0;
      f1 = -f1;
      f2 = -f2;
      f3 = -f3;
    }
    double r = std::sqrt(f1 * f1 + f2 * f2 + f3 * f3);
    double phi = std::atan2(r, m0); // in [0, pi]
    CMatrix hh = CMatrix::zero(2, 2);
    if (r > 0) {
      double w = phi / r;
      hh += cplx(w * f1, 0) * s1;
      hh += cplx(w * f2, 0) * s2;
      hh += cplx(w * f3, 0) * s3;
    } else if (phi > 1e-8) {
      throw error(errc::branch_cut, "su2 log: eigenvalue -1 with no direction");
    }
    if (shifted) {
      CMatrix pi1 = CMatrix::identity(2);
      pi1 *= cplx(pi, 0);
      hh += pi1;
    }
    h.samples[f] = hh;
  }
  return h;
}

} // namespace

UnitaryFamily reconstruct(const MultiStepLog& log) {
  UnitaryFamily out;
  out.grid = log.grid;
  out.m = log.m;
  out.symmetry = log.symmetry;
  out.samples.resize(log.grid.size());
  for (size_t f = 0; f < log.grid.size(); ++f) {
    CMatrix x = log.steps.empty() ? CMatrix::identity(log.m) : exp_i(log.steps[0].samples[f]);
    for (size_t l = 1; l < log.steps.size(); ++l) {
      CMatrix e = scaled_exp(log.steps[l].samples[f], 0.5);
      x = e * x * e;
    }
    out.samples[f] = x;
  }
  return out;
}

MultiStepLog two_step_log(const UnitaryFamily& alpha, double s, bool symmetric_mode,
                          std::uint64_t seed) {
  if (s < 0 || s >= 1)
    throw error(errc::invalid_input, "two_step_log: need 0 <= s < 1");
  const TorusGrid& g = alpha.grid;
  const int m = alpha.m;
  if (symmetric_mode && !alpha.symmetry)
    throw error(errc::invalid_input, "two_step_log: symmetric mode needs symmetry metadata");

  const bool fermionic =
      alpha.symmetry && alpha.symmetry->kind == sym_kind::fermionic;

  if (symmetric_mode && fermionic) {
    Z2Report rep = g.dim == 1 ? gp_index(alpha) : indices_2d(alpha);
    for (const auto& [name, idx] : rep.indices)
      if (idx != 0)
        throw obstruction_error(rep, "two_step_log: nonzero Z2 index on " + name +
                                         "; no symmetric logarithm exists");
  }

  MultiStepLog out;
  out.grid = g;
  out.m = m;
  out.symmetry = symmetric_mode ? alpha.symmetry : std::nullopt;

  SelfAdjointFamily h2 = zero_field(g, m, out.symmetry);

  if (m == 1) {
    // the family is its own determinant; its unwrapped phase is the log
    DetNormalization dn = [&] {
      try {
        return det_phase_normalize(alpha);
      } catch (const error& e) {
        if (e.kind() == errc::invalid_input)
          throw error(errc::obstruction,
                      std::string("two_step_log: determinant winds; ") + e.what());
        throw;
      }
    }();
    SelfAdjointFamily h1 = zero_field(g, 1, out.symmetry);
    std::vector<double> phi = dn.phase;
    if (symmetric_mode) { // snap to exact evenness
      double dev = 0.0;
      for (size_t f = 0; f < g.size(); ++f)
        dev = std::max(dev, std::abs(phi[f] - phi[g.reflect(f)]));
      if (dev < 1e-6)
        for (size_t f = 0; f < g.size(); ++f) {
          size_t r = g.reflect(f);
          if (r > f) phi[f] = phi[r] = 0.5 * (phi[f] + phi[r]);
        }
    }
    for (size_t f = 0; f < g.size(); ++f) h1.samples[f](0, 0) = phi[f];
    out.steps = {std::move(h1), std::move(h2)};
  } else {
    const generic_mode mode =
        symmetric_mode ? generic_mode::symmetric : generic_mode::trs_broken;

    // m = 2 goes through the su2 closed forms, which need det = 1: split the
    // determinant phase off (even and non-winding for TRS families) and fold
    // it back into h2 as a scalar shift
    std::vector<double> dphi(g.size(), 0.0);
    UnitaryFamily base = alpha;
    if (m == 2) {
      DetNormalization dn = det_phase_normalize(alpha);
      dphi = std::move(dn.phase);
      double dev = 0.0;
      for (size_t f = 0; f < g.size(); ++f)
        dev = std::max(dev, std::abs(dphi[f] - dphi[g.reflect(f)]));
      if (dev < 1e-6) // snap to exact evenness so h2 stays exactly TRS
        for (size_t f = 0; f < g.size(); ++f) {
          size_t r = g.reflect(f);
          if (r > f) dphi[f] = dphi[r] = 0.5 * (dphi[f] + dphi[r]);
        }
      for (size_t f = 0; f < g.size(); ++f) {
        base.samples[f] = alpha.at(f);
        base.samples[f] *= std::exp(cplx(0, -dphi[f] / 2));
      }
    }

    double s_try = s;
    for (int attempt = 0;; ++attempt) {
      try {
        GenericFormCertificate cert = to_generic_form(base, s_try, mode, seed);
        if (m == 2) {
          bool shifted = false;
          if (symmetric_mode && fermionic) {
            // sign of m-hat at the high-symmetry points (equal by index = 0)
            SU2Decomposition d = su2_decompose(cert.approximant);
            int sgn = 0;
            for (size_t sp : g.high_symmetry_points()) {
              int sg = d.m[sp] >= 0 ? 1 : -1;
              if (sgn == 0) sgn = sg;
              else if (sgn != sg)
                throw error(errc::refinement,
                            "two_step_log: inconsistent signs at high-symmetry points");
            }
            shifted = sgn < 0;
          }
          h2 = su2_h2(cert.approximant, shifted, out.symmetry);
          for (size_t f = 0; f < g.size(); ++f) {
            CMatrix c1 = CMatrix::identity(2);
            c1 *= cplx(dphi[f] / 2, 0);
            h2.samples[f] += c1;
          }
        } else {
          BranchCutField bc = branch_cut(cert);
          double tol = std::max(1e-12, bc.margin / 2);
          for (size_t f = 0; f < g.size(); ++f) {
            CMatrix shiftu = cert.approximant.at(f);
            shiftu *= std::exp(cplx(0, -bc.lambda[f]));
            CMatrix ht = principal_log(shiftu, 0.0, tol); // spec in (0, 2pi)
            CMatrix l1 = CMatrix::identity(m);
            l1 *= cplx(bc.lambda[f], 0);
            h2.samples[f] = ht + l1;
          }
        }
        break;
      } catch (const error& e) {
        if (attempt < 2 && (e.kind() == errc::branch_cut || e.kind() == errc::refinement ||
                            e.kind() == errc::search_exhausted)) {
          s_try /= 2;
          continue;
        }
        throw;
      }
    }

    // h1 = log of e^{-i h2/2} alpha e^{-i h2/2}, which sits within s < 1 of
    // the identity in operator norm, so the cut at -1 is safe
    SelfAdjointFamily h1 = zero_field(g, m, out.symmetry);
    for (size_t f = 0; f < g.size(); ++f) {
      CMatrix e = scaled_exp(h2.samples[f], -0.5);
      h1.samples[f] = principal_log(e * alpha.at(f) * e, -pi, 1e-9);
    }
    out.steps = {std::move(h1), std::move(h2)};
  }

  UnitaryFamily rec = reconstruct(out);
  double res = 0.0;
  for (size_t f = 0; f < g.size(); ++f) res = std::max(res, op_norm(rec.at(f) - alpha.at(f)));
  out.reconstruction_residual = res;
  if (out.symmetry)
    for (const auto& st : out.steps)
      out.trs_residual = std::max(out.trs_residual, trs_residual(st));
  return out;
}

MultiStepLog multi_step_log_from_homotopy(const std::vector<UnitaryFamily>& path) {
  if (path.size() < 2)
    throw error(errc::invalid_input, "multi_step_log: need at least two slices");
  const TorusGrid& g = path.front().grid;
  const int m = path.front().m;
  for (const auto& sl : path)
    if (sl.grid.dim != g.dim || sl.grid.n != g.n || sl.m != m)
      throw error(errc::shape, "multi_step_log: slices disagree in shape");
  for (size_t f = 0; f < g.size(); ++f)
    if (op_norm(path.front().at(f) - CMatrix::identity(m)) > 1e-8)
      throw error(errc::invalid_input, "multi_step_log: path must start at the identity");

  bool symmetric = true;
  for (const auto& sl : path) symmetric = symmetric && sl.symmetry.has_value();

  MultiStepLog out;
  out.grid = g;
  out.m = m;
  out.symmetry = symmetric ? path.front().symmetry : std::nullopt;
  const size_t M = path.size() - 1;
  out.steps.assign(M, SelfAdjointFamily{});

  // peel from the outside in: the first increment of the current (reduced)
  // path gives the outermost step, then conjugate the rest down by its half
  std::vector<std::vector<CMatrix>> cur; // cur[j][f], slices 1..step of the reduced path
  cur.reserve(M);
  for (size_t j = 1; j < path.size(); ++j) cur.push_back(path[j].samples);

  for (size_t step = M; step >= 1; --step) {
    SelfAdjointFamily h = zero_field(g, m, out.symmetry);
    for (size_t f = 0; f < g.size(); ++f) {
      const CMatrix& u1 = cur[0][f];
      if (op_norm(u1 - CMatrix::identity(m)) >= 2.0 - 1e-9)
        throw error(errc::refinement,
                    "multi_step_log: consecutive slices at operator distance >= 2; "
                    "subdivide the path");
      try {
        h.samples[f] = principal_log(u1, -pi, 1e-12);
      } catch (const error& e) {
        if (e.kind() == errc::branch_cut)
          throw error(errc::refinement,
                      "multi_step_log: slice increment touches -1; subdivide the path");
        throw;
      }
    }
    for (size_t j = 0; j + 1 < cur.size(); ++j)
      for (size_t f = 0; f < g.size(); ++f) {
        CMatrix e = scaled_exp(h.samples[f], -0.5);
        cur[j][f] = e * cur[j + 1][f] * e;
      }
    cur.pop_back();
    out.steps[step - 1] = std::move(h);
    if (step == 1) break;
  }

  UnitaryFamily rec = reconstruct(out);
  double res = 0.0;
  for (size_t f = 0; f < g.size(); ++f)
    res = std::max(res, op_norm(rec.at(f) - path.back().at(f)));
  out.reconstruction_residual = res;
  if (out.symmetry)
    for (const auto& st : out.steps)
      out.trs_residual = std::max(out.trs_residual, trs_residual(st));
  return out;
}

// -- beta families -------------------------------------------------------------------

namespace {

// e^{-i k1 h_M} ... e^{-i k1 h_1} at one grid point
CMatrix beta_core(const MultiStepLog& log, double k1, size_t flat) {
  CMatrix y = CMatrix::identity(log.m); // product order M..1: h_M acts leftmost
  for (size_t l = log.steps.size(); l-- > 0;)
    y = y * scaled_exp(log.steps[l].samples[flat], -k1);
  return y;
}

CMatrix recon_point(const MultiStepLog& log, size_t flat) {
  CMatrix x = log.steps.empty() ? CMatrix::identity(log.m) : exp_i(log.steps[0].samples[flat]);
  for (size_t l = 1; l < log.steps.size(); ++l) {
    CMatrix e = scaled_exp(log.steps[l].samples[flat], 0.5);
    x = e * x * e;
  }
  return x;
}

} // namespace

CMatrix beta_eval(const MultiStepLog& log, double k1, size_t flat) {
  // wrap to (-1/2, 1/2] and apply the twist for each full period
  long w = static_cast<long>(std::ceil(k1 - 0.5));
  CMatrix b = beta_core(log, k1 - static_cast<double>(w), flat);
  if (w != 0) {
    CMatrix a = recon_point(log, flat);
    CMatrix aw = w > 0 ? inverse(a) : a;
    for (long i = 0; i < std::abs(w); ++i) b = aw * b;
  }
  return b;
}

UnitaryFamily beta_family(const MultiStepLog& log) {
  const TorusGrid& g = log.grid;
  TorusGrid gg(g.dim + 1, g.n);
  UnitaryFamily out;
  out.grid = gg;
  out.m = log.m;
  out.symmetry = std::nullopt; // twisted in k1, not periodic
  out.samples.resize(gg.size());
  for (size_t f = 0; f < gg.size(); ++f) {
    auto c = gg.unflatten(f);
    std::array<int, 3> ck{};
    for (int a = 1; a < gg.dim; ++a) ck[static_cast<size_t>(a - 1)] = c[static_cast<size_t>(a)];
    size_t base = g.flatten(ck);
    out.samples[f] = beta_eval(log, static_cast<double>(c[0]) / g.n, base);
  }
  return out;
}

double beta_gluing_residual(const MultiStepLog& log) {
  double res = 0.0;
  for (size_t f = 0; f < log.grid.size(); ++f) {
    CMatrix lhs = beta_core(log, 0.5, f);
    CMatrix rhs = inverse(recon_point(log, f)) * beta_core(log, -0.5, f);
    res = std::max(res, op_norm(lhs - rhs));
  }
  return res;
}

double beta_twist_residual(const MultiStepLog& log, const UnitaryFamily& alpha) {
  if (alpha.grid.dim != log.grid.dim || alpha.grid.n != log.grid.n || alpha.m != log.m)
    throw error(errc::shape, "beta_twist_residual: family does not match the log");
  double res = 0.0;
  for (double k1 : {-0.25, 0.0, 0.3}) {
    for (size_t f = 0; f < log.grid.size(); ++f) {
      CMatrix prod = beta_eval(log, k1, f) * inverse(beta_eval(log, k1 + 1.0, f));
      res = std::max(res, op_norm(alpha.at(f) - prod));
    }
  }
  return res;
}

double beta_symmetry_residual(const MultiStepLog& log) {
  if (!log.symmetry)
    throw error(errc::invalid_input, "beta_symmetry_residual: log carries no symmetry");
  const TorusGrid& g = log.grid;
  CMatrix eps = log.symmetry->epsilon();
  CMatrix epsi = inverse(eps);
  double res = 0.0;
  for (int i1 = 0; i1 <= g.n / 2; ++i1) {
    double k1 = static_cast<double>(i1) / g.n;
    for (size_t f = 0; f < g.size(); ++f) {
      CMatrix lhs = beta_core(log, -k1, g.reflect(f));
      CMatrix rhs = epsi * beta_core(log, k1, f).conj() * eps;
      res = std::max(res, op_norm(lhs - rhs));
    }
  }
  return res;
}

std::vector<UnitaryFamily> homotopy_from_beta(const MultiStepLog& log, int slices) {
  if (slices < 1) throw error(errc::invalid_input, "homotopy_from_beta: slices >= 1");
  const TorusGrid& g = log.grid;
  std::vector<UnitaryFamily> path;
  path.reserve(static_cast<size_t>(slices) + 1);
  for (int j = 0; j <= slices; ++j) {
    double t = static_cast<double>(j) / slices;
    UnitaryFamily sl;
    sl.grid = g;
    sl.m = log.m;
    sl.symmetry = log.symmetry;
    sl.samples.resize(g.size());
    for (size_t f = 0; f < g.size(); ++f) {
      // beta(-t/2) beta(t/2)^-1 = [e^{i t h_M/2}...e^{i t h_1/2}][e^{i t h_1/2}...e^{i t h_M/2}]
      CMatrix a = CMatrix::identity(log.m);
      for (size_t l = log.steps.size(); l-- > 0;)
        a = a * scaled_exp(log.steps[l].samples[f], 0.5 * t);
      CMatrix b = CMatrix::identity(log.m);
      for (size_t l = 0; l < log.steps.size(); ++l)
        b = b * scaled_exp(log.steps[l].samples[f], 0.5 * t);
      sl.samples[f] = a * b;
    }
    path.push_back(std::move(sl));
  }
  return path;
}

} // namespace blochtk
