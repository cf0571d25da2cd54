#ifndef BLOCHTK_LOGSMITH_HPP
#define BLOCHTK_LOGSMITH_HPP

#include "blochtk/genericize.hpp"
#include "blochtk/torus.hpp"

namespace blochtk {

// -- multi-step logarithms ---------------------------------------------------------

// alpha(k) = e^{i h_M/2} ... e^{i h_2/2} e^{i h_1} e^{i h_2/2} ... e^{i h_M/2}
// with every step Hermitian, periodic, and (in symmetric mode) TRS.
struct MultiStepLog {
  TorusGrid grid;
  int m = 1;
  std::optional<SymmetryKind> symmetry;
  std::vector<SelfAdjointFamily> steps; // h_1 first
  double reconstruction_residual = 0.0; // vs the family the log was built from
  double trs_residual = 0.0;            // worst step TRS residual
};

// the symmetric product of exponentials above
UnitaryFamily reconstruct(const MultiStepLog& log);

// -- labeling ------------------------------------------------------------------------

// Star-shaped grid region: every point carries its staircase predecessor
// (one grid step closer to the center); pred[center] == center.
struct GridRegion {
  std::vector<size_t> points;
  std::vector<size_t> pred; // parallel to points, values are flat grid indices
  size_t center = 0;
};

// Continuously labeled simple spectrum over a star-shaped region. Phases are
// unwrapped real numbers (label order never crosses); projectors are rank 1.
struct LabeledSpectrum {
  GridRegion region;
  double A = 0.0; // gap the labeling was certified against
  std::vector<std::vector<double>> phases;     // parallel to region.points
  std::vector<std::vector<CMatrix>> projectors;
};

// Propagates labels from the region center along the predecessor tree,
// matching by nearest phase per step; any per-edge jump at or above half the
// local eigenphase spacing (floor A/2, also on edges between neighboring
// rays) is a labeling failure (refinement error).
LabeledSpectrum label_eigenvalues(const UnitaryFamily& ahat, const GridRegion& domain, double A);

// -- branch cuts -----------------------------------------------------------------------

struct BranchCutField {
  std::vector<double> lambda; // one value per grid point; periodic; even in TRS mode
  double margin = 0.0;        // min circular distance from e^{i lambda} to spec(alpha-hat)
};

// Midpoint of the labeled channel on the half-cell, extended by evenness and
// periodicity; for symmetric fermionic families the cut is continued through
// the k#-balls at distance min(A/4, half channel) above the lower cluster.
// Margin >= A/4 is certified on the grid (refinement error otherwise).
BranchCutField branch_cut(const GenericFormCertificate& cert);

// -- logarithms --------------------------------------------------------------------------

// Two-step logarithm: h2 = principal log of e^{-i Lambda} alpha-hat shifted by
// Lambda 1 (m >= 3; closed forms for m <= 2), h1 = principal log (cut at -1)
// of e^{-i h2/2} alpha e^{-i h2/2}. Symmetric mode first checks that all
// indices vanish (obstruction_error otherwise) and produces TRS steps;
// periodic-only mode uses the TRS-broken generic form and drops the index
// gate (a log always exists). Requires 0 <= s < 1. Branch-cut or refinement
// failures are retried with s/2 before propagating.
MultiStepLog two_step_log(const UnitaryFamily& alpha, double s, bool symmetric_mode = true,
                          std::uint64_t seed = 0);

// Peels one principal log per path increment: h_M from the first slice, then
// recurse on the conjugated remainder. Slices must start at the identity and
// consecutive slices must stay at operator distance < 2 (refinement error:
// subdivide the path).
MultiStepLog multi_step_log_from_homotopy(const std::vector<UnitaryFamily>& path);

// -- beta families and homotopies -----------------------------------------------------------

// beta(k1, k) = e^{-i k1 h_M} ... e^{-i k1 h_1} on k1 in [-1/2, 1/2], extended
// to arbitrary k1 by the twisted periodicity beta(k1 + 1, k) = alpha^-1 beta(k1, k)
// (alpha reconstructed from the log, so the gluing at k1 = +-1/2 is exact up
// to the reconstruction residual).
CMatrix beta_eval(const MultiStepLog& log, double k1, size_t flat);

// beta sampled on the (d+1)-dimensional grid (k1 axis first); not periodic in
// k1 (twisted), so no symmetry metadata is attached.
UnitaryFamily beta_family(const MultiStepLog& log);

// max_k || beta(1/2, k) - alpha^-1 beta(-1/2, k) ||, the proof's matching
// computation at the half-integer seam
double beta_gluing_residual(const MultiStepLog& log);

// max over sampled k1 of || alpha(k) - beta(k1,k) beta(k1+1,k)^-1 || vs the
// given family
double beta_twist_residual(const MultiStepLog& log, const UnitaryFamily& alpha);

// symmetric mode: max || beta(-k1,-k) - eps^-1 conj(beta(k1,k)) eps ||
double beta_symmetry_residual(const MultiStepLog& log);

// alpha_t(k) = beta(-t/2, k) beta(t/2, k)^-1 at t = j/slices, j = 0..slices;
// starts exactly at the identity, ends at the reconstructed alpha, every slice
// TRS in symmetric mode.
std::vector<UnitaryFamily> homotopy_from_beta(const MultiStepLog& log, int slices = 16);

} // namespace blochtk

#endif
