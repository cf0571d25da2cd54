#ifndef BLOCHTK_GENERICIZE_HPP
#define BLOCHTK_GENERICIZE_HPP

#include <array>
#include <cstdint>
#include <random>

#include "blochtk/torus.hpp"

namespace blochtk {

// -- cluster bookkeeping ------------------------------------------------------

struct PointClusters {
  std::vector<double> phases;      // one representative phase per cluster, ascending
  std::vector<int> mult;           // cluster multiplicities, sum = m
  std::vector<CMatrix> projectors; // Riesz projector per cluster
  double min_gap = 0.0;            // smallest circular inter-cluster distance
};

struct ClusterDecomposition {
  std::vector<PointClusters> points; // one entry per grid point
  double eps1 = 0.0;                 // clustering tolerance used
  double A = 0.0;                    // min inter-cluster gap over the grid
  int max_mult = 1;                  // worst multiplicity found
  int count_max = 0;                 // number of grid points attaining max_mult
};

ClusterDecomposition cluster_census(const UnitaryFamily& alpha, double eps1);

// -- certificates --------------------------------------------------------------

enum class generic_mode { symmetric, trs_broken };

struct GenericFormCertificate {
  UnitaryFamily approximant;
  double distance = 0.0;  // sup_k ||approximant - input||_F
  double min_gap = 0.0;   // min circular eigenphase gap away from the mandatory
                          // double degeneracies (symmetric fermionic mode)
  double A = 0.0;         // certified cluster separation
  int ball_radius = 3;    // R around each high-symmetry point, in grid steps
  generic_mode mode = generic_mode::symmetric;
  std::uint64_t seed = 0;
};

// -- SU(2) fast path (m = 2) ----------------------------------------------------

// alpha = m 1 + i (f1 s1 + f2 s2 + f3 s3) with m^2 + |F|^2 = 1 pointwise.
struct SU2Decomposition {
  std::vector<double> m, f1, f2, f3;
};

SU2Decomposition su2_decompose(const UnitaryFamily& alpha, double tol = 1e-8);
UnitaryFamily su2_compose(const TorusGrid& grid, const std::optional<SymmetryKind>& sym,
                          const SU2Decomposition& d);

// -- perturbation primitives ----------------------------------------------------

// e^{ih/2} a e^{ih/2}; preserves the matching TRS relation exactly when h does.
UnitaryFamily apply_symmetric_sandwich(const UnitaryFamily& a, const SelfAdjointFamily& h);

// Random v with |v| = s such that min_i |f_i + v| > margin_floor; the margin is
// the grid certificate for the continuum claim. Throws search_exhausted.
std::array<double, 3> certified_direction_search(const std::vector<std::array<double, 3>>& f,
                                                 double s, int trials, double margin_floor,
                                                 std::mt19937_64& rng,
                                                 double* margin_out = nullptr);

// -- splitting stages ------------------------------------------------------------

// Symmetric splitting at one high-symmetry point: inside the ball of
// `ball_radius` grid steps the family is sandwiched with an even bump times a
// ladder operator built from the eigenprojectors of alpha(k#) (theta-real
// rays in the bosonic case, Kramers pairs in the fermionic case). At k# the
// bosonic spectrum becomes simple and the fermionic one exactly double.
UnitaryFamily local_split(const UnitaryFamily& alpha, size_t ksharp, double s,
                          int ball_radius = 3);

// TRS-breaking refinement at k# for a fermionic family whose spectrum is
// exactly double there: splits each Kramers pair by pushing the eigenphase
// pair from mean +- dev to mean +- sqrt(dev^2 + (delta chi)^2) on the ball
// (chi an even bump), keeping the eigenprojectors. The shift depends on k
// only through even quantities, so the eigenphase multisets stay exactly
// even under k -> -k; at k# the perturbation commutes with alpha(k#).
UnitaryFamily full_split_at_point(const UnitaryFamily& alpha, size_t ksharp, double s,
                                  int ball_radius = 3);

// 2D: certified non-degeneracy on thin slabs around the lines k_j = 0, 1/2
// (outside the k# balls). The 1D restriction to each line is genericized and
// the same sandwich fields are applied to the 2D family blended by a bump in
// the transverse variable.
UnitaryFamily line_lift(const UnitaryFamily& alpha, double s, std::mt19937_64& rng,
                        int ball_radius = 3, int trials = 32);

// 2D: certified non-degeneracy on a neighborhood of the closed contour
// (boundary of the quadrant, detoured around the k# balls). No-op when the
// contour is already non-degenerate.
UnitaryFamily close_contour(const UnitaryFamily& alpha, double s, std::mt19937_64& rng,
                            int ball_radius = 3, int trials = 32);

// Iterative bulk splitting: census -> localized TRS sandwich at the worst
// degeneracy -> re-census; each pass must strictly reduce the lexicographic
// signature (max multiplicity, count). Mandatory fermionic pairs at k# are
// kept. Throws search_exhausted when retries run out.
UnitaryFamily bulk_split(const UnitaryFamily& alpha, double s, std::mt19937_64& rng,
                         int ball_radius = 3, int trials = 32);

// -- top level --------------------------------------------------------------------

// Composes the stages with geometrically shrinking budgets (total <= s).
// m = 2 dispatches to su2_path, m = 1 is trivially generic. s = 0 returns the
// input unchanged. Works for dim <= 2 when m >= 3.
GenericFormCertificate to_generic_form(const UnitaryFamily& alpha, double s, generic_mode mode,
                                       std::uint64_t seed = 0);

// Closed-form m = 2 pipeline. Symmetric mode perturbs the F field by certified
// directions and renormalizes; TRS-broken mode additionally splits the k#
// pairs through exact spectral coordinates (r, m) so the eigenphase multisets
// stay exactly even under k -> -k.
GenericFormCertificate su2_path(const UnitaryFamily& alpha, double s, generic_mode mode,
                                std::uint64_t seed = 0);

} // namespace blochtk

#endif
