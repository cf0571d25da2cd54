#ifndef BLOCHTK_FRAME_HPP
#define BLOCHTK_FRAME_HPP

#include <cstdint>

#include "blochtk/torus.hpp"

namespace blochtk {

enum class frame_mode { symmetric, periodic_only };

struct FrameBuildConfig {
  double s = 0.05;          // generic-form budget handed to the two-step logs
  std::uint64_t seed = 0;   // splitting seed
  frame_mode mode = frame_mode::symmetric;
};

// Orthonormal basis of Ran P respecting the antiunitary theta = eps o conj at
// a fixed point of k -> -k: bosonic gives a theta-real basis (theta xi = xi),
// fermionic gives Kramers pairs (columns 2t, 2t+1) = (v, theta v). Returns an
// amb x rank isometry; rank is read off trace(P). Fermionic rank must be even.
CMatrix frame_point(const CMatrix& p, const SymmetryKind& sym);

// 1D base case: frame_point at k = 0 transported along the period, the
// holonomy mismatch distributed as e^{-i k h} with h the spectral log of the
// holonomy cut at the midpoint of its largest eigenphase gap. Never
// topologically obstructed; TRS holds exactly on the grid (up to fp) because
// the holonomy satisfies eps a = a^t eps.
BlochFrame frame_1d(const ProjectionFamily& p, const FrameBuildConfig& cfg = {});

// One induction stage: alpha = matching_matrix(p, frame_d), log =
// two_step_log(alpha) (symmetric mode gates on the Z2 indices and throws
// obstruction_error; periodic-only mode always succeeds), then
//   xi(k1, k) = T(k1 <- 0; k) xi(0, k) . beta(k1, k),
// Loewdin-orthonormalized pointwise. frame_d must live on the {k1 = 0}
// restriction of p.
BlochFrame inductive_step(const ProjectionFamily& p, const BlochFrame& frame_d,
                          const FrameBuildConfig& cfg = {});

// Induction on the dimension (D <= 3): restrict to {k1 = 0}, recurse, then
// inductive_step; 1D base case as above. Symmetric mode throws
// obstruction_error (with the Z2 certificate) when a stage is obstructed;
// bosonic families and periodic-only mode never throw it.
BlochFrame build_frame(const ProjectionFamily& p, const FrameBuildConfig& cfg = {});

// Orthonormality, span, TRS and continuity-proxy residuals of a frame against
// its projection family. Periodicity is exact by grid indexing. The TRS
// residual always gets reported; it only gates `pass` when require_trs.
ValidationReport check_frame(const BlochFrame& frame, const ProjectionFamily& p,
                             const ValidationConfig& cfg = {}, bool require_trs = true);

// Wannier-decay diagnostic: largest Fourier coefficient magnitude per shell
// |n|_inf, after convolving the frame columns with the even bump kernel of the
// given half-width (width 0 = no smoothing). `exponent` is the fitted slope of
// log(shell max) over the shells past 0 (more negative = faster decay).
struct DecayReport {
  double width = 0.0;
  std::vector<double> shell_max; // index = shell |n|_inf, 0 .. n/2
  double exponent = 0.0;
};

DecayReport fourier_decay(const BlochFrame& frame, double width);

} // namespace blochtk

#endif
