#ifndef BLOCHTK_ZOO_HPP
#define BLOCHTK_ZOO_HPP

#include <cstdint>
#include <string>

#include "blochtk/torus.hpp"

namespace blochtk {

// Catalog entry for a reproducible test family. Ground truth (index values,
// obstruction) follows from the construction parameters, never from external
// data.
struct ModelSpec {
  std::string name;          // catalog key
  int dim = 1;
  int n_pts = 64;
  int m = 2;                 // rank
  int amb = 4;               // ambient dimension (projection families)
  sym_kind kind = sym_kind::fermionic;
  std::uint64_t seed = 0;
  int winding = 0;           // winding / obstruction parameter where it applies
  double scale = 0.25;       // random-mode amplitude
};

// Matching-family catalog:
//   "identity"              identity at every k
//   "diag-winding"          diag(e^{2 pi i w k1}, e^{-2 pi i w k1}), fermionic,
//                           1D GP index = w mod 2
//   "factorized"            eps^-1 gamma(-k)^t eps gamma(k) from a random
//                           smooth periodic gamma (<= 3 Fourier modes) times a
//                           diag(e^{2 pi i w k1}, 1, ...) winding factor
//   "su2-random"            rank-2 unit quaternion field q0 + i F.sigma with
//                           the parity pattern of the chosen symmetry kind;
//                           fermionic: winding=1 flips the sign of q0 between
//                           k1 = 0 and k1 = 1/2 (GP index 1), winding=0 keeps
//                           q0 > 0 (index 0)
//   "product"               direct sum of "diag-winding" (m=2) and a
//                           "factorized" block of rank m-2
UnitaryFamily make_matching(const ModelSpec& spec);

// Projection-family catalog:
//   "constant"     k-independent projector onto the first m coordinates
//                  (whole symplectic pairs in the fermionic case)
//   "gauged"       P = W P0 W^* with W = exp(iK), K a smooth random Fourier
//                  field symmetrized so TRS holds exactly on the grid;
//                  topologically trivial by construction
//   "stacked-2d"   3D, k3-independent, amb 4, rank 2 fermionic family
//                  Q(k1,k2) + conj(Q(-k1,-k2)) built from a gapped rank-1
//                  band projector Q with Chern number `winding`; the derived
//                  matching family on {k1=0} behaves like diag-winding(w),
//                  so a symmetric frame exists iff w is even
ProjectionFamily make_projections(const ModelSpec& spec);

// Direct sum of two matching families on the same grid (block diagonal).
UnitaryFamily direct_sum(const UnitaryFamily& a, const UnitaryFamily& b);

// Names accepted by the two factories, for CLI listings.
std::vector<std::string> matching_catalog();
std::vector<std::string> projection_catalog();

} // namespace blochtk

#endif
