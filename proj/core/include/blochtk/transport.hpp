#ifndef BLOCHTK_TRANSPORT_HPP
#define BLOCHTK_TRANSPORT_HPP

#include "blochtk/torus.hpp"

namespace blochtk {

struct TransportResult {
  CMatrix unitary;                    // T: transports Ran P(start) onto Ran P(end)
  double intertwining_residual = 0.0; // || T P(start) T* - P(end) ||_F
};

// Discrete parallel transport along a path of grid points (consecutive points
// must differ by one grid edge, wrap-around included). Each step is the
// unitary polar factor of P(next) P(cur) + Q(next) Q(cur); the polar factor
// intertwines the two projections exactly, so the reported residual only
// reflects accumulated floating-point error, not discretization bias.
TransportResult parallel_transport(const ProjectionFamily& p, const std::vector<size_t>& path);

// Closed axis-aligned loop through `start`, one full period, N+1 points.
std::vector<size_t> axis_loop_path(const TorusGrid& grid, size_t start, int axis);

// Matching family of a projection family on T^D (D >= 2) with respect to a
// frame on the hyperplane {k_1 = 0}:
//   alpha(k)_{ab} = < xi_a(0,k), T_k(1,0) xi_b(0,k) >,
// T_k the transport around the k_1 loop at fixed transverse k. Each sample is
// re-unitarized by polar projection (which preserves the TRS relation
// exactly). If `worst_residual` is non-null it receives the largest
// intertwining residual met along the way.
UnitaryFamily matching_matrix(const ProjectionFamily& p, const BlochFrame& frame0,
                              double* worst_residual = nullptr);

// Holonomy matching matrix of a 1D projection family in the frame `f0` at
// k = 0 (the D = 1 specialization of matching_matrix).
CMatrix holonomy_matrix(const ProjectionFamily& p, const CMatrix& f0,
                        double* residual = nullptr);

} // namespace blochtk

#endif
