#include "blochtk/transport.hpp"

namespace blochtk {

namespace {

bool is_grid_edge(const TorusGrid& grid, size_t a, size_t b) {
  auto ca = grid.unflatten(a), cb = grid.unflatten(b);
  int moved = 0;
  for (int ax = 0; ax < grid.dim; ++ax) {
    int d = std::abs(ca[ax] - cb[ax]);
    if (d == 0) continue;
    if (d != 1 && d != grid.n - 1) return false;
    ++moved;
  }
  return moved == 1;
}

// polar factor of P2 P1 + Q2 Q1; intertwines P1 with P2 exactly
CMatrix transport_step(const CMatrix& p1, const CMatrix& p2) {
  if (op_norm(p2 - p1) >= 1.0)
    throw error(errc::refinement,
                "parallel_transport: consecutive projections too far apart, refine the grid");
  CMatrix id = CMatrix::identity(p1.rows);
  CMatrix m = p2 * p1 + (id - p2) * (id - p1);
  return polar_unitary(m);
}

} // namespace

TransportResult parallel_transport(const ProjectionFamily& p, const std::vector<size_t>& path) {
  if (path.size() < 2) throw error(errc::invalid_input, "parallel_transport: path too short");
  for (size_t j = 0; j + 1 < path.size(); ++j)
    if (!is_grid_edge(p.grid, path[j], path[j + 1]))
      throw error(errc::invalid_input, "parallel_transport: path must follow grid edges");

  CMatrix t = CMatrix::identity(p.amb);
  for (size_t j = 0; j + 1 < path.size(); ++j)
    t = transport_step(p.samples[path[j]], p.samples[path[j + 1]]) * t;

  TransportResult res;
  res.intertwining_residual =
      fro_norm(t * p.samples[path.front()] * t.adjoint() - p.samples[path.back()]);
  res.unitary = std::move(t);
  return res;
}

std::vector<size_t> axis_loop_path(const TorusGrid& grid, size_t start, int axis) {
  if (axis < 0 || axis >= grid.dim) throw error(errc::invalid_input, "axis_loop_path: bad axis");
  std::vector<size_t> path;
  path.reserve(static_cast<size_t>(grid.n) + 1);
  for (int j = 0; j <= grid.n; ++j) path.push_back(grid.shift(start, axis, j));
  return path;
}

namespace {

double frame_fit_residual(const CMatrix& p, const CMatrix& f) {
  double iso = fro_norm(f.adjoint() * f - CMatrix::identity(f.cols));
  double span = fro_norm(p * f - f);
  return std::max(iso, span);
}

} // namespace

CMatrix holonomy_matrix(const ProjectionFamily& p, const CMatrix& f0, double* residual) {
  if (f0.rows != p.amb || f0.cols != p.m)
    throw error(errc::shape, "holonomy_matrix: frame shape mismatch");
  if (frame_fit_residual(p.samples[0], f0) > 1e-6)
    throw error(errc::invalid_input, "holonomy_matrix: frame does not span Ran P(0)");
  TransportResult tr = parallel_transport(p, axis_loop_path(p.grid, 0, 0));
  if (residual) *residual = tr.intertwining_residual;
  return polar_unitary(f0.adjoint() * tr.unitary * f0);
}

UnitaryFamily matching_matrix(const ProjectionFamily& p, const BlochFrame& frame0,
                              double* worst_residual) {
  if (p.grid.dim < 2)
    throw error(errc::shape, "matching_matrix: needs dim >= 2 (see holonomy_matrix for 1D)");
  if (frame0.grid.dim != p.grid.dim - 1 || frame0.grid.n != p.grid.n)
    throw error(errc::shape, "matching_matrix: frame grid must be the {k1=0} hyperplane grid");
  if (frame0.amb != p.amb || frame0.m != p.m)
    throw error(errc::shape, "matching_matrix: frame shape mismatch");
  if (frame0.kind != p.symmetry.kind)
    throw error(errc::symmetry, "matching_matrix: frame/projection symmetry kinds differ");

  UnitaryFamily alpha;
  alpha.grid = frame0.grid;
  alpha.m = p.m;
  alpha.symmetry = frame0.frame_symmetry();
  alpha.samples.resize(alpha.grid.size());
  double worst = 0.0;
  for (size_t kf = 0; kf < alpha.grid.size(); ++kf) {
    auto kc = alpha.grid.unflatten(kf);
    std::array<int, 3> full{0, 0, 0};
    for (int a = 0; a < alpha.grid.dim; ++a) full[a + 1] = kc[a];
    size_t start = p.grid.flatten(full);
    const CMatrix& f = frame0.columns[kf];
    if (frame_fit_residual(p.samples[start], f) > 1e-6)
      throw error(errc::invalid_input, "matching_matrix: frame does not span Ran P(0,k)");
    TransportResult tr = parallel_transport(p, axis_loop_path(p.grid, start, 0));
    worst = std::max(worst, tr.intertwining_residual);
    alpha.samples[kf] = polar_unitary(f.adjoint() * tr.unitary * f);
  }
  if (worst_residual) *worst_residual = worst;
  return alpha;
}

} // namespace blochtk
