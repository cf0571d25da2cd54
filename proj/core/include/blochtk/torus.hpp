#ifndef BLOCHTK_TORUS_HPP
#define BLOCHTK_TORUS_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "blochtk/matrix.hpp"

namespace blochtk {

// Uniform grid on T^d. N must be even so every half-integer coordinate is a
// grid point and k -> -k maps grid points to grid points.
struct TorusGrid {
  int dim = 1;
  int n = 64; // points per axis

  TorusGrid() = default;
  TorusGrid(int d, int pts);

  size_t size() const;
  std::array<int, 3> unflatten(size_t flat) const; // unused axes are 0
  size_t flatten(const std::array<int, 3>& c) const; // odometer, last axis fastest
  size_t reflect(size_t flat) const;                 // index of -k mod Z^d
  size_t shift(size_t flat, int axis, int delta) const;
  double coordinate(size_t flat, int axis) const; // in [0, 1)
  std::vector<size_t> high_symmetry_points() const;
  bool is_high_symmetry(size_t flat) const;
};

enum class sym_kind { bosonic, fermionic };

// Carries epsilon and the sign of theta^2. Fermionic epsilon is the standard
// symplectic block-diagonal of J = [[0,1],[-1,0]]; requires even m.
struct SymmetryKind {
  sym_kind kind = sym_kind::bosonic;
  int m = 1;

  static SymmetryKind bosonic(int m) { return {sym_kind::bosonic, m}; }
  static SymmetryKind fermionic(int m);

  CMatrix epsilon() const;
  int theta_square_sign() const { return kind == sym_kind::bosonic ? 1 : -1; }
  // theta v = epsilon * conj(v), applied column-wise
  CMatrix theta(const CMatrix& v) const { return epsilon() * v.conj(); }
  bool operator==(const SymmetryKind&) const = default;
};

struct UnitaryFamily {
  TorusGrid grid;
  int m = 1;
  std::optional<SymmetryKind> symmetry;
  std::vector<CMatrix> samples;

  const CMatrix& at(size_t flat) const { return samples[flat]; }
  CMatrix& at(size_t flat) { return samples[flat]; }
};

struct SelfAdjointFamily {
  TorusGrid grid;
  int m = 1;
  std::optional<SymmetryKind> symmetry;
  std::vector<CMatrix> samples;
};

// Rank-m orthogonal projections on C^amb with antiunitary theta = eps o conj.
struct ProjectionFamily {
  TorusGrid grid;
  int amb = 1; // ambient dimension
  int m = 1;   // rank
  SymmetryKind symmetry; // symmetry.m == amb
  std::vector<CMatrix> samples;
};

// Family of orthonormal frames spanning Ran P(k): columns(k) is an amb x m
// isometry. `kind` fixes both the ambient antiunitary (epsilon on C^amb) and
// the coefficient-space epsilon on C^m used by the frame TRS condition
//   xi_b(-k) = sum_a theta(xi_a(k)) eps_{ab}.
struct BlochFrame {
  TorusGrid grid;
  int amb = 1;
  int m = 1;
  sym_kind kind = sym_kind::bosonic;
  std::vector<CMatrix> columns;

  SymmetryKind ambient_symmetry() const {
    return kind == sym_kind::bosonic ? SymmetryKind::bosonic(amb) : SymmetryKind::fermionic(amb);
  }
  SymmetryKind frame_symmetry() const {
    return kind == sym_kind::bosonic ? SymmetryKind::bosonic(m) : SymmetryKind::fermionic(m);
  }
};

struct ValidationReport {
  bool pass = true;
  double unitarity_residual = 0.0;
  double hermiticity_residual = 0.0;
  double idempotency_residual = 0.0;
  double rank_deviation = 0.0;
  double trs_residual = 0.0;
  double step_norm = 0.0; // max discrete step over all axes (continuity proxy)
  size_t worst_index = 0; // grid index of the worst offender
  std::string note;
};

struct ValidationConfig {
  double unitarity_tol = 1e-8;
  double projection_tol = 1e-8;
  double trs_tol = 1e-8;
  double step_tol = 0.5; // continuity-proxy knob; discrete families have no canonical value
};

// max_k || eps a(k) - a(-k)^t eps || over the grid
double trs_residual(const UnitaryFamily& fam);
double trs_residual(const SelfAdjointFamily& fam);
// max_k || theta P(k) theta^-1 - P(-k) ||
double trs_residual(const ProjectionFamily& fam);
double step_norm(const TorusGrid& grid, const std::vector<CMatrix>& samples);

ValidationReport validate_matching(const UnitaryFamily& fam, const ValidationConfig& cfg = {});
ValidationReport validate_projections(const ProjectionFamily& fam, const ValidationConfig& cfg = {});

// Discrete periodic convolution with a normalized even quintic bump kernel of
// the given half-width (fraction of the period, must be < 1/4) along every
// axis. Unitary families are re-unitarized by polar projection.
UnitaryFamily smooth_even_convolve(const UnitaryFamily& fam, double width);
SelfAdjointFamily smooth_even_convolve(const SelfAdjointFamily& fam, double width);

struct DetNormalization {
  UnitaryFamily normalized; // det == 1 pointwise
  std::vector<double> phase; // unwrapped phi with det alpha = e^{i phi}
};

// Splits off the determinant phase: alpha~ = e^{-i phi/m} alpha. Throws
// invalid_input if det winds along a fundamental cycle.
DetNormalization det_phase_normalize(const UnitaryFamily& fam);

// Restriction to the hyperplane {k_axis = value}; value must be a grid
// coordinate. Symmetry metadata survives only on half-integer lines.
UnitaryFamily restrict_family(const UnitaryFamily& fam, int axis, double value);
ProjectionFamily restrict_family(const ProjectionFamily& fam, int axis, double value);

// Even periodized C^2 bump: 1 on [.-plateau, .+plateau], 0 outside
// [.-support, .+support], quintic-smoothstep edges.
struct BumpProfile {
  double center = 0.0;
  double plateau = 0.0;
  double support = 0.0;
  std::vector<double> values; // sampled on the 1D grid

  double operator[](int i) const { return values[static_cast<size_t>(i)]; }
};

BumpProfile make_bump(double center, double plateau, double support, int grid_n);
// continuous evaluation (used by tests and transverse blends)
double bump_value(double center, double plateau, double support, double x);

} // namespace blochtk

#endif
