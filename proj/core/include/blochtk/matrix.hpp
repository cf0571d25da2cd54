#ifndef BLOCHTK_MATRIX_HPP
#define BLOCHTK_MATRIX_HPP

#include <complex>
#include <vector>

#include "blochtk/errors.hpp"

namespace blochtk {

using cplx = std::complex<double>;

// Dense complex matrix, row-major. Sizes stay small (the ranks m of the
// families, typically 2..8), so everything here is O(n^3) without blocking.
struct CMatrix {
  int rows = 0, cols = 0;
  std::vector<cplx> a;

  CMatrix() = default;
  CMatrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c) {}

  cplx& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  const cplx& operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

  static CMatrix identity(int n);
  static CMatrix zero(int r, int c) { return CMatrix(r, c); }

  CMatrix adjoint() const;
  CMatrix transpose() const;
  CMatrix conj() const;

  CMatrix& operator+=(const CMatrix& o);
  CMatrix& operator-=(const CMatrix& o);
  CMatrix& operator*=(cplx s);
};

CMatrix operator+(CMatrix x, const CMatrix& y);
CMatrix operator-(CMatrix x, const CMatrix& y);
CMatrix operator*(const CMatrix& x, const CMatrix& y);
CMatrix operator*(cplx s, CMatrix x);

double fro_norm(const CMatrix& m);
// Spectral norm (largest singular value); costs an eigen-decomposition of M*M.
double op_norm(const CMatrix& m);
cplx trace(const CMatrix& m);
cplx det(CMatrix m); // by value: LU clobbers the copy
CMatrix inverse(CMatrix m);

double herm_residual(const CMatrix& m);
double unitary_residual(const CMatrix& m);

// Unitary polar factor of an invertible matrix, by Newton iteration
// X <- (X + X^-*)/2, tol 1e-12. Fails (invalid_input) on singular input.
CMatrix polar_unitary(const CMatrix& m);

struct SpectralDecomp {
  std::vector<double> values;       // ascending eigenvalues, or eigenphases in (-pi, pi]
  std::vector<CMatrix> projectors;  // one orthogonal projector per distinct value/cluster
  std::vector<int> multiplicities;

  CMatrix reconstruct_hermitian() const;
  CMatrix reconstruct_unitary() const; // values interpreted as phases
};

// Cyclic Jacobi for complex Hermitian matrices. Eigenvalues ascending,
// eigenvalues within cluster_tol of each other merged into one projector.
SpectralDecomp herm_eig(const CMatrix& h, double tol, double cluster_tol = 0.0);

// Full eigenbasis variant: ascending eigenvalues and the unitary of column
// eigenvectors, no clustering.
void herm_eig_vectors(const CMatrix& h, double tol, std::vector<double>& evals, CMatrix& vecs);

// Spectral decomposition of a unitary via the commuting Hermitian parts
// (U+U*)/2 and (U-U*)/(2i), resolving degeneracies of one inside eigenspaces
// of the other. Phases in (-pi, pi]; clusters closer than tol merged.
SpectralDecomp unitary_eig(const CMatrix& u, double tol);

// Pfaffian of an even-size antisymmetric matrix by unitary-congruence
// Householder tridiagonalization. pfaffian_recursive is the exponential-cost
// Laplace expansion kept as a test oracle.
cplx pfaffian(const CMatrix& a, double tol = 1e-10);
cplx pfaffian_recursive(const CMatrix& a);

// Self-adjoint H with e^{iH} = U and spec(H) inside the open length-2pi arc
// starting at cut_phase. Throws branch_cut if an eigenphase is within tol of
// the cut.
CMatrix principal_log(const CMatrix& u, double cut_phase, double tol);

CMatrix exp_i(const CMatrix& h); // e^{iH} for Hermitian H

// Loewdin orthonormalization X (X*X)^{-1/2} of a full-column-rank tall
// matrix; the closest isometry with the same column span. Throws
// invalid_input when X*X is numerically singular.
CMatrix orthonormalize_columns(const CMatrix& x);

// Continuous square-root branch of det along a path of unitaries; the first
// entry has phase in (-pi/2, pi/2], each next picks the nearer root. Throws
// refinement if consecutive det phases differ by >= pi/2.
std::vector<cplx> sqrt_det_branch(const std::vector<CMatrix>& path);

} // namespace blochtk

#endif
