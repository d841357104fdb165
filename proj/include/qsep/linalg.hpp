#pragma once

// Dense complex Hermitian linear algebra for small fixed-capacity matrices.
// Everything is deterministic: fixed sweep orders, fixed tie-breaking, no
// hidden state. Dimensions are tiny (<= 16), so all algorithms favor
// robustness and reproducibility over asymptotic speed.

#include <array>
#include <complex>

#include "qsep/error.hpp"

namespace qsep::la {

using cxd = std::complex<double>;

inline constexpr int kMaxDim = 16;

// Dense square complex matrix with value semantics and a fixed capacity.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  explicit ComplexMatrix(int n);

  static ComplexMatrix identity(int n);

  int dim() const { return n_; }

  cxd& operator()(int r, int c) { return a_[r * n_ + c]; }
  const cxd& operator()(int r, int c) const { return a_[r * n_ + c]; }

  ComplexMatrix& operator+=(const ComplexMatrix& o);
  ComplexMatrix& operator-=(const ComplexMatrix& o);
  ComplexMatrix& operator*=(cxd s);

  friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
  friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
  friend ComplexMatrix operator*(cxd s, ComplexMatrix a) { return a *= s; }
  friend ComplexMatrix operator*(ComplexMatrix a, cxd s) { return a *= s; }
  friend ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);

  ComplexMatrix adjoint() const;
  ComplexMatrix transpose() const;
  ComplexMatrix conjugate() const;

  cxd trace() const;
  double frobenius_norm() const;
  bool is_finite() const;

 private:
  int n_ = 0;
  std::array<cxd, kMaxDim * kMaxDim> a_{};
};

// Hermitian view: construction symmetrizes (A + A^dag)/2, so the stored
// matrix satisfies A = A^dag to rounding.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;
  explicit HermitianMatrix(const ComplexMatrix& a);

  static HermitianMatrix zero(int n) { return HermitianMatrix(ComplexMatrix(n)); }
  static HermitianMatrix identity(int n) { return HermitianMatrix(ComplexMatrix::identity(n)); }

  int dim() const { return m_.dim(); }
  const ComplexMatrix& matrix() const { return m_; }
  cxd operator()(int r, int c) const { return m_(r, c); }

  double frobenius_norm() const { return m_.frobenius_norm(); }
  double trace_real() const { return m_.trace().real(); }

  HermitianMatrix& operator+=(const HermitianMatrix& o);
  HermitianMatrix& operator-=(const HermitianMatrix& o);
  HermitianMatrix& operator*=(double s);
  friend HermitianMatrix operator+(HermitianMatrix a, const HermitianMatrix& b) { return a += b; }
  friend HermitianMatrix operator-(HermitianMatrix a, const HermitianMatrix& b) { return a -= b; }
  friend HermitianMatrix operator*(double s, HermitianMatrix a) { return a *= s; }
  friend HermitianMatrix operator*(HermitianMatrix a, double s) { return a *= s; }

 private:
  ComplexMatrix m_;
};

// Fixed-capacity complex column vector.
class CVector {
 public:
  CVector() = default;
  explicit CVector(int n) : n_(n) {}

  int dim() const { return n_; }
  cxd& operator[](int i) { return v_[i]; }
  const cxd& operator[](int i) const { return v_[i]; }

  double norm() const;
  bool is_finite() const;

 private:
  int n_ = 0;
  std::array<cxd, kMaxDim> v_{};
};

// <a, b> = sum conj(a_i) b_i.
cxd inner(const CVector& a, const CVector& b);

CVector matvec(const ComplexMatrix& a, const CVector& x);

// Full eigendecomposition; eigenvalues ascending, eigenvectors as columns.
struct Spectrum {
  int n = 0;
  std::array<double, kMaxDim> values{};
  ComplexMatrix vectors;

  CVector vector(int k) const;
};

// Cyclic complex Jacobi eigensolver. Deterministic: fixed (p,q) sweep order,
// convergence when the off-diagonal Frobenius norm falls below
// 1e-13 * ||A||_F, at most 100 sweeps. Eigenvalues sorted ascending with
// index-order tie-breaking; numerically degenerate clusters are
// re-orthonormalized by Gram-Schmidt in index order; every eigenvector's
// largest-magnitude component is phase-fixed to be real positive.
Spectrum eig_hermitian(const HermitianMatrix& a);

// True iff lambda_min(A) >= -tol * max(1, ||A||_F).
bool is_psd(const HermitianMatrix& a, double tol = 1e-9);

// PSD square root; eigenvalues within -tol*max(1,||A||_F) of zero are clamped.
HermitianMatrix psd_sqrt(const HermitianMatrix& a, double tol = 1e-9);

// Number of eigenvalues with |lambda| > eps * max(1, ||A||_F).
int rank_eps(const HermitianMatrix& a, double eps = 1e-9);

// Re tr{A B} for Hermitian A, B (the imaginary part is O(eps) and discarded).
double frobenius_inner(const HermitianMatrix& a, const HermitianMatrix& b);

// Tensor (Kronecker) product; dims multiply and must stay within capacity.
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);
CVector kron(const CVector& a, const CVector& b);

// Rank-1 projector |v><v|.
HermitianMatrix outer_self(const CVector& v);

// Solve A x = b for Hermitian nonsingular A via the spectral decomposition.
CVector solve_hermitian_linear(const HermitianMatrix& a, const CVector& b);

// Cholesky factorization A = L L^dag for Hermitian positive definite A.
// Returns ok = false (with L unspecified) when a pivot is not positive.
struct Cholesky {
  ComplexMatrix lower;
  bool ok = false;
};
Cholesky cholesky(const HermitianMatrix& a);

// Solve L X = B (forward substitution) for lower-triangular L.
ComplexMatrix lower_solve(const ComplexMatrix& l, const ComplexMatrix& b);
// Solve L^dag X = B (backward substitution).
ComplexMatrix lower_adjoint_solve(const ComplexMatrix& l, const ComplexMatrix& b);

}  // namespace qsep::la
