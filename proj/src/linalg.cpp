#include "qsep/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qsep {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidMatrix: return "InvalidMatrix";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::NotPsd: return "NotPsd";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::RankMismatch: return "RankMismatch";
    case ErrorCode::InvalidParam: return "InvalidParam";
    case ErrorCode::ProductGamma: return "ProductGamma";
    case ErrorCode::EntangledGamma: return "EntangledGamma";
    case ErrorCode::UnsupportedRank: return "UnsupportedRank";
    case ErrorCode::SeparableInput: return "SeparableInput";
    case ErrorCode::WrongCase: return "WrongCase";
    case ErrorCode::InfeasibleStart: return "InfeasibleStart";
    case ErrorCode::CannotCenter: return "CannotCenter";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace qsep

namespace qsep::la {

ComplexMatrix::ComplexMatrix(int n) : n_(n) {
  if (n < 0 || n > kMaxDim) throw Error(ErrorCode::InvalidMatrix, "dimension out of range");
}

ComplexMatrix ComplexMatrix::identity(int n) {
  ComplexMatrix m(n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& o) {
  if (n_ != o.n_) throw Error(ErrorCode::DimMismatch, "matrix addition");
  for (int i = 0; i < n_ * n_; ++i) a_[i] += o.a_[i];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& o) {
  if (n_ != o.n_) throw Error(ErrorCode::DimMismatch, "matrix subtraction");
  for (int i = 0; i < n_ * n_; ++i) a_[i] -= o.a_[i];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(cxd s) {
  for (int i = 0; i < n_ * n_; ++i) a_[i] *= s;
  return *this;
}

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.dim() != b.dim()) throw Error(ErrorCode::DimMismatch, "matrix product");
  const int n = a.dim();
  ComplexMatrix r(n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      const cxd aik = a(i, k);
      if (aik == cxd{}) continue;
      for (int j = 0; j < n; ++j) r(i, j) += aik * b(k, j);
    }
  }
  return r;
}

ComplexMatrix ComplexMatrix::adjoint() const {
  ComplexMatrix r(n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) r(i, j) = std::conj((*this)(j, i));
  return r;
}

ComplexMatrix ComplexMatrix::transpose() const {
  ComplexMatrix r(n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) r(i, j) = (*this)(j, i);
  return r;
}

ComplexMatrix ComplexMatrix::conjugate() const {
  ComplexMatrix r(n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) r(i, j) = std::conj((*this)(i, j));
  return r;
}

cxd ComplexMatrix::trace() const {
  cxd t = 0.0;
  for (int i = 0; i < n_; ++i) t += (*this)(i, i);
  return t;
}

double ComplexMatrix::frobenius_norm() const {
  double s = 0.0;
  for (int i = 0; i < n_ * n_; ++i) s += std::norm(a_[i]);
  return std::sqrt(s);
}

bool ComplexMatrix::is_finite() const {
  for (int i = 0; i < n_ * n_; ++i)
    if (!std::isfinite(a_[i].real()) || !std::isfinite(a_[i].imag())) return false;
  return true;
}

HermitianMatrix::HermitianMatrix(const ComplexMatrix& a) : m_(a.dim()) {
  if (!a.is_finite()) throw Error(ErrorCode::InvalidMatrix, "non-finite entries");
  const int n = a.dim();
  for (int i = 0; i < n; ++i) {
    m_(i, i) = cxd(a(i, i).real(), 0.0);
    for (int j = i + 1; j < n; ++j) {
      const cxd v = 0.5 * (a(i, j) + std::conj(a(j, i)));
      m_(i, j) = v;
      m_(j, i) = std::conj(v);
    }
  }
}

HermitianMatrix& HermitianMatrix::operator+=(const HermitianMatrix& o) {
  m_ += o.m_;
  return *this;
}

HermitianMatrix& HermitianMatrix::operator-=(const HermitianMatrix& o) {
  m_ -= o.m_;
  return *this;
}

HermitianMatrix& HermitianMatrix::operator*=(double s) {
  m_ *= cxd(s, 0.0);
  return *this;
}

double CVector::norm() const {
  double s = 0.0;
  for (int i = 0; i < n_; ++i) s += std::norm(v_[i]);
  return std::sqrt(s);
}

bool CVector::is_finite() const {
  for (int i = 0; i < n_; ++i)
    if (!std::isfinite(v_[i].real()) || !std::isfinite(v_[i].imag())) return false;
  return true;
}

cxd inner(const CVector& a, const CVector& b) {
  if (a.dim() != b.dim()) throw Error(ErrorCode::DimMismatch, "vector inner product");
  cxd s = 0.0;
  for (int i = 0; i < a.dim(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

CVector matvec(const ComplexMatrix& a, const CVector& x) {
  if (a.dim() != x.dim()) throw Error(ErrorCode::DimMismatch, "matrix-vector product");
  const int n = a.dim();
  CVector y(n);
  for (int i = 0; i < n; ++i) {
    cxd s = 0.0;
    for (int j = 0; j < n; ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

CVector Spectrum::vector(int k) const {
  CVector v(n);
  for (int i = 0; i < n; ++i) v[i] = vectors(i, k);
  return v;
}

namespace {

double offdiag_norm(const ComplexMatrix& m) {
  const int n = m.dim();
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) s += std::norm(m(i, j));
  return std::sqrt(s);
}

}  // namespace

Spectrum eig_hermitian(const HermitianMatrix& a) {
  if (!a.matrix().is_finite()) throw Error(ErrorCode::InvalidMatrix, "non-finite entries");
  const int n = a.dim();
  Spectrum sp;
  sp.n = n;
  sp.vectors = ComplexMatrix::identity(n);
  if (n == 0) return sp;

  ComplexMatrix m = a.matrix();
  ComplexMatrix q = ComplexMatrix::identity(n);
  const double norm_a = m.frobenius_norm();
  const double stop = 1e-13 * std::max(1e-300, norm_a);

  for (int sweep = 0; sweep < 100; ++sweep) {
    if (offdiag_norm(m) <= stop) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int r = p + 1; r < n; ++r) {
        const cxd apr = m(p, r);
        const double mag = std::abs(apr);
        if (mag <= 1e-280) continue;
        // Phase rotation making the pivot real, then a real Jacobi rotation.
        const cxd phase = apr / mag;  // e^{i phi}
        const double app = m(p, p).real();
        const double arr = m(r, r).real();
        const double tau = (arr - app) / (2.0 * mag);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = t * cs;
        // Unitary V: V[p][p]=cs, V[p][r]=sn, V[r][p]=-sn*conj(phase), V[r][r]=cs*conj(phase).
        const cxd vpp = cs, vpr = sn;
        const cxd vrp = -sn * std::conj(phase), vrr = cs * std::conj(phase);
        // Column update B = M V.
        for (int k = 0; k < n; ++k) {
          const cxd mp = m(k, p), mr = m(k, r);
          m(k, p) = mp * vpp + mr * vrp;
          m(k, r) = mp * vpr + mr * vrr;
        }
        // Row update M = V^dag B.
        for (int k = 0; k < n; ++k) {
          const cxd bp = m(p, k), br = m(r, k);
          m(p, k) = std::conj(vpp) * bp + std::conj(vrp) * br;
          m(r, k) = std::conj(vpr) * bp + std::conj(vrr) * br;
        }
        m(p, r) = 0.0;
        m(r, p) = 0.0;
        m(p, p) = cxd(m(p, p).real(), 0.0);
        m(r, r) = cxd(m(r, r).real(), 0.0);
        // Accumulate Q = Q V.
        for (int k = 0; k < n; ++k) {
          const cxd qp = q(k, p), qr = q(k, r);
          q(k, p) = qp * vpp + qr * vrp;
          q(k, r) = qp * vpr + qr * vrr;
        }
      }
    }
  }

  // Ascending sort with index tie-breaking for determinism.
  std::array<int, kMaxDim> order{};
  std::iota(order.begin(), order.begin() + n, 0);
  std::stable_sort(order.begin(), order.begin() + n, [&](int i, int j) {
    return m(i, i).real() < m(j, j).real();
  });
  ComplexMatrix vecs(n);
  for (int k = 0; k < n; ++k) {
    sp.values[k] = m(order[k], order[k]).real();
    for (int i = 0; i < n; ++i) vecs(i, k) = q(i, order[k]);
  }

  // Re-orthonormalize numerically degenerate clusters in index order.
  const double cluster_tol = 1e-10 * std::max(1.0, norm_a);
  int start = 0;
  while (start < n) {
    int end = start + 1;
    while (end < n && sp.values[end] - sp.values[end - 1] <= cluster_tol) ++end;
    for (int k = start; k < end; ++k) {
      for (int j = start; j < k; ++j) {
        cxd proj = 0.0;
        for (int i = 0; i < n; ++i) proj += std::conj(vecs(i, j)) * vecs(i, k);
        for (int i = 0; i < n; ++i) vecs(i, k) -= proj * vecs(i, j);
      }
      double nk = 0.0;
      for (int i = 0; i < n; ++i) nk += std::norm(vecs(i, k));
      nk = std::sqrt(nk);
      if (nk > 0.0)
        for (int i = 0; i < n; ++i) vecs(i, k) /= nk;
    }
    start = end;
  }

  // Phase fix: largest-magnitude component made real positive.
  for (int k = 0; k < n; ++k) {
    int imax = 0;
    double best = -1.0;
    for (int i = 0; i < n; ++i) {
      const double mag = std::abs(vecs(i, k));
      if (mag > best) {
        best = mag;
        imax = i;
      }
    }
    if (best > 0.0) {
      const cxd ph = std::conj(vecs(imax, k)) / best;
      for (int i = 0; i < n; ++i) vecs(i, k) *= ph;
      vecs(imax, k) = cxd(std::abs(vecs(imax, k)), 0.0);
    }
  }
  sp.vectors = vecs;
  return sp;
}

bool is_psd(const HermitianMatrix& a, double tol) {
  if (tol < 0) throw Error(ErrorCode::InvalidParam, "negative tolerance");
  const Spectrum sp = eig_hermitian(a);
  if (sp.n == 0) return true;
  return sp.values[0] >= -tol * std::max(1.0, a.frobenius_norm());
}

HermitianMatrix psd_sqrt(const HermitianMatrix& a, double tol) {
  const Spectrum sp = eig_hermitian(a);
  const double floor = -tol * std::max(1.0, a.frobenius_norm());
  const int n = a.dim();
  ComplexMatrix r(n);
  for (int k = 0; k < n; ++k) {
    if (sp.values[k] < floor) throw Error(ErrorCode::NotPsd, "psd_sqrt of indefinite matrix");
    const double s = std::sqrt(std::max(0.0, sp.values[k]));
    for (int i = 0; i < n; ++i) {
      const cxd vik = sp.vectors(i, k);
      for (int j = 0; j < n; ++j) r(i, j) += s * vik * std::conj(sp.vectors(j, k));
    }
  }
  return HermitianMatrix(r);
}

int rank_eps(const HermitianMatrix& a, double eps) {
  if (eps < 0) throw Error(ErrorCode::InvalidParam, "negative eps");
  const Spectrum sp = eig_hermitian(a);
  const double cut = eps * std::max(1.0, a.frobenius_norm());
  int r = 0;
  for (int k = 0; k < sp.n; ++k)
    if (std::abs(sp.values[k]) > cut) ++r;
  return r;
}

double frobenius_inner(const HermitianMatrix& a, const HermitianMatrix& b) {
  if (a.dim() != b.dim()) throw Error(ErrorCode::DimMismatch, "frobenius_inner");
  const int n = a.dim();
  // tr{AB} = sum_ij A_ij B_ji; for Hermitian args this is real to rounding.
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s += (a(i, j) * b(j, i)).real();
  return s;
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  const int na = a.dim(), nb = b.dim();
  if (na * nb > kMaxDim) throw Error(ErrorCode::DimMismatch, "kron exceeds capacity");
  ComplexMatrix r(na * nb);
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < na; ++j)
      for (int k = 0; k < nb; ++k)
        for (int l = 0; l < nb; ++l) r(i * nb + k, j * nb + l) = a(i, j) * b(k, l);
  return r;
}

CVector kron(const CVector& a, const CVector& b) {
  const int na = a.dim(), nb = b.dim();
  if (na * nb > kMaxDim) throw Error(ErrorCode::DimMismatch, "kron exceeds capacity");
  CVector r(na * nb);
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < nb; ++j) r[i * nb + j] = a[i] * b[j];
  return r;
}

HermitianMatrix outer_self(const CVector& v) {
  const int n = v.dim();
  ComplexMatrix r(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r(i, j) = v[i] * std::conj(v[j]);
  return HermitianMatrix(r);
}

CVector solve_hermitian_linear(const HermitianMatrix& a, const CVector& b) {
  if (a.dim() != b.dim()) throw Error(ErrorCode::DimMismatch, "solve_hermitian_linear");
  const Spectrum sp = eig_hermitian(a);
  const double cut = 1e-12 * std::max(1.0, a.frobenius_norm());
  const int n = a.dim();
  CVector x(n);
  for (int k = 0; k < n; ++k) {
    if (std::abs(sp.values[k]) <= cut)
      throw Error(ErrorCode::SingularSystem, "solve_hermitian_linear: singular matrix");
    const CVector vk = sp.vector(k);
    const cxd coef = inner(vk, b) / sp.values[k];
    for (int i = 0; i < n; ++i) x[i] += coef * vk[i];
  }
  return x;
}

Cholesky cholesky(const HermitianMatrix& a) {
  const int n = a.dim();
  Cholesky res;
  res.lower = ComplexMatrix(n);
  for (int j = 0; j < n; ++j) {
    double d = a(j, j).real();
    for (int k = 0; k < j; ++k) d -= std::norm(res.lower(j, k));
    if (!(d > 0.0) || !std::isfinite(d)) {
      res.ok = false;
      return res;
    }
    const double ljj = std::sqrt(d);
    res.lower(j, j) = ljj;
    for (int i = j + 1; i < n; ++i) {
      cxd s = a(i, j);
      for (int k = 0; k < j; ++k) s -= res.lower(i, k) * std::conj(res.lower(j, k));
      res.lower(i, j) = s / ljj;
    }
  }
  res.ok = true;
  return res;
}

ComplexMatrix lower_solve(const ComplexMatrix& l, const ComplexMatrix& b) {
  if (l.dim() != b.dim()) throw Error(ErrorCode::DimMismatch, "lower_solve");
  const int n = l.dim();
  ComplexMatrix x = b;
  for (int col = 0; col < n; ++col) {
    for (int i = 0; i < n; ++i) {
      cxd s = x(i, col);
      for (int k = 0; k < i; ++k) s -= l(i, k) * x(k, col);
      x(i, col) = s / l(i, i);
    }
  }
  return x;
}

ComplexMatrix lower_adjoint_solve(const ComplexMatrix& l, const ComplexMatrix& b) {
  if (l.dim() != b.dim()) throw Error(ErrorCode::DimMismatch, "lower_adjoint_solve");
  const int n = l.dim();
  ComplexMatrix x = b;
  for (int col = 0; col < n; ++col) {
    for (int i = n - 1; i >= 0; --i) {
      cxd s = x(i, col);
      for (int k = i + 1; k < n; ++k) s -= std::conj(l(k, i)) * x(k, col);
      x(i, col) = s / l(i, i);
    }
  }
  return x;
}

}  // namespace qsep::la
