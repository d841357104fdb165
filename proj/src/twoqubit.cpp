#include "qsep/twoqubit.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace qsep::tq {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

ComplexMatrix make_pauli(int which) {
  ComplexMatrix m(2);
  switch (which) {
    case 0: m(0, 0) = 1.0; m(1, 1) = 1.0; break;
    case 1: m(0, 1) = 1.0; m(1, 0) = 1.0; break;
    case 2: m(0, 1) = cxd(0, -1); m(1, 0) = cxd(0, 1); break;
    case 3: m(0, 0) = 1.0; m(1, 1) = -1.0; break;
  }
  return m;
}

// Deterministic Gaussian source: mt19937_64 + Box-Muller, independent of the
// standard library's normal_distribution implementation.
struct GaussianSource {
  explicit GaussianSource(std::uint64_t seed) : rng(seed) {}

  double uniform01() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

  double operator()() {
    if (has_spare) {
      has_spare = false;
      return spare;
    }
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * 3.14159265358979323846 * u2;
    spare = r * std::sin(t);
    has_spare = true;
    return r * std::cos(t);
  }

  std::mt19937_64 rng;
  bool has_spare = false;
  double spare = 0.0;
};

CVector random_unit_vector(int n, GaussianSource& g) {
  CVector v(n);
  for (int i = 0; i < n; ++i) v[i] = cxd(g(), g());
  const double nv = v.norm();
  for (int i = 0; i < n; ++i) v[i] /= nv;
  return v;
}

}  // namespace

PureState::PureState(const CVector& amplitudes) : amp_(amplitudes) {
  if (amp_.dim() != 4) throw Error(ErrorCode::DimMismatch, "pure state must have 4 amplitudes");
  if (!amp_.is_finite()) throw Error(ErrorCode::InvalidMatrix, "non-finite amplitudes");
  if (std::abs(amp_.norm() - 1.0) > 1e-10)
    throw Error(ErrorCode::InvalidParam, "pure state must have unit norm");
}

DensityMatrix::DensityMatrix(const HermitianMatrix& m) : m_(m) {
  if (m_.dim() != 4) throw Error(ErrorCode::DimMismatch, "density matrix must be 4x4");
  if (std::abs(m_.trace_real() - 1.0) > 1e-10)
    throw Error(ErrorCode::InvalidParam, "density matrix must have unit trace");
  if (!la::is_psd(m_, 1e-9)) throw Error(ErrorCode::NotPsd, "density matrix must be PSD");
}

const std::array<ComplexMatrix, 4>& pauli2() {
  static const std::array<ComplexMatrix, 4> p = {make_pauli(0), make_pauli(1), make_pauli(2),
                                                 make_pauli(3)};
  return p;
}

const PauliBasis& pauli_basis() {
  static const PauliBasis basis = [] {
    PauliBasis b;
    const auto& p = pauli2();
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) b.E[4 * i + j] = HermitianMatrix(la::kron(p[i], p[j]));
    return b;
  }();
  return basis;
}

const ComplexMatrix& magic_matrix() {
  static const ComplexMatrix m = [] {
    ComplexMatrix mm(4);
    const double s = kInvSqrt2;
    // Columns: the fixed magic-basis vectors.
    mm(0, 0) = s; mm(3, 0) = s;
    mm(0, 1) = cxd(0, s); mm(3, 1) = cxd(0, -s);
    mm(1, 2) = cxd(0, s); mm(2, 2) = cxd(0, s);
    mm(1, 3) = s; mm(2, 3) = -s;
    return mm;
  }();
  return m;
}

HermitianMatrix to_magic(const HermitianMatrix& a) {
  if (a.dim() != 4) throw Error(ErrorCode::DimMismatch, "to_magic expects 4x4");
  const ComplexMatrix& m = magic_matrix();
  return HermitianMatrix(m.adjoint() * a.matrix() * m);
}

HermitianMatrix from_magic(const HermitianMatrix& a) {
  if (a.dim() != 4) throw Error(ErrorCode::DimMismatch, "from_magic expects 4x4");
  const ComplexMatrix& m = magic_matrix();
  return HermitianMatrix(m * a.matrix() * m.adjoint());
}

HermitianMatrix partial_transpose_1(const HermitianMatrix& a) {
  if (a.dim() != 4) throw Error(ErrorCode::DimMismatch, "partial_transpose_1 expects 4x4");
  ComplexMatrix r(4);
  for (int i = 0; i < 2; ++i)      // a
    for (int j = 0; j < 2; ++j)    // b
      for (int k = 0; k < 2; ++k)  // c
        for (int l = 0; l < 2; ++l)  // d
          r(2 * k + j, 2 * i + l) = a(2 * i + j, 2 * k + l);
  return HermitianMatrix(r);
}

bool is_ppt(const DensityMatrix& rho, double tol) {
  return la::is_psd(partial_transpose_1(rho.matrix()), tol);
}

double concurrence(const PureState& psi) {
  // |psi^T (sigma_y x sigma_y) psi| = 2 |a00 a11 - a01 a10|.
  const CVector& a = psi.amplitudes();
  return 2.0 * std::abs(a[0] * a[3] - a[1] * a[2]);
}

double concurrence_mixed(const DensityMatrix& rho) {
  const ComplexMatrix yy = la::kron(pauli2()[2], pauli2()[2]);
  const ComplexMatrix tilde = yy * rho.matrix().matrix().conjugate() * yy;
  const HermitianMatrix sq = la::psd_sqrt(rho.matrix());
  const HermitianMatrix b(sq.matrix() * tilde * sq.matrix());
  const la::Spectrum sp = la::eig_hermitian(b);
  std::array<double, 4> lam{};
  for (int k = 0; k < 4; ++k) lam[k] = std::sqrt(std::max(0.0, sp.values[3 - k]));
  return std::max(0.0, lam[0] - lam[1] - lam[2] - lam[3]);
}

PureState orthogonal_pure_state(const DensityMatrix& rho) {
  if (la::rank_eps(rho.matrix()) != 3)
    throw Error(ErrorCode::RankMismatch, "orthogonal_pure_state requires a rank-3 state");
  const la::Spectrum sp = la::eig_hermitian(rho.matrix());
  CVector v = sp.vector(0);  // kernel direction (smallest eigenvalue)
  // Phase fix: largest-magnitude amplitude real positive.
  int imax = 0;
  double best = -1.0;
  for (int i = 0; i < 4; ++i)
    if (std::abs(v[i]) > best) {
      best = std::abs(v[i]);
      imax = i;
    }
  const cxd ph = std::conj(v[imax]) / best;
  for (int i = 0; i < 4; ++i) v[i] *= ph;
  v[imax] = cxd(std::abs(v[imax]), 0.0);
  const double nv = v.norm();
  for (int i = 0; i < 4; ++i) v[i] /= nv;
  return PureState(v);
}

PureState canonical_gamma_vector(double q) {
  if (q < 0.0 || q > 1.0) throw Error(ErrorCode::InvalidParam, "q must lie in [0,1]");
  const double p = std::sqrt(std::max(0.0, 1.0 - q * q));
  const double c1 = std::sqrt((1.0 + p) / 2.0);
  const double c2 = std::sqrt((1.0 - p) / 2.0);
  const double s = kInvSqrt2;
  CVector plus(2), minus(2);
  plus[0] = s; plus[1] = s;
  minus[0] = s; minus[1] = -s;
  const CVector pm = la::kron(plus, minus);
  const CVector mp = la::kron(minus, plus);
  CVector g(4);
  for (int i = 0; i < 4; ++i) g[i] = c1 * pm[i] - c2 * mp[i];
  const double n = g.norm();
  for (int i = 0; i < 4; ++i) g[i] /= n;
  return PureState(g);
}

CanonicalGamma canonicalize_gamma(const PureState& gamma) {
  const CVector& g = gamma.amplitudes();

  // Reduced state on the first qubit: rhoA[i][k] = sum_j g[2i+j] conj(g[2k+j]).
  ComplexMatrix rho_a(2);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) {
      cxd s = 0.0;
      for (int j = 0; j < 2; ++j) s += g[2 * i + j] * std::conj(g[2 * k + j]);
      rho_a(i, k) = s;
    }
  const la::Spectrum sp = la::eig_hermitian(HermitianMatrix(rho_a));
  // Descending Schmidt order.
  const CVector a1 = sp.vector(1);
  const CVector a2 = sp.vector(0);

  // b~_i[j] = sum_k conj(a_i[k]) g[2k+j].
  CVector bt1(2), bt2(2);
  for (int j = 0; j < 2; ++j) {
    bt1[j] = std::conj(a1[0]) * g[j] + std::conj(a1[1]) * g[2 + j];
    bt2[j] = std::conj(a2[0]) * g[j] + std::conj(a2[1]) * g[2 + j];
  }
  const double c1 = bt1.norm();
  double c2 = bt2.norm();
  CVector b1(2), b2(2);
  for (int j = 0; j < 2; ++j) b1[j] = bt1[j] / c1;
  if (c2 > 1e-9) {
    for (int j = 0; j < 2; ++j) b2[j] = bt2[j] / c2;
  } else {
    // Product state: complete the frame with the canonical orthogonal vector.
    c2 = 0.0;
    b2[0] = -std::conj(b1[1]);
    b2[1] = std::conj(b1[0]);
  }

  CanonicalGamma cg;
  cg.q = 2.0 * c1 * c2;
  cg.p = std::sqrt(std::max(0.0, 1.0 - cg.q * cg.q));

  // u0 rows are conj(a_i); v0 rows are conj(b_i): (u0 x v0) g is the Schmidt
  // form c1|00> + c2|11>. Then rotate onto the canonical vector.
  ComplexMatrix u0(2), v0(2);
  for (int j = 0; j < 2; ++j) {
    u0(0, j) = std::conj(a1[j]);
    u0(1, j) = std::conj(a2[j]);
    v0(0, j) = std::conj(b1[j]);
    v0(1, j) = std::conj(b2[j]);
  }
  const double s = kInvSqrt2;
  ComplexMatrix ru(2), rv(2);
  ru(0, 0) = s; ru(0, 1) = s; ru(1, 0) = s; ru(1, 1) = -s;      // columns |+>, |->
  rv(0, 0) = s; rv(0, 1) = -s; rv(1, 0) = -s; rv(1, 1) = -s;    // columns |->, -|+>
  cg.u_local = ru * u0;
  cg.v_local = rv * v0;
  return cg;
}

GammaBasis gamma_basis(const CanonicalGamma& cg) {
  GammaBasis gb;
  gb.q = cg.q;
  gb.gamma = canonical_gamma_vector(cg.q).amplitudes();

  const HermitianMatrix proj = la::outer_self(gb.gamma);
  gb.P3 = HermitianMatrix::identity(4) - proj;

  const auto& e = pauli_basis().E;
  // Gamma[7] = (s2 t2 - s3 t3)/2, Gamma[8] = (s2 t3 + s3 t2)/2.
  gb.Gamma[7] = (e[10] - e[15]) * 0.5;
  gb.Gamma[8] = (e[11] + e[14]) * 0.5;
  gb.Gamma[0] = gb.P3;

  // Support basis: Gram-Schmidt on the columns of P3 in index order.
  {
    int got = 0;
    for (int k = 0; k < 4 && got < 3; ++k) {
      CVector col(4);
      for (int i = 0; i < 4; ++i) col[i] = gb.P3(i, k);
      for (int c = 0; c < got; ++c) {
        const cxd pr = la::inner(gb.support[c], col);
        for (int i = 0; i < 4; ++i) col[i] -= pr * gb.support[c][i];
      }
      const double n = col.norm();
      if (n > 1e-6) {
        for (int i = 0; i < 4; ++i) col[i] /= n;
        gb.support[got++] = col;
      }
    }
    if (got != 3) throw Error(ErrorCode::NumericalFailure, "support basis incomplete");
  }

  // Gamma[1..6]: Gram-Schmidt on P3 E_k P3 against the pinned directions and
  // one another, in fixed k order; normalized so tr{Gamma^2} = 2.
  std::array<HermitianMatrix, 9> unit;  // unit-Frobenius versions
  unit[0] = gb.P3 * (1.0 / std::sqrt(3.0));
  unit[7] = gb.Gamma[7] * kInvSqrt2;
  unit[8] = gb.Gamma[8] * kInvSqrt2;
  int found = 0;
  for (int k = 1; k < 16 && found < 6; ++k) {
    HermitianMatrix b(gb.P3.matrix() * e[k].matrix() * gb.P3.matrix());
    auto subtract = [&](const HermitianMatrix& f) { b -= f * la::frobenius_inner(f, b); };
    subtract(unit[0]);
    subtract(unit[7]);
    subtract(unit[8]);
    for (int j = 0; j < found; ++j) subtract(unit[1 + j]);
    const double n2 = la::frobenius_inner(b, b);
    if (n2 > 1e-12) {
      unit[1 + found] = b * (1.0 / std::sqrt(n2));
      ++found;
    }
  }
  if (found != 6) throw Error(ErrorCode::NumericalFailure, "Gamma basis incomplete");
  const double s2 = std::sqrt(2.0);
  for (int i = 1; i <= 6; ++i) gb.Gamma[i] = unit[i] * s2;
  return gb;
}

HermitianMatrix restrict_to_support(const GammaBasis& gb, const HermitianMatrix& x) {
  ComplexMatrix r(3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const CVector xb = la::matvec(x.matrix(), gb.support[j]);
      r(i, j) = la::inner(gb.support[i], xb);
    }
  return HermitianMatrix(r);
}

HermitianMatrix embed_from_support(const GammaBasis& gb, const HermitianMatrix& y) {
  ComplexMatrix r(4);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      const cxd yab = y(a, b);
      if (yab == cxd{}) continue;
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
          r(i, j) += gb.support[a][i] * yab * std::conj(gb.support[b][j]);
    }
  return HermitianMatrix(r);
}

DensityMatrix werner_state(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidParam, "werner p must lie in [0,1]");
  CVector psim(4);
  psim[1] = kInvSqrt2;
  psim[2] = -kInvSqrt2;
  HermitianMatrix m = la::outer_self(psim) * p + HermitianMatrix::identity(4) * ((1.0 - p) / 4.0);
  return DensityMatrix(m);
}

DensityMatrix random_density(int rank, std::uint64_t seed) {
  if (rank < 1 || rank > 4) throw Error(ErrorCode::InvalidParam, "rank must lie in 1..4");
  GaussianSource g(seed);
  // Ginibre construction: rho = G G^dag / tr with G a 4 x rank Gaussian block.
  std::array<CVector, 4> cols;
  for (int c = 0; c < rank; ++c) {
    CVector v(4);
    for (int i = 0; i < 4; ++i) v[i] = cxd(g(), g());
    cols[c] = v;
  }
  ComplexMatrix m(4);
  for (int c = 0; c < rank; ++c)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) m(i, j) += cols[c][i] * std::conj(cols[c][j]);
  HermitianMatrix h(m);
  h *= 1.0 / h.trace_real();
  return DensityMatrix(h);
}

DensityMatrix random_separable(int n_terms, std::uint64_t seed) {
  if (n_terms < 1) throw Error(ErrorCode::InvalidParam, "n_terms must be positive");
  GaussianSource g(seed);
  HermitianMatrix m = HermitianMatrix::zero(4);
  double wsum = 0.0;
  for (int t = 0; t < n_terms; ++t) {
    const CVector a = random_unit_vector(2, g);
    const CVector b = random_unit_vector(2, g);
    const double w = g.uniform01() + 1e-3;
    m += la::outer_self(la::kron(a, b)) * w;
    wsum += w;
  }
  m *= 1.0 / wsum;
  return DensityMatrix(m);
}

PureState random_product_state(std::uint64_t seed) {
  GaussianSource g(seed);
  const CVector a = random_unit_vector(2, g);
  const CVector b = random_unit_vector(2, g);
  return PureState(la::kron(a, b));
}

}  // namespace qsep::tq
