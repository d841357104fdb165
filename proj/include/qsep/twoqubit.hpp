#pragma once

// Two-qubit domain layer: Pauli and magic bases, partial transposition, the
// PPT separability test, concurrence, kernel extraction for rank-3 states,
// the canonical form of a pure state under local unitaries, and the
// orthogonal operator basis attached to a rank-3 support.

#include <array>
#include <cstdint>

#include "qsep/linalg.hpp"

namespace qsep::tq {

using la::ComplexMatrix;
using la::CVector;
using la::cxd;
using la::HermitianMatrix;

// Unit vector in the computational basis {|00>, |01>, |10>, |11>}.
class PureState {
 public:
  explicit PureState(const CVector& amplitudes);

  const CVector& amplitudes() const { return amp_; }
  cxd operator[](int i) const { return amp_[i]; }
  HermitianMatrix projector() const { return la::outer_self(amp_); }

 private:
  CVector amp_;
};

// 4x4 density matrix: Hermitian, unit trace (1e-10), PSD (tol 1e-9).
class DensityMatrix {
 public:
  explicit DensityMatrix(const HermitianMatrix& m);

  const HermitianMatrix& matrix() const { return m_; }
  cxd operator()(int r, int c) const { return m_(r, c); }

 private:
  HermitianMatrix m_;
};

// The 16 products sigma_i (x) tau_j, i,j = 0..3 lexicographic; E[0] = I4.
// Mutually orthogonal: tr{E_i E_j} = 4 delta_ij.
struct PauliBasis {
  std::array<HermitianMatrix, 16> E;
};
const PauliBasis& pauli_basis();

// The four 2x2 Pauli matrices {I, x, y, z}.
const std::array<ComplexMatrix, 4>& pauli2();

// Conjugation by the fixed magic-basis unitary M (columns:
// (|00>+|11>)/s2, i(|00>-|11>)/s2, i(|01>+|10>)/s2, (|01>-|10>)/s2).
// In this basis the spin flip is plain complex conjugation.
HermitianMatrix to_magic(const HermitianMatrix& a);
HermitianMatrix from_magic(const HermitianMatrix& a);
const ComplexMatrix& magic_matrix();

// Transpose on the first qubit factor: A[2a+b][2c+d] -> A[2c+b][2a+d].
HermitianMatrix partial_transpose_1(const HermitianMatrix& a);

// True iff rho^T1 is PSD; for two qubits this is equivalent to separability.
bool is_ppt(const DensityMatrix& rho, double tol = 1e-9);

// Concurrence of a pure state: |psi^T (sigma_y x sigma_y) psi|.
double concurrence(const PureState& psi);

// Wootters concurrence: max{0, l1-l2-l3-l4} with l_k the descending square
// roots of the eigenvalues of sqrt(rho) rho~ sqrt(rho), rho~ the spin flip.
double concurrence_mixed(const DensityMatrix& rho);

// Unit kernel vector of a rank-3 state, phase-fixed so the largest-magnitude
// amplitude is real positive. Throws RankMismatch unless rank_eps(rho) = 3.
PureState orthogonal_pure_state(const DensityMatrix& rho);

// Local-unitary canonical form of a pure state: (u (x) v) gamma equals the
// canonical vector c1|+-> - c2|-+> with c1 = sqrt((1+p)/2), c2 = sqrt((1-p)/2),
// q = 2 c1 c2 the concurrence and p = sqrt(1-q^2).
struct CanonicalGamma {
  double q = 0.0;
  double p = 1.0;
  ComplexMatrix u_local;  // 2x2 unitary on the first qubit
  ComplexMatrix v_local;  // 2x2 unitary on the second qubit
};
CanonicalGamma canonicalize_gamma(const PureState& gamma);

// The canonical vector itself for a given concurrence q in [0,1].
PureState canonical_gamma_vector(double q);

// Orthogonal Hermitian basis of the operators supported inside the rank-3
// projector P3 = I - |gamma_c><gamma_c| for the canonical gamma of
// concurrence q. Gamma[0] = P3 (trace 3); Gamma[7] = (s2t2 - s3t3)/2 and
// Gamma[8] = (s2t3 + s3t2)/2 exactly; Gamma[1..6] traceless with
// tr{Gamma^2} = 2, built by Gram-Schmidt on the projected Pauli basis.
// support holds three orthonormal vectors spanning the range of P3.
struct GammaBasis {
  double q = 0.0;
  CVector gamma;  // canonical kernel vector
  HermitianMatrix P3;
  std::array<HermitianMatrix, 9> Gamma;
  std::array<CVector, 3> support;
};
GammaBasis gamma_basis(const CanonicalGamma& cg);

// Restrict a 4x4 operator to the 3-dimensional support: (B^dag X B).
HermitianMatrix restrict_to_support(const GammaBasis& gb, const HermitianMatrix& x);
// Embed a 3x3 operator back into 4x4: B Y B^dag.
HermitianMatrix embed_from_support(const GammaBasis& gb, const HermitianMatrix& y);

// Deterministic test-state generators. All randomness is drawn from a
// mt19937_64 stream through a fixed Box-Muller transform so results are
// identical across platforms and standard-library implementations.
DensityMatrix werner_state(double p);
DensityMatrix random_density(int rank, std::uint64_t seed);
DensityMatrix random_separable(int n_terms, std::uint64_t seed);
PureState random_product_state(std::uint64_t seed);

}  // namespace qsep::tq
