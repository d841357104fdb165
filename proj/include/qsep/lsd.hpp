#pragma once

// Optimal Lewenstein-Sanpera decomposition of a two-qubit state:
//
//   rho = S * rho_sep + (1 - S) * rho_pure,   S maximal,
//
// with rho_sep separable and rho_pure pure. The maximal S is found by a
// semidefinite program over block-diagonal Hermitian matrices; the optimal
// entanglement witness is read off the dual blocks. Three encodings cover
// full-rank states, rank-3 states with entangled kernel vector gamma, and
// rank-3 states with product gamma; the product-gamma case also has a
// closed-form fast path that is used whenever its feasibility conditions
// hold.

#include <cstdint>
#include <optional>
#include <string_view>

#include "qsep/linalg.hpp"
#include "qsep/sdp.hpp"
#include "qsep/twoqubit.hpp"
#include "qsep/wk_report.hpp"

namespace qsep::lsd {

enum class CaseTag {
  Separable,
  FullRank,
  Rank3EntangledGamma,
  Rank3ProductGamma,
  Rank3ProductGammaAnalytic,
};

const char* case_tag_name(CaseTag tag);
std::optional<CaseTag> case_tag_from_name(std::string_view name);

// The decomposition in the caller's frame. Tilde quantities carry the
// weights: rho_sep_tilde = S * rho_sep, rho_pure_tilde = (1 - S) * rho_pure,
// and rho_sep_tilde + rho_pure_tilde = rho. Z1 and Z2 are the first two dual
// blocks (Z2 expressed on the partial-transpose side), Z3 the third; for the
// rank-3 cases they are embedded back into 4x4 and rotated to the input
// frame. a, b are the product-gamma dual coefficients; theta the analytic
// angle. The frame fields record the local-unitary rotation used for rank-3
// inputs so the witness and the verifier can rebuild frame-specific objects.
struct LsdDecomposition {
  double S = 1.0;
  la::HermitianMatrix rho_sep_tilde;
  la::HermitianMatrix rho_pure_tilde;
  std::optional<tq::PureState> pure_vector;  // absent for the separable case
  la::HermitianMatrix Z1;
  la::HermitianMatrix Z2;
  la::HermitianMatrix Z3;
  std::optional<double> a;      // product-gamma cases
  std::optional<double> b;      // product-gamma cases
  std::optional<double> theta;  // analytic case
  CaseTag case_tag = CaseTag::Separable;
  wk::WkReport residuals;

  // Frame bookkeeping for the rank-3 cases: gamma is the kernel vector of
  // rho in the input frame, (u_local (x) v_local) rotates the input frame to
  // the gamma-canonical one, gamma_q is the kernel concurrence.
  std::optional<tq::PureState> gamma;
  la::ComplexMatrix u_local = la::ComplexMatrix::identity(2);
  la::ComplexMatrix v_local = la::ComplexMatrix::identity(2);
  double gamma_q = 0.0;
};

// Entanglement witness extracted from the dual blocks. Normalized so that
// W + I >= 0 and tr{W rho} = S - 1.
struct Witness {
  la::HermitianMatrix W;
  CaseTag case_tag = CaseTag::FullRank;
};

enum class CaseForce { Auto, FullRank, Rank3 };

struct DecomposeOptions {
  CaseForce force = CaseForce::Auto;
  int witness_samples = 10000;          // Haar product-state samples for the report
  std::uint64_t witness_seed = 20240901ULL;
};

// Full-rank encoding: variables x in R^16 over the Pauli product basis E,
// blocks F_i = (1/4) diag(E_i, E_i^T1, -E_i), F0 = diag(0, 0, rho),
// c = (-1, 0, ..., 0) so that the optimum value is -S. Throws RankMismatch
// unless rank_eps(rho) = 4.
sdp::SdpProblem encode_full_rank(const tq::DensityMatrix& rho);

// Rank-3, entangled gamma (canonical frame): variables x in R^9 over the
// support basis Gamma, layout [3,4,3] with
// F_i = (1/3) diag(Gamma_i|supp, Gamma_i^T1, -Gamma_i|supp) and
// F0 = diag(0, 0, rho|supp). Throws RankMismatch, or ProductGamma when
// q <= 1e-9 (wrong encoder).
sdp::SdpProblem encode_rank3_entangled(const tq::DensityMatrix& rho_canonical,
                                       const tq::CanonicalGamma& cg,
                                       const tq::GammaBasis& gb);

// Rank-3, product gamma (canonical frame, q = 0): only Gamma_1..Gamma_7
// participate (m = 7). At q = 0 the canonical gamma is real and P3^T1 = P3,
// so the middle block is expressed on the support as well: layout [3,3,3]
// with F_i = (1/3) diag(Gamma_i|supp, Gamma_i^T1|supp, -Gamma_i|supp).
// Throws RankMismatch, or EntangledGamma when gb.q > 1e-9.
sdp::SdpProblem encode_rank3_product(const tq::DensityMatrix& rho_canonical,
                                     const tq::GammaBasis& gb);

// Closed-form product-gamma path (canonical frame). Computes
// g8 = tr{Gamma_8 rho}, g9 = tr{Gamma_9 rho}, S = 1 - sqrt(g8^2 + g9^2),
// theta = atan2(-g9, -g8) and the maximally entangled pure part
// cos(theta/2)|phi+> - sin(theta/2)|psi+>. Returns the decomposition only if
// the deduced rho_sep_tilde = rho - (1-S)*pure is PSD, PPT and rank 3;
// otherwise returns nothing and the caller falls back to the SDP. The
// returned decomposition is in the canonical frame with empty residuals.
std::optional<LsdDecomposition> analytic_rank3_product(const tq::DensityMatrix& rho_canonical,
                                                       const tq::GammaBasis& gb);

// Top-level dispatch: PPT inputs short-circuit to the separable case
// (S = 1, zero pure part) before any SDP; rank-4 inputs use the full-rank
// encoding; rank-3 inputs are rotated to the gamma-canonical frame and use
// the analytic path (q = 0, when feasible) or the matching SDP encoding;
// rank <= 2 non-PPT inputs are rejected with UnsupportedRank. Results are
// returned in the caller's frame with the verification report filled in.
LsdDecomposition decompose(const tq::DensityMatrix& rho, const sdp::SolverConfig& cfg = {},
                           const DecomposeOptions& opts = {});

// Optimal entanglement witness from the dual blocks: W = Z1 + Z2^T1
// (full rank), W = Z1 + P3 Z2^T1 P3 (entangled gamma), and additionally
// + a*Gamma_8 + b*Gamma_9 (product gamma), all in the caller's frame.
// Throws SeparableInput for the separable case.
Witness extract_witness(const LsdDecomposition& dec);

// (1 - S) * concurrence(pure_vector); exactly 0 for the separable case.
double entanglement_measure(const LsdDecomposition& dec);

}  // namespace qsep::lsd
