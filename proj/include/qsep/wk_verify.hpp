#pragma once

// Independent certifier for Lewenstein-Sanpera decompositions: validity of
// the split, the case-appropriate (generalized) Wellens-Kus equations,
// complementary slackness, the Z3 dual identity, and entanglement-witness
// behaviour of the extracted dual witness. Nothing here trusts the solver:
// every check is recomputed from the decomposition data.

#include <cstdint>
#include <optional>
#include <utility>

#include "qsep/lsd.hpp"
#include "qsep/sdp.hpp"
#include "qsep/twoqubit.hpp"
#include "qsep/wk_report.hpp"

namespace qsep::wk {

// Acceptance thresholds; `passed` means every applicable residual is inside
// these bounds.
namespace thresholds {
inline constexpr double kSumResidual = 1e-8;        // reconstruction
inline constexpr double kSepPsd = 1e-8;             // lambda_min(sep~) >= -kSepPsd
inline constexpr double kSepPpt = 1e-8;             // lambda_min(sep~^T1) >= -kSepPpt
inline constexpr double kPurePsd = 1e-7;            // lambda_min(pure~) >= -kPurePsd
inline constexpr double kPureSecondEig = 1e-7;      // rank-1 pure part
inline constexpr double kWk = 1e-6;                 // wk1, wk2
inline constexpr double kZ3 = 1e-6;                 // Z3 identity
inline constexpr double kSlackness = 1e-6;          // ||F(x) Z||_F
inline constexpr double kWitnessMin = -1e-6;        // sampled min tr{W sigma}
inline constexpr double kTrWRho = 1e-7;             // |tr{W rho} - (S-1)|
inline constexpr double kWitnessPlusId = -1e-8;     // lambda_min(W + I)
}  // namespace thresholds

// Fills sum_residual, sep_min_eig, sep_pt_min_eig, pure_min_eig and
// pure_second_eig from the decomposition parts alone.
WkReport check_validity(const tq::DensityMatrix& rho, const lsd::LsdDecomposition& dec);

// Wellens-Kus equations, full-rank case:
//   wk1 = ||(Z1 + Z2^T1) pure~ + pure~||_F / ||pure~||_F
//   wk2 = ||(rho - pure~)^T1 Z2||_F / max(1, ||Z2||_F).
// Returns (wk1, wk2). Throws WrongCase unless case is FullRank.
std::pair<double, double> check_wk_full(const tq::DensityMatrix& rho,
                                        const lsd::LsdDecomposition& dec);

// Generalized Wellens-Kus equations, rank-3 entangled-gamma case: wk1 uses
// Z2par^T1 = P3 Z2^T1 P3 in place of Z2^T1. Throws WrongCase otherwise.
std::pair<double, double> check_wk_rank3(const tq::DensityMatrix& rho,
                                         const lsd::LsdDecomposition& dec);

// Generalized Wellens-Kus equations, product-gamma cases: wk1 uses
// Z1 + Z2par^T1 + a Gamma_8 + b Gamma_9. For the analytic case Z1 = Z2 = 0
// and a^2 + b^2 = 1 are checked as part of wk1. Throws WrongCase otherwise.
std::pair<double, double> check_wk_rank3_product(const tq::DensityMatrix& rho,
                                                 const lsd::LsdDecomposition& dec);

// Complementary slackness ||F(x) Z||_F and the Z3 identity residual computed
// from raw solver data (canonical frame for the rank-3 encodings):
//   full rank:        ||Z3 - Z1 - Z2^T1 - I||_F
//   entangled gamma:  ||Z3 - Z1 - (P3 Z2^T1 P3)|supp - I||_F
//   product gamma:    same with the recovered a Gamma_8 + b Gamma_9 added.
// The rank-3 forms need the support basis gb; the product form needs a, b.
struct SlacknessReport {
  double slackness_residual = 0.0;
  double z3_identity_residual = 0.0;
};
SlacknessReport check_slackness_and_z3(const sdp::SdpProblem& prob, const sdp::SdpSolution& sol,
                                       const tq::GammaBasis* gb = nullptr,
                                       std::optional<double> a = std::nullopt,
                                       std::optional<double> b = std::nullopt);

// Witness behaviour: samples n_samples Haar-random product states plus a
// coarse 20x20x20x20 Bloch-angle grid and returns
// (min tr{W sigma}, tr{W rho}). When support_gamma is given the product
// states are drawn from the subspace orthogonal to gamma (two alternating
// one-parameter families), matching the domain on which a rank-3 dual
// witness is defined, and the grid becomes 20x20 per family.
std::pair<double, double> check_witness(const la::HermitianMatrix& w,
                                        const tq::DensityMatrix& rho, double s_value,
                                        int n_samples, std::uint64_t seed,
                                        const tq::PureState* support_gamma = nullptr);

// Serial reference for the sampled part of check_witness; the parallel
// kernel must reproduce it exactly (per-sample counter-based seeding).
double witness_scan_serial(const la::HermitianMatrix& w, int n_samples, std::uint64_t seed,
                           const tq::PureState* support_gamma = nullptr);
double witness_scan_parallel(const la::HermitianMatrix& w, int n_samples, std::uint64_t seed,
                             const tq::PureState* support_gamma = nullptr);

// Full certification: validity, case-appropriate WK equations, slackness and
// Z3 (from prob/sol when given, from the closed form for the analytic case),
// witness behaviour, recovered mu_hat / alpha_hat, and the aggregate
// `passed` flag. Separable decompositions only run the validity block.
WkReport build_report(const tq::DensityMatrix& rho, const lsd::LsdDecomposition& dec,
                      const sdp::SdpProblem* prob, const sdp::SdpSolution* sol,
                      const tq::GammaBasis* gb, int n_samples, std::uint64_t seed);

}  // namespace qsep::wk
