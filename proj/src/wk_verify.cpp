#include "qsep/wk_verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "qsep/error.hpp"

namespace qsep::wk {

using la::ComplexMatrix;
using la::CVector;
using la::cxd;
using la::HermitianMatrix;

namespace {

constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// Counter-based sampling: every sample index owns an independent splitmix64
// stream derived from (seed, index), so the scan result is independent of
// execution order and thread count, and the min over a sample prefix is
// monotone in the sample count.

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t stream_for(std::uint64_t seed, std::uint64_t index) {
  return mix64(seed + 0x9E3779B97F4A7C15ULL * (index + 1));
}

std::uint64_t sm_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  return mix64(state);
}

double sm_uniform01(std::uint64_t& state) {
  return static_cast<double>(sm_next(state) >> 11) * 0x1.0p-53;
}

// Haar-random unit vector in C^2 from two Box-Muller pairs.
void haar2(std::uint64_t& state, cxd out[2]) {
  double g[4];
  for (int k = 0; k < 2; ++k) {
    const double u1 = 1.0 - sm_uniform01(state);
    const double u2 = sm_uniform01(state);
    const double r = std::sqrt(-2.0 * std::log(u1));
    g[2 * k] = r * std::cos(2.0 * kPi * u2);
    g[2 * k + 1] = r * std::sin(2.0 * kPi * u2);
  }
  cxd a0(g[0], g[1]);
  cxd a1(g[2], g[3]);
  const double n = std::sqrt(std::norm(a0) + std::norm(a1));
  if (n < 1e-300) {
    out[0] = cxd(1.0, 0.0);
    out[1] = cxd(0.0, 0.0);
    return;
  }
  out[0] = a0 / n;
  out[1] = a1 / n;
}

// <a (x) b| w |a (x) b>.
double product_expectation(const HermitianMatrix& w, const cxd a[2], const cxd b[2]) {
  const cxd t[4] = {a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]};
  double acc = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) acc += (std::conj(t[i]) * w(i, j) * t[j]).real();
  }
  return acc;
}

// Given a on the first qubit, the unique (up to phase) b with
// <gamma|a (x) b> = 0; degenerate when a alone kills the overlap, in which
// case any b works and `fallback` supplies one.
template <typename Fallback>
void orthogonal_b(const CVector& g, const cxd a[2], cxd b[2], Fallback&& fallback) {
  const cxd w0 = std::conj(g[0]) * a[0] + std::conj(g[2]) * a[1];
  const cxd w1 = std::conj(g[1]) * a[0] + std::conj(g[3]) * a[1];
  const double n = std::sqrt(std::norm(w0) + std::norm(w1));
  if (n <= 1e-14) {
    fallback(b);
    return;
  }
  b[0] = -w1 / n;
  b[1] = w0 / n;
}

template <typename Fallback>
void orthogonal_a(const CVector& g, const cxd b[2], cxd a[2], Fallback&& fallback) {
  const cxd v0 = std::conj(g[0]) * b[0] + std::conj(g[1]) * b[1];
  const cxd v1 = std::conj(g[2]) * b[0] + std::conj(g[3]) * b[1];
  const double n = std::sqrt(std::norm(v0) + std::norm(v1));
  if (n <= 1e-14) {
    fallback(a);
    return;
  }
  a[0] = -v1 / n;
  a[1] = v0 / n;
}

double sampled_value(const HermitianMatrix& w, std::uint64_t seed, std::uint64_t index,
                     const tq::PureState* support_gamma) {
  std::uint64_t st = stream_for(seed, index);
  cxd a[2], b[2];
  if (support_gamma == nullptr) {
    haar2(st, a);
    haar2(st, b);
  } else {
    const CVector& g = support_gamma->amplitudes();
    auto haar_fallback = [&st](cxd out[2]) { haar2(st, out); };
    if (index % 2 == 0) {
      haar2(st, a);
      orthogonal_b(g, a, b, haar_fallback);
    } else {
      haar2(st, b);
      orthogonal_a(g, b, a, haar_fallback);
    }
  }
  return product_expectation(w, a, b);
}

void bloch_vector(double theta, double phi, cxd out[2]) {
  out[0] = cxd(std::cos(0.5 * theta), 0.0);
  out[1] = std::polar(std::sin(0.5 * theta), phi);
}

// Deterministic coarse grids. Full rank: 20^4 Bloch-angle product states.
// Support-restricted: 20x20 over the free qubit for each of the two
// one-parameter families.
constexpr int kGridPoints = 20;

double grid_value_full(const HermitianMatrix& w, int flat) {
  const int jb = flat % kGridPoints;
  const int ib = (flat / kGridPoints) % kGridPoints;
  const int ja = (flat / (kGridPoints * kGridPoints)) % kGridPoints;
  const int ia = flat / (kGridPoints * kGridPoints * kGridPoints);
  cxd a[2], b[2];
  bloch_vector(kPi * (ia + 0.5) / kGridPoints, 2.0 * kPi * ja / kGridPoints, a);
  bloch_vector(kPi * (ib + 0.5) / kGridPoints, 2.0 * kPi * jb / kGridPoints, b);
  return product_expectation(w, a, b);
}

double grid_value_restricted(const HermitianMatrix& w, const CVector& g, int flat) {
  const int family = flat / (kGridPoints * kGridPoints);
  const int rest = flat % (kGridPoints * kGridPoints);
  const int i = rest / kGridPoints;
  const int j = rest % kGridPoints;
  cxd free_q[2], a[2], b[2];
  bloch_vector(kPi * (i + 0.5) / kGridPoints, 2.0 * kPi * j / kGridPoints, free_q);
  auto basis_fallback = [](cxd out[2]) {
    out[0] = cxd(1.0, 0.0);
    out[1] = cxd(0.0, 0.0);
  };
  if (family == 0) {
    a[0] = free_q[0];
    a[1] = free_q[1];
    orthogonal_b(g, a, b, basis_fallback);
  } else {
    b[0] = free_q[0];
    b[1] = free_q[1];
    orthogonal_a(g, b, a, basis_fallback);
  }
  return product_expectation(w, a, b);
}

double witness_scan_impl(const HermitianMatrix& w, int n_samples, std::uint64_t seed,
                         const tq::PureState* support_gamma, bool parallel) {
  double best = std::numeric_limits<double>::infinity();
#if defined(QSEP_HAVE_OPENMP)
#pragma omp parallel for reduction(min : best) schedule(static) if (parallel)
#endif
  for (int i = 0; i < n_samples; ++i) {
    best = std::min(best, sampled_value(w, seed, static_cast<std::uint64_t>(i), support_gamma));
  }

  const int grid_total = support_gamma == nullptr
                             ? kGridPoints * kGridPoints * kGridPoints * kGridPoints
                             : 2 * kGridPoints * kGridPoints;
#if defined(QSEP_HAVE_OPENMP)
#pragma omp parallel for reduction(min : best) schedule(static) if (parallel)
#endif
  for (int i = 0; i < grid_total; ++i) {
    const double v = support_gamma == nullptr
                         ? grid_value_full(w, i)
                         : grid_value_restricted(w, support_gamma->amplitudes(), i);
    best = std::min(best, v);
  }
#if !defined(QSEP_HAVE_OPENMP)
  (void)parallel;
#endif
  return best;
}

HermitianMatrix projected_pt1(const HermitianMatrix& p3, const HermitianMatrix& z2) {
  return HermitianMatrix(p3.matrix() * tq::partial_transpose_1(z2).matrix() * p3.matrix());
}

HermitianMatrix support_projector(const lsd::LsdDecomposition& dec) {
  if (!dec.gamma) {
    throw Error(ErrorCode::InvalidParam, "rank-3 decomposition lacks its kernel vector");
  }
  return HermitianMatrix::identity(4) - dec.gamma->projector();
}

// The pair (wk1, wk2) for a given effective dual combination acting on the
// pure part: wk1 is the relative eigenvector-equation residual, wk2 the
// relative slackness of Z2 against the separable part.
std::pair<double, double> wk_pair(const tq::DensityMatrix& rho, const lsd::LsdDecomposition& dec,
                                  const HermitianMatrix& zsum) {
  const HermitianMatrix& pure = dec.rho_pure_tilde;
  const double pn = pure.frobenius_norm();
  const ComplexMatrix lhs1 = zsum.matrix() * pure.matrix() + pure.matrix();
  const double wk1 = pn > 0.0 ? lhs1.frobenius_norm() / pn : 0.0;

  const HermitianMatrix sep_pt = tq::partial_transpose_1(rho.matrix() - pure);
  const ComplexMatrix lhs2 = sep_pt.matrix() * dec.Z2.matrix();
  const double wk2 = lhs2.frobenius_norm() / std::max(1.0, dec.Z2.frobenius_norm());
  return {wk1, wk2};
}

// Gamma_8 and Gamma_9 rotated to the caller's frame for a product-gamma
// decomposition.
std::pair<HermitianMatrix, HermitianMatrix> rotated_gamma89(const lsd::LsdDecomposition& dec) {
  tq::CanonicalGamma cg;
  cg.q = 0.0;
  cg.p = 1.0;
  cg.u_local = dec.u_local;
  cg.v_local = dec.v_local;
  const tq::GammaBasis gb = tq::gamma_basis(cg);
  const ComplexMatrix u_full = la::kron(dec.u_local, dec.v_local);
  HermitianMatrix g8(u_full.adjoint() * gb.Gamma[7].matrix() * u_full);
  HermitianMatrix g9(u_full.adjoint() * gb.Gamma[8].matrix() * u_full);
  return {g8, g9};
}

}  // namespace

WkReport check_validity(const tq::DensityMatrix& rho, const lsd::LsdDecomposition& dec) {
  WkReport rep;
  rep.sum_residual = (dec.rho_sep_tilde + dec.rho_pure_tilde - rho.matrix()).frobenius_norm();
  rep.sep_min_eig = la::eig_hermitian(dec.rho_sep_tilde).values[0];
  rep.sep_pt_min_eig =
      la::eig_hermitian(tq::partial_transpose_1(dec.rho_sep_tilde)).values[0];
  const la::Spectrum sp = la::eig_hermitian(dec.rho_pure_tilde);
  rep.pure_min_eig = sp.values[0];
  rep.pure_second_eig = sp.values[sp.n - 2];
  return rep;
}

std::pair<double, double> check_wk_full(const tq::DensityMatrix& rho,
                                        const lsd::LsdDecomposition& dec) {
  if (dec.case_tag != lsd::CaseTag::FullRank) {
    throw Error(ErrorCode::WrongCase, "full-rank check applied to a different case");
  }
  return wk_pair(rho, dec, dec.Z1 + tq::partial_transpose_1(dec.Z2));
}

std::pair<double, double> check_wk_rank3(const tq::DensityMatrix& rho,
                                         const lsd::LsdDecomposition& dec) {
  if (dec.case_tag != lsd::CaseTag::Rank3EntangledGamma) {
    throw Error(ErrorCode::WrongCase, "entangled-gamma check applied to a different case");
  }
  const HermitianMatrix p3 = support_projector(dec);
  return wk_pair(rho, dec, dec.Z1 + projected_pt1(p3, dec.Z2));
}

std::pair<double, double> check_wk_rank3_product(const tq::DensityMatrix& rho,
                                                 const lsd::LsdDecomposition& dec) {
  if (dec.case_tag != lsd::CaseTag::Rank3ProductGamma &&
      dec.case_tag != lsd::CaseTag::Rank3ProductGammaAnalytic) {
    throw Error(ErrorCode::WrongCase, "product-gamma check applied to a different case");
  }
  if (!dec.a || !dec.b) {
    throw Error(ErrorCode::InvalidParam, "product-gamma decomposition lacks a, b");
  }
  const HermitianMatrix p3 = support_projector(dec);
  auto [g8, g9] = rotated_gamma89(dec);
  const HermitianMatrix zsum =
      dec.Z1 + projected_pt1(p3, dec.Z2) + g8 * (*dec.a) + g9 * (*dec.b);
  auto [wk1, wk2] = wk_pair(rho, dec, zsum);
  if (dec.case_tag == lsd::CaseTag::Rank3ProductGammaAnalytic) {
    // The closed form additionally requires vanishing Z1, Z2 and a point on
    // the unit circle; fold the violations into wk1 so one threshold covers
    // the whole analytic certificate.
    const double circle = std::abs((*dec.a) * (*dec.a) + (*dec.b) * (*dec.b) - 1.0);
    wk1 = std::max({wk1, circle, dec.Z1.frobenius_norm(), dec.Z2.frobenius_norm()});
  }
  return {wk1, wk2};
}

SlacknessReport check_slackness_and_z3(const sdp::SdpProblem& prob, const sdp::SdpSolution& sol,
                                       const tq::GammaBasis* gb, std::optional<double> a,
                                       std::optional<double> b) {
  SlacknessReport out;
  const sdp::BlockMatrix s = prob.eval(sol.x);
  double acc = 0.0;
  for (int k = 0; k < s.count(); ++k) {
    const ComplexMatrix p = s.blocks[k].matrix() * sol.Z.blocks[k].matrix();
    const double n = p.frobenius_norm();
    acc += n * n;
  }
  out.slackness_residual = std::sqrt(acc);

  const std::vector<int>& dims = prob.layout.block_dims;
  if (dims == std::vector<int>{4, 4, 4}) {
    const HermitianMatrix z3id = sol.Z.blocks[2] - sol.Z.blocks[0] -
                                 tq::partial_transpose_1(sol.Z.blocks[1]) -
                                 HermitianMatrix::identity(4);
    out.z3_identity_residual = z3id.frobenius_norm();
    return out;
  }
  if (gb == nullptr) {
    throw Error(ErrorCode::InvalidParam, "rank-3 layouts need the support basis for the Z3 identity");
  }
  if (dims == std::vector<int>{3, 4, 3}) {
    const HermitianMatrix z2par =
        tq::restrict_to_support(*gb, projected_pt1(gb->P3, sol.Z.blocks[1]));
    const HermitianMatrix z3id =
        sol.Z.blocks[2] - sol.Z.blocks[0] - z2par - HermitianMatrix::identity(3);
    out.z3_identity_residual = z3id.frobenius_norm();
    return out;
  }
  if (dims == std::vector<int>{3, 3, 3}) {
    if (!a || !b) {
      throw Error(ErrorCode::InvalidParam, "product-gamma Z3 identity needs the recovered a, b");
    }
    const HermitianMatrix z2_full = tq::embed_from_support(*gb, sol.Z.blocks[1]);
    const HermitianMatrix z2par = tq::restrict_to_support(*gb, projected_pt1(gb->P3, z2_full));
    const HermitianMatrix gamma_part =
        tq::restrict_to_support(*gb, gb->Gamma[7] * (*a) + gb->Gamma[8] * (*b));
    const HermitianMatrix z3id = sol.Z.blocks[2] - sol.Z.blocks[0] - z2par - gamma_part -
                                 HermitianMatrix::identity(3);
    out.z3_identity_residual = z3id.frobenius_norm();
    return out;
  }
  throw Error(ErrorCode::DimMismatch, "unrecognized block layout for the Z3 identity");
}

double witness_scan_serial(const HermitianMatrix& w, int n_samples, std::uint64_t seed,
                           const tq::PureState* support_gamma) {
  return witness_scan_impl(w, n_samples, seed, support_gamma, false);
}

double witness_scan_parallel(const HermitianMatrix& w, int n_samples, std::uint64_t seed,
                             const tq::PureState* support_gamma) {
  return witness_scan_impl(w, n_samples, seed, support_gamma, true);
}

std::pair<double, double> check_witness(const HermitianMatrix& w, const tq::DensityMatrix& rho,
                                        double s_value, int n_samples, std::uint64_t seed,
                                        const tq::PureState* support_gamma) {
  if (n_samples < 1) {
    throw Error(ErrorCode::InvalidParam, "witness check needs at least one sample");
  }
  (void)s_value;  // the S - 1 comparison is made by the report assembly
  const double mn = witness_scan_parallel(w, n_samples, seed, support_gamma);
  const double tr = la::frobenius_inner(w, rho.matrix());
  return {mn, tr};
}

WkReport build_report(const tq::DensityMatrix& rho, const lsd::LsdDecomposition& dec,
                      const sdp::SdpProblem* prob, const sdp::SdpSolution* sol,
                      const tq::GammaBasis* gb, int n_samples, std::uint64_t seed) {
  WkReport rep = check_validity(rho, dec);
  const bool validity_ok =
      rep.sum_residual <= thresholds::kSumResidual && rep.sep_min_eig >= -thresholds::kSepPsd &&
      rep.sep_pt_min_eig >= -thresholds::kSepPpt && rep.pure_min_eig >= -thresholds::kPurePsd &&
      rep.pure_second_eig <= thresholds::kPureSecondEig;

  if (dec.case_tag == lsd::CaseTag::Separable) {
    rep.passed = validity_ok;
    return rep;
  }

  std::pair<double, double> wk12;
  switch (dec.case_tag) {
    case lsd::CaseTag::FullRank:
      wk12 = check_wk_full(rho, dec);
      break;
    case lsd::CaseTag::Rank3EntangledGamma:
      wk12 = check_wk_rank3(rho, dec);
      break;
    default:
      wk12 = check_wk_rank3_product(rho, dec);
      break;
  }
  rep.wk1_residual = wk12.first;
  rep.wk2_residual = wk12.second;

  if (prob != nullptr && sol != nullptr) {
    const SlacknessReport sr = check_slackness_and_z3(*prob, *sol, gb, dec.a, dec.b);
    rep.slackness_residual = sr.slackness_residual;
    rep.z3_identity_residual = sr.z3_identity_residual;
  } else if (dec.case_tag == lsd::CaseTag::Rank3ProductGammaAnalytic) {
    // Closed form: Z1 = Z2 = 0, so only the third block contributes to the
    // slackness, and the Z3 identity reduces to
    // Z3 = P3 + a Gamma_8 + b Gamma_9 in the caller's frame.
    const ComplexMatrix sz = dec.rho_pure_tilde.matrix() * dec.Z3.matrix();
    rep.slackness_residual = sz.frobenius_norm();
    const HermitianMatrix p3 = support_projector(dec);
    auto [g8, g9] = rotated_gamma89(dec);
    const HermitianMatrix z3id = dec.Z3 - dec.Z1 - projected_pt1(p3, dec.Z2) - p3 -
                                 g8 * (*dec.a) - g9 * (*dec.b);
    rep.z3_identity_residual = z3id.frobenius_norm();
  }
  // When no solver data is available (external re-verification) the
  // slackness and Z3 fields stay absent and are skipped by `passed`.

  const lsd::Witness witness = lsd::extract_witness(dec);
  const tq::PureState* sg = nullptr;
  if (dec.case_tag != lsd::CaseTag::FullRank && dec.gamma) sg = &*dec.gamma;
  if (n_samples >= 1) {
    auto [mn, tr] = check_witness(witness.W, rho, dec.S, n_samples, seed, sg);
    rep.witness_min_over_samples = mn;
    rep.tr_w_rho = tr;
    rep.n_samples = n_samples;
  } else {
    rep.tr_w_rho = la::frobenius_inner(witness.W, rho.matrix());
  }
  rep.witness_plus_id_min_eig =
      la::eig_hermitian(witness.W + HermitianMatrix::identity(4)).values[0];

  const double tr_z2 = dec.Z2.trace_real();
  rep.mu_hat = tr_z2 > 1e-12 ? dec.Z1.trace_real() / tr_z2 : WkReport::kAbsent;
  HermitianMatrix zsum = dec.case_tag == lsd::CaseTag::FullRank
                             ? dec.Z1 + tq::partial_transpose_1(dec.Z2)
                             : dec.Z1 + projected_pt1(support_projector(dec), dec.Z2);
  if (dec.pure_vector) {
    const CVector& v = dec.pure_vector->amplitudes();
    rep.alpha_hat = std::abs(la::inner(v, la::matvec(zsum.matrix(), v)).real());
  }

  bool ok = validity_ok;
  ok = ok && rep.wk1_residual <= thresholds::kWk && rep.wk2_residual <= thresholds::kWk;
  if (!wk_field_absent(rep.z3_identity_residual)) {
    ok = ok && rep.z3_identity_residual <= thresholds::kZ3;
  }
  if (!wk_field_absent(rep.slackness_residual)) {
    ok = ok && rep.slackness_residual <= thresholds::kSlackness;
  }
  if (!wk_field_absent(rep.witness_min_over_samples)) {
    ok = ok && rep.witness_min_over_samples >= thresholds::kWitnessMin;
  }
  ok = ok && std::abs(rep.tr_w_rho - (dec.S - 1.0)) <= thresholds::kTrWRho;
  ok = ok && rep.witness_plus_id_min_eig >= thresholds::kWitnessPlusId;
  rep.passed = ok;
  return rep;
}

}  // namespace qsep::wk
