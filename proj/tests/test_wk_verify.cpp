#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "qsep/error.hpp"
#include "qsep/lsd.hpp"
#include "qsep/sdp.hpp"
#include "qsep/twoqubit.hpp"
#include "qsep/wk_verify.hpp"

using namespace qsep;
using namespace qsep::la;
using namespace qsep::wk;

namespace {

CVector bell_psi_minus() {
  CVector v(4);
  v[1] = 1.0 / std::sqrt(2.0);
  v[2] = -1.0 / std::sqrt(2.0);
  return v;
}

CVector bell_phi_plus() {
  CVector v(4);
  v[0] = 1.0 / std::sqrt(2.0);
  v[3] = 1.0 / std::sqrt(2.0);
  return v;
}

CVector bell_psi_plus_magic() {
  CVector v(4);
  v[1] = cxd(0.0, 1.0 / std::sqrt(2.0));
  v[2] = cxd(0.0, 1.0 / std::sqrt(2.0));
  return v;
}

// Exact closed-form optimal decomposition of werner(0.8):
// S = 0.3, sep~ = 0.3 * werner(1/3), pure~ = 0.7 |psi-><psi-|.
lsd::LsdDecomposition werner08_oracle() {
  lsd::LsdDecomposition dec;
  dec.S = 0.3;
  dec.rho_sep_tilde = tq::werner_state(1.0 / 3.0).matrix() * 0.3;
  dec.pure_vector = tq::PureState(bell_psi_minus());
  dec.rho_pure_tilde = dec.pure_vector->projector() * 0.7;
  dec.case_tag = lsd::CaseTag::FullRank;
  return dec;
}

lsd::DecomposeOptions fast_options() {
  lsd::DecomposeOptions opts;
  opts.witness_samples = 400;
  return opts;
}

tq::DensityMatrix product_kernel_state(std::uint64_t seed) {
  const tq::PureState ab = tq::random_product_state(seed);
  const tq::DensityMatrix base = tq::random_density(4, seed + 7777);
  const HermitianMatrix p = HermitianMatrix::identity(4) - ab.projector();
  HermitianMatrix h(p.matrix() * base.matrix().matrix() * p.matrix());
  h *= 1.0 / h.trace_real();
  return tq::DensityMatrix(h);
}

}  // namespace

TEST_CASE("check_validity: exact oracle, perturbation scale, separable zero") {
  const tq::DensityMatrix rho = tq::werner_state(0.8);
  lsd::LsdDecomposition dec = werner08_oracle();

  WkReport rep = check_validity(rho, dec);
  CHECK(rep.sum_residual <= 1e-10);
  CHECK(rep.sep_min_eig >= -1e-10);
  CHECK(rep.sep_min_eig == doctest::Approx(0.05).epsilon(1e-10));  // 0.3 * (1-p)/4 at p=1/3
  CHECK(rep.sep_pt_min_eig >= -1e-10);
  CHECK(rep.pure_min_eig >= -1e-10);
  CHECK(rep.pure_second_eig <= 1e-10);

  // Adding 0.01 sigma3 tau3 to the separable part moves the sum residual by
  // its Frobenius norm, 0.01 * 2.
  dec.rho_sep_tilde += tq::pauli_basis().E[15] * 0.01;
  rep = check_validity(rho, dec);
  CHECK(rep.sum_residual == doctest::Approx(0.02).epsilon(1e-12));

  // Separable case: zero pure part has pure_min_eig = 0.
  lsd::LsdDecomposition sep;
  sep.S = 1.0;
  sep.rho_sep_tilde = rho.matrix();
  sep.rho_pure_tilde = HermitianMatrix::zero(4);
  sep.case_tag = lsd::CaseTag::Separable;
  rep = check_validity(rho, sep);
  CHECK(rep.pure_min_eig == 0.0);
  CHECK(rep.pure_second_eig == 0.0);
}

TEST_CASE("check_wk_full: certified solution, misuse detection, dual structure") {
  const tq::DensityMatrix rho = tq::werner_state(0.8);
  const lsd::LsdDecomposition dec = lsd::decompose(rho, {}, fast_options());
  REQUIRE(dec.case_tag == lsd::CaseTag::FullRank);

  auto [wk1, wk2] = check_wk_full(rho, dec);
  CHECK(wk1 <= 1e-6);
  CHECK(wk2 <= 1e-6);

  // Swapping Z1 and Z2 must be detected.
  lsd::LsdDecomposition swapped = dec;
  std::swap(swapped.Z1, swapped.Z2);
  auto [wk1s, wk2s] = check_wk_full(rho, swapped);
  CHECK(wk1s >= 0.1);

  // Full-rank separable part: Z1 vanishes and Z2 is (proportional to) a pure
  // state.
  REQUIRE(rank_eps(dec.rho_sep_tilde) == 4);
  CHECK(dec.Z1.frobenius_norm() <= 1e-6);
  const Spectrum z2sp = eig_hermitian(dec.Z2);
  CHECK(z2sp.values[2] <= 1e-6 * std::max(1.0, z2sp.values[3]));

  // Wrong case tag.
  const tq::DensityMatrix r3 = tq::random_density(3, 31);
  REQUIRE_FALSE(tq::is_ppt(r3));
  const lsd::LsdDecomposition dec3 = lsd::decompose(r3, {}, fast_options());
  try {
    check_wk_full(r3, dec3);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::WrongCase);
  }
}

TEST_CASE("check_wk_rank3: certified corpus, projection sanity, perturbation detection") {
  // Tightened solver tolerance sharpens the residuals well below threshold.
  sdp::SolverConfig tight;
  tight.tol_gap = 1e-10;

  int tested = 0;
  for (std::uint64_t seed = 30; seed < 44 && tested < 3; ++seed) {
    const tq::DensityMatrix rho = tq::random_density(3, seed);
    if (tq::is_ppt(rho)) continue;
    const tq::CanonicalGamma cg = tq::canonicalize_gamma(tq::orthogonal_pure_state(rho));
    if (cg.q <= 1e-6) continue;
    ++tested;

    const lsd::LsdDecomposition dec = lsd::decompose(rho, tight, fast_options());
    REQUIRE(dec.case_tag == lsd::CaseTag::Rank3EntangledGamma);
    auto [wk1, wk2] = check_wk_rank3(rho, dec);
    CHECK(wk1 <= 1e-7);
    CHECK(wk2 <= 1e-7);

    // Corrupting a dual block is detected.
    lsd::LsdDecomposition bad = dec;
    bad.Z1 += HermitianMatrix::identity(4) * 0.05;
    auto [wk1b, wk2b] = check_wk_rank3(rho, bad);
    CHECK(wk1b > 1e-3);

    try {
      check_wk_rank3_product(rho, dec);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::WrongCase);
    }
  }
  CHECK(tested == 3);

  // Identity-frame sanity: when Z2^T1 already lives inside the support,
  // the projection P3 . P3 changes nothing.
  tq::CanonicalGamma cg0;
  cg0.q = 0.6;
  cg0.p = std::sqrt(1.0 - 0.36);
  const tq::GammaBasis gb = tq::gamma_basis(cg0);
  const HermitianMatrix x = gb.Gamma[3] + gb.Gamma[5] * 0.5;  // supported inside P3
  const HermitianMatrix z2 = tq::partial_transpose_1(x);      // so z2^T1 = x exactly
  const HermitianMatrix projected(
      gb.P3.matrix() * tq::partial_transpose_1(z2).matrix() * gb.P3.matrix());
  CHECK((projected - tq::partial_transpose_1(z2)).frobenius_norm() < 1e-12);
}

TEST_CASE("check_wk_rank3_product: analytic corpus and dual-recovered a, b") {
  // Analytic-family state in the canonical frame (see test_lsd for the
  // construction); theta = 1.1, w = 0.3.
  const double theta = 1.1;
  const double w = 0.3;

  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  CVector minus(2), plus(2);
  minus[0] = inv_sqrt2;
  minus[1] = -inv_sqrt2;
  plus[0] = inv_sqrt2;
  plus[1] = inv_sqrt2;
  auto qubit = [](double t, double p) {
    CVector v(2);
    v[0] = std::cos(t / 2);
    v[1] = std::polar(std::sin(t / 2), p);
    return v;
  };
  HermitianMatrix sep = HermitianMatrix::zero(4);
  sep += outer_self(kron(minus, qubit(0.7, 0.3))) * 0.3;
  sep += outer_self(kron(minus, qubit(1.9, 2.1))) * 0.2;
  sep += outer_self(kron(qubit(2.6, 5.0), plus)) * 0.28;
  sep += outer_self(kron(qubit(1.1, 4.2), plus)) * 0.22;
  sep *= 1.0 / sep.trace_real();

  const CVector phip = bell_phi_plus();
  const CVector psip = bell_psi_plus_magic();
  CVector pure(4);
  for (int i = 0; i < 4; ++i) {
    pure[i] = std::cos(theta / 2) * phip[i] - std::sin(theta / 2) * psip[i];
  }
  HermitianMatrix rho_m = sep * (1.0 - w);
  rho_m += outer_self(pure) * w;
  const tq::DensityMatrix rho(rho_m);

  const lsd::LsdDecomposition dec = lsd::decompose(rho, {}, fast_options());
  REQUIRE(dec.case_tag == lsd::CaseTag::Rank3ProductGammaAnalytic);
  auto [wk1, wk2] = check_wk_rank3_product(rho, dec);
  CHECK(wk1 <= 1e-8);
  CHECK(wk2 <= 1e-8);
  CHECK(dec.a.value() * dec.a.value() + dec.b.value() * dec.b.value() ==
        doctest::Approx(1.0).epsilon(1e-9));

  // Dual-recovered a, b from the SDP agree with the angular parameterization.
  tq::CanonicalGamma cg0;
  cg0.q = 0.0;
  cg0.p = 1.0;
  const tq::GammaBasis gb = tq::gamma_basis(cg0);
  const sdp::SdpProblem prob = lsd::encode_rank3_product(rho, gb);
  sdp::SolverConfig cfg;
  std::vector<double> x0(7, 0.0);
  x0[0] = 1.5 * eig_hermitian(rho.matrix()).values[1];
  cfg.initial_x = x0;
  sdp::BlockMatrix z0 = sdp::BlockMatrix::identity(prob.layout);
  z0.blocks[2] *= 3.0;
  cfg.initial_Z = z0;
  const sdp::SdpSolution sol = sdp::solve(prob, cfg);
  REQUIRE(sol.status == sdp::SdpStatus::Optimal);
  CHECK(sol.x[0] == doctest::Approx(1.0 - w).epsilon(1e-7));

  const HermitianMatrix z1 = tq::embed_from_support(gb, sol.Z.blocks[0]);
  const HermitianMatrix z2 = tq::embed_from_support(gb, sol.Z.blocks[1]);
  const HermitianMatrix z3 = tq::embed_from_support(gb, sol.Z.blocks[2]);
  const HermitianMatrix z2p(
      gb.P3.matrix() * tq::partial_transpose_1(z2).matrix() * gb.P3.matrix());
  const HermitianMatrix d = z1 + z2p - z3;
  const double a_rec = -0.5 * frobenius_inner(gb.Gamma[7], d);
  const double b_rec = -0.5 * frobenius_inner(gb.Gamma[8], d);
  CHECK(a_rec == doctest::Approx(std::cos(theta)).epsilon(1e-6));
  CHECK(b_rec == doctest::Approx(std::sin(theta)).epsilon(1e-6));

  // In the ordered basis (phi+, psi+) the operator a Gamma8 + b Gamma9 is
  // [[-a, b], [b, a]]; its -1 eigenvector is (cos(theta/2), -sin(theta/2)).
  const HermitianMatrix ab_op = gb.Gamma[7] * std::cos(theta) + gb.Gamma[8] * std::sin(theta);
  const CVector bell[2] = {phip, psip};
  cxd m2[2][2];
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) m2[i][j] = inner(bell[i], matvec(ab_op.matrix(), bell[j]));
  }
  CHECK(std::abs(m2[0][0] - cxd(-std::cos(theta), 0.0)) < 1e-12);
  CHECK(std::abs(m2[0][1] - cxd(std::sin(theta), 0.0)) < 1e-12);
  CHECK(std::abs(m2[1][0] - cxd(std::sin(theta), 0.0)) < 1e-12);
  CHECK(std::abs(m2[1][1] - cxd(std::cos(theta), 0.0)) < 1e-12);
  const cxd ev0 = m2[0][0] * std::cos(theta / 2) + m2[0][1] * (-std::sin(theta / 2));
  const cxd ev1 = m2[1][0] * std::cos(theta / 2) + m2[1][1] * (-std::sin(theta / 2));
  CHECK(std::abs(ev0 - cxd(-std::cos(theta / 2), 0.0)) < 1e-12);
  CHECK(std::abs(ev1 - cxd(std::sin(theta / 2), 0.0)) < 1e-12);
}

TEST_CASE("check_slackness_and_z3: certified, suboptimal bound, exact start identity") {
  const tq::DensityMatrix rho = tq::werner_state(0.8);
  const sdp::SdpProblem prob = lsd::encode_full_rank(rho);

  sdp::SolverConfig cfg;
  std::vector<double> x0(16, 0.0);
  x0[0] = 2.0 * eig_hermitian(rho.matrix()).values[0];
  cfg.initial_x = x0;
  sdp::BlockMatrix z0 = sdp::BlockMatrix::identity(prob.layout);
  z0.blocks[2] *= 3.0;
  cfg.initial_Z = z0;
  const sdp::SdpSolution sol = sdp::solve(prob, cfg);
  REQUIRE(sol.status == sdp::SdpStatus::Optimal);

  const SlacknessReport cert = check_slackness_and_z3(prob, sol);
  CHECK(cert.slackness_residual <= 1e-6);
  CHECK(cert.z3_identity_residual <= 1e-6);

  // Feasible but suboptimal x against the optimal Z: slackness is bounded
  // below by gap/dim.
  sdp::SdpSolution sub = sol;
  sub.x = x0;
  const double gap = sdp::block_inner(prob.eval(x0), sol.Z);
  const SlacknessReport subrep = check_slackness_and_z3(prob, sub);
  CHECK(subrep.slackness_residual >= gap / prob.layout.total());

  // The exactly feasible start Z = diag(I, I, 3I) satisfies the Z3 identity
  // with Z1 = Z2 = I: 3I = I + I^T1 + I.
  sdp::SdpSolution start = sol;
  start.Z = z0;
  const SlacknessReport srep = check_slackness_and_z3(prob, start);
  CHECK(srep.z3_identity_residual <= 1e-14);
}

TEST_CASE("check_witness: trivial witnesses and the optimal Werner witness") {
  const tq::DensityMatrix rho = tq::werner_state(0.8);

  const HermitianMatrix wneg = HermitianMatrix::identity(4) * -1.0;
  auto [mn_neg, tr_neg] = check_witness(wneg, rho, 0.3, 64, 7);
  CHECK(mn_neg == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(tr_neg == doctest::Approx(-1.0).epsilon(1e-12));

  const HermitianMatrix wid = HermitianMatrix::identity(4);
  auto [mn_id, tr_id] = check_witness(wid, rho, 0.3, 64, 7);
  CHECK(mn_id == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(tr_id == doctest::Approx(1.0).epsilon(1e-12));

  const lsd::LsdDecomposition dec = lsd::decompose(rho, {}, fast_options());
  const lsd::Witness w = lsd::extract_witness(dec);
  auto [mn, tr] = check_witness(w.W, rho, dec.S, 10000, 12345);
  CHECK(mn >= -1e-7);
  CHECK(tr == doctest::Approx(-0.7).epsilon(1e-7));

  CHECK_THROWS_AS(check_witness(wid, rho, 0.3, 0, 7), Error);
}

TEST_CASE("witness scan: serial/parallel agreement and sample monotonicity") {
  const tq::DensityMatrix rho = tq::werner_state(0.8);
  const lsd::LsdDecomposition dec = lsd::decompose(rho, {}, fast_options());
  const lsd::Witness w = lsd::extract_witness(dec);

  const double serial = witness_scan_serial(w.W, 3000, 99);
  const double parallel = witness_scan_parallel(w.W, 3000, 99);
  CHECK(serial == parallel);  // bit-identical by counter-based seeding

  // Monotone non-increasing in the sample count for a fixed seed.
  const double m500 = witness_scan_serial(w.W, 500, 99);
  const double m1000 = witness_scan_serial(w.W, 1000, 99);
  const double m3000 = witness_scan_serial(w.W, 3000, 99);
  CHECK(m1000 <= m500);
  CHECK(m3000 <= m1000);

  // Support-restricted scan: identical between serial and parallel too.
  const tq::DensityMatrix r3 = tq::random_density(3, 31);
  REQUIRE_FALSE(tq::is_ppt(r3));
  const lsd::LsdDecomposition dec3 = lsd::decompose(r3, {}, fast_options());
  const lsd::Witness w3 = lsd::extract_witness(dec3);
  REQUIRE(dec3.gamma.has_value());
  const double s3 = witness_scan_serial(w3.W, 2000, 5, &*dec3.gamma);
  const double p3 = witness_scan_parallel(w3.W, 2000, 5, &*dec3.gamma);
  CHECK(s3 == p3);
  CHECK(s3 >= -1e-6);

  // The restricted sampler respects the orthogonality constraint: spot-check
  // through the public scan by using W = |gamma><gamma|, which must then
  // read exactly zero on every sampled state.
  const double overlap_min = witness_scan_serial(dec3.gamma->projector(), 2000, 5, &*dec3.gamma);
  CHECK(overlap_min >= 0.0);
  CHECK(overlap_min <= 1e-20);
}

TEST_CASE("build_report: aggregate pass, mu/alpha recovery, sensitivity to S") {
  const tq::DensityMatrix rho = tq::werner_state(0.8);
  const lsd::LsdDecomposition dec = lsd::decompose(rho, {}, fast_options());
  REQUIRE(dec.residuals.passed);
  CHECK(dec.residuals.n_samples == 400);
  CHECK(dec.residuals.alpha_hat == doctest::Approx(1.0).epsilon(1e-6));
  // Full-rank separable part forces Z1 = 0, so mu_hat is 0 (or absent).
  if (!wk_field_absent(dec.residuals.mu_hat)) {
    CHECK(std::abs(dec.residuals.mu_hat) <= 1e-6);
  }
  CHECK(std::abs(dec.residuals.tr_w_rho - (dec.S - 1.0)) <= 1e-7);
  CHECK(dec.residuals.witness_plus_id_min_eig >= -1e-8);

  // Perturbing S while renormalizing the parts must flip `passed`.
  for (const double delta : {1e-3, -1e-3}) {
    lsd::LsdDecomposition bad = dec;
    bad.S = dec.S + delta;
    bad.rho_sep_tilde = dec.rho_sep_tilde * (bad.S / dec.S);
    bad.rho_pure_tilde = rho.matrix() - bad.rho_sep_tilde;
    const WkReport rep = build_report(rho, bad, nullptr, nullptr, nullptr, 400, 7);
    CHECK_FALSE(rep.passed);
  }

  // Analytic decompositions report mu_hat as absent (Z2 = 0).
  const tq::DensityMatrix sepm(tq::werner_state(0.9).matrix());  // placeholder full-rank; skip
  // (the analytic mu_hat case is covered in the product-gamma test above via
  //  decompose: Z2 = 0 => tr{Z2} = 0)
}

TEST_CASE("build_report: separable case runs only the validity block") {
  const tq::DensityMatrix rho = tq::random_separable(5, 3);
  const lsd::LsdDecomposition dec = lsd::decompose(rho, {}, fast_options());
  REQUIRE(dec.case_tag == lsd::CaseTag::Separable);
  const WkReport& rep = dec.residuals;
  CHECK(rep.passed);
  CHECK(wk_field_absent(rep.wk1_residual));
  CHECK(wk_field_absent(rep.wk2_residual));
  CHECK(wk_field_absent(rep.witness_min_over_samples));
  CHECK(wk_field_absent(rep.mu_hat));
  CHECK(rep.n_samples == 0);
}

TEST_CASE("build_report: product-gamma SDP case carries a, b and passes") {
  int tested = 0;
  for (std::uint64_t seed = 50; seed < 80 && tested < 2; ++seed) {
    const tq::DensityMatrix rho = product_kernel_state(seed);
    if (tq::is_ppt(rho)) continue;
    ++tested;
    const lsd::LsdDecomposition dec = lsd::decompose(rho, {}, fast_options());
    CHECK(dec.residuals.passed);
    if (dec.case_tag == lsd::CaseTag::Rank3ProductGammaAnalytic) {
      CHECK(wk_field_absent(dec.residuals.mu_hat));  // Z2 = 0 in the closed form
      CHECK(dec.residuals.alpha_hat <= 1e-9);
    } else {
      REQUIRE(dec.case_tag == lsd::CaseTag::Rank3ProductGamma);
      CHECK(dec.residuals.z3_identity_residual <= 1e-6);
      CHECK(dec.residuals.slackness_residual <= 1e-6);
    }
  }
  CHECK(tested == 2);
}
