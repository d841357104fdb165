#include "qsep/lsd.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "qsep/error.hpp"
#include "qsep/wk_verify.hpp"

namespace qsep::lsd {

using la::ComplexMatrix;
using la::CVector;
using la::cxd;
using la::HermitianMatrix;

namespace {

constexpr double kProductGammaTol = 1e-9;
constexpr double kPureSecondEigGate = 1e-6;

// u^dag x u for a unitary change of frame.
HermitianMatrix rotate_frame(const ComplexMatrix& u, const HermitianMatrix& x) {
  return HermitianMatrix(u.adjoint() * x.matrix() * u);
}

CVector rotate_vector(const ComplexMatrix& u, const CVector& v) {
  return la::matvec(u.adjoint(), v);
}

// Top eigenvector of the pure remainder rho - rho_sep_tilde. The optimum
// guarantees a rank-1 remainder; anything beyond solver noise in the second
// eigenvalue means the solve cannot be trusted.
tq::PureState extract_pure_vector(const HermitianMatrix& pure_tilde) {
  la::Spectrum sp = la::eig_hermitian(pure_tilde);
  const int n = sp.n;
  if (sp.values[n - 2] > kPureSecondEigGate) {
    throw Error(ErrorCode::NumericalFailure,
                "pure remainder is not rank 1: second eigenvalue " +
                    std::to_string(sp.values[n - 2]));
  }
  CVector v = sp.vector(n - 1);
  const double nv = v.norm();
  if (!(nv > 0.0)) {
    throw Error(ErrorCode::NumericalFailure, "pure remainder has no positive eigenvalue");
  }
  for (int i = 0; i < v.dim(); ++i) v[i] /= nv;
  return tq::PureState(v);
}

std::vector<double> basis_vector_hint(int m, double alpha) {
  std::vector<double> x(m, 0.0);
  x[0] = alpha;
  return x;
}

sdp::SdpSolution run_solver(const sdp::SdpProblem& prob, const sdp::SolverConfig& cfg,
                            const std::vector<double>& default_x,
                            const sdp::BlockMatrix& default_z) {
  sdp::SolverConfig local = cfg;
  if (!local.initial_x) local.initial_x = default_x;
  if (!local.initial_Z) local.initial_Z = default_z;
  sdp::SdpSolution sol = sdp::solve(prob, local);
  if (sol.status != sdp::SdpStatus::Optimal) {
    throw Error(ErrorCode::NumericalFailure,
                std::string("solver stopped without optimality certificate: ") +
                    sdp::sdp_status_name(sol.status));
  }
  return sol;
}

// The paper's exactly feasible dual start diag(I, I, 3I) in the given layout.
sdp::BlockMatrix scaled_identity_dual(const sdp::BlockLayout& layout) {
  sdp::BlockMatrix z = sdp::BlockMatrix::identity(layout);
  z.blocks[2] *= 3.0;
  return z;
}

// Smallest eigenvalue strictly inside the support: for a rank-4 state the
// global minimum, for a rank-3 state the smallest nonzero one.
double support_min_eigenvalue(const HermitianMatrix& m, int rank) {
  la::Spectrum sp = la::eig_hermitian(m);
  return sp.values[sp.n - rank];
}

}  // namespace

const char* case_tag_name(CaseTag tag) {
  switch (tag) {
    case CaseTag::Separable: return "Separable";
    case CaseTag::FullRank: return "FullRank";
    case CaseTag::Rank3EntangledGamma: return "Rank3EntangledGamma";
    case CaseTag::Rank3ProductGamma: return "Rank3ProductGamma";
    case CaseTag::Rank3ProductGammaAnalytic: return "Rank3ProductGammaAnalytic";
  }
  return "Unknown";
}

std::optional<CaseTag> case_tag_from_name(std::string_view name) {
  for (CaseTag tag : {CaseTag::Separable, CaseTag::FullRank, CaseTag::Rank3EntangledGamma,
                      CaseTag::Rank3ProductGamma, CaseTag::Rank3ProductGammaAnalytic}) {
    if (name == case_tag_name(tag)) return tag;
  }
  return std::nullopt;
}

sdp::SdpProblem encode_full_rank(const tq::DensityMatrix& rho) {
  if (la::rank_eps(rho.matrix()) != 4) {
    throw Error(ErrorCode::RankMismatch, "full-rank encoding requires rank 4");
  }
  const auto& E = tq::pauli_basis().E;
  sdp::SdpProblem prob;
  prob.layout.block_dims = {4, 4, 4};
  prob.F0.blocks = {HermitianMatrix::zero(4), HermitianMatrix::zero(4), rho.matrix()};
  prob.c.assign(16, 0.0);
  prob.c[0] = -1.0;
  prob.F.resize(16);
  for (int i = 0; i < 16; ++i) {
    prob.F[i].blocks = {E[i] * 0.25, tq::partial_transpose_1(E[i]) * 0.25, E[i] * (-0.25)};
  }
  prob.validate();
  return prob;
}

sdp::SdpProblem encode_rank3_entangled(const tq::DensityMatrix& rho_canonical,
                                       const tq::CanonicalGamma& cg, const tq::GammaBasis& gb) {
  if (la::rank_eps(rho_canonical.matrix()) != 3) {
    throw Error(ErrorCode::RankMismatch, "rank-3 encoding requires rank 3");
  }
  if (cg.q <= kProductGammaTol) {
    throw Error(ErrorCode::ProductGamma,
                "kernel vector is a product state; use the product-gamma encoder");
  }
  sdp::SdpProblem prob;
  prob.layout.block_dims = {3, 4, 3};
  prob.F0.blocks = {HermitianMatrix::zero(3), HermitianMatrix::zero(4),
                    tq::restrict_to_support(gb, rho_canonical.matrix())};
  prob.c.assign(9, 0.0);
  prob.c[0] = -1.0;
  prob.F.resize(9);
  const double third = 1.0 / 3.0;
  for (int i = 0; i < 9; ++i) {
    HermitianMatrix r = tq::restrict_to_support(gb, gb.Gamma[i]);
    prob.F[i].blocks = {r * third, tq::partial_transpose_1(gb.Gamma[i]) * third, r * (-third)};
  }
  prob.validate();
  return prob;
}

sdp::SdpProblem encode_rank3_product(const tq::DensityMatrix& rho_canonical,
                                     const tq::GammaBasis& gb) {
  if (la::rank_eps(rho_canonical.matrix()) != 3) {
    throw Error(ErrorCode::RankMismatch, "rank-3 encoding requires rank 3");
  }
  if (gb.q > kProductGammaTol) {
    throw Error(ErrorCode::EntangledGamma,
                "kernel vector is entangled; use the entangled-gamma encoder");
  }
  // At q = 0 the canonical kernel is the real product vector |+)(x)|-), so
  // P3^T1 = P3 and every Gamma_i^T1 (i <= 7) lives inside the same support;
  // the middle block is therefore expressed on the support too.
  sdp::SdpProblem prob;
  prob.layout.block_dims = {3, 3, 3};
  prob.F0.blocks = {HermitianMatrix::zero(3), HermitianMatrix::zero(3),
                    tq::restrict_to_support(gb, rho_canonical.matrix())};
  prob.c.assign(7, 0.0);
  prob.c[0] = -1.0;
  prob.F.resize(7);
  const double third = 1.0 / 3.0;
  for (int i = 0; i < 7; ++i) {
    HermitianMatrix r = tq::restrict_to_support(gb, gb.Gamma[i]);
    HermitianMatrix rpt =
        tq::restrict_to_support(gb, tq::partial_transpose_1(gb.Gamma[i]));
    prob.F[i].blocks = {r * third, rpt * third, r * (-third)};
  }
  prob.validate();
  return prob;
}

std::optional<LsdDecomposition> analytic_rank3_product(const tq::DensityMatrix& rho_canonical,
                                                       const tq::GammaBasis& gb) {
  if (gb.q > kProductGammaTol) return std::nullopt;
  const HermitianMatrix& rho = rho_canonical.matrix();

  const double g8 = la::frobenius_inner(gb.Gamma[7], rho);
  const double g9 = la::frobenius_inner(gb.Gamma[8], rho);
  const double r = std::hypot(g8, g9);
  // r = 0 gives S = 1 with theta undefined; such a state is handled by the
  // PPT short-circuit or the SDP, never asserted separable here.
  if (r <= 1e-12 || r >= 1.0) return std::nullopt;

  const double s_value = 1.0 - r;
  const double theta = std::atan2(-g9, -g8);
  const double ct = std::cos(0.5 * theta);
  const double st = std::sin(0.5 * theta);

  // cos(theta/2)|phi+> - sin(theta/2)|psi+> with phi+ = (|00>+|11>)/sqrt(2)
  // and psi+ = i(|01>+|10>)/sqrt(2): a maximally entangled vector.
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  CVector v(4);
  v[0] = cxd(ct * inv_sqrt2, 0.0);
  v[3] = cxd(ct * inv_sqrt2, 0.0);
  v[1] = cxd(0.0, -st * inv_sqrt2);
  v[2] = cxd(0.0, -st * inv_sqrt2);

  HermitianMatrix pure_tilde = la::outer_self(v) * r;
  HermitianMatrix sep_tilde = rho - pure_tilde;

  // Feasibility gate: the deduced separable part must be PSD, PPT and keep
  // the full rank-3 support, otherwise the closed form does not apply.
  if (!la::is_psd(sep_tilde)) return std::nullopt;
  if (!la::is_psd(tq::partial_transpose_1(sep_tilde))) return std::nullopt;
  if (la::rank_eps(sep_tilde) != 3) return std::nullopt;

  LsdDecomposition dec;
  dec.S = s_value;
  dec.rho_sep_tilde = sep_tilde;
  dec.rho_pure_tilde = pure_tilde;
  dec.pure_vector = tq::PureState(v);
  dec.Z1 = HermitianMatrix::zero(4);
  dec.Z2 = HermitianMatrix::zero(4);
  dec.Z3 = gb.P3 + gb.Gamma[7] * std::cos(theta) + gb.Gamma[8] * std::sin(theta);
  dec.a = std::cos(theta);
  dec.b = std::sin(theta);
  dec.theta = theta;
  dec.case_tag = CaseTag::Rank3ProductGammaAnalytic;
  dec.gamma = tq::PureState(gb.gamma);
  dec.gamma_q = 0.0;
  return dec;
}

namespace {

LsdDecomposition decompose_full_rank(const tq::DensityMatrix& rho, const sdp::SolverConfig& cfg,
                                     const DecomposeOptions& opts) {
  sdp::SdpProblem prob = encode_full_rank(rho);
  la::Spectrum sp = la::eig_hermitian(rho.matrix());
  const std::vector<double> x0 = basis_vector_hint(16, 2.0 * sp.values[0]);
  sdp::SdpSolution sol = run_solver(prob, cfg, x0, scaled_identity_dual(prob.layout));

  const auto& E = tq::pauli_basis().E;
  HermitianMatrix sep_tilde = HermitianMatrix::zero(4);
  for (int i = 0; i < 16; ++i) sep_tilde += E[i] * (0.25 * sol.x[i]);

  LsdDecomposition dec;
  dec.S = sol.x[0];
  dec.rho_sep_tilde = sep_tilde;
  dec.rho_pure_tilde = rho.matrix() - sep_tilde;
  dec.pure_vector = extract_pure_vector(dec.rho_pure_tilde);
  dec.Z1 = sol.Z.blocks[0];
  dec.Z2 = sol.Z.blocks[1];
  dec.Z3 = sol.Z.blocks[2];
  dec.case_tag = CaseTag::FullRank;
  dec.residuals = wk::build_report(rho, dec, &prob, &sol, nullptr, opts.witness_samples,
                                   opts.witness_seed);
  return dec;
}

struct Rank3Pieces {
  sdp::SdpProblem prob;
  sdp::SdpSolution sol;
  HermitianMatrix sep_tilde_c;  // canonical frame
  HermitianMatrix z1_c, z2_c, z3_c;
  std::optional<double> a, b;
  CaseTag tag = CaseTag::Rank3EntangledGamma;
};

Rank3Pieces solve_rank3_entangled(const tq::DensityMatrix& rho_c, const tq::CanonicalGamma& cg,
                                  const tq::GammaBasis& gb, const sdp::SolverConfig& cfg) {
  Rank3Pieces out;
  out.prob = encode_rank3_entangled(rho_c, cg, gb);
  const double lam2 = support_min_eigenvalue(rho_c.matrix(), 3);
  const std::vector<double> x0 = basis_vector_hint(9, 1.5 * lam2);
  out.sol = run_solver(out.prob, cfg, x0, scaled_identity_dual(out.prob.layout));

  out.sep_tilde_c = HermitianMatrix::zero(4);
  for (int i = 0; i < 9; ++i) out.sep_tilde_c += gb.Gamma[i] * (out.sol.x[i] / 3.0);
  out.z1_c = tq::embed_from_support(gb, out.sol.Z.blocks[0]);
  out.z2_c = out.sol.Z.blocks[1];
  out.z3_c = tq::embed_from_support(gb, out.sol.Z.blocks[2]);
  out.tag = CaseTag::Rank3EntangledGamma;
  return out;
}

Rank3Pieces solve_rank3_product(const tq::DensityMatrix& rho_c, const tq::GammaBasis& gb,
                                const sdp::SolverConfig& cfg) {
  Rank3Pieces out;
  out.prob = encode_rank3_product(rho_c, gb);
  const double lam2 = support_min_eigenvalue(rho_c.matrix(), 3);
  const std::vector<double> x0 = basis_vector_hint(7, 1.5 * lam2);
  out.sol = run_solver(out.prob, cfg, x0, scaled_identity_dual(out.prob.layout));

  out.sep_tilde_c = HermitianMatrix::zero(4);
  for (int i = 0; i < 7; ++i) out.sep_tilde_c += gb.Gamma[i] * (out.sol.x[i] / 3.0);
  out.z1_c = tq::embed_from_support(gb, out.sol.Z.blocks[0]);
  out.z2_c = tq::embed_from_support(gb, out.sol.Z.blocks[1]);
  out.z3_c = tq::embed_from_support(gb, out.sol.Z.blocks[2]);

  // The dual equality constraints fix only the Gamma_1..Gamma_7 components
  // of Z1 + Z2par^T1 - Z3 (= -P3 - a Gamma_8 - b Gamma_9); the free
  // Gamma_8 / Gamma_9 components define a and b via the trace pairing.
  HermitianMatrix z2_pt = HermitianMatrix(
      gb.P3.matrix() * tq::partial_transpose_1(out.z2_c).matrix() * gb.P3.matrix());
  HermitianMatrix d = out.z1_c + z2_pt - out.z3_c;
  out.a = -0.5 * la::frobenius_inner(gb.Gamma[7], d);
  out.b = -0.5 * la::frobenius_inner(gb.Gamma[8], d);
  out.tag = CaseTag::Rank3ProductGamma;
  return out;
}

LsdDecomposition decompose_rank3(const tq::DensityMatrix& rho, const sdp::SolverConfig& cfg,
                                 const DecomposeOptions& opts) {
  const tq::PureState gamma_in = tq::orthogonal_pure_state(rho);
  tq::CanonicalGamma cg = tq::canonicalize_gamma(gamma_in);
  const ComplexMatrix u_full = la::kron(cg.u_local, cg.v_local);
  const ComplexMatrix u_bar = la::kron(cg.u_local.conjugate(), cg.v_local);

  const tq::DensityMatrix rho_c(HermitianMatrix(u_full * rho.matrix() * u_full.adjoint()));

  const bool product_kernel = cg.q <= kProductGammaTol;
  if (product_kernel) {
    cg.q = 0.0;
    cg.p = 1.0;
  }
  const tq::GammaBasis gb = tq::gamma_basis(cg);

  if (product_kernel) {
    if (std::optional<LsdDecomposition> an = analytic_rank3_product(rho_c, gb)) {
      LsdDecomposition dec = std::move(*an);
      // Rotate the canonical-frame result back to the input frame.
      dec.rho_sep_tilde = rotate_frame(u_full, dec.rho_sep_tilde);
      dec.rho_pure_tilde = rho.matrix() - dec.rho_sep_tilde;
      dec.pure_vector = tq::PureState(rotate_vector(u_full, dec.pure_vector->amplitudes()));
      dec.Z3 = rotate_frame(u_full, dec.Z3);
      dec.gamma = gamma_in;
      dec.u_local = cg.u_local;
      dec.v_local = cg.v_local;
      dec.gamma_q = cg.q;
      dec.residuals = wk::build_report(rho, dec, nullptr, nullptr, &gb, opts.witness_samples,
                                       opts.witness_seed);
      return dec;
    }
  }

  Rank3Pieces pieces = product_kernel ? solve_rank3_product(rho_c, gb, cfg)
                                      : solve_rank3_entangled(rho_c, cg, gb, cfg);

  LsdDecomposition dec;
  dec.S = pieces.sol.x[0];
  dec.rho_sep_tilde = rotate_frame(u_full, pieces.sep_tilde_c);
  dec.rho_pure_tilde = rho.matrix() - dec.rho_sep_tilde;
  dec.pure_vector = extract_pure_vector(dec.rho_pure_tilde);
  dec.Z1 = rotate_frame(u_full, pieces.z1_c);
  dec.Z2 = rotate_frame(u_bar, pieces.z2_c);  // partial-transpose side
  dec.Z3 = rotate_frame(u_full, pieces.z3_c);
  dec.a = pieces.a;
  dec.b = pieces.b;
  dec.case_tag = pieces.tag;
  dec.gamma = gamma_in;
  dec.u_local = cg.u_local;
  dec.v_local = cg.v_local;
  dec.gamma_q = cg.q;
  dec.residuals = wk::build_report(rho, dec, &pieces.prob, &pieces.sol, &gb, opts.witness_samples,
                                   opts.witness_seed);
  return dec;
}

}  // namespace

LsdDecomposition decompose(const tq::DensityMatrix& rho, const sdp::SolverConfig& cfg,
                           const DecomposeOptions& opts) {
  // Separable inputs short-circuit before any SDP; for two qubits PPT is
  // exactly separability.
  if (tq::is_ppt(rho)) {
    LsdDecomposition dec;
    dec.S = 1.0;
    dec.rho_sep_tilde = rho.matrix();
    dec.rho_pure_tilde = HermitianMatrix::zero(4);
    dec.pure_vector = std::nullopt;
    dec.Z1 = HermitianMatrix::zero(4);
    dec.Z2 = HermitianMatrix::zero(4);
    dec.Z3 = HermitianMatrix::zero(4);
    dec.case_tag = CaseTag::Separable;
    dec.residuals =
        wk::build_report(rho, dec, nullptr, nullptr, nullptr, opts.witness_samples, opts.witness_seed);
    return dec;
  }

  switch (opts.force) {
    case CaseForce::FullRank:
      return decompose_full_rank(rho, cfg, opts);
    case CaseForce::Rank3:
      return decompose_rank3(rho, cfg, opts);
    case CaseForce::Auto:
      break;
  }
  const int rank = la::rank_eps(rho.matrix());
  if (rank == 4) return decompose_full_rank(rho, cfg, opts);
  if (rank == 3) return decompose_rank3(rho, cfg, opts);
  throw Error(ErrorCode::UnsupportedRank,
              "rank-" + std::to_string(rank) +
                  " entangled states are outside the supported dispatch set");
}

Witness extract_witness(const LsdDecomposition& dec) {
  if (dec.case_tag == CaseTag::Separable) {
    throw Error(ErrorCode::SeparableInput, "no witness exists for a separable decomposition");
  }
  Witness w;
  w.case_tag = dec.case_tag;
  if (dec.case_tag == CaseTag::FullRank) {
    w.W = dec.Z1 + tq::partial_transpose_1(dec.Z2);
    return w;
  }
  if (!dec.gamma) {
    throw Error(ErrorCode::InvalidParam, "rank-3 decomposition lacks its kernel vector");
  }
  const HermitianMatrix p3 =
      HermitianMatrix::identity(4) - dec.gamma->projector();
  HermitianMatrix z2_pt = HermitianMatrix(
      p3.matrix() * tq::partial_transpose_1(dec.Z2).matrix() * p3.matrix());
  w.W = dec.Z1 + z2_pt;
  if (dec.case_tag == CaseTag::Rank3ProductGamma ||
      dec.case_tag == CaseTag::Rank3ProductGammaAnalytic) {
    if (!dec.a || !dec.b) {
      throw Error(ErrorCode::InvalidParam, "product-gamma decomposition lacks a, b");
    }
    tq::CanonicalGamma cg;
    cg.q = 0.0;
    cg.p = 1.0;
    cg.u_local = dec.u_local;
    cg.v_local = dec.v_local;
    const tq::GammaBasis gb = tq::gamma_basis(cg);
    const ComplexMatrix u_full = la::kron(dec.u_local, dec.v_local);
    w.W += rotate_frame(u_full, gb.Gamma[7]) * (*dec.a);
    w.W += rotate_frame(u_full, gb.Gamma[8]) * (*dec.b);
  }
  return w;
}

double entanglement_measure(const LsdDecomposition& dec) {
  if (dec.case_tag == CaseTag::Separable || !dec.pure_vector) return 0.0;
  return (1.0 - dec.S) * tq::concurrence(*dec.pure_vector);
}

}  // namespace qsep::lsd
