#pragma once

// Certification record for a Lewenstein-Sanpera decomposition. Every field
// is a residual or recovered scalar computed by the verifier; NaN marks a
// quantity that is not applicable to the case at hand (e.g. the witness
// fields of a separable input, or mu_hat when tr{Z2} vanishes).

#include <cmath>
#include <limits>

namespace qsep::wk {

struct WkReport {
  static constexpr double kAbsent = std::numeric_limits<double>::quiet_NaN();

  // Decomposition validity.
  double sum_residual = kAbsent;     // ||rho_sep~ + rho_pure~ - rho||_F
  double sep_min_eig = kAbsent;      // lambda_min(rho_sep~)
  double sep_pt_min_eig = kAbsent;   // lambda_min(rho_sep~^T1)
  double pure_min_eig = kAbsent;     // lambda_min(rho_pure~)
  double pure_second_eig = kAbsent;  // second-largest eigenvalue of rho_pure~

  // Case-appropriate Wellens-Kus equations, complementary slackness and the
  // Z3 dual identity.
  double wk1_residual = kAbsent;
  double wk2_residual = kAbsent;
  double z3_identity_residual = kAbsent;
  double slackness_residual = kAbsent;

  // Entanglement-witness behaviour of the extracted dual witness.
  double witness_min_over_samples = kAbsent;  // min tr{W sigma} over product states
  double tr_w_rho = kAbsent;                  // tr{W rho}, should equal S - 1
  double witness_plus_id_min_eig = kAbsent;   // lambda_min(W + I)

  // Recovered normalization scalars.
  double mu_hat = kAbsent;     // tr{Z1}/tr{Z2}; NaN when tr{Z2} ~ 0
  double alpha_hat = kAbsent;  // |<pure|(Z1 + Z2par^T1)|pure>|

  int n_samples = 0;
  bool passed = false;
};

inline bool wk_field_absent(double v) { return std::isnan(v); }

}  // namespace qsep::wk
