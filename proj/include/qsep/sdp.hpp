#pragma once

// Generic primal-dual interior-point solver for canonical-form semidefinite
// programs over block-diagonal complex Hermitian matrices:
//
//   primal:  minimize c.x  subject to  F(x) = F0 + sum_i x_i F_i >= 0
//   dual:    maximize -tr{F0 Z}  subject to  tr{F_i Z} = c_i, Z >= 0
//
// The solver returns a certified primal-dual pair; optimality is re-checked
// from the returned data by dual_residuals, never trusted from the loop.

#include <optional>
#include <vector>

#include "qsep/linalg.hpp"

namespace qsep::sdp {

using la::CVector;
using la::HermitianMatrix;

// Dimensions of the diagonal blocks, e.g. [4,4,4] or [3,4,3].
struct BlockLayout {
  std::vector<int> block_dims;

  int count() const { return static_cast<int>(block_dims.size()); }
  int total() const;
};

// Block-diagonal Hermitian matrix: one HermitianMatrix per layout block.
struct BlockMatrix {
  std::vector<HermitianMatrix> blocks;

  static BlockMatrix zero(const BlockLayout& layout);
  static BlockMatrix identity(const BlockLayout& layout);

  int count() const { return static_cast<int>(blocks.size()); }

  BlockMatrix& operator+=(const BlockMatrix& o);
  BlockMatrix& operator-=(const BlockMatrix& o);
  BlockMatrix& operator*=(double s);
  friend BlockMatrix operator+(BlockMatrix a, const BlockMatrix& b) { return a += b; }
  friend BlockMatrix operator-(BlockMatrix a, const BlockMatrix& b) { return a -= b; }
  friend BlockMatrix operator*(BlockMatrix a, double s) { return a *= s; }

  double frobenius_norm() const;
  double min_eigenvalue() const;
  bool conforms(const BlockLayout& layout) const;
};

// Re tr{A B} summed over blocks.
double block_inner(const BlockMatrix& a, const BlockMatrix& b);

struct SdpProblem {
  BlockMatrix F0;
  std::vector<BlockMatrix> F;  // F_1 .. F_m
  std::vector<double> c;       // m entries
  BlockLayout layout;

  int m() const { return static_cast<int>(F.size()); }
  // F(x) = F0 + sum_i x_i F_i.
  BlockMatrix eval(const std::vector<double>& x) const;
  void validate() const;  // throws DimMismatch / InvalidParam on malformed data
};

enum class SdpStatus { Optimal, MaxIter, NumericalFailure };
const char* sdp_status_name(SdpStatus s);

struct SdpSolution {
  std::vector<double> x;
  BlockMatrix Z;
  double p_star = 0.0;  // c.x
  double d_star = 0.0;  // -tr{F0 Z}
  double gap = 0.0;     // tr{F(x) Z}
  int iterations = 0;
  SdpStatus status = SdpStatus::NumericalFailure;
  std::vector<double> gap_history;  // gap at the start of each iteration
};

struct SolverConfig {
  double tol_gap = 1e-9;
  double tol_feas = 1e-9;
  int max_iter = 200;
  double step_fraction = 0.98;
  std::optional<std::vector<double>> initial_x;
  std::optional<BlockMatrix> initial_Z;
};

// Path-following predictor-corrector solve. Starting points come from the
// config when provided (they must be strictly interior, else InfeasibleStart
// is thrown) and from feasible_start otherwise.
SdpSolution solve(const SdpProblem& prob, const SolverConfig& cfg = {});

// Independent certificate check for a candidate primal-dual pair.
struct DualResiduals {
  double primal_min_eig = 0.0;   // lambda_min of F(x) over blocks
  double dual_min_eig = 0.0;     // lambda_min of Z over blocks
  double eq_residual_max = 0.0;  // max_i |tr{F_i Z} - c_i|
  double gap = 0.0;              // tr{F(x) Z}
  double slackness_norm = 0.0;   // ||F(x) Z||_F over blocks
};
DualResiduals dual_residuals(const SdpProblem& prob, const std::vector<double>& x,
                             const BlockMatrix& z);

// Strictly interior starting points. Hints are used when they are already
// interior; otherwise the primal point is pushed into the cone by eigenvector
// ascent and the dual point is built from a least-squares solution of the
// equality constraints shifted along the identity component orthogonal to
// them, until all minimum eigenvalues reach 1e-3. Throws CannotCenter after
// 50 unsuccessful shifts.
std::pair<std::vector<double>, BlockMatrix> feasible_start(
    const SdpProblem& prob, const std::optional<std::vector<double>>& hint_x = std::nullopt,
    const std::optional<BlockMatrix>& hint_z = std::nullopt);

}  // namespace qsep::sdp
