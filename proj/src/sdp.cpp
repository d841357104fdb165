#include "qsep/sdp.hpp"

#include <algorithm>
#include <cmath>

namespace qsep::sdp {

using la::ComplexMatrix;
using la::cxd;

int BlockLayout::total() const {
  int t = 0;
  for (int d : block_dims) t += d;
  return t;
}

BlockMatrix BlockMatrix::zero(const BlockLayout& layout) {
  BlockMatrix b;
  b.blocks.reserve(layout.block_dims.size());
  for (int d : layout.block_dims) b.blocks.push_back(HermitianMatrix::zero(d));
  return b;
}

BlockMatrix BlockMatrix::identity(const BlockLayout& layout) {
  BlockMatrix b;
  b.blocks.reserve(layout.block_dims.size());
  for (int d : layout.block_dims) b.blocks.push_back(HermitianMatrix::identity(d));
  return b;
}

BlockMatrix& BlockMatrix::operator+=(const BlockMatrix& o) {
  if (count() != o.count()) throw Error(ErrorCode::DimMismatch, "block count mismatch");
  for (int b = 0; b < count(); ++b) blocks[b] += o.blocks[b];
  return *this;
}

BlockMatrix& BlockMatrix::operator-=(const BlockMatrix& o) {
  if (count() != o.count()) throw Error(ErrorCode::DimMismatch, "block count mismatch");
  for (int b = 0; b < count(); ++b) blocks[b] -= o.blocks[b];
  return *this;
}

BlockMatrix& BlockMatrix::operator*=(double s) {
  for (auto& blk : blocks) blk *= s;
  return *this;
}

double BlockMatrix::frobenius_norm() const {
  double s = 0.0;
  for (const auto& blk : blocks) {
    const double n = blk.frobenius_norm();
    s += n * n;
  }
  return std::sqrt(s);
}

double BlockMatrix::min_eigenvalue() const {
  double lmin = 0.0;
  bool first = true;
  for (const auto& blk : blocks) {
    if (blk.dim() == 0) continue;
    const la::Spectrum sp = la::eig_hermitian(blk);
    if (first || sp.values[0] < lmin) {
      lmin = sp.values[0];
      first = false;
    }
  }
  return lmin;
}

bool BlockMatrix::conforms(const BlockLayout& layout) const {
  if (count() != layout.count()) return false;
  for (int b = 0; b < count(); ++b)
    if (blocks[b].dim() != layout.block_dims[b]) return false;
  return true;
}

double block_inner(const BlockMatrix& a, const BlockMatrix& b) {
  if (a.count() != b.count()) throw Error(ErrorCode::DimMismatch, "block count mismatch");
  double s = 0.0;
  for (int k = 0; k < a.count(); ++k) s += la::frobenius_inner(a.blocks[k], b.blocks[k]);
  return s;
}

BlockMatrix SdpProblem::eval(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != m())
    throw Error(ErrorCode::DimMismatch, "x has wrong length");
  BlockMatrix s = F0;
  for (int i = 0; i < m(); ++i) {
    if (x[i] == 0.0) continue;
    for (int b = 0; b < s.count(); ++b) s.blocks[b] += F[i].blocks[b] * x[i];
  }
  return s;
}

void SdpProblem::validate() const {
  if (m() < 1) throw Error(ErrorCode::InvalidParam, "problem needs at least one variable");
  if (static_cast<int>(c.size()) != m())
    throw Error(ErrorCode::DimMismatch, "c length differs from F count");
  if (!F0.conforms(layout)) throw Error(ErrorCode::DimMismatch, "F0 does not match layout");
  for (const auto& fi : F)
    if (!fi.conforms(layout)) throw Error(ErrorCode::DimMismatch, "F_i does not match layout");
  for (double ci : c)
    if (!std::isfinite(ci)) throw Error(ErrorCode::InvalidMatrix, "non-finite c entry");
}

const char* sdp_status_name(SdpStatus s) {
  switch (s) {
    case SdpStatus::Optimal: return "Optimal";
    case SdpStatus::MaxIter: return "MaxIter";
    case SdpStatus::NumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

namespace {

CVector lower_solve_vec(const ComplexMatrix& l, const CVector& b) {
  const int n = l.dim();
  CVector x = b;
  for (int i = 0; i < n; ++i) {
    cxd s = x[i];
    for (int k = 0; k < i; ++k) s -= l(i, k) * x[k];
    x[i] = s / l(i, i);
  }
  return x;
}

CVector lower_adjoint_solve_vec(const ComplexMatrix& l, const CVector& b) {
  const int n = l.dim();
  CVector x = b;
  for (int i = n - 1; i >= 0; --i) {
    cxd s = x[i];
    for (int k = i + 1; k < n; ++k) s -= std::conj(l(k, i)) * x[k];
    x[i] = s / l(i, i);
  }
  return x;
}

// Cholesky factors of every block; empty optional when a block is not PD.
std::optional<std::vector<ComplexMatrix>> block_cholesky(const BlockMatrix& a) {
  std::vector<ComplexMatrix> ls;
  ls.reserve(a.blocks.size());
  for (const auto& blk : a.blocks) {
    la::Cholesky ch = la::cholesky(blk);
    if (!ch.ok) return std::nullopt;
    ls.push_back(ch.lower);
  }
  return ls;
}

// Largest step alpha with A + alpha*dA staying PSD, given A = L L^dag:
// alpha = -1/lambda_min(L^-1 dA L^-dag) when that eigenvalue is negative.
double max_step(const std::vector<ComplexMatrix>& ls, const BlockMatrix& da) {
  double a = 1e30;
  for (size_t b = 0; b < ls.size(); ++b) {
    const ComplexMatrix& l = ls[b];
    const ComplexMatrix y = la::lower_solve(l, da.blocks[b].matrix());
    const ComplexMatrix w = la::lower_solve(l, y.adjoint()).adjoint();
    const la::Spectrum sp = la::eig_hermitian(HermitianMatrix(w));
    if (sp.n > 0 && sp.values[0] < -1e-14) a = std::min(a, -1.0 / sp.values[0]);
  }
  return a;
}

// Solve the (real symmetric, PD up to rounding) Newton normal system
// M dx = h with regularization retries.
std::optional<std::vector<double>> solve_newton_system(HermitianMatrix m,
                                                       const std::vector<double>& h) {
  const int n = m.dim();
  for (int attempt = 0; attempt <= 3; ++attempt) {
    la::Cholesky ch = la::cholesky(m);
    if (ch.ok) {
      CVector b(n);
      for (int i = 0; i < n; ++i) b[i] = h[i];
      const CVector y = lower_solve_vec(ch.lower, b);
      const CVector x = lower_adjoint_solve_vec(ch.lower, y);
      std::vector<double> out(n);
      for (int i = 0; i < n; ++i) out[i] = x[i].real();
      return out;
    }
    m += HermitianMatrix::identity(n) * 1e-12;
  }
  return std::nullopt;
}

}  // namespace

DualResiduals dual_residuals(const SdpProblem& prob, const std::vector<double>& x,
                             const BlockMatrix& z) {
  prob.validate();
  if (static_cast<int>(x.size()) != prob.m())
    throw Error(ErrorCode::DimMismatch, "x has wrong length");
  if (!z.conforms(prob.layout)) throw Error(ErrorCode::DimMismatch, "Z does not match layout");

  DualResiduals r;
  const BlockMatrix s = prob.eval(x);
  r.primal_min_eig = s.min_eigenvalue();
  r.dual_min_eig = z.min_eigenvalue();
  r.eq_residual_max = 0.0;
  for (int i = 0; i < prob.m(); ++i)
    r.eq_residual_max = std::max(r.eq_residual_max,
                                 std::abs(block_inner(prob.F[i], z) - prob.c[i]));
  r.gap = block_inner(s, z);
  double sl = 0.0;
  for (int b = 0; b < s.count(); ++b) {
    const double n = (s.blocks[b].matrix() * z.blocks[b].matrix()).frobenius_norm();
    sl += n * n;
  }
  r.slackness_norm = std::sqrt(sl);
  return r;
}

std::pair<std::vector<double>, BlockMatrix> feasible_start(
    const SdpProblem& prob, const std::optional<std::vector<double>>& hint_x,
    const std::optional<BlockMatrix>& hint_z) {
  prob.validate();
  const int m = prob.m();
  const int nb = prob.layout.count();

  // ----- primal point -----
  std::vector<double> x(m, 0.0);
  if (hint_x) {
    if (static_cast<int>(hint_x->size()) != m)
      throw Error(ErrorCode::DimMismatch, "hint_x has wrong length");
    x = *hint_x;
  }
  for (int shift = 0;; ++shift) {
    const BlockMatrix s = prob.eval(x);
    std::vector<la::Spectrum> spectra(nb);
    double lmin = 0.0;
    bool first = true;
    for (int b = 0; b < nb; ++b) {
      spectra[b] = la::eig_hermitian(s.blocks[b]);
      if (spectra[b].n > 0 && (first || spectra[b].values[0] < lmin)) {
        lmin = spectra[b].values[0];
        first = false;
      }
    }
    if (lmin >= 1e-3) break;
    if (hint_x && shift == 0 && lmin > 0.0) break;  // interior hint accepted as-is
    if (shift >= 50)
      throw Error(ErrorCode::CannotCenter, "no strictly feasible primal point found");
    // Ascent direction aggregated over every deficient eigenpair (covers
    // degenerate bottom eigenspaces, e.g. zero blocks): y_i = sum <v|F_i|v>.
    std::vector<double> y(m, 0.0);
    for (int b = 0; b < nb; ++b)
      for (int k = 0; k < spectra[b].n; ++k) {
        if (spectra[b].values[k] >= 1e-3) break;
        const CVector vk = spectra[b].vector(k);
        for (int i = 0; i < m; ++i)
          y[i] += la::inner(vk, la::matvec(prob.F[i].blocks[b].matrix(), vk)).real();
      }
    double ynorm2 = 0.0;
    for (int i = 0; i < m; ++i) ynorm2 += y[i] * y[i];
    if (ynorm2 <= 1e-18)
      throw Error(ErrorCode::CannotCenter, "bottom eigenvalue immovable by the variables");
    double t = (2e-3 - lmin) / ynorm2;
    // Backtrack until the global bottom eigenvalue improves.
    bool accepted = false;
    for (int bt = 0; bt < 30 && !accepted; ++bt) {
      std::vector<double> xt = x;
      for (int i = 0; i < m; ++i) xt[i] += t * y[i];
      if (prob.eval(xt).min_eigenvalue() > lmin) {
        x = xt;
        accepted = true;
      } else {
        t *= 0.5;
      }
    }
    if (!accepted)
      throw Error(ErrorCode::CannotCenter, "primal ascent stalled");
  }

  // ----- dual point -----
  if (hint_z) {
    if (!hint_z->conforms(prob.layout))
      throw Error(ErrorCode::DimMismatch, "hint_Z does not match layout");
    if (hint_z->min_eigenvalue() > 0.0) return {x, *hint_z};
  }
  // Least-squares combination Z_ls = sum_j w_j F_j with tr{F_i Z_ls} = c_i,
  // via the Gram system G w = c solved spectrally with a rank cutoff.
  ComplexMatrix gram(m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j) {
      const double gij = block_inner(prob.F[i], prob.F[j]);
      gram(i, j) = gij;
      gram(j, i) = gij;
    }
  const HermitianMatrix gh(gram);
  const la::Spectrum gsp = la::eig_hermitian(gh);
  const double cut = 1e-12 * std::max(1.0, gh.frobenius_norm());
  auto gram_solve = [&](const std::vector<double>& rhs) {
    CVector b(m);
    for (int i = 0; i < m; ++i) b[i] = rhs[i];
    CVector w(m);
    for (int k = 0; k < m; ++k) {
      if (std::abs(gsp.values[k]) <= cut) continue;
      const CVector vk = gsp.vector(k);
      const cxd coef = la::inner(vk, b) / gsp.values[k];
      for (int i = 0; i < m; ++i) w[i] += coef * vk[i];
    }
    std::vector<double> out(m);
    for (int i = 0; i < m; ++i) out[i] = w[i].real();
    return out;
  };
  const std::vector<double> w = gram_solve(prob.c);
  BlockMatrix z_ls = BlockMatrix::zero(prob.layout);
  for (int j = 0; j < m; ++j)
    for (int b = 0; b < nb; ++b) z_ls.blocks[b] += prob.F[j].blocks[b] * w[j];
  // Consistency of the equalities: c must lie in the range of the Gram map.
  for (int i = 0; i < m; ++i)
    if (std::abs(block_inner(prob.F[i], z_ls) - prob.c[i]) > 1e-8 * std::max(1.0, std::abs(prob.c[i])))
      throw Error(ErrorCode::CannotCenter, "dual equalities inconsistent with the F span");

  // Shift direction: component of the identity orthogonal to span{F_i}
  // (adding it preserves every equality).
  std::vector<double> gi(m);
  const BlockMatrix ident = BlockMatrix::identity(prob.layout);
  for (int i = 0; i < m; ++i) gi[i] = block_inner(prob.F[i], ident);
  const std::vector<double> u = gram_solve(gi);
  BlockMatrix nshift = ident;
  for (int j = 0; j < m; ++j)
    for (int b = 0; b < nb; ++b) nshift.blocks[b] -= prob.F[j].blocks[b] * u[j];

  if (z_ls.min_eigenvalue() >= 1e-3) return {x, z_ls};
  if (nshift.frobenius_norm() <= 1e-10)
    throw Error(ErrorCode::CannotCenter, "identity lies in the F span; cannot shift dual point");
  double t = 1.0;
  for (int shift = 0; shift < 50; ++shift) {
    BlockMatrix zt = z_ls;
    for (int b = 0; b < nb; ++b) zt.blocks[b] += nshift.blocks[b] * t;
    if (zt.min_eigenvalue() >= 1e-3) return {x, zt};
    t *= 2.0;
  }
  throw Error(ErrorCode::CannotCenter, "no strictly feasible dual point found");
}

SdpSolution solve(const SdpProblem& prob, const SolverConfig& cfg) {
  prob.validate();
  if (!(cfg.tol_gap > 0.0) || !(cfg.tol_feas > 0.0))
    throw Error(ErrorCode::InvalidParam, "tolerances must be positive");
  if (!(cfg.step_fraction > 0.0) || !(cfg.step_fraction < 1.0))
    throw Error(ErrorCode::InvalidParam, "step_fraction must lie in (0,1)");
  if (cfg.max_iter < 1) throw Error(ErrorCode::InvalidParam, "max_iter must be positive");

  const int m = prob.m();
  const int nb = prob.layout.count();
  const int n_tot = prob.layout.total();

  // Starting point.
  std::vector<double> x;
  BlockMatrix z;
  {
    if (cfg.initial_x) {
      if (static_cast<int>(cfg.initial_x->size()) != m)
        throw Error(ErrorCode::DimMismatch, "initial_x has wrong length");
      if (prob.eval(*cfg.initial_x).min_eigenvalue() <= 0.0)
        throw Error(ErrorCode::InfeasibleStart, "initial_x is not strictly primal feasible");
      x = *cfg.initial_x;
    }
    if (cfg.initial_Z) {
      if (!cfg.initial_Z->conforms(prob.layout))
        throw Error(ErrorCode::DimMismatch, "initial_Z does not match layout");
      if (cfg.initial_Z->min_eigenvalue() <= 0.0)
        throw Error(ErrorCode::InfeasibleStart, "initial_Z is not strictly in the cone");
      z = *cfg.initial_Z;
    }
    if (!cfg.initial_x || !cfg.initial_Z) {
      auto [fx, fz] = feasible_start(prob, cfg.initial_x, cfg.initial_Z);
      if (!cfg.initial_x) x = fx;
      if (!cfg.initial_Z) z = fz;
    }
  }

  SdpSolution sol;
  sol.status = SdpStatus::MaxIter;
  sol.iterations = cfg.max_iter;

  const double center_window = 100.0 * std::max(cfg.tol_gap, 1e-12);

  for (int it = 0; it < cfg.max_iter; ++it) {
    const BlockMatrix s = prob.eval(x);
    const auto ls = block_cholesky(s);
    const auto lz = block_cholesky(z);
    if (!ls || !lz) {
      sol.status = SdpStatus::NumericalFailure;
      sol.iterations = it;
      break;
    }

    const double gap = block_inner(s, z);
    sol.gap_history.push_back(gap);
    // Weak duality: tr{F(x) Z} = c.x + tr{F0 Z} must stay nonnegative for
    // cone-feasible iterates; a violation signals numerical breakdown.
    if (gap < -1e-12 || !std::isfinite(gap)) {
      sol.status = SdpStatus::NumericalFailure;
      sol.iterations = it;
      break;
    }

    double rmax = 0.0;
    std::vector<double> tr_fi_z(m);
    for (int i = 0; i < m; ++i) {
      tr_fi_z[i] = block_inner(prob.F[i], z);
      rmax = std::max(rmax, std::abs(prob.c[i] - tr_fi_z[i]));
    }

    const double mu = gap / n_tot;
    double offc2 = 0.0;
    for (int b = 0; b < nb; ++b) {
      ComplexMatrix sz = s.blocks[b].matrix() * z.blocks[b].matrix();
      for (int d = 0; d < sz.dim(); ++d) sz(d, d) -= mu;
      const double n = sz.frobenius_norm();
      offc2 += n * n;
    }
    const double offc = std::sqrt(offc2);

    if (gap <= cfg.tol_gap && rmax <= cfg.tol_feas &&
        offc <= 0.5 * mu * std::sqrt(static_cast<double>(n_tot))) {
      sol.status = SdpStatus::Optimal;
      sol.iterations = it;
      break;
    }

    // Block inverses of S from the Cholesky factors.
    std::vector<HermitianMatrix> sinv(nb);
    for (int b = 0; b < nb; ++b) {
      const int d = prob.layout.block_dims[b];
      const ComplexMatrix inv =
          la::lower_adjoint_solve((*ls)[b], la::lower_solve((*ls)[b], ComplexMatrix::identity(d)));
      sinv[b] = HermitianMatrix(inv);
    }

    // Normal matrix M[i][j] = sum_b Re tr{F_i S^-1 F_j Z}.
    std::vector<std::vector<ComplexMatrix>> t(m, std::vector<ComplexMatrix>(nb));
    for (int j = 0; j < m; ++j)
      for (int b = 0; b < nb; ++b)
        t[j][b] = sinv[b].matrix() * prob.F[j].blocks[b].matrix() * z.blocks[b].matrix();
    ComplexMatrix mm(m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        double v = 0.0;
        for (int b = 0; b < nb; ++b)
          v += (prob.F[i].blocks[b].matrix() * t[j][b]).trace().real();
        mm(i, j) = v;
      }
    const HermitianMatrix msym(mm);  // symmetrizes (M + M^T)/2

    std::vector<double> tr_fi_sinv(m);
    for (int i = 0; i < m; ++i) {
      double v = 0.0;
      for (int b = 0; b < nb; ++b) v += la::frobenius_inner(prob.F[i].blocks[b], sinv[b]);
      tr_fi_sinv[i] = v;
    }

    // Newton direction for target nu: M dx = h, h_i = nu tr{F_i S^-1} - c_i;
    // dZ = sym(nu S^-1 - Z - S^-1 dS Z).
    auto newton = [&](double nu) -> std::optional<std::tuple<std::vector<double>, BlockMatrix, BlockMatrix>> {
      std::vector<double> h(m);
      for (int i = 0; i < m; ++i) h[i] = nu * tr_fi_sinv[i] - prob.c[i];
      const auto dx = solve_newton_system(msym, h);
      if (!dx) return std::nullopt;
      BlockMatrix ds = BlockMatrix::zero(prob.layout);
      for (int i = 0; i < m; ++i)
        for (int b = 0; b < nb; ++b) ds.blocks[b] += prob.F[i].blocks[b] * (*dx)[i];
      BlockMatrix dz = BlockMatrix::zero(prob.layout);
      for (int b = 0; b < nb; ++b) {
        ComplexMatrix raw = sinv[b].matrix() * cxd(nu, 0.0);
        raw -= z.blocks[b].matrix();
        raw -= sinv[b].matrix() * ds.blocks[b].matrix() * z.blocks[b].matrix();
        dz.blocks[b] = HermitianMatrix(raw);  // symmetrizes
      }
      return std::make_tuple(*dx, ds, dz);
    };

    // Predictor (affine) step fixes the centering parameter.
    const auto aff = newton(0.0);
    if (!aff) {
      sol.status = SdpStatus::NumericalFailure;
      sol.iterations = it;
      break;
    }
    const auto& [dx_a, ds_a, dz_a] = *aff;
    const double ap_a = std::min(1.0, cfg.step_fraction * max_step(*ls, ds_a));
    const double ad_a = std::min(1.0, cfg.step_fraction * max_step(*lz, dz_a));
    BlockMatrix s_aff = s, z_aff = z;
    for (int b = 0; b < nb; ++b) {
      s_aff.blocks[b] += ds_a.blocks[b] * ap_a;
      z_aff.blocks[b] += dz_a.blocks[b] * ad_a;
    }
    const double gap_aff = std::max(0.0, block_inner(s_aff, z_aff));
    double sigma = gap > 0.0 ? std::pow(gap_aff / gap, 3.0) : 0.0;
    sigma = std::clamp(sigma, 0.0, 1.0);
    // Endgame centering: once the gap is nearly closed, bias toward the
    // central path so the final iterate has small ||SZ|| (tight slackness).
    if (gap <= center_window) sigma = std::max(sigma, 0.5);

    const auto cor = newton(sigma * mu);
    if (!cor) {
      sol.status = SdpStatus::NumericalFailure;
      sol.iterations = it;
      break;
    }
    const auto& [dx, ds, dz] = *cor;
    const double ap = std::min(1.0, cfg.step_fraction * max_step(*ls, ds));
    const double ad = std::min(1.0, cfg.step_fraction * max_step(*lz, dz));
    for (int i = 0; i < m; ++i) x[i] += ap * dx[i];
    for (int b = 0; b < nb; ++b) z.blocks[b] += dz.blocks[b] * ad;
  }

  sol.x = x;
  sol.Z = z;
  sol.p_star = 0.0;
  for (int i = 0; i < m; ++i) sol.p_star += prob.c[i] * x[i];
  sol.d_star = -block_inner(prob.F0, z);
  sol.gap = block_inner(prob.eval(x), z);
  return sol;
}

}  // namespace qsep::sdp
