#pragma once

#include <algorithm>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "msense/dynamics.hpp"
#include "msense/procrustes.hpp"
#include "msense/rank.hpp"
#include "msense/sensing.hpp"

namespace msense {

/// Matrix of the derivative Delta -> A(Delta U^T) of g at U: row i is the
/// column-major flattening of A_i U.
template <typename Scalar>
Matrix<Scalar> jacobian_matrix(const SensingOperator<Scalar>& op,
                               const Matrix<Scalar>& u) {
  detail::require_shape(u.rows() == op.d(), "jacobian: U must have d rows");
  const Eigen::Index n = u.size();
  Matrix<Scalar> jac(op.m(), n);
  for (int i = 0; i < op.m(); ++i) {
    const Matrix<Scalar> au = op.mats()[static_cast<std::size_t>(i)] * u;
    jac.row(i) = au.reshaped().transpose();
  }
  return jac;
}

/// Descending singular values of the derivative of g at U, padded with zeros
/// to length m when m exceeds d * p.
template <typename Scalar>
Vector<Scalar> jacobian_sigmas(const SensingOperator<Scalar>& op,
                               const Matrix<Scalar>& u) {
  const Matrix<Scalar> jac = jacobian_matrix(op, u);
  Eigen::BDCSVD<Matrix<Scalar>> svd(jac);
  Vector<Scalar> out = Vector<Scalar>::Zero(op.m());
  const Vector<Scalar>& s = svd.singularValues();
  out.head(std::min<Eigen::Index>(s.size(), op.m())) =
      s.head(std::min<Eigen::Index>(s.size(), op.m()));
  return out;
}

/// Pointwise gradient-dominance check:
/// ||grad G(U)||_F^2 >= sigma_m(Dg(U))^2 ||g(U)||^2.
template <typename Scalar>
BoundCheck<Scalar> pl_slack(const SensingOperator<Scalar>& op,
                            const Vector<Scalar>& b, const Matrix<Scalar>& u) {
  const Vector<Scalar> sig = jacobian_sigmas(op, u);
  const Scalar sigma_m = sig(op.m() - 1);
  BoundCheck<Scalar> out;
  out.lhs = grad_G(op, b, u).squaredNorm();
  out.rhs = sigma_m * sigma_m * residuals(op, b, u).g.squaredNorm();
  return out;
}

/// Sampled estimate of the isometry constant
/// alpha = min ||A(X)||_2 over unit-Frobenius PSD X of rank <= r.
///
/// Sample j draws a Gaussian d x r factor V_j from its own substream and
/// scores X = V V^T / ||V V^T||_F for every leading-column block V_j[:, :q],
/// q = 1..r, so the sampled sets are nested in r. The result is an upper
/// bound on alpha, never a certificate.
template <typename Scalar>
Scalar rip_alpha_estimate(const SensingOperator<Scalar>& op, int r, int n_samples,
                          Seed seed) {
  const int d = op.d();
  detail::require(r >= 1 && r <= d, "rip_alpha_estimate: r must satisfy 1 <= r <= d");
  detail::require(n_samples >= 1, "rip_alpha_estimate: n_samples must be >= 1");
  Scalar best = std::numeric_limits<Scalar>::infinity();
  for (int j = 0; j < n_samples; ++j) {
    CounterRng rng(seed, "rip", static_cast<std::uint64_t>(j));
    const Matrix<Scalar> v = gaussian_matrix<Scalar>(rng, d, r);
    Matrix<Scalar> x = Matrix<Scalar>::Zero(d, d);
    for (int q = 0; q < r; ++q) {
      x.noalias() += v.col(q) * v.col(q).transpose();
      const Scalar nrm = x.norm();
      if (nrm == Scalar(0)) continue;
      best = std::min(best, apply(op, x / nrm).norm());
    }
  }
  return best;
}

/// A supplied point is not feasible to the required tolerance.
class FeasibilityError : public ParameterError {
 public:
  FeasibilityError(std::size_t index, double rel_residual)
      : ParameterError("rho0_estimate: point " + std::to_string(index) +
                       " is not feasible (relative residual " +
                       std::to_string(rel_residual) + ")"),
        index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

inline constexpr double kFeasibleRelResidual = 1e-6;

template <typename Scalar>
struct Rho0Estimate {
  Scalar rho0{};
  Scalar sigma_m_min{};
  Scalar op_norm{};
  std::size_t samples = 0;
};

/// rho0 = min_i sigma_m(Dg(U_i)) / (2 ||A||) over the supplied feasible
/// points. A sampled estimate of the manifold-wide quantity.
template <typename Scalar>
Rho0Estimate<Scalar> rho0_estimate(const SensingOperator<Scalar>& op,
                                   const Vector<Scalar>& b,
                                   const std::vector<Matrix<Scalar>>& feasible_points,
                                   int norm_iters = 200) {
  detail::require(!feasible_points.empty(), "rho0_estimate: need at least one point");
  const Scalar b_norm = b.norm();
  Rho0Estimate<Scalar> out;
  out.sigma_m_min = std::numeric_limits<Scalar>::infinity();
  for (std::size_t i = 0; i < feasible_points.size(); ++i) {
    const auto& u = feasible_points[i];
    const Scalar resid = std::sqrt(residuals(op, b, u).f);
    if (resid > static_cast<Scalar>(kFeasibleRelResidual) * b_norm)
      throw FeasibilityError(i, static_cast<double>(resid / b_norm));
    out.sigma_m_min = std::min(out.sigma_m_min, jacobian_sigmas(op, u)(op.m() - 1));
  }
  out.op_norm = operator_norm(op, norm_iters);
  out.rho0 = out.sigma_m_min / (Scalar(2) * out.op_norm);
  out.samples = feasible_points.size();
  return out;
}

inline constexpr double kProxyFeasibleRelTrain = 1e-20;

/// Upper bound on the distance from U to the zero-training-error set: run
/// gradient descent from U and, if it reaches a feasible endpoint, return
/// ||U - U_end||_F. Returns nullopt when no certificate is obtained.
template <typename Scalar>
std::optional<Scalar> dist_to_manifold_proxy(const SensingOperator<Scalar>& op,
                                             const Vector<Scalar>& b,
                                             const Matrix<Scalar>& u, Scalar eta,
                                             long max_iters) {
  const Scalar target =
      static_cast<Scalar>(kProxyFeasibleRelTrain) * std::max(Scalar(1), b.squaredNorm());
  if (residuals(op, b, u).f <= target) return Scalar(0);
  const Matrix<Scalar> zero = Matrix<Scalar>::Zero(op.d(), op.d());
  try {
    const auto traj = run_gd(op, b, zero, u, eta, max_iters, max_iters);
    if (traj.last().train_f > target) return std::nullopt;
    return (u - traj.final_U).norm();
  } catch (const NumericalOverflow<Scalar>&) {
    return std::nullopt;
  }
}

}  // namespace msense
