#pragma once

#include "msense/sensing.hpp"

namespace msense {

/// Residual quantities of the factored least-squares objective at U.
template <typename Scalar>
struct Residuals {
  Vector<Scalar> raw;  // A(U U^T) - b
  Vector<Scalar> g;    // raw / 2
  Scalar f{};          // ||raw||^2, the training error
  Scalar G{};          // f / 8
};

namespace detail {

template <typename Scalar, typename Derived>
void check_factor(const SensingOperator<Scalar>& op, const Vector<Scalar>& b,
                  const Eigen::MatrixBase<Derived>& u, const char* where) {
  require_shape(u.rows() == op.d(), std::string(where) + ": U must have d rows");
  require_shape(b.size() == op.m(), std::string(where) + ": b must have length m");
}

}  // namespace detail

template <typename Scalar, typename Derived>
Residuals<Scalar> residuals(const SensingOperator<Scalar>& op,
                            const Vector<Scalar>& b,
                            const Eigen::MatrixBase<Derived>& u) {
  detail::check_factor(op, b, u, "residuals");
  Residuals<Scalar> out;
  out.raw = apply(op, u * u.transpose()) - b;
  out.g = out.raw / Scalar(2);
  out.f = out.raw.squaredNorm();
  out.G = out.f / Scalar(8);
  return out;
}

/// Gradient of ||A(U U^T) - b||^2 given precomputed residuals: 4 A^*(r) U.
template <typename Scalar, typename Derived>
Matrix<Scalar> grad_raw(const SensingOperator<Scalar>& op,
                        const Residuals<Scalar>& res,
                        const Eigen::MatrixBase<Derived>& u) {
  return Scalar(4) * (adjoint(op, res.raw) * u);
}

template <typename Scalar, typename Derived>
Matrix<Scalar> grad_raw(const SensingOperator<Scalar>& op,
                        const Vector<Scalar>& b,
                        const Eigen::MatrixBase<Derived>& u) {
  return grad_raw(op, residuals(op, b, u), u);
}

/// Gradient of G = f / 8, i.e. (1/2) A^*(A(U U^T) - b) U.
template <typename Scalar, typename Derived>
Matrix<Scalar> grad_G(const SensingOperator<Scalar>& op,
                      const Vector<Scalar>& b,
                      const Eigen::MatrixBase<Derived>& u) {
  return grad_raw(op, b, u) / Scalar(8);
}

/// ||U U^T - X||_F^2.
template <typename Derived, typename DerivedX>
typename Derived::Scalar test_error(const Eigen::MatrixBase<Derived>& u,
                  const Eigen::MatrixBase<DerivedX>& x_star) {
  detail::require_shape(x_star.rows() == u.rows() && x_star.cols() == u.rows(),
                        "test_error: X must be d x d with d = rows(U)");
  return (u * u.transpose() - x_star).squaredNorm();
}

}  // namespace msense
