#pragma once

#include <algorithm>
#include <cmath>

#include "msense/rank.hpp"
#include "msense/types.hpp"

namespace msense {

template <typename Scalar>
struct ProcrustesResult {
  Scalar distance{};
  Matrix<Scalar> rotation;  // R minimizing ||U - V R||_F over O(p)
};

/// min_{R in O(p)} ||U - V R||_F via sqrt(||U||^2 + ||V||^2 - 2 ||U^T V||_*).
///
/// When the closed form is dominated by cancellation (distance tiny compared
/// to the norms) the value is taken from ||U - V R*||_F instead, with R* the
/// polar factor of V^T U; both expressions are equal in exact arithmetic.
template <typename DerivedU, typename DerivedV>
ProcrustesResult<typename DerivedU::Scalar> procrustes_align(
    const Eigen::MatrixBase<DerivedU>& u, const Eigen::MatrixBase<DerivedV>& v) {
  using Scalar = typename DerivedU::Scalar;
  detail::require_shape(u.rows() == v.rows() && u.cols() == v.cols(),
                        "procrustes: U and V must have the same shape");
  const Matrix<Scalar> cross = v.transpose() * u;  // p x p
  Eigen::JacobiSVD<Matrix<Scalar>> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  ProcrustesResult<Scalar> out;
  out.rotation = svd.matrixU() * svd.matrixV().transpose();
  const Scalar nuclear = svd.singularValues().sum();
  const Scalar total = u.squaredNorm() + v.squaredNorm();
  const Scalar closed_sq = total - Scalar(2) * nuclear;
  if (closed_sq > Scalar(1e-6) * total) {
    out.distance = std::sqrt(closed_sq);
  } else {
    out.distance = (u - v * out.rotation).norm();
  }
  return out;
}

template <typename DerivedU, typename DerivedV>
typename DerivedU::Scalar procrustes_dist(const Eigen::MatrixBase<DerivedU>& u,
                                          const Eigen::MatrixBase<DerivedV>& v) {
  return procrustes_align(u, v).distance;
}

template <typename Scalar>
struct BoundCheck {
  Scalar lhs{};
  Scalar rhs{};
  Scalar slack() const { return lhs - rhs; }
  /// lhs >= rhs up to rel_tol * (1 + lhs).
  bool holds(double rel_tol) const {
    return lhs >= rhs - static_cast<Scalar>(rel_tol) * (Scalar(1) + lhs);
  }
};

/// ||U U^T - V V^T||_F against max(sigma_min(U), sigma_min(V)) * dist(U, V O_p),
/// sigma_min being the smallest nonzero singular value.
template <typename DerivedU, typename DerivedV>
BoundCheck<typename DerivedU::Scalar> procrustes_bound_check(
    const Eigen::MatrixBase<DerivedU>& u, const Eigen::MatrixBase<DerivedV>& v) {
  using Scalar = typename DerivedU::Scalar;
  detail::require_shape(u.rows() == v.rows() && u.cols() == v.cols(),
                        "procrustes_bound_check: U and V must have the same shape");
  BoundCheck<Scalar> out;
  out.lhs = (u * u.transpose() - v * v.transpose()).norm();
  out.rhs = std::max(sigma_min_nonzero(u), sigma_min_nonzero(v)) * procrustes_dist(u, v);
  return out;
}

}  // namespace msense
