#pragma once

#include <cmath>

#include "msense/types.hpp"

namespace msense {

inline constexpr double kDefaultRankTol = 1e-8;

template <typename Derived>
Vector<typename Derived::Scalar> singular_values(
    const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (m.size() == 0) return Vector<Scalar>();
  Eigen::JacobiSVD<Matrix<Scalar>> svd(m.derived().eval());
  return svd.singularValues();
}

/// Number of singular values above tol_rel times the largest one.
template <typename Derived>
int numerical_rank(const Eigen::MatrixBase<Derived>& m,
                   double tol_rel = kDefaultRankTol) {
  using Scalar = typename Derived::Scalar;
  detail::require(tol_rel > 0, "numerical_rank: tol_rel must be > 0");
  const Vector<Scalar> s = singular_values(m);
  if (s.size() == 0 || s(0) == Scalar(0)) return 0;
  const Scalar cutoff = static_cast<Scalar>(tol_rel) * s(0);
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cutoff) ++rank;
  return rank;
}

/// Smallest singular value above the relative cutoff; zero for a zero matrix.
template <typename Derived>
typename Derived::Scalar sigma_min_nonzero(const Eigen::MatrixBase<Derived>& m,
                                           double tol_rel = kDefaultRankTol) {
  using Scalar = typename Derived::Scalar;
  const Vector<Scalar> s = singular_values(m);
  if (s.size() == 0 || s(0) == Scalar(0)) return Scalar(0);
  const Scalar cutoff = static_cast<Scalar>(tol_rel) * s(0);
  Scalar out = s(0);
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cutoff) out = s(i);
  return out;
}

/// Smallest r whose best rank-r approximation of the PSD matrix X lies
/// within eps * ||X||_F in Frobenius norm.
template <typename Derived>
int effective_rank(const Eigen::MatrixBase<Derived>& x, double eps = kDefaultRankTol) {
  using Scalar = typename Derived::Scalar;
  detail::require(eps > 0, "effective_rank: eps must be > 0");
  detail::require_shape(x.rows() == x.cols(), "effective_rank: X must be square");
  const Matrix<Scalar> sym = (x + x.transpose()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(sym, Eigen::EigenvaluesOnly);
  const Vector<Scalar> lam = es.eigenvalues().reverse();  // descending
  const Scalar top = lam.size() ? lam.cwiseAbs().maxCoeff() : Scalar(0);
  if (top == Scalar(0)) return 0;
  if (lam(lam.size() - 1) < -Scalar(1e-10) * top)
    throw DomainError("effective_rank: matrix is not positive semidefinite");
  const Scalar budget = static_cast<Scalar>(eps) * sym.norm();
  // tail(r) = sqrt(sum_{i >= r} lambda_i^2), scanned from the bottom
  Scalar tail_sq = 0;
  int r = static_cast<int>(lam.size());
  while (r > 0) {
    const Scalar next = tail_sq + lam(r - 1) * lam(r - 1);
    if (std::sqrt(next) > budget) break;
    tail_sq = next;
    --r;
  }
  return r;
}

}  // namespace msense
