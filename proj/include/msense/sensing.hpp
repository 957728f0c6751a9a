#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "msense/rng.hpp"
#include "msense/types.hpp"

namespace msense {

/// Linear map X -> [<A_1, X>, ..., <A_m, X>] with symmetric A_i.
///
/// Besides the explicit matrices the operator keeps a packed m x d(d+1)/2
/// copy of their upper triangles so that the forward and adjoint maps are a
/// single matrix-vector product each.
template <typename Scalar>
class SensingOperator {
 public:
  SensingOperator(int d, Seed seed, std::vector<Matrix<Scalar>> mats)
      : d_(d), seed_(seed), mats_(std::move(mats)) {
    detail::require(d_ >= 1, "SensingOperator: d must be >= 1");
    detail::require(!mats_.empty(), "SensingOperator: m must be >= 1");
    const Eigen::Index n_packed = packed_size();
    packed_.resize(static_cast<Eigen::Index>(mats_.size()), n_packed);
    for (std::size_t i = 0; i < mats_.size(); ++i) {
      const auto& a = mats_[i];
      detail::require_shape(a.rows() == d_ && a.cols() == d_,
                            "SensingOperator: A_i must be d x d");
      detail::require(a == a.transpose(), "SensingOperator: A_i not symmetric");
      Eigen::Index col = 0;
      for (int c = 0; c < d_; ++c)
        for (int r = 0; r <= c; ++r) packed_(static_cast<Eigen::Index>(i), col++) = a(r, c);
    }
  }

  int d() const { return d_; }
  int m() const { return static_cast<int>(mats_.size()); }
  Seed seed() const { return seed_; }
  const std::vector<Matrix<Scalar>>& mats() const { return mats_; }
  const Matrix<Scalar>& packed() const { return packed_; }
  Eigen::Index packed_size() const {
    return static_cast<Eigen::Index>(d_) * (d_ + 1) / 2;
  }

 private:
  int d_;
  Seed seed_;
  std::vector<Matrix<Scalar>> mats_;
  Matrix<Scalar> packed_;
};

/// Ground truth of a sensing problem.
template <typename Scalar>
struct PlantedInstance {
  Matrix<Scalar> x_star;
  int rank_planted = 0;
  Scalar xi = Scalar(1);
  Vector<Scalar> b;
  Seed seed = 0;
};

/// Default spectral bound: a trace-one PSD matrix of rank >= 2 has spectral
/// norm strictly below one.
template <typename Scalar>
constexpr Scalar default_xi() {
  return Scalar(1) + Scalar(1e-6);
}

/// X = V V^T / trace(V V^T) with V a d x r standard Gaussian matrix.
template <typename Scalar = double>
Matrix<Scalar> gen_planted(int d, int r, Seed seed) {
  detail::require(d >= 1, "gen_planted: d must be >= 1");
  detail::require(r >= 1 && r <= d, "gen_planted: rank must satisfy 1 <= r <= d");
  CounterRng rng(seed, "planted");
  const Matrix<Scalar> v = gaussian_matrix<Scalar>(rng, d, r);
  Matrix<Scalar> x = v * v.transpose();
  // exact symmetry
  x = (x + x.transpose()).eval() / Scalar(2);
  return x / x.trace();
}

/// m symmetric matrices with i.i.d. N(0,1) entries on and above the diagonal.
template <typename Scalar = double>
SensingOperator<Scalar> gen_operator(int d, int m, Seed seed) {
  detail::require(d >= 1, "gen_operator: d must be >= 1");
  detail::require(m >= 1, "gen_operator: m must be >= 1");
  CounterRng rng(seed, "operator");
  std::vector<Matrix<Scalar>> mats;
  mats.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    Matrix<Scalar> a(d, d);
    for (int c = 0; c < d; ++c)
      for (int r = 0; r <= c; ++r) {
        const auto v = static_cast<Scalar>(rng.gaussian());
        a(r, c) = v;
        a(c, r) = v;
      }
    mats.push_back(std::move(a));
  }
  return SensingOperator<Scalar>(d, seed, std::move(mats));
}

/// Entry i is the Frobenius inner product <A_i, X>. X need not be symmetric.
template <typename Scalar, typename Derived>
Vector<Scalar> apply(const SensingOperator<Scalar>& op,
                     const Eigen::MatrixBase<Derived>& x) {
  const int d = op.d();
  detail::require_shape(x.rows() == d && x.cols() == d,
                        "apply: X must be d x d");
  const Matrix<Scalar> xm = x;  // product expressions would be re-evaluated per coefficient
  Vector<Scalar> packed_x(op.packed_size());
  Eigen::Index col = 0;
  for (int c = 0; c < d; ++c) {
    for (int r = 0; r < c; ++r) packed_x(col++) = xm(r, c) + xm(c, r);
    packed_x(col++) = xm(c, c);
  }
  return op.packed() * packed_x;
}

/// A^*(y) = sum_i y_i A_i.
template <typename Scalar, typename Derived>
Matrix<Scalar> adjoint(const SensingOperator<Scalar>& op,
                       const Eigen::MatrixBase<Derived>& y) {
  detail::require_shape(y.size() == op.m(), "adjoint: y must have length m");
  const Vector<Scalar> z = op.packed().transpose() * y;
  const int d = op.d();
  Matrix<Scalar> out(d, d);
  Eigen::Index col = 0;
  for (int c = 0; c < d; ++c)
    for (int r = 0; r <= c; ++r) {
      out(r, c) = z(col);
      out(c, r) = z(col);
      ++col;
    }
  return out;
}

/// Power-iteration estimate of max ||A(X)||_2 over ||X||_F = 1, run on
/// X <- A^*(A(X)) / ||.||. The start matrix (all-ones plus identity) depends
/// only on d. Each iterate gives a lower bound; the sequence is nondecreasing.
template <typename Scalar>
Scalar operator_norm(const SensingOperator<Scalar>& op, int iters) {
  detail::require(iters >= 1, "operator_norm: iters must be >= 1");
  const int d = op.d();
  Matrix<Scalar> x = Matrix<Scalar>::Ones(d, d) + Matrix<Scalar>::Identity(d, d);
  x /= x.norm();
  Scalar estimate = apply(op, x).norm();
  for (int it = 1; it < iters; ++it) {
    Matrix<Scalar> next = adjoint(op, apply(op, x));
    const Scalar nrm = next.norm();
    if (nrm == Scalar(0)) break;
    x = next / nrm;
    estimate = std::max(estimate, apply(op, x).norm());
  }
  return estimate;
}

/// Builds the planted model, its training data and the sensing operator.
template <typename Scalar = double>
struct SensingProblem {
  SensingOperator<Scalar> op;
  PlantedInstance<Scalar> instance;
};

template <typename Scalar = double>
SensingProblem<Scalar> make_problem(int d, int r, int m, Seed seed) {
  auto op = gen_operator<Scalar>(d, m, seed);
  PlantedInstance<Scalar> inst;
  inst.x_star = gen_planted<Scalar>(d, r, seed);
  inst.rank_planted = r;
  inst.xi = default_xi<Scalar>();
  inst.b = apply(op, inst.x_star);
  inst.seed = seed;
  return {std::move(op), std::move(inst)};
}

}  // namespace msense
