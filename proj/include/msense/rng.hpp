#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

#include "msense/types.hpp"

namespace msense {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Key of the substream identified by (seed, purpose tag, index).
constexpr Seed substream_key(Seed seed, std::string_view tag,
                             std::uint64_t index = 0) {
  // FNV-1a over the tag
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  std::uint64_t k = mix64(seed ^ 0x6a09e667f3bcc909ULL);
  k = mix64(k ^ h);
  k = mix64(k ^ (index * 0x9e3779b97f4a7c15ULL + 0x3c6ef372fe94f82bULL));
  return k;
}

/// Counter-based generator: the n-th output is mix64(key + n * gamma), so a
/// stream is fully determined by its key and position. Gaussian variates use
/// Box-Muller on 53-bit uniforms, which keeps draws identical across standard
/// library implementations.
class CounterRng {
 public:
  explicit CounterRng(Seed key) : key_(key) {}
  CounterRng(Seed seed, std::string_view tag, std::uint64_t index = 0)
      : key_(substream_key(seed, tag, index)) {}

  std::uint64_t next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * kGamma);
  }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  Seed key() const { return key_; }
  std::uint64_t position() const { return counter_; }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  Seed key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// rows x cols matrix of i.i.d. N(0,1) entries, filled column-major, so the
/// leading columns of a wider draw coincide with a narrower draw.
template <typename Scalar>
Matrix<Scalar> gaussian_matrix(CounterRng& rng, Eigen::Index rows,
                               Eigen::Index cols) {
  Matrix<Scalar> out(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i)
      out(i, j) = static_cast<Scalar>(rng.gaussian());
  return out;
}

/// Haar-distributed element of the orthogonal group O(n) (determinant +-1).
template <typename Scalar>
Matrix<Scalar> random_orthogonal(CounterRng& rng, Eigen::Index n) {
  const Matrix<Scalar> g = gaussian_matrix<Scalar>(rng, n, n);
  Eigen::HouseholderQR<Matrix<Scalar>> qr(g);
  Matrix<Scalar> q = qr.householderQ() * Matrix<Scalar>::Identity(n, n);
  const Matrix<Scalar> r = qr.matrixQR().template triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j)
    if (r(j, j) < Scalar(0)) q.col(j) = -q.col(j);
  return q;
}

/// Haar-distributed rotation in SO(n).
template <typename Scalar>
Matrix<Scalar> random_rotation(CounterRng& rng, Eigen::Index n) {
  Matrix<Scalar> q = random_orthogonal<Scalar>(rng, n);
  if (q.determinant() < Scalar(0)) q.col(0) = -q.col(0);
  return q;
}

}  // namespace msense
