#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace lp {

/// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of the stream for (seed, trial, index). Streams are derived by
/// hashing, never by advancing a shared generator, so results do not depend
/// on the order in which trials are scheduled.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t trial, std::uint64_t index);

/// Small counter-based generator usable with <random> distributions.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  SplitMix64(std::uint64_t seed, std::uint64_t trial, std::uint64_t index)
      : state_(stream_seed(seed, trial, index)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() {
    const auto out = mix64(state_);
    state_ += 0x9e3779b97f4a7c15ULL;
    return out;
  }

 private:
  std::uint64_t state_;
};

inline double uniform01(SplitMix64& g) { return std::uniform_real_distribution<double>(0.0, 1.0)(g); }

inline Eigen::VectorXd gaussian_vector(SplitMix64& g, Eigen::Index n, double sigma = 1.0) {
  std::normal_distribution<double> normal(0.0, sigma);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(g);
  return v;
}

inline Eigen::MatrixXd gaussian_matrix(SplitMix64& g, Eigen::Index rows, Eigen::Index cols, double sigma = 1.0) {
  Eigen::MatrixXd m = gaussian_vector(g, rows * cols, sigma).reshaped(rows, cols);
  return m;
}

/// Uniform point on the unit sphere S^{n-1}.
inline Eigen::VectorXd uniform_sphere(SplitMix64& g, Eigen::Index n) {
  Eigen::VectorXd v;
  do v = gaussian_vector(g, n);
  while (v.norm() < 1e-300);
  return v / v.norm();
}

/// Uniform point in the ball of radius r in R^n.
inline Eigen::VectorXd uniform_ball(SplitMix64& g, Eigen::Index n, double r) {
  const double radius = r * std::pow(uniform01(g), 1.0 / static_cast<double>(n));
  return radius * uniform_sphere(g, n);
}

}  // namespace lp
