#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace wavediff {

/// Seeded random source used by every stochastic operation in the library.
///
/// std::mt19937_64 is fully specified by the standard, but the distribution
/// adapters are not, so Gaussians are produced by an explicit Box-Muller
/// transform. Identical seeds therefore give identical streams regardless of
/// the standard library in use.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1), 53 bits of entropy.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Unbiased uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  /// Standard normal draw.
  double normal();

  Eigen::ArrayXd normal_vector(Eigen::Index n);

  /// Matrix of standard normal draws, filled in column-major storage order.
  Eigen::ArrayXXd normal_matrix(Eigen::Index rows, Eigen::Index cols);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace wavediff
