#pragma once

#include <Eigen/Core>

namespace wavediff {

/// Variance schedule of the forward process. Steps are 1-based: beta_at(t)
/// for t in 1..T, and alpha_bar_at(0) == 1 by convention.
struct NoiseSchedule {
  int T = 0;
  Eigen::VectorXd beta;       // size T, entry t-1 holds beta_t
  Eigen::VectorXd alpha;      // 1 - beta_t
  Eigen::VectorXd alpha_bar;  // running product of alpha

  double beta_at(int t) const;
  double alpha_at(int t) const;
  double alpha_bar_at(int t) const;  // accepts t = 0

  /// Posterior variance beta~_t = (1 - abar_{t-1}) / (1 - abar_t) * beta_t,
  /// with beta~_1 = beta_1.
  double posterior_variance(int t) const;
};

/// beta_t linearly interpolated from beta_start to beta_end inclusive.
NoiseSchedule linear_schedule(int T, double beta_start, double beta_end);

}  // namespace wavediff
