#include "wavediff/schedule.hpp"

#include <stdexcept>
#include <string>

namespace wavediff {

namespace {

void check_step(int t, int T) {
  if (t < 1 || t > T)
    throw std::out_of_range("schedule step " + std::to_string(t) +
                            " outside 1.." + std::to_string(T));
}

}  // namespace

double NoiseSchedule::beta_at(int t) const {
  check_step(t, T);
  return beta[t - 1];
}

double NoiseSchedule::alpha_at(int t) const {
  check_step(t, T);
  return alpha[t - 1];
}

double NoiseSchedule::alpha_bar_at(int t) const {
  if (t == 0) return 1.0;
  check_step(t, T);
  return alpha_bar[t - 1];
}

double NoiseSchedule::posterior_variance(int t) const {
  check_step(t, T);
  if (t == 1) return beta[0];
  return (1.0 - alpha_bar_at(t - 1)) / (1.0 - alpha_bar_at(t)) * beta_at(t);
}

NoiseSchedule linear_schedule(int T, double beta_start, double beta_end) {
  if (T < 1) throw std::invalid_argument("linear_schedule: T must be >= 1");
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
    throw std::invalid_argument(
        "linear_schedule: need 0 < beta_start <= beta_end < 1");

  NoiseSchedule s;
  s.T = T;
  s.beta.resize(T);
  if (T == 1) {
    s.beta[0] = beta_start;
  } else {
    for (int i = 0; i < T; ++i)
      s.beta[i] = beta_start + (beta_end - beta_start) * i / (T - 1);
  }
  s.alpha = Eigen::VectorXd::Ones(T) - s.beta;
  s.alpha_bar.resize(T);
  double prod = 1.0;
  for (int i = 0; i < T; ++i) {
    prod *= s.alpha[i];
    s.alpha_bar[i] = prod;
  }
  return s;
}

}  // namespace wavediff
