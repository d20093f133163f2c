#include "wavediff/diffusion.hpp"

#include <cmath>
#include <stdexcept>

namespace wavediff {

namespace {

void check_same_shape(const Eigen::ArrayXXd& a, const Eigen::ArrayXXd& b,
                      const char* where) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(where) + ": shape mismatch");
}

}  // namespace

Eigen::ArrayXXd forward_marginal(const Eigen::ArrayXXd& y0, int t,
                                 const Eigen::ArrayXXd& eps,
                                 const NoiseSchedule& s) {
  check_same_shape(y0, eps, "forward_marginal");
  const double abar = s.alpha_bar_at(t);
  return std::sqrt(abar) * y0 + std::sqrt(1.0 - abar) * eps;
}

Eigen::ArrayXXd forward_step(const Eigen::ArrayXXd& y_prev, int t,
                             const NoiseSchedule& s, Rng& rng) {
  const double beta = s.beta_at(t);
  return std::sqrt(1.0 - beta) * y_prev +
         std::sqrt(beta) * rng.normal_matrix(y_prev.rows(), y_prev.cols());
}

double training_loss(const Denoiser& d, const Eigen::ArrayXXd& y0, int t,
                     const Eigen::ArrayXXd& eps, const NoiseSchedule& s) {
  const Eigen::ArrayXXd y_t = forward_marginal(y0, t, eps, s);
  const Eigen::ArrayXXd pred = d.predict(y_t, t);
  check_same_shape(pred, eps, "training_loss");
  return (eps - pred).square().mean();
}

Eigen::ArrayXXd ddpm_reverse_from_eps(const Eigen::ArrayXXd& y_t,
                                      const Eigen::ArrayXXd& eps_hat, int t,
                                      const NoiseSchedule& s, Rng& rng) {
  check_same_shape(y_t, eps_hat, "reverse_step");
  const double abar = s.alpha_bar_at(t);
  Eigen::ArrayXXd out =
      (y_t - (s.beta_at(t) / std::sqrt(1.0 - abar)) * eps_hat) /
      std::sqrt(s.alpha_at(t));
  if (t > 1) {
    out += std::sqrt(s.posterior_variance(t)) *
           rng.normal_matrix(y_t.rows(), y_t.cols());
  }
  return out;
}

Eigen::ArrayXXd reverse_step(const Denoiser& d, const Eigen::ArrayXXd& y_t,
                             int t, const NoiseSchedule& s, Rng& rng) {
  return ddpm_reverse_from_eps(y_t, d.predict(y_t, t), t, s, rng);
}

Eigen::ArrayXXd sample(const Denoiser& d, Eigen::Index channels,
                       Eigen::Index frames, const NoiseSchedule& s, Rng& rng) {
  if (channels < 1 || frames < 1)
    throw std::invalid_argument("sample: bad shape");
  Eigen::ArrayXXd y = rng.normal_matrix(channels, frames);
  for (int t = s.T; t >= 1; --t) y = reverse_step(d, y, t, s, rng);
  return y;
}

}  // namespace wavediff
