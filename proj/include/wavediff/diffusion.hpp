#pragma once

#include <Eigen/Core>

#include "wavediff/denoiser.hpp"
#include "wavediff/rng.hpp"
#include "wavediff/schedule.hpp"

namespace wavediff {

/// Closed-form forward marginal sqrt(abar_t) y0 + sqrt(1 - abar_t) eps.
Eigen::ArrayXXd forward_marginal(const Eigen::ArrayXXd& y0, int t,
                                 const Eigen::ArrayXXd& eps,
                                 const NoiseSchedule& s);

/// One Markov step: draw from N(sqrt(1 - beta_t) y_prev, beta_t I).
Eigen::ArrayXXd forward_step(const Eigen::ArrayXXd& y_prev, int t,
                             const NoiseSchedule& s, Rng& rng);

/// Mean squared eps-prediction error over all matrix entries.
double training_loss(const Denoiser& d, const Eigen::ArrayXXd& y0, int t,
                     const Eigen::ArrayXXd& eps, const NoiseSchedule& s);

/// Ancestral reverse transition given an already-computed noise prediction:
/// mean (y_t - beta_t/sqrt(1-abar_t) eps_hat) / sqrt(alpha_t), plus posterior
/// noise for t > 1 and none at t = 1. Shared with the conditional sampler's
/// m == 0 path so the reduction is bit-exact.
Eigen::ArrayXXd ddpm_reverse_from_eps(const Eigen::ArrayXXd& y_t,
                                      const Eigen::ArrayXXd& eps_hat, int t,
                                      const NoiseSchedule& s, Rng& rng);

Eigen::ArrayXXd reverse_step(const Denoiser& d, const Eigen::ArrayXXd& y_t,
                             int t, const NoiseSchedule& s, Rng& rng);

/// Full reverse chain from a standard normal draw; returns the y_0 estimate
/// (wavelet synthesis is the pipeline's job).
Eigen::ArrayXXd sample(const Denoiser& d, Eigen::Index channels,
                       Eigen::Index frames, const NoiseSchedule& s, Rng& rng);

}  // namespace wavediff
