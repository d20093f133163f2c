#pragma once

#include <string>

#include <Eigen/Core>

#include "wavediff/denoiser.hpp"
#include "wavediff/rng.hpp"
#include "wavediff/schedule.hpp"

namespace wavediff {

/// Interpolation-ratio schedules for the conditional forward process.
///   ratio  — m_t = sqrt((1-abar_t) abar_T / ((1-abar_T) abar_t)); hits
///            m_0 = 0 and m_T = 1 exactly and keeps delta_t >= 0 whenever
///            abar_T <= 1/2.
///   linear — m_t = t/T; validated at construction, rejected when any
///            delta_t goes negative.
///   zero   — m identically 0; the conditional process collapses to the
///            unconditional one (test schedule, skips the m_T = 1 check).
enum class MScheduleKind { ratio, linear, zero };

std::string to_string(MScheduleKind kind);
MScheduleKind m_schedule_from_string(const std::string& name);

/// Base variance schedule plus the interpolation ratios m_t and forward
/// variances delta_t = (1 - abar_t) - m_t^2 abar_t, indexed 0..T with
/// m_0 = 0 and delta_0 = 0.
struct ConditionalSchedule {
  NoiseSchedule base;
  Eigen::VectorXd m;
  Eigen::VectorXd delta;

  double m_at(int t) const;
  double delta_at(int t) const;
  /// True for the degenerate all-zero m schedule; samplers then route
  /// through the unconditional code path so the reduction is bit-exact.
  bool zero_m() const { return zero_m_; }

  bool zero_m_ = false;
};

ConditionalSchedule interpolation_schedule(const NoiseSchedule& base,
                                           MScheduleKind kind);
/// Custom ratios, size T+1; validates m_0 = 0, m_T = 1, monotonicity and
/// delta positivity, naming the offending step on failure.
ConditionalSchedule interpolation_schedule(const NoiseSchedule& base,
                                           const Eigen::VectorXd& m);

/// Reverse-transition coefficients of p(y_{t-1} | y_t, y_n), derived from
/// the Gaussian conjugacy of the interpolated forward process:
///   mean = c_yt y_t + c_yn y_n - c_eps eps_hat,  variance delta_cond.
/// With m == 0 they reduce to the unconditional DDPM posterior (c_yn = 0).
struct ReverseCoefficients {
  double c_yt = 0.0;
  double c_yn = 0.0;
  double c_eps = 0.0;
  double delta_cond = 0.0;
};

/// Valid for 2 <= t <= T; the t = 1 step is the degenerate rule handled by
/// cond_reverse_step (emit the predicted y_0, no noise).
ReverseCoefficients reverse_coefficients(int t, const ConditionalSchedule& cs);

/// y_t = (1 - m_t) sqrt(abar_t) y0 + m_t sqrt(abar_t) yn + sqrt(delta_t) eps
Eigen::ArrayXXd cond_forward(const Eigen::ArrayXXd& y0,
                             const Eigen::ArrayXXd& yn, int t,
                             const Eigen::ArrayXXd& eps,
                             const ConditionalSchedule& cs);

/// Combined-noise regression target
///   (m_t sqrt(abar_t) (yn - y0) + sqrt(delta_t) eps) / sqrt(1 - abar_t).
Eigen::ArrayXXd cond_training_target(const Eigen::ArrayXXd& y0,
                                     const Eigen::ArrayXXd& yn, int t,
                                     const Eigen::ArrayXXd& eps,
                                     const ConditionalSchedule& cs);

Eigen::ArrayXXd cond_reverse_step(const Denoiser& d, const Eigen::ArrayXXd& y_t,
                                  const Eigen::ArrayXXd& yn, int t,
                                  const ConditionalSchedule& cs, Rng& rng);

/// Starts at N(sqrt(abar_T) yn, delta_T I) and iterates cond_reverse_step
/// down to t = 1; returns the y_0 estimate in the wavelet domain.
Eigen::ArrayXXd cond_sample(const Denoiser& d, const Eigen::ArrayXXd& yn,
                            const ConditionalSchedule& cs, Rng& rng);

}  // namespace wavediff
