#include "wavediff/conditional.hpp"

#include <cmath>
#include <stdexcept>

#include "wavediff/diffusion.hpp"

namespace wavediff {

namespace {

void check_same_shape(const Eigen::ArrayXXd& a, const Eigen::ArrayXXd& b,
                      const char* where) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(where) + ": shape mismatch");
}

}  // namespace

std::string to_string(MScheduleKind kind) {
  switch (kind) {
    case MScheduleKind::ratio: return "ratio";
    case MScheduleKind::linear: return "linear";
    case MScheduleKind::zero: return "zero";
  }
  throw std::logic_error("to_string: bad MScheduleKind");
}

MScheduleKind m_schedule_from_string(const std::string& name) {
  if (name == "ratio") return MScheduleKind::ratio;
  if (name == "linear") return MScheduleKind::linear;
  if (name == "zero") return MScheduleKind::zero;
  throw std::invalid_argument("unknown m-schedule '" + name +
                              "' (valid: ratio, linear, zero)");
}

double ConditionalSchedule::m_at(int t) const {
  if (t < 0 || t > base.T)
    throw std::out_of_range("m_at: step outside 0..T");
  return m[t];
}

double ConditionalSchedule::delta_at(int t) const {
  if (t < 0 || t > base.T)
    throw std::out_of_range("delta_at: step outside 0..T");
  return delta[t];
}

namespace {

ConditionalSchedule build_schedule(const NoiseSchedule& base,
                                   Eigen::VectorXd m, bool zero_variant) {
  const int T = base.T;
  if (m.size() != T + 1)
    throw std::invalid_argument("interpolation schedule: m must have T+1 entries");
  if (m[0] != 0.0)
    throw std::invalid_argument("interpolation schedule: m_0 must be 0");
  for (int t = 1; t <= T; ++t) {
    if (m[t] < m[t - 1])
      throw std::invalid_argument(
          "interpolation schedule: m not monotone at t=" + std::to_string(t));
  }
  if (!zero_variant && std::abs(m[T] - 1.0) > 1e-12)
    throw std::invalid_argument("interpolation schedule: m_T must equal 1");

  ConditionalSchedule cs;
  cs.base = base;
  cs.m = std::move(m);
  cs.delta.resize(T + 1);
  cs.delta[0] = 0.0;
  for (int t = 1; t <= T; ++t) {
    const double abar = base.alpha_bar_at(t);
    const double d = (1.0 - abar) - cs.m[t] * cs.m[t] * abar;
    if (!(d > 0.0))
      throw std::invalid_argument(
          "interpolation schedule: negative delta at t=" + std::to_string(t));
    cs.delta[t] = d;
  }
  cs.zero_m_ = zero_variant;
  return cs;
}

}  // namespace

ConditionalSchedule interpolation_schedule(const NoiseSchedule& base,
                                           MScheduleKind kind) {
  const int T = base.T;
  Eigen::VectorXd m(T + 1);
  switch (kind) {
    case MScheduleKind::ratio: {
      const double abar_T = base.alpha_bar_at(T);
      const double gamma_T = std::sqrt((1.0 - abar_T) / abar_T);
      m[0] = 0.0;
      for (int t = 1; t <= T; ++t) {
        const double abar = base.alpha_bar_at(t);
        m[t] = std::sqrt((1.0 - abar) / abar) / gamma_T;
      }
      break;
    }
    case MScheduleKind::linear:
      for (int t = 0; t <= T; ++t) m[t] = double(t) / double(T);
      break;
    case MScheduleKind::zero:
      m.setZero();
      break;
  }
  return build_schedule(base, std::move(m), kind == MScheduleKind::zero);
}

ConditionalSchedule interpolation_schedule(const NoiseSchedule& base,
                                           const Eigen::VectorXd& m) {
  const bool all_zero = (m.array() == 0.0).all();
  return build_schedule(base, m, all_zero);
}

ReverseCoefficients reverse_coefficients(int t, const ConditionalSchedule& cs) {
  if (t < 2 || t > cs.base.T)
    throw std::out_of_range("reverse_coefficients: t outside 2..T");
  const double alpha = cs.base.alpha_at(t);
  const double sqrt_alpha = std::sqrt(alpha);
  const double abar_t = cs.base.alpha_bar_at(t);
  const double abar_p = cs.base.alpha_bar_at(t - 1);
  const double m_t = cs.m_at(t);
  const double m_p = cs.m_at(t - 1);
  const double d_t = cs.delta_at(t);
  const double d_p = cs.delta_at(t - 1);

  // Transition y_t = A y_{t-1} + B y_n + N(0, d_step), the unique Gaussian
  // step consistent with the interpolated marginals.
  const double a_step = (1.0 - m_t) / (1.0 - m_p) * sqrt_alpha;
  const double b_step = std::sqrt(abar_t) * (m_t - m_p) / (1.0 - m_p);
  const double d_step = d_t - a_step * a_step * d_p;

  ReverseCoefficients rc;
  rc.c_yt = (a_step * d_p + d_step * (1.0 - m_p) / sqrt_alpha) / d_t;
  rc.c_yn = (-a_step * d_p * b_step + d_step * m_p * std::sqrt(abar_p)) / d_t;
  rc.c_eps = d_step * (1.0 - m_p) * std::sqrt(1.0 - abar_t) / (d_t * sqrt_alpha);
  rc.delta_cond = d_p * d_step / d_t;
  return rc;
}

Eigen::ArrayXXd cond_forward(const Eigen::ArrayXXd& y0,
                             const Eigen::ArrayXXd& yn, int t,
                             const Eigen::ArrayXXd& eps,
                             const ConditionalSchedule& cs) {
  check_same_shape(y0, yn, "cond_forward");
  check_same_shape(y0, eps, "cond_forward");
  const double sqrt_abar = std::sqrt(cs.base.alpha_bar_at(t));
  const double m = cs.m_at(t);
  return ((1.0 - m) * sqrt_abar) * y0 + (m * sqrt_abar) * yn +
         std::sqrt(cs.delta_at(t)) * eps;
}

Eigen::ArrayXXd cond_training_target(const Eigen::ArrayXXd& y0,
                                     const Eigen::ArrayXXd& yn, int t,
                                     const Eigen::ArrayXXd& eps,
                                     const ConditionalSchedule& cs) {
  check_same_shape(y0, yn, "cond_training_target");
  check_same_shape(y0, eps, "cond_training_target");
  const double abar = cs.base.alpha_bar_at(t);
  const double sqrt_rest = std::sqrt(1.0 - abar);
  const double coef_signal = cs.m_at(t) * std::sqrt(abar) / sqrt_rest;
  const double coef_eps = std::sqrt(cs.delta_at(t)) / sqrt_rest;
  return coef_signal * (yn - y0) + coef_eps * eps;
}

Eigen::ArrayXXd cond_reverse_step(const Denoiser& d, const Eigen::ArrayXXd& y_t,
                                  const Eigen::ArrayXXd& yn, int t,
                                  const ConditionalSchedule& cs, Rng& rng) {
  check_same_shape(y_t, yn, "cond_reverse_step");
  if (t < 1 || t > cs.base.T)
    throw std::out_of_range("cond_reverse_step: t outside 1..T");

  const Eigen::ArrayXXd eps_hat = d.predict(y_t, t, &yn);
  check_same_shape(eps_hat, y_t, "cond_reverse_step");

  if (cs.zero_m())  // collapses to the unconditional chain, bit for bit
    return ddpm_reverse_from_eps(y_t, eps_hat, t, cs.base, rng);

  if (t == 1) {
    const double abar1 = cs.base.alpha_bar_at(1);
    return (y_t - std::sqrt(1.0 - abar1) * eps_hat) / std::sqrt(abar1);
  }

  const ReverseCoefficients rc = reverse_coefficients(t, cs);
  Eigen::ArrayXXd out = rc.c_yt * y_t + rc.c_yn * yn - rc.c_eps * eps_hat;
  out += std::sqrt(rc.delta_cond) * rng.normal_matrix(y_t.rows(), y_t.cols());
  return out;
}

Eigen::ArrayXXd cond_sample(const Denoiser& d, const Eigen::ArrayXXd& yn,
                            const ConditionalSchedule& cs, Rng& rng) {
  const int T = cs.base.T;
  Eigen::ArrayXXd y;
  if (cs.zero_m()) {
    y = rng.normal_matrix(yn.rows(), yn.cols());
  } else {
    y = std::sqrt(cs.base.alpha_bar_at(T)) * yn +
        std::sqrt(cs.delta_at(T)) * rng.normal_matrix(yn.rows(), yn.cols());
  }
  for (int t = T; t >= 1; --t) y = cond_reverse_step(d, y, yn, t, cs, rng);
  return y;
}

}  // namespace wavediff
