#pragma once

#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "wavediff/rng.hpp"
#include "wavediff/schedule.hpp"

namespace wavediff {

struct ConditionalSchedule;
class MultiLevelEnhancer;

/// Noise predictor consumed by both samplers. Implementations must be
/// shape-preserving and deterministic given (y, t, cond, parameters).
class Denoiser {
 public:
  virtual ~Denoiser() = default;

  /// Predicts the noise in y at step t. cond, when non-null, is a
  /// conditioning matrix of the same frame count (channel-concatenated by
  /// implementations that use it).
  virtual Eigen::ArrayXXd predict(const Eigen::ArrayXXd& y, int t,
                                  const Eigen::ArrayXXd* cond = nullptr)
      const = 0;
};

/// Closed-form optimal predictor for diagonal-Gaussian data:
///   E[eps | y_t] = sqrt(1-abar_t) * (y_t - sqrt(abar_t) mu)
///                  / (abar_t * var + (1-abar_t))
/// Exact verification reference for the samplers.
class GaussianOracleDenoiser : public Denoiser {
 public:
  GaussianOracleDenoiser(Eigen::ArrayXXd mean, Eigen::ArrayXXd var_diag,
                         const NoiseSchedule& schedule)
      : mean_(std::move(mean)),
        var_diag_(std::move(var_diag)),
        schedule_(&schedule) {}

  Eigen::ArrayXXd predict(const Eigen::ArrayXXd& y, int t,
                          const Eigen::ArrayXXd* cond = nullptr) const override;

  const Eigen::ArrayXXd& mean() const { return mean_; }
  const Eigen::ArrayXXd& var_diag() const { return var_diag_; }

 private:
  Eigen::ArrayXXd mean_;
  Eigen::ArrayXXd var_diag_;
  const NoiseSchedule* schedule_;
};

/// Architecture of the trainable network: a 1x1 input convolution into
/// `hidden` channels, `blocks` residual blocks of circular dilated
/// convolutions (kernel `kernel`, dilation dilation_base^i) with an additive
/// sinusoidal timestep embedding projected per block, and a 1x1 output
/// convolution back to `out_channels`.
struct DenoiserArch {
  int in_channels = 2;
  int cond_channels = 0;  // 0 = unconditional; otherwise concatenated input
  int hidden = 16;
  int blocks = 4;
  int kernel = 3;
  int dilation_base = 2;
  int emb_dim = 16;

  int out_channels() const { return in_channels; }
  int total_in() const { return in_channels + cond_channels; }
  int dilation(int block) const;
  Eigen::Index param_count() const;
  bool operator==(const DenoiserArch&) const = default;
};

/// Sinusoidal embedding of an integer step, dimension must be even.
Eigen::VectorXd timestep_embedding(int t, int dim);

/// Miniature dilated-convolution noise predictor with hand-written reverse
/// accumulation. Parameters live in one flat vector; the gradient buffer has
/// identical layout. Double precision throughout so finite-difference checks
/// are meaningful.
class TinyDenoiser : public Denoiser {
 public:
  explicit TinyDenoiser(DenoiserArch arch);

  Eigen::ArrayXXd predict(const Eigen::ArrayXXd& y, int t,
                          const Eigen::ArrayXXd* cond = nullptr) const override;

  /// Forward pass that caches activations for backward().
  Eigen::ArrayXXd forward(const Eigen::ArrayXXd& y, int t,
                          const Eigen::ArrayXXd* cond = nullptr);

  /// Accumulates d(loss)/d(params) into grad() from the gradient at the
  /// output of the last forward() call; returns the gradient with respect to
  /// the data input y (conditioning rows excluded). Throws if no forward
  /// pass is cached.
  Eigen::ArrayXXd backward(const Eigen::ArrayXXd& grad_out);

  void zero_grad() { grad_.setZero(); }
  void randomize(Rng& rng, double scale = 0.05);

  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }
  Eigen::VectorXd& grad() { return grad_; }
  const Eigen::VectorXd& grad() const { return grad_; }
  const DenoiserArch& arch() const { return arch_; }

 private:
  struct Tape;
  Eigen::MatrixXd run(const Eigen::ArrayXXd& y, int t,
                      const Eigen::ArrayXXd* cond, Tape* tape) const;

  DenoiserArch arch_;
  Eigen::VectorXd params_;
  Eigen::VectorXd grad_;
  std::shared_ptr<Tape> tape_;  // activations of the last forward()
};

/// Adam with bias correction over a flat parameter vector.
struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad,
               AdamState& state, double lr);

struct TrainOptions {
  int steps = 1000;
  int batch_size = 16;
  double learning_rate = 2e-4;
  MultiLevelEnhancer* enhancer = nullptr;  // optional jointly-trained front-end
};

/// Unconditional training loop: per step samples a batch of (item, t, eps),
/// takes one Adam step on the mean eps-prediction loss, and records it.
std::vector<double> train_loop(TinyDenoiser& model,
                               const std::vector<Eigen::ArrayXXd>& data,
                               const NoiseSchedule& schedule,
                               const TrainOptions& options, Rng& rng);

/// Conditional variant over (clean, noisy) packet pairs; the loss target is
/// the combined-noise vector of the conditional forward process.
std::vector<double> train_loop(
    TinyDenoiser& model,
    const std::vector<std::pair<Eigen::ArrayXXd, Eigen::ArrayXXd>>& data,
    const ConditionalSchedule& schedule, const TrainOptions& options,
    Rng& rng);

}  // namespace wavediff
