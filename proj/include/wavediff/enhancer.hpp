#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "wavediff/denoiser.hpp"
#include "wavediff/rng.hpp"

namespace wavediff {

/// Learnable front-end applied to a packet before the denoiser:
///
///   out = g (.) (p + conv2(tanh(conv1(p))))
///
/// conv1 widens to 2x the channel count, conv2 projects back, both kernel 3
/// with circular padding; g is one gain per channel. Default construction
/// (zero conv weights, unit gains) is an exact identity, so enabling the
/// block never changes an untrained pipeline.
class FrequencyBottleneckBlock {
 public:
  /// detail_channels marks the rows carrying detail bands; their gains are
  /// initialized to detail_gain (1.0 preserves the identity).
  explicit FrequencyBottleneckBlock(int channels,
                                    std::vector<int> detail_channels = {},
                                    double detail_gain = 1.0);

  Eigen::ArrayXXd apply(const Eigen::ArrayXXd& p) const;

  Eigen::ArrayXXd forward(const Eigen::ArrayXXd& p);
  /// Accumulates parameter gradients, returns the gradient w.r.t. the input.
  Eigen::ArrayXXd backward(const Eigen::ArrayXXd& grad_out);

  void zero_grad() { grad_.setZero(); }
  void randomize(Rng& rng, double scale);

  int channels() const { return channels_; }
  const std::vector<int>& detail_channels() const { return detail_channels_; }

  Eigen::Ref<Eigen::VectorXd> gains();
  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }
  Eigen::VectorXd& grad() { return grad_; }

  static Eigen::Index param_count(int channels);

 private:
  struct Tape;
  Eigen::MatrixXd run(const Eigen::ArrayXXd& p, Tape* tape) const;

  int channels_;
  int hidden_;
  std::vector<int> detail_channels_;
  Eigen::VectorXd params_;
  Eigen::VectorXd grad_;
  std::shared_ptr<Tape> tape_;
};

/// One FrequencyBottleneckBlock per decomposition level, applied coarse to
/// fine. Block 0 covers rows [0, 2) (cA_L and cD_L); block j >= 1 covers the
/// 2^j detail rows [2^j, 2^{j+1}) of level L-j.
class MultiLevelEnhancer {
 public:
  explicit MultiLevelEnhancer(int levels, double detail_gain = 1.0);

  int levels() const { return levels_; }
  std::pair<Eigen::Index, Eigen::Index> block_rows(int block) const;

  Eigen::ArrayXXd apply(const Eigen::ArrayXXd& packet) const;
  Eigen::ArrayXXd forward(const Eigen::ArrayXXd& packet);
  Eigen::ArrayXXd backward(const Eigen::ArrayXXd& grad_out);
  void zero_grad();

  std::vector<FrequencyBottleneckBlock>& blocks() { return blocks_; }
  const std::vector<FrequencyBottleneckBlock>& blocks() const {
    return blocks_;
  }

 private:
  void check_rows(Eigen::Index rows) const;
  int levels_;
  std::vector<FrequencyBottleneckBlock> blocks_;
};

/// Denoiser decorator that feeds enhanced packets to an inner predictor.
class EnhancedDenoiser : public Denoiser {
 public:
  EnhancedDenoiser(const Denoiser& inner, const MultiLevelEnhancer& enhancer)
      : inner_(&inner), enhancer_(&enhancer) {}

  Eigen::ArrayXXd predict(const Eigen::ArrayXXd& y, int t,
                          const Eigen::ArrayXXd* cond = nullptr) const override {
    return inner_->predict(enhancer_->apply(y), t, cond);
  }

 private:
  const Denoiser* inner_;
  const MultiLevelEnhancer* enhancer_;
};

}  // namespace wavediff
