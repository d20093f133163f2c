#include "wavediff/enhancer.hpp"

#include <stdexcept>
#include <string>

namespace wavediff {

namespace {

constexpr int kKernel = 3;

using ConstMap = Eigen::Map<const Eigen::MatrixXd>;
using ConstVec = Eigen::Map<const Eigen::VectorXd>;
using MutMap = Eigen::Map<Eigen::MatrixXd>;
using MutVec = Eigen::Map<Eigen::VectorXd>;

Eigen::MatrixXd circshift_cols(const Eigen::MatrixXd& m, Eigen::Index offset) {
  const Eigen::Index f = m.cols();
  Eigen::Index o = ((offset % f) + f) % f;
  if (o == 0) return m;
  Eigen::MatrixXd out(m.rows(), f);
  out.leftCols(f - o) = m.rightCols(f - o);
  out.rightCols(o) = m.leftCols(o);
  return out;
}

// Layout: W1 taps (hidden x C, x3), b1 (hidden), W2 taps (C x hidden, x3),
// b2 (C), gains (C). hidden = 2C.
struct Layout {
  Eigen::Index w1, b1, w2, b2, gain, total;
  int c, h;
  explicit Layout(int channels) : c(channels), h(2 * channels) {
    w1 = 0;
    b1 = w1 + Eigen::Index(kKernel) * h * c;
    w2 = b1 + h;
    b2 = w2 + Eigen::Index(kKernel) * c * h;
    gain = b2 + c;
    total = gain + c;
  }
  Eigen::Index w1_tap(int k) const { return w1 + Eigen::Index(k) * h * c; }
  Eigen::Index w2_tap(int k) const { return w2 + Eigen::Index(k) * c * h; }
};

}  // namespace

struct FrequencyBottleneckBlock::Tape {
  Eigen::MatrixXd input;
  Eigen::MatrixXd act;       // tanh(conv1(p) + b1)
  Eigen::MatrixXd residual;  // p + conv2(act) + b2
};

Eigen::Index FrequencyBottleneckBlock::param_count(int channels) {
  return Layout(channels).total;
}

FrequencyBottleneckBlock::FrequencyBottleneckBlock(
    int channels, std::vector<int> detail_channels, double detail_gain)
    : channels_(channels),
      hidden_(2 * channels),
      detail_channels_(std::move(detail_channels)) {
  if (channels_ < 1)
    throw std::invalid_argument("FrequencyBottleneckBlock: channels >= 1");
  const Layout lay(channels_);
  params_ = Eigen::VectorXd::Zero(lay.total);
  grad_ = Eigen::VectorXd::Zero(lay.total);
  params_.segment(lay.gain, channels_).setOnes();
  for (int ch : detail_channels_) {
    if (ch < 0 || ch >= channels_)
      throw std::invalid_argument("FrequencyBottleneckBlock: bad detail row");
    params_[lay.gain + ch] = detail_gain;
  }
}

Eigen::Ref<Eigen::VectorXd> FrequencyBottleneckBlock::gains() {
  const Layout lay(channels_);
  return params_.segment(lay.gain, channels_);
}

void FrequencyBottleneckBlock::randomize(Rng& rng, double scale) {
  const Layout lay(channels_);
  for (Eigen::Index i = 0; i < lay.gain; ++i) params_[i] = scale * rng.normal();
}

Eigen::MatrixXd FrequencyBottleneckBlock::run(const Eigen::ArrayXXd& p,
                                              Tape* tape) const {
  if (p.rows() != channels_)
    throw std::invalid_argument(
        "FrequencyBottleneckBlock: packet has " + std::to_string(p.rows()) +
        " channels, block expects " + std::to_string(channels_));
  const Layout lay(channels_);
  const Eigen::Index f = p.cols();
  const double* pr = params_.data();

  Eigen::MatrixXd input = p.matrix();

  ConstVec b1(pr + lay.b1, hidden_);
  Eigen::MatrixXd z1 = Eigen::MatrixXd::Zero(hidden_, f);
  for (int k = 0; k < kKernel; ++k) {
    ConstMap w(pr + lay.w1_tap(k), hidden_, channels_);
    z1.noalias() += w * circshift_cols(input, k - kKernel / 2);
  }
  z1.colwise() += b1;
  Eigen::MatrixXd act = z1.array().tanh().matrix();

  ConstVec b2(pr + lay.b2, channels_);
  Eigen::MatrixXd residual = input;
  for (int k = 0; k < kKernel; ++k) {
    ConstMap w(pr + lay.w2_tap(k), channels_, hidden_);
    residual.noalias() += w * circshift_cols(act, k - kKernel / 2);
  }
  residual.colwise() += b2;

  ConstVec g(pr + lay.gain, channels_);
  Eigen::MatrixXd out = g.asDiagonal() * residual;

  if (tape) {
    tape->input = std::move(input);
    tape->act = std::move(act);
    tape->residual = std::move(residual);
  }
  return out;
}

Eigen::ArrayXXd FrequencyBottleneckBlock::apply(const Eigen::ArrayXXd& p) const {
  return run(p, nullptr).array();
}

Eigen::ArrayXXd FrequencyBottleneckBlock::forward(const Eigen::ArrayXXd& p) {
  tape_ = std::make_shared<Tape>();
  return run(p, tape_.get()).array();
}

Eigen::ArrayXXd FrequencyBottleneckBlock::backward(
    const Eigen::ArrayXXd& grad_out) {
  if (!tape_)
    throw std::logic_error("FrequencyBottleneckBlock: backward before forward");
  const Tape& tape = *tape_;
  const Layout lay(channels_);
  if (grad_out.rows() != channels_ || grad_out.cols() != tape.input.cols())
    throw std::invalid_argument("FrequencyBottleneckBlock: gradient shape");

  const double* pr = params_.data();
  double* gr = grad_.data();
  Eigen::MatrixXd go = grad_out.matrix();

  MutVec g_gain(gr + lay.gain, channels_);
  g_gain += (go.array() * tape.residual.array()).rowwise().sum().matrix();

  ConstVec g(pr + lay.gain, channels_);
  Eigen::MatrixXd gres = g.asDiagonal() * go;

  MutVec g_b2(gr + lay.b2, channels_);
  g_b2 += gres.rowwise().sum();

  Eigen::MatrixXd gact = Eigen::MatrixXd::Zero(hidden_, tape.input.cols());
  for (int k = 0; k < kKernel; ++k) {
    const Eigen::Index off = k - kKernel / 2;
    MutMap g_w2(gr + lay.w2_tap(k), channels_, hidden_);
    g_w2.noalias() += gres * circshift_cols(tape.act, off).transpose();
    ConstMap w2(pr + lay.w2_tap(k), channels_, hidden_);
    gact.noalias() += circshift_cols(w2.transpose() * gres, -off);
  }

  Eigen::MatrixXd gz1 =
      (gact.array() * (1.0 - tape.act.array().square())).matrix();
  MutVec g_b1(gr + lay.b1, hidden_);
  g_b1 += gz1.rowwise().sum();

  Eigen::MatrixXd gin = gres;  // residual connection
  for (int k = 0; k < kKernel; ++k) {
    const Eigen::Index off = k - kKernel / 2;
    MutMap g_w1(gr + lay.w1_tap(k), hidden_, channels_);
    g_w1.noalias() += gz1 * circshift_cols(tape.input, off).transpose();
    ConstMap w1(pr + lay.w1_tap(k), hidden_, channels_);
    gin.noalias() += circshift_cols(w1.transpose() * gz1, -off);
  }
  return gin.array();
}

MultiLevelEnhancer::MultiLevelEnhancer(int levels, double detail_gain)
    : levels_(levels) {
  if (levels_ < 1)
    throw std::invalid_argument("MultiLevelEnhancer: levels must be >= 1");
  blocks_.reserve(levels_);
  blocks_.emplace_back(2, std::vector<int>{1}, detail_gain);
  for (int j = 1; j < levels_; ++j) {
    const int ch = 1 << j;
    std::vector<int> detail(ch);
    for (int i = 0; i < ch; ++i) detail[i] = i;
    blocks_.emplace_back(ch, std::move(detail), detail_gain);
  }
}

std::pair<Eigen::Index, Eigen::Index> MultiLevelEnhancer::block_rows(
    int block) const {
  if (block < 0 || block >= levels_)
    throw std::out_of_range("MultiLevelEnhancer: bad block index");
  if (block == 0) return {0, 2};
  return {Eigen::Index(1) << block, Eigen::Index(1) << block};
}

void MultiLevelEnhancer::check_rows(Eigen::Index rows) const {
  if (rows != (Eigen::Index(1) << levels_))
    throw std::invalid_argument(
        "MultiLevelEnhancer: packet has " + std::to_string(rows) +
        " channels, enhancer expects " +
        std::to_string(Eigen::Index(1) << levels_));
}

Eigen::ArrayXXd MultiLevelEnhancer::apply(const Eigen::ArrayXXd& packet) const {
  check_rows(packet.rows());
  Eigen::ArrayXXd out(packet.rows(), packet.cols());
  for (int j = 0; j < levels_; ++j) {
    const auto [start, count] = block_rows(j);
    out.middleRows(start, count) =
        blocks_[j].apply(packet.middleRows(start, count));
  }
  return out;
}

Eigen::ArrayXXd MultiLevelEnhancer::forward(const Eigen::ArrayXXd& packet) {
  check_rows(packet.rows());
  Eigen::ArrayXXd out(packet.rows(), packet.cols());
  for (int j = 0; j < levels_; ++j) {
    const auto [start, count] = block_rows(j);
    out.middleRows(start, count) =
        blocks_[j].forward(packet.middleRows(start, count));
  }
  return out;
}

Eigen::ArrayXXd MultiLevelEnhancer::backward(const Eigen::ArrayXXd& grad_out) {
  check_rows(grad_out.rows());
  Eigen::ArrayXXd gin(grad_out.rows(), grad_out.cols());
  for (int j = 0; j < levels_; ++j) {
    const auto [start, count] = block_rows(j);
    gin.middleRows(start, count) =
        blocks_[j].backward(grad_out.middleRows(start, count));
  }
  return gin;
}

void MultiLevelEnhancer::zero_grad() {
  for (auto& block : blocks_) block.zero_grad();
}

}  // namespace wavediff
