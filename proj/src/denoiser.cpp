#include "wavediff/denoiser.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "wavediff/conditional.hpp"
#include "wavediff/diffusion.hpp"
#include "wavediff/enhancer.hpp"

namespace wavediff {

Eigen::ArrayXXd GaussianOracleDenoiser::predict(const Eigen::ArrayXXd& y,
                                                int t,
                                                const Eigen::ArrayXXd*) const {
  if (y.rows() != mean_.rows() || y.cols() != mean_.cols())
    throw std::invalid_argument("oracle predict: shape mismatch");
  const double abar = schedule_->alpha_bar_at(t);
  const double rest = 1.0 - abar;
  return std::sqrt(rest) * (y - std::sqrt(abar) * mean_) /
         (abar * var_diag_ + rest);
}

int DenoiserArch::dilation(int block) const {
  int d = 1;
  for (int i = 0; i < block; ++i) d *= dilation_base;
  return d;
}

Eigen::Index DenoiserArch::param_count() const {
  const Eigen::Index h = hidden, ci = total_in(), co = out_channels();
  return h * ci + h                                // input 1x1 conv
         + Eigen::Index(blocks) * (h * emb_dim)    // embedding projections
         + Eigen::Index(blocks) * (kernel * h * h + h)  // dilated convs
         + co * h + co;                            // output 1x1 conv
}

Eigen::VectorXd timestep_embedding(int t, int dim) {
  if (dim < 2 || dim % 2 != 0)
    throw std::invalid_argument("timestep_embedding: dim must be even, >= 2");
  const int half = dim / 2;
  Eigen::VectorXd e(dim);
  for (int i = 0; i < half; ++i) {
    const double freq =
        std::pow(10000.0, -double(i) / double(half > 1 ? half - 1 : 1));
    e[2 * i] = std::sin(t * freq);
    e[2 * i + 1] = std::cos(t * freq);
  }
  return e;
}

namespace {

// Parameter vector layout; every tensor is a contiguous column-major slab.
struct Layout {
  Eigen::Index w_in, b_in;
  Eigen::Index emb0, conv0;   // starts of the per-block groups
  Eigen::Index emb_stride, conv_stride;
  Eigen::Index w_out, b_out;
  int hidden, total_in, out, kernel, emb_dim;

  explicit Layout(const DenoiserArch& a)
      : hidden(a.hidden),
        total_in(a.total_in()),
        out(a.out_channels()),
        kernel(a.kernel),
        emb_dim(a.emb_dim) {
    w_in = 0;
    b_in = w_in + Eigen::Index(hidden) * total_in;
    emb0 = b_in + hidden;
    emb_stride = Eigen::Index(hidden) * emb_dim;
    conv0 = emb0 + Eigen::Index(a.blocks) * emb_stride;
    conv_stride = Eigen::Index(kernel) * hidden * hidden + hidden;
    w_out = conv0 + Eigen::Index(a.blocks) * conv_stride;
    b_out = w_out + Eigen::Index(out) * hidden;
  }

  Eigen::Index emb_proj(int block) const { return emb0 + block * emb_stride; }
  Eigen::Index conv_w(int block, int tap) const {
    return conv0 + block * conv_stride +
           Eigen::Index(tap) * hidden * hidden;
  }
  Eigen::Index conv_b(int block) const {
    return conv0 + block * conv_stride + Eigen::Index(kernel) * hidden * hidden;
  }
};

using ConstMap = Eigen::Map<const Eigen::MatrixXd>;
using ConstVec = Eigen::Map<const Eigen::VectorXd>;
using MutMap = Eigen::Map<Eigen::MatrixXd>;
using MutVec = Eigen::Map<Eigen::VectorXd>;

// Columns rotated so that out.col(n) == m.col((n + offset) mod F).
Eigen::MatrixXd circshift_cols(const Eigen::MatrixXd& m, Eigen::Index offset) {
  const Eigen::Index f = m.cols();
  Eigen::Index o = ((offset % f) + f) % f;
  if (o == 0) return m;
  Eigen::MatrixXd out(m.rows(), f);
  out.leftCols(f - o) = m.rightCols(f - o);
  out.rightCols(o) = m.leftCols(o);
  return out;
}

}  // namespace

struct TinyDenoiser::Tape {
  int t = 0;
  Eigen::VectorXd emb;
  Eigen::MatrixXd input;               // stacked [y; cond]
  std::vector<Eigen::MatrixXd> pre;    // u_i, block conv inputs
  std::vector<Eigen::MatrixXd> act;    // tanh outputs a_i
  Eigen::MatrixXd final_hidden;        // input of the output projection
};

TinyDenoiser::TinyDenoiser(DenoiserArch arch) : arch_(arch) {
  if (arch_.hidden < 1 || arch_.blocks < 0 || arch_.kernel < 1 ||
      arch_.in_channels < 1 || arch_.cond_channels < 0)
    throw std::invalid_argument("TinyDenoiser: bad architecture");
  params_ = Eigen::VectorXd::Zero(arch_.param_count());
  grad_ = Eigen::VectorXd::Zero(params_.size());
}

void TinyDenoiser::randomize(Rng& rng, double scale) {
  for (Eigen::Index i = 0; i < params_.size(); ++i)
    params_[i] = scale * rng.normal();
}

Eigen::MatrixXd TinyDenoiser::run(const Eigen::ArrayXXd& y, int t,
                                  const Eigen::ArrayXXd* cond,
                                  Tape* tape) const {
  if (y.rows() != arch_.in_channels)
    throw std::invalid_argument(
        "TinyDenoiser: input has " + std::to_string(y.rows()) +
        " channels, architecture expects " +
        std::to_string(arch_.in_channels));
  if (arch_.cond_channels > 0) {
    if (cond == nullptr)
      throw std::invalid_argument("TinyDenoiser: conditional model needs cond");
    if (cond->rows() != arch_.cond_channels || cond->cols() != y.cols())
      throw std::invalid_argument("TinyDenoiser: cond shape mismatch");
  }

  const Layout lay(arch_);
  const Eigen::Index f = y.cols();
  const int h = arch_.hidden;

  Eigen::MatrixXd input(lay.total_in, f);
  input.topRows(arch_.in_channels) = y.matrix();
  if (arch_.cond_channels > 0)
    input.bottomRows(arch_.cond_channels) = cond->matrix();

  const Eigen::VectorXd emb = timestep_embedding(t, arch_.emb_dim);
  const double* p = params_.data();

  ConstMap w_in(p + lay.w_in, h, lay.total_in);
  ConstVec b_in(p + lay.b_in, h);
  Eigen::MatrixXd hid = (w_in * input).colwise() + b_in;

  if (tape) {
    tape->t = t;
    tape->emb = emb;
    tape->input = input;
    tape->pre.resize(arch_.blocks);
    tape->act.resize(arch_.blocks);
  }

  for (int i = 0; i < arch_.blocks; ++i) {
    const int d = arch_.dilation(i);
    ConstMap proj(p + lay.emb_proj(i), h, arch_.emb_dim);
    Eigen::MatrixXd u = hid;
    u.colwise() += (proj * emb).eval();

    ConstVec bias(p + lay.conv_b(i), h);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(h, f);
    for (int k = 0; k < arch_.kernel; ++k) {
      ConstMap w(p + lay.conv_w(i, k), h, h);
      c.noalias() += w * circshift_cols(u, Eigen::Index(k - arch_.kernel / 2) * d);
    }
    c.colwise() += bias;
    Eigen::MatrixXd a = c.array().tanh().matrix();
    hid += a;
    if (tape) {
      tape->pre[i] = std::move(u);
      tape->act[i] = std::move(a);
    }
  }

  if (tape) tape->final_hidden = hid;

  ConstMap w_out(p + lay.w_out, lay.out, h);
  ConstVec b_out(p + lay.b_out, lay.out);
  return (w_out * hid).colwise() + b_out;
}

Eigen::ArrayXXd TinyDenoiser::predict(const Eigen::ArrayXXd& y, int t,
                                      const Eigen::ArrayXXd* cond) const {
  return run(y, t, cond, nullptr).array();
}

Eigen::ArrayXXd TinyDenoiser::forward(const Eigen::ArrayXXd& y, int t,
                                      const Eigen::ArrayXXd* cond) {
  tape_ = std::make_shared<Tape>();
  return run(y, t, cond, tape_.get()).array();
}

Eigen::ArrayXXd TinyDenoiser::backward(const Eigen::ArrayXXd& grad_out) {
  if (!tape_)
    throw std::logic_error("TinyDenoiser::backward called before forward");
  const Tape& tape = *tape_;
  const Layout lay(arch_);
  const int h = arch_.hidden;
  if (grad_out.rows() != lay.out || grad_out.cols() != tape.input.cols())
    throw std::invalid_argument("TinyDenoiser::backward: gradient shape");

  const double* p = params_.data();
  double* g = grad_.data();

  Eigen::MatrixXd gout = grad_out.matrix();

  MutMap g_w_out(g + lay.w_out, lay.out, h);
  MutVec g_b_out(g + lay.b_out, lay.out);
  g_w_out.noalias() += gout * tape.final_hidden.transpose();
  g_b_out += gout.rowwise().sum();

  ConstMap w_out(p + lay.w_out, lay.out, h);
  Eigen::MatrixXd ghid = w_out.transpose() * gout;

  for (int i = arch_.blocks - 1; i >= 0; --i) {
    const int d = arch_.dilation(i);
    const Eigen::MatrixXd& u = tape.pre[i];
    const Eigen::MatrixXd& a = tape.act[i];

    // h_{i+1} = h_i + tanh(c_i); gradient through the tanh branch
    Eigen::MatrixXd gc =
        (ghid.array() * (1.0 - a.array().square())).matrix();

    MutVec g_bias(g + lay.conv_b(i), h);
    g_bias += gc.rowwise().sum();

    Eigen::MatrixXd gu = Eigen::MatrixXd::Zero(h, u.cols());
    for (int k = 0; k < arch_.kernel; ++k) {
      const Eigen::Index off = Eigen::Index(k - arch_.kernel / 2) * d;
      MutMap g_w(g + lay.conv_w(i, k), h, h);
      g_w.noalias() += gc * circshift_cols(u, off).transpose();
      ConstMap w(p + lay.conv_w(i, k), h, h);
      gu.noalias() += circshift_cols(w.transpose() * gc, -off);
    }

    MutMap g_proj(g + lay.emb_proj(i), h, arch_.emb_dim);
    g_proj.noalias() += gu.rowwise().sum() * tape.emb.transpose();

    ghid += gu;  // residual passthrough plus the conv branch
  }

  MutMap g_w_in(g + lay.w_in, h, lay.total_in);
  MutVec g_b_in(g + lay.b_in, h);
  g_w_in.noalias() += ghid * tape.input.transpose();
  g_b_in += ghid.rowwise().sum();

  ConstMap w_in(p + lay.w_in, h, lay.total_in);
  Eigen::MatrixXd ginput = w_in.transpose() * ghid;
  return ginput.topRows(arch_.in_channels).array();
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad,
               AdamState& state, double lr) {
  if (params.size() != grad.size())
    throw std::invalid_argument("adam_step: size mismatch");
  if (state.m.size() != params.size()) {
    state.m = Eigen::VectorXd::Zero(params.size());
    state.v = Eigen::VectorXd::Zero(params.size());
    state.step = 0;
  }
  state.step += 1;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
  state.v.array() =
      state.beta2 * state.v.array() + (1.0 - state.beta2) * grad.array().square();
  const double c1 = 1.0 - std::pow(state.beta1, double(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, double(state.step));
  params.array() -=
      lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + state.eps);
}

namespace {

struct EnhancerAdam {
  std::vector<AdamState> states;
};

void enhancer_update(MultiLevelEnhancer* enh, EnhancerAdam& adam,
                     double inv_batch, double lr) {
  if (!enh) return;
  auto& blocks = enh->blocks();
  if (adam.states.size() != blocks.size()) adam.states.resize(blocks.size());
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    blocks[j].grad() *= inv_batch;
    adam_step(blocks[j].params(), blocks[j].grad(), adam.states[j], lr);
  }
}

}  // namespace

std::vector<double> train_loop(TinyDenoiser& model,
                               const std::vector<Eigen::ArrayXXd>& data,
                               const NoiseSchedule& schedule,
                               const TrainOptions& options, Rng& rng) {
  if (data.empty()) throw std::invalid_argument("train_loop: empty data");
  if (options.batch_size < 1)
    throw std::invalid_argument("train_loop: batch_size must be >= 1");

  AdamState adam;
  EnhancerAdam enh_adam;
  std::vector<double> trace;
  trace.reserve(options.steps);

  for (int step = 0; step < options.steps; ++step) {
    model.zero_grad();
    if (options.enhancer) options.enhancer->zero_grad();
    double loss_sum = 0.0;

    for (int b = 0; b < options.batch_size; ++b) {
      const Eigen::ArrayXXd& y0 = data[rng.uniform_index(data.size())];
      const int t = 1 + int(rng.uniform_index(std::uint64_t(schedule.T)));
      const Eigen::ArrayXXd eps = rng.normal_matrix(y0.rows(), y0.cols());
      const Eigen::ArrayXXd y_t = forward_marginal(y0, t, eps, schedule);

      const Eigen::ArrayXXd net_in =
          options.enhancer ? options.enhancer->forward(y_t) : y_t;
      const Eigen::ArrayXXd pred = model.forward(net_in, t);
      const Eigen::ArrayXXd resid = pred - eps;
      loss_sum += resid.square().mean();

      const Eigen::ArrayXXd gout = (2.0 / double(resid.size())) * resid;
      const Eigen::ArrayXXd gin = model.backward(gout);
      if (options.enhancer) options.enhancer->backward(gin);
    }

    const double inv_batch = 1.0 / double(options.batch_size);
    model.grad() *= inv_batch;
    adam_step(model.params(), model.grad(), adam, options.learning_rate);
    enhancer_update(options.enhancer, enh_adam, inv_batch,
                    options.learning_rate);
    trace.push_back(loss_sum * inv_batch);
  }
  return trace;
}

std::vector<double> train_loop(
    TinyDenoiser& model,
    const std::vector<std::pair<Eigen::ArrayXXd, Eigen::ArrayXXd>>& data,
    const ConditionalSchedule& schedule, const TrainOptions& options,
    Rng& rng) {
  if (data.empty()) throw std::invalid_argument("train_loop: empty data");
  if (options.batch_size < 1)
    throw std::invalid_argument("train_loop: batch_size must be >= 1");

  const bool pass_cond = model.arch().cond_channels > 0;
  AdamState adam;
  EnhancerAdam enh_adam;
  std::vector<double> trace;
  trace.reserve(options.steps);

  for (int step = 0; step < options.steps; ++step) {
    model.zero_grad();
    if (options.enhancer) options.enhancer->zero_grad();
    double loss_sum = 0.0;

    for (int b = 0; b < options.batch_size; ++b) {
      const auto& [y0, yn] = data[rng.uniform_index(data.size())];
      const int t = 1 + int(rng.uniform_index(std::uint64_t(schedule.base.T)));
      const Eigen::ArrayXXd eps = rng.normal_matrix(y0.rows(), y0.cols());
      const Eigen::ArrayXXd y_t = cond_forward(y0, yn, t, eps, schedule);
      const Eigen::ArrayXXd target =
          cond_training_target(y0, yn, t, eps, schedule);

      const Eigen::ArrayXXd net_in =
          options.enhancer ? options.enhancer->forward(y_t) : y_t;
      const Eigen::ArrayXXd pred =
          model.forward(net_in, t, pass_cond ? &yn : nullptr);
      const Eigen::ArrayXXd resid = pred - target;
      loss_sum += resid.square().mean();

      const Eigen::ArrayXXd gout = (2.0 / double(resid.size())) * resid;
      const Eigen::ArrayXXd gin = model.backward(gout);
      if (options.enhancer) options.enhancer->backward(gin);
    }

    const double inv_batch = 1.0 / double(options.batch_size);
    model.grad() *= inv_batch;
    adam_step(model.params(), model.grad(), adam, options.learning_rate);
    enhancer_update(options.enhancer, enh_adam, inv_batch,
                    options.learning_rate);
    trace.push_back(loss_sum * inv_batch);
  }
  return trace;
}

}  // namespace wavediff
