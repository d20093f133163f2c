#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "test_support.hpp"
#include "wavediff/conditional.hpp"
#include "wavediff/denoiser.hpp"
#include "wavediff/diffusion.hpp"

using namespace wavediff;

namespace {

DenoiserArch tiny_arch(int in_ch, int cond_ch = 0, int hidden = 8,
                       int blocks = 2) {
  DenoiserArch arch;
  arch.in_channels = in_ch;
  arch.cond_channels = cond_ch;
  arch.hidden = hidden;
  arch.blocks = blocks;
  arch.emb_dim = 8;
  return arch;
}

// Central finite differences over every parameter against the analytic
// gradient of loss = sum(w .* out).
void check_gradients(TinyDenoiser& model, const Eigen::ArrayXXd& input, int t,
                     const Eigen::ArrayXXd* cond, double rel_tol) {
  Rng rng(999);
  const Eigen::ArrayXXd weights =
      rng.normal_matrix(model.arch().out_channels(), input.cols());

  model.zero_grad();
  model.forward(input, t, cond);
  model.backward(weights);
  const Eigen::VectorXd analytic = model.grad();

  const double step = 1e-5;
  int worst_index = -1;
  double worst_rel = 0.0;
  for (Eigen::Index i = 0; i < model.params().size(); ++i) {
    const double saved = model.params()[i];
    model.params()[i] = saved + step;
    const double up = (weights * model.predict(input, t, cond)).sum();
    model.params()[i] = saved - step;
    const double down = (weights * model.predict(input, t, cond)).sum();
    model.params()[i] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double scale = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-8});
    const double rel = std::abs(numeric - analytic[i]) / scale;
    if (rel > worst_rel) {
      worst_rel = rel;
      worst_index = int(i);
    }
  }
  CAPTURE(worst_index);
  CHECK(worst_rel < rel_tol);
}

}  // namespace

TEST_CASE("oracle predict: centered input gives zero prediction") {
  const NoiseSchedule s = linear_schedule(50, 1e-4, 0.05);
  const Eigen::ArrayXXd mu = Eigen::ArrayXXd::Constant(2, 4, 0.7);
  const Eigen::ArrayXXd var = Eigen::ArrayXXd::Constant(2, 4, 0.3);
  const GaussianOracleDenoiser oracle(mu, var, s);
  const int t = 21;
  const Eigen::ArrayXXd centered = std::sqrt(s.alpha_bar_at(t)) * mu;
  CHECK(oracle.predict(centered, t).abs().maxCoeff() < 1e-15);
}

TEST_CASE("oracle predict: zero-variance prior recovers the exact noise") {
  const NoiseSchedule s = linear_schedule(50, 1e-4, 0.05);
  const Eigen::ArrayXXd mu = Eigen::ArrayXXd::Constant(1, 4, -0.2);
  const Eigen::ArrayXXd var = Eigen::ArrayXXd::Zero(1, 4);
  const GaussianOracleDenoiser oracle(mu, var, s);
  Rng rng(3);
  const Eigen::ArrayXXd eps = rng.normal_matrix(1, 4);
  const int t = 35;
  const Eigen::ArrayXXd y_t = forward_marginal(mu, t, eps, s);
  CHECK((oracle.predict(y_t, t) - eps).abs().maxCoeff() < 1e-12);
}

TEST_CASE("oracle predict rejects mismatched shapes") {
  const NoiseSchedule s = linear_schedule(10, 1e-3, 0.05);
  const GaussianOracleDenoiser oracle(Eigen::ArrayXXd::Zero(2, 4),
                                      Eigen::ArrayXXd::Ones(2, 4), s);
  CHECK_THROWS_AS(oracle.predict(Eigen::ArrayXXd::Zero(2, 5), 3),
                  std::invalid_argument);
}

TEST_CASE("tiny forward: all-zero parameters give all-zero output") {
  TinyDenoiser model(tiny_arch(2));
  Rng rng(5);
  const Eigen::ArrayXXd y = rng.normal_matrix(2, 32);
  CHECK(model.predict(y, 7).abs().maxCoeff() == 0.0);
}

TEST_CASE("tiny forward: shape contract across channel and frame counts") {
  Rng rng(7);
  for (int ch : {2, 4, 8}) {
    for (Eigen::Index frames : {64, 256, 4096}) {
      TinyDenoiser model(tiny_arch(ch));
      model.randomize(rng, 0.05);
      const Eigen::ArrayXXd y = rng.normal_matrix(ch, frames);
      const Eigen::ArrayXXd out = model.predict(y, 3);
      CHECK(out.rows() == ch);
      CHECK(out.cols() == frames);
    }
  }
}

TEST_CASE("tiny forward rejects channel mismatches") {
  TinyDenoiser model(tiny_arch(2));
  CHECK_THROWS_AS(model.predict(Eigen::ArrayXXd::Zero(3, 16), 1),
                  std::invalid_argument);

  TinyDenoiser cond_model(tiny_arch(2, 2));
  const Eigen::ArrayXXd y = Eigen::ArrayXXd::Zero(2, 16);
  CHECK_THROWS_AS(cond_model.predict(y, 1), std::invalid_argument);
  const Eigen::ArrayXXd bad_cond = Eigen::ArrayXXd::Zero(2, 8);
  CHECK_THROWS_AS(cond_model.predict(y, 1, &bad_cond), std::invalid_argument);
}

TEST_CASE("tiny forward golden regression, fixed seed") {
  TinyDenoiser model(tiny_arch(2, 0, 8, 2));
  Rng prng(20240601);
  model.randomize(prng, 0.05);
  Rng drng(777);
  const Eigen::ArrayXXd y = drng.normal_matrix(2, 16);
  const Eigen::ArrayXXd out = model.predict(y, 5);

  // Frozen from the first build; guards cross-platform arithmetic drift.
  CHECK(out(0, 0) == doctest::Approx(-0.020233600779454634).epsilon(1e-12));
  CHECK(out(1, 7) == doctest::Approx(0.017236772526969694).epsilon(1e-12));
  CHECK(out.sum() == doctest::Approx(-0.072556544391669586).epsilon(1e-12));
}

TEST_CASE("timestep embedding changes the output") {
  TinyDenoiser model(tiny_arch(2));
  Rng rng(11);
  model.randomize(rng, 0.1);
  const Eigen::ArrayXXd y = rng.normal_matrix(2, 32);
  const Eigen::ArrayXXd a = model.predict(y, 1);
  const Eigen::ArrayXXd b = model.predict(y, 40);
  CHECK((a - b).abs().maxCoeff() > 1e-8);
}

TEST_CASE("backward before forward throws") {
  TinyDenoiser model(tiny_arch(2));
  CHECK_THROWS_AS(model.backward(Eigen::ArrayXXd::Zero(2, 16)),
                  std::logic_error);
}

TEST_CASE("zero output-gradient gives zero parameter gradient") {
  TinyDenoiser model(tiny_arch(2));
  Rng rng(13);
  model.randomize(rng, 0.05);
  const Eigen::ArrayXXd y = rng.normal_matrix(2, 16);
  model.zero_grad();
  model.forward(y, 3);
  model.backward(Eigen::ArrayXXd::Zero(2, 16));
  CHECK(model.grad().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gradients match central finite differences, unconditional") {
  TinyDenoiser model(tiny_arch(2, 0, 6, 2));
  Rng rng(17);
  model.randomize(rng, 0.1);
  const Eigen::ArrayXXd y = rng.normal_matrix(2, 24);
  check_gradients(model, y, 11, nullptr, 1e-4);
}

TEST_CASE("gradients match central finite differences, conditional") {
  TinyDenoiser model(tiny_arch(2, 2, 6, 2));
  Rng rng(19);
  model.randomize(rng, 0.1);
  const Eigen::ArrayXXd y = rng.normal_matrix(2, 24);
  const Eigen::ArrayXXd cond = rng.normal_matrix(2, 24);
  check_gradients(model, y, 4, &cond, 1e-4);
}

TEST_CASE("duplicated item doubles the accumulated gradient") {
  TinyDenoiser model(tiny_arch(2, 0, 6, 2));
  Rng rng(23);
  model.randomize(rng, 0.1);
  const Eigen::ArrayXXd y = rng.normal_matrix(2, 16);
  const Eigen::ArrayXXd gout = rng.normal_matrix(2, 16);

  model.zero_grad();
  model.forward(y, 2);
  model.backward(gout);
  const Eigen::VectorXd once = model.grad();

  model.zero_grad();
  for (int i = 0; i < 2; ++i) {
    model.forward(y, 2);
    model.backward(gout);
  }
  CHECK((model.grad() - 2.0 * once).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("input gradient matches finite differences") {
  TinyDenoiser model(tiny_arch(2, 0, 6, 2));
  Rng rng(29);
  model.randomize(rng, 0.1);
  const Eigen::ArrayXXd y = rng.normal_matrix(2, 12);
  const Eigen::ArrayXXd weights = rng.normal_matrix(2, 12);

  model.forward(y, 6);
  const Eigen::ArrayXXd gin = model.backward(weights);

  const double step = 1e-6;
  for (Eigen::Index idx : {Eigen::Index(0), Eigen::Index(5), Eigen::Index(23)}) {
    Eigen::ArrayXXd up = y, down = y;
    up(idx) += step;
    down(idx) -= step;
    const double numeric = ((weights * model.predict(up, 6)).sum() -
                            (weights * model.predict(down, 6)).sum()) /
                           (2.0 * step);
    CHECK(gin(idx) == doctest::Approx(numeric).epsilon(1e-5));
  }
}

TEST_CASE("adam: zero gradient leaves parameters, advances the counter") {
  Eigen::VectorXd params = Eigen::VectorXd::Constant(10, 0.5);
  const Eigen::VectorXd before = params;
  AdamState state;
  adam_step(params, Eigen::VectorXd::Zero(10), state, 1e-2);
  CHECK(state.step == 1);
  CHECK((params - before).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adam: constant gradient step magnitude is bounded by ~lr") {
  Eigen::VectorXd params = Eigen::VectorXd::Zero(4);
  const Eigen::VectorXd grad = Eigen::VectorXd::Constant(4, 3.7);
  AdamState state;
  const double lr = 1e-3;
  for (int i = 0; i < 200; ++i) {
    const Eigen::VectorXd before = params;
    adam_step(params, grad, state, lr);
    CHECK((params - before).cwiseAbs().maxCoeff() < lr * 1.2);
  }
}

TEST_CASE("adam converges on a quadratic to the known minimum") {
  // f(x) = 0.5 ||x - target||^2, gradient x - target.
  Eigen::VectorXd target(3);
  target << 1.0, -2.0, 0.25;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
  AdamState state;
  for (int i = 0; i < 5000; ++i) {
    const Eigen::VectorXd grad = x - target;
    adam_step(x, grad, state, 1e-2);
    if ((x - target).cwiseAbs().maxCoeff() < 1e-6) break;
  }
  CHECK((x - target).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("train_loop: zero steps leaves parameters untouched") {
  const NoiseSchedule s = linear_schedule(10, 1e-3, 0.05);
  TinyDenoiser model(tiny_arch(2, 0, 6, 2));
  Rng rng(31);
  model.randomize(rng, 0.05);
  const Eigen::VectorXd before = model.params();

  std::vector<Eigen::ArrayXXd> data{rng.normal_matrix(2, 32)};
  TrainOptions options;
  options.steps = 0;
  Rng train_rng(1);
  const auto trace = train_loop(model, data, s, options, train_rng);
  CHECK(trace.empty());
  CHECK((model.params() - before).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("train_loop rejects empty data") {
  const NoiseSchedule s = linear_schedule(10, 1e-3, 0.05);
  TinyDenoiser model(tiny_arch(2));
  std::vector<Eigen::ArrayXXd> empty;
  TrainOptions options;
  Rng rng(1);
  CHECK_THROWS_AS(train_loop(model, empty, s, options, rng),
                  std::invalid_argument);
}

TEST_CASE("train_loop is deterministic given equal seeds") {
  const NoiseSchedule s = linear_schedule(10, 1e-3, 0.05);
  std::vector<Eigen::ArrayXXd> data;
  Rng data_rng(37);
  for (int i = 0; i < 4; ++i) data.push_back(data_rng.normal_matrix(2, 32));

  TrainOptions options;
  options.steps = 20;
  options.batch_size = 2;
  options.learning_rate = 1e-3;

  auto run = [&]() {
    TinyDenoiser model(tiny_arch(2, 0, 6, 2));
    Rng init(41);
    model.randomize(init, 0.05);
    Rng rng(43);
    return train_loop(model, data, s, options, rng);
  };
  const auto a = run();
  const auto b = run();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("conditional train_loop with y0==yn and m==0 equals unconditional") {
  const NoiseSchedule s = linear_schedule(10, 1e-3, 0.05);
  const ConditionalSchedule zero =
      interpolation_schedule(s, MScheduleKind::zero);

  std::vector<Eigen::ArrayXXd> clean;
  std::vector<std::pair<Eigen::ArrayXXd, Eigen::ArrayXXd>> pairs;
  Rng data_rng(47);
  for (int i = 0; i < 3; ++i) {
    const Eigen::ArrayXXd item = data_rng.normal_matrix(2, 32);
    clean.push_back(item);
    pairs.emplace_back(item, item);
  }

  TrainOptions options;
  options.steps = 15;
  options.batch_size = 2;
  options.learning_rate = 1e-3;

  TinyDenoiser uncond(tiny_arch(2, 0, 6, 2));
  {
    Rng init(53);
    uncond.randomize(init, 0.05);
  }
  TinyDenoiser cond(tiny_arch(2, 0, 6, 2));  // cond-blind network
  {
    Rng init(53);
    cond.randomize(init, 0.05);
  }

  Rng ra(59), rb(59);
  const auto trace_uncond = train_loop(uncond, clean, s, options, ra);
  const auto trace_cond = train_loop(cond, pairs, zero, options, rb);
  REQUIRE(trace_uncond.size() == trace_cond.size());
  for (std::size_t i = 0; i < trace_uncond.size(); ++i)
    CHECK(trace_uncond[i] == trace_cond[i]);
  CHECK(uncond.params() == cond.params());
}

TEST_CASE("oracle loss lower-bounds a briefly trained tiny net") {
  // Diagonal-Gaussian data: the oracle is the optimal predictor, so its
  // empirical loss can only be beaten by Monte-Carlo noise.
  const NoiseSchedule s = linear_schedule(20, 1e-3, 0.05);
  const Eigen::ArrayXXd mu = Eigen::ArrayXXd::Zero(2, 32);
  const Eigen::ArrayXXd var = Eigen::ArrayXXd::Ones(2, 32);
  const GaussianOracleDenoiser oracle(mu, var, s);

  std::vector<Eigen::ArrayXXd> data;
  Rng data_rng(61);
  for (int i = 0; i < 16; ++i)
    data.push_back(mu + var.sqrt() * data_rng.normal_matrix(2, 32));

  TinyDenoiser net(tiny_arch(2, 0, 8, 2));
  Rng init(67);
  net.randomize(init, 0.05);
  TrainOptions options;
  options.steps = 150;
  options.batch_size = 4;
  options.learning_rate = 1e-3;
  Rng train_rng(71);
  train_loop(net, data, s, options, train_rng);

  Rng eval_rng(73);
  double oracle_loss = 0.0, net_loss = 0.0;
  std::vector<double> diffs;
  const int evals = 400;
  for (int i = 0; i < evals; ++i) {
    const Eigen::ArrayXXd y0 = mu + var.sqrt() * eval_rng.normal_matrix(2, 32);
    const int t = 1 + int(eval_rng.uniform_index(20));
    const Eigen::ArrayXXd eps = eval_rng.normal_matrix(2, 32);
    const double lo = training_loss(oracle, y0, t, eps, s);
    const double ln = training_loss(net, y0, t, eps, s);
    oracle_loss += lo;
    net_loss += ln;
    diffs.push_back(ln - lo);
  }
  oracle_loss /= evals;
  net_loss /= evals;
  double mean_diff = (net_loss - oracle_loss);
  double var_diff = 0.0;
  for (double d : diffs) var_diff += (d - mean_diff) * (d - mean_diff);
  var_diff /= (evals - 1);
  const double se = std::sqrt(var_diff / evals);
  CHECK(oracle_loss <= net_loss + 3.0 * se);
}
