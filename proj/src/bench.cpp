#include "wavediff/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "wavediff/diffusion.hpp"

namespace wavediff {

std::int64_t conv_macs(std::int64_t kernel, std::int64_t c_out,
                       std::int64_t l_out) {
  if (kernel <= 0 || c_out <= 0 || l_out <= 0)
    throw std::invalid_argument("conv_macs: arguments must be positive");
  return kernel * c_out * l_out;
}

std::vector<ConvLayerSpec> denoiser_layers(const DenoiserArch& arch) {
  std::vector<ConvLayerSpec> layers;
  layers.push_back({"input", 1, arch.total_in(), arch.hidden});
  for (int i = 0; i < arch.blocks; ++i)
    layers.push_back({"block" + std::to_string(i), arch.kernel, arch.hidden,
                      arch.hidden});
  layers.push_back({"output", 1, arch.hidden, arch.out_channels()});
  return layers;
}

std::int64_t ShapeMacs::first_layer_per_in_channel() const {
  if (layers.empty())
    throw std::logic_error("ShapeMacs: empty layer list has no first layer");
  return layers.front().per_in_channel;
}

ShapeMacs pipeline_macs(const std::vector<ConvLayerSpec>& layers,
                        const std::string& label, std::int64_t channels,
                        std::int64_t frames) {
  if (channels <= 0 || frames <= 0)
    throw std::invalid_argument("pipeline_macs: bad input shape");
  ShapeMacs shape;
  shape.label = label;
  shape.channels = channels;
  shape.frames = frames;
  for (const auto& spec : layers) {
    LayerMacs lm;
    lm.name = spec.name;
    lm.kernel = spec.kernel;
    lm.c_in = spec.c_in;
    lm.c_out = spec.c_out;
    lm.l_out = frames;
    lm.per_in_channel = conv_macs(spec.kernel, spec.c_out, frames);
    lm.total = lm.per_in_channel * spec.c_in;
    shape.total += lm.total;
    shape.layers.push_back(std::move(lm));
  }
  return shape;
}

ShapeMacs pipeline_macs(const DenoiserArch& arch, const std::string& label,
                        std::int64_t frames) {
  return pipeline_macs(denoiser_layers(arch), label, arch.in_channels, frames);
}

const ShapeMacs& MacReport::at(const std::string& label) const {
  for (const auto& s : shapes)
    if (s.label == label) return s;
  throw std::invalid_argument("MacReport: no shape labeled '" + label + "'");
}

double MacReport::ratio(const std::string& a, const std::string& b) const {
  return double(at(a).total) / double(at(b).total);
}

MacReport compare_macs(const DenoiserArch& arch, std::int64_t raw_len,
                       int levels) {
  if (levels < 1) throw std::invalid_argument("compare_macs: levels >= 1");
  const std::int64_t block = std::int64_t(1) << levels;
  if (raw_len <= 0 || raw_len % block != 0)
    throw std::invalid_argument(
        "compare_macs: length must be a positive multiple of 2^levels");

  MacReport report;
  auto with_channels = [&](int ch) {
    DenoiserArch a = arch;
    a.in_channels = ch;
    return a;
  };
  report.shapes.push_back(pipeline_macs(with_channels(1), "raw", raw_len));
  report.shapes.push_back(
      pipeline_macs(with_channels(2), "wavelet", raw_len / 2));
  report.shapes.push_back(pipeline_macs(with_channels(int(block)),
                                        "multilevel", raw_len / block));
  return report;
}

std::string MacReport::to_records() const {
  std::ostringstream os;
  for (const auto& s : shapes) {
    os << "record=mac_shape label=" << s.label << " channels=" << s.channels
       << " frames=" << s.frames << " total=" << s.total << "\n";
    for (const auto& l : s.layers) {
      os << "record=mac_layer shape=" << s.label << " name=" << l.name
         << " kernel=" << l.kernel << " c_in=" << l.c_in
         << " c_out=" << l.c_out << " l_out=" << l.l_out
         << " per_in_channel=" << l.per_in_channel << " total=" << l.total
         << "\n";
    }
  }
  if (!shapes.empty()) {
    const std::string& base = shapes.front().label;
    for (std::size_t i = 1; i < shapes.size(); ++i) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", ratio(base, shapes[i].label));
      os << "record=mac_ratio numerator=" << base
         << " denominator=" << shapes[i].label << " value=" << buf << "\n";
    }
  }
  return os.str();
}

namespace {

std::int64_t to_i64(const std::string& s) { return std::stoll(s); }

// key=value tokens of one record line
std::vector<std::pair<std::string, std::string>> parse_record(
    const std::string& line) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("bad record token: " + tok);
    kv.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
  }
  return kv;
}

std::string lookup(const std::vector<std::pair<std::string, std::string>>& kv,
                   const std::string& key) {
  for (const auto& [k, v] : kv)
    if (k == key) return v;
  throw std::invalid_argument("record missing key '" + key + "'");
}

}  // namespace

MacReport MacReport::from_records(const std::string& text) {
  MacReport report;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto kv = parse_record(line);
    const std::string kind = lookup(kv, "record");
    if (kind == "mac_shape") {
      ShapeMacs s;
      s.label = lookup(kv, "label");
      s.channels = to_i64(lookup(kv, "channels"));
      s.frames = to_i64(lookup(kv, "frames"));
      s.total = to_i64(lookup(kv, "total"));
      report.shapes.push_back(std::move(s));
    } else if (kind == "mac_layer") {
      const std::string shape = lookup(kv, "shape");
      LayerMacs l;
      l.name = lookup(kv, "name");
      l.kernel = to_i64(lookup(kv, "kernel"));
      l.c_in = to_i64(lookup(kv, "c_in"));
      l.c_out = to_i64(lookup(kv, "c_out"));
      l.l_out = to_i64(lookup(kv, "l_out"));
      l.per_in_channel = to_i64(lookup(kv, "per_in_channel"));
      l.total = to_i64(lookup(kv, "total"));
      bool found = false;
      for (auto& s : report.shapes)
        if (s.label == shape) {
          s.layers.push_back(std::move(l));
          found = true;
          break;
        }
      if (!found)
        throw std::invalid_argument("mac_layer before its mac_shape record");
    } else if (kind == "mac_ratio") {
      // derived quantity, recomputed on demand
    } else {
      throw std::invalid_argument("unknown record kind '" + kind + "'");
    }
  }
  return report;
}

std::string MacReport::to_table() const {
  std::ostringstream os;
  os << "shape        channels    frames   first-layer/ch       total MACs\n";
  for (const auto& s : shapes) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-12s %8lld %9lld %16lld %16lld\n",
                  s.label.c_str(), (long long)s.channels, (long long)s.frames,
                  (long long)(s.layers.empty() ? 0 : s.first_layer_per_in_channel()),
                  (long long)s.total);
    os << buf;
  }
  if (shapes.size() > 1) {
    const std::string& base = shapes.front().label;
    for (std::size_t i = 1; i < shapes.size(); ++i) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "%s/%s total ratio: %.4f\n", base.c_str(),
                    shapes[i].label.c_str(), ratio(base, shapes[i].label));
      os << buf;
    }
  }
  return os.str();
}

std::string environment_descriptor() {
  std::ostringstream os;
  os << "compiler=" <<
#if defined(__clang__)
      "clang-" << __clang_major__ << "." << __clang_minor__
#elif defined(__GNUC__)
      "gcc-" << __GNUC__ << "." << __GNUC_MINOR__
#else
      "unknown"
#endif
      << ",eigen=" << EIGEN_WORLD_VERSION << "." << EIGEN_MAJOR_VERSION << "."
      << EIGEN_MINOR_VERSION << ",build="
#ifdef NDEBUG
      << "release"
#else
      << "debug"
#endif
      << ",threads=1";
  return os.str();
}

std::string TimingReport::to_records() const {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "record=timing label=%s kind=%s reps=%d mean_s=%.17g "
                "std_s=%.17g min_s=%.17g audio_s=%.17g rtf=%.17g env=%s\n",
                label.c_str(), kind.c_str(), reps, mean_seconds, std_seconds,
                min_seconds, audio_seconds, rtf, environment.c_str());
  return buf;
}

TimingReport TimingReport::from_records(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto kv = parse_record(line);
    if (lookup(kv, "record") != "timing") continue;
    TimingReport r;
    r.label = lookup(kv, "label");
    r.kind = lookup(kv, "kind");
    r.reps = int(to_i64(lookup(kv, "reps")));
    r.mean_seconds = std::stod(lookup(kv, "mean_s"));
    r.std_seconds = std::stod(lookup(kv, "std_s"));
    r.min_seconds = std::stod(lookup(kv, "min_s"));
    r.audio_seconds = std::stod(lookup(kv, "audio_s"));
    r.rtf = std::stod(lookup(kv, "rtf"));
    r.environment = lookup(kv, "env");
    return r;
  }
  throw std::invalid_argument("no timing record found");
}

namespace {

struct TimedWorkload {
  TinyDenoiser model;
  NoiseSchedule schedule;
  std::vector<Eigen::ArrayXXd> data;
  Rng rng;

  explicit TimedWorkload(const TimingConfig& cfg)
      : model(cfg.arch),
        schedule(linear_schedule(cfg.schedule_T, cfg.beta_start, cfg.beta_end)),
        rng(cfg.seed) {
    model.randomize(rng, 0.05);
    for (int i = 0; i < 4; ++i)
      data.push_back(rng.normal_matrix(cfg.arch.in_channels, cfg.frames));
  }

  // One full optimization step, mirroring train_loop's inner step.
  void train_step(AdamState& adam, const TimingConfig& cfg) {
    model.zero_grad();
    for (int b = 0; b < cfg.batch_size; ++b) {
      const Eigen::ArrayXXd& y0 = data[rng.uniform_index(data.size())];
      const int t = 1 + int(rng.uniform_index(std::uint64_t(schedule.T)));
      const Eigen::ArrayXXd eps = rng.normal_matrix(y0.rows(), y0.cols());
      const Eigen::ArrayXXd y_t = forward_marginal(y0, t, eps, schedule);
      const Eigen::ArrayXXd pred = model.forward(y_t, t);
      const Eigen::ArrayXXd gout =
          (2.0 / double(pred.size())) * (pred - eps);
      model.backward(gout);
    }
    model.grad() /= double(cfg.batch_size);
    adam_step(model.params(), model.grad(), adam, cfg.learning_rate);
  }
};

double elapsed_seconds(std::chrono::steady_clock::time_point from) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - from)
      .count();
}

}  // namespace

TimingReport time_training_step(const TimingConfig& cfg, int reps,
                                int warmup) {
  if (reps < 1) throw std::invalid_argument("time_training_step: reps >= 1");
  TimedWorkload work(cfg);
  AdamState adam;
  for (int i = 0; i < warmup; ++i) work.train_step(adam, cfg);

  std::vector<double> times(reps);
  for (int i = 0; i < reps; ++i) {
    const auto start = std::chrono::steady_clock::now();
    work.train_step(adam, cfg);
    times[i] = elapsed_seconds(start);
  }

  TimingReport r;
  r.label = cfg.label;
  r.kind = "train_step";
  r.reps = reps;
  double sum = 0.0, min = times[0];
  for (double x : times) {
    sum += x;
    if (x < min) min = x;
  }
  r.mean_seconds = sum / reps;
  double var = 0.0;
  for (double x : times) var += (x - r.mean_seconds) * (x - r.mean_seconds);
  r.std_seconds = reps > 1 ? std::sqrt(var / (reps - 1)) : 0.0;
  r.min_seconds = min;
  r.environment = environment_descriptor();
  return r;
}

TimingReport time_sampling(const TimingConfig& cfg, double audio_seconds,
                           double sample_rate) {
  if (!(audio_seconds > 0.0))
    throw std::invalid_argument("time_sampling: duration must be positive");
  TimedWorkload work(cfg);

  const auto samples = Eigen::Index(std::llround(audio_seconds * sample_rate));
  const Eigen::Index frames =
      std::max<Eigen::Index>(1, samples / cfg.arch.in_channels);

  const auto start = std::chrono::steady_clock::now();
  const Eigen::ArrayXXd y =
      sample(work.model, cfg.arch.in_channels, frames, work.schedule, work.rng);
  const double elapsed = elapsed_seconds(start);
  (void)y;

  TimingReport r;
  r.label = cfg.label;
  r.kind = "sampling";
  r.reps = 1;
  r.mean_seconds = elapsed;
  r.std_seconds = 0.0;
  r.min_seconds = elapsed;
  r.audio_seconds = audio_seconds;
  r.rtf = elapsed / audio_seconds;
  r.environment = environment_descriptor();
  return r;
}

}  // namespace wavediff
