#include "wavediff/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "wavediff/audio_io.hpp"
#include "wavediff/diffusion.hpp"
#include "wavediff/enhancer.hpp"

namespace wavediff {

std::string to_string(PipelineMode mode) {
  return mode == PipelineMode::synthesis ? "synthesis" : "enhancement";
}

PipelineMode pipeline_mode_from_string(const std::string& name) {
  if (name == "synthesis") return PipelineMode::synthesis;
  if (name == "enhancement") return PipelineMode::enhancement;
  throw std::invalid_argument("unknown mode '" + name +
                              "' (valid: synthesis, enhancement)");
}

DenoiserArch RunConfig::denoiser_arch() const {
  DenoiserArch arch;
  arch.in_channels = 1 << levels;
  arch.cond_channels =
      (mode == PipelineMode::enhancement && condition_on_noisy) ? 1 << levels
                                                                : 0;
  arch.hidden = hidden;
  arch.blocks = blocks;
  arch.emb_dim = emb_dim;
  return arch;
}

namespace {

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw std::invalid_argument("config: bad boolean for '" + key + "': " + v);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  RunConfig c;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "mode") c.mode = pipeline_mode_from_string(value);
    else if (key == "basis") c.basis = wavelet_from_string(value);
    else if (key == "levels") c.levels = std::stoi(value);
    else if (key == "T") c.T = std::stoi(value);
    else if (key == "beta_start") c.beta_start = std::stod(value);
    else if (key == "beta_end") c.beta_end = std::stod(value);
    else if (key == "m_schedule") c.m_schedule = m_schedule_from_string(value);
    else if (key == "hidden") c.hidden = std::stoi(value);
    else if (key == "blocks") c.blocks = std::stoi(value);
    else if (key == "emb_dim") c.emb_dim = std::stoi(value);
    else if (key == "condition_on_noisy")
      c.condition_on_noisy = parse_bool(value, key);
    else if (key == "enhancer") c.enhancer = parse_bool(value, key);
    else if (key == "detail_gain_init") c.detail_gain_init = std::stod(value);
    else if (key == "train_steps") c.train_steps = std::stoi(value);
    else if (key == "batch_size") c.batch_size = std::stoi(value);
    else if (key == "learning_rate") c.learning_rate = std::stod(value);
    else if (key == "seed") c.seed = std::stoull(value);
    else if (key == "sample_rate") c.sample_rate = std::stod(value);
    else if (key == "item_samples") c.item_samples = std::stoi(value);
    else if (key == "data_items") c.data_items = std::stoi(value);
    else if (key == "snr_db")
      c.snr_db = value == "inf" ? std::numeric_limits<double>::infinity()
                                : std::stod(value);
    else if (key == "data_dir") c.data_dir = value;
    else
      throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  if (c.levels < 1) throw std::invalid_argument("config: levels must be >= 1");
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string to_text(const RunConfig& c) {
  std::ostringstream os;
  os << "mode=" << to_string(c.mode) << "\n"
     << "basis=" << to_string(c.basis) << "\n"
     << "levels=" << c.levels << "\n"
     << "T=" << c.T << "\n"
     << "beta_start=" << fmt_double(c.beta_start) << "\n"
     << "beta_end=" << fmt_double(c.beta_end) << "\n"
     << "m_schedule=" << to_string(c.m_schedule) << "\n"
     << "hidden=" << c.hidden << "\n"
     << "blocks=" << c.blocks << "\n"
     << "emb_dim=" << c.emb_dim << "\n"
     << "condition_on_noisy=" << (c.condition_on_noisy ? 1 : 0) << "\n"
     << "enhancer=" << (c.enhancer ? 1 : 0) << "\n"
     << "detail_gain_init=" << fmt_double(c.detail_gain_init) << "\n"
     << "train_steps=" << c.train_steps << "\n"
     << "batch_size=" << c.batch_size << "\n"
     << "learning_rate=" << fmt_double(c.learning_rate) << "\n"
     << "seed=" << c.seed << "\n"
     << "sample_rate=" << fmt_double(c.sample_rate) << "\n"
     << "item_samples=" << c.item_samples << "\n"
     << "data_items=" << c.data_items << "\n"
     << "snr_db="
     << (std::isinf(c.snr_db) ? std::string("inf") : fmt_double(c.snr_db))
     << "\n";
  if (!c.data_dir.empty()) os << "data_dir=" << c.data_dir << "\n";
  return os.str();
}

namespace {

std::vector<Waveform> load_directory_items(const RunConfig& config) {
  namespace fs = std::filesystem;
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(config.data_dir))
    if (entry.path().extension() == ".wav") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty())
    throw std::runtime_error("no .wav files in '" + config.data_dir + "'");

  std::vector<Waveform> items;
  for (const auto& f : files) {
    const Waveform w = read_wav(f);
    const Eigen::Index len = config.item_samples;
    for (Eigen::Index off = 0; off + len <= w.samples.size(); off += len) {
      Waveform piece;
      piece.sample_rate = w.sample_rate;
      piece.samples = w.samples.segment(off, len);
      items.push_back(std::move(piece));
    }
  }
  if (items.empty())
    throw std::runtime_error("data files shorter than item_samples");
  return items;
}

}  // namespace

TrainingData build_training_data(const RunConfig& config) {
  const WaveletBasis basis = basis_by_name(config.basis);
  TrainingData data;

  if (!config.data_dir.empty()) {
    for (const auto& w : load_directory_items(config)) {
      WaveletPacket p = decompose(w, basis, config.levels);
      if (config.mode == PipelineMode::enhancement)
        data.pairs.emplace_back(p.data, p.data);
      else
        data.clean.push_back(std::move(p.data));
    }
    return data;
  }

  SyntheticSpec spec;
  spec.sample_rate = config.sample_rate;
  spec.duration_seconds = double(config.item_samples) / config.sample_rate;
  spec.snr_db = config.snr_db;
  for (int i = 0; i < config.data_items; ++i) {
    spec.seed = config.seed * 1000003 + std::uint64_t(i);
    auto [clean, noisy] = synth_pair(spec);
    WaveletPacket pc = decompose(clean, basis, config.levels);
    if (config.mode == PipelineMode::enhancement) {
      WaveletPacket pn = decompose(noisy, basis, config.levels);
      data.pairs.emplace_back(std::move(pc.data), std::move(pn.data));
    } else {
      data.clean.push_back(std::move(pc.data));
    }
  }
  return data;
}

TrainArtifacts train(const RunConfig& config) {
  const NoiseSchedule schedule =
      linear_schedule(config.T, config.beta_start, config.beta_end);
  const TrainingData data = build_training_data(config);

  Rng rng(config.seed);
  TinyDenoiser model(config.denoiser_arch());
  model.randomize(rng, 0.05);

  MultiLevelEnhancer enhancer(config.levels, config.detail_gain_init);

  TrainOptions options;
  options.steps = config.train_steps;
  options.batch_size = config.batch_size;
  options.learning_rate = config.learning_rate;
  options.enhancer = config.enhancer ? &enhancer : nullptr;

  TrainArtifacts out;
  if (config.mode == PipelineMode::enhancement) {
    const ConditionalSchedule cs =
        interpolation_schedule(schedule, config.m_schedule);
    out.trace = train_loop(model, data.pairs, cs, options, rng);
  } else {
    out.trace = train_loop(model, data.clean, schedule, options, rng);
  }

  out.checkpoint.arch = model.arch();
  out.checkpoint.denoiser_params = model.params();
  if (config.enhancer) {
    out.checkpoint.has_enhancer = true;
    out.checkpoint.enhancer_levels = config.levels;
    for (const auto& block : enhancer.blocks())
      out.checkpoint.enhancer_params.push_back(block.params());
  }
  return out;
}

void save_loss_trace(const std::vector<double>& trace,
                     const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  for (double v : trace) os << fmt_double(v) << "\n";
  if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

namespace {

// Trained model (+ optional enhancer front-end) restored from a checkpoint.
struct RestoredModel {
  TinyDenoiser net;
  std::unique_ptr<MultiLevelEnhancer> enhancer;
  std::unique_ptr<EnhancedDenoiser> wrapped;

  const Denoiser& denoiser() const {
    if (wrapped) return *wrapped;
    return net;
  }
};

std::unique_ptr<RestoredModel> restore(const RunConfig& config,
                                       const Checkpoint& checkpoint) {
  if (checkpoint.arch != config.denoiser_arch())
    throw std::runtime_error(
        "checkpoint architecture does not match the run configuration");
  auto model = std::make_unique<RestoredModel>(RestoredModel{
      TinyDenoiser(checkpoint.arch), nullptr, nullptr});
  model->net.params() = checkpoint.denoiser_params;

  if (checkpoint.has_enhancer) {
    if (checkpoint.enhancer_levels != config.levels)
      throw std::runtime_error("checkpoint enhancer levels mismatch");
    model->enhancer = std::make_unique<MultiLevelEnhancer>(config.levels);
    auto& blocks = model->enhancer->blocks();
    if (checkpoint.enhancer_params.size() != blocks.size())
      throw std::runtime_error("checkpoint enhancer block count mismatch");
    for (std::size_t j = 0; j < blocks.size(); ++j) {
      if (checkpoint.enhancer_params[j].size() != blocks[j].params().size())
        throw std::runtime_error("checkpoint enhancer parameter size mismatch");
      blocks[j].params() = checkpoint.enhancer_params[j];
    }
    model->wrapped =
        std::make_unique<EnhancedDenoiser>(model->net, *model->enhancer);
  }
  return model;
}

}  // namespace

Waveform generate_with(const RunConfig& config, const Denoiser& denoiser,
                       Eigen::Index length_samples, Rng& rng) {
  if (length_samples < 1)
    throw std::invalid_argument("generate: length must be positive");
  const Eigen::Index block = Eigen::Index(1) << config.levels;
  const Eigen::Index pad = (block - length_samples % block) % block;
  const Eigen::Index frames = (length_samples + pad) / block;

  WaveletPacket packet;
  packet.data = sample(denoiser, block, frames,
                       linear_schedule(config.T, config.beta_start,
                                       config.beta_end),
                       rng);
  packet.basis = config.basis;
  packet.levels = config.levels;
  packet.original_len = length_samples;
  packet.pad_len = pad;
  packet.sample_rate = config.sample_rate;
  return reconstruct(packet);
}

Waveform generate(const RunConfig& config, const Checkpoint& checkpoint,
                  Eigen::Index length_samples, Rng& rng) {
  const auto model = restore(config, checkpoint);
  return generate_with(config, model->denoiser(), length_samples, rng);
}

Waveform enhance_with(const RunConfig& config, const Denoiser& denoiser,
                      const Waveform& noisy, Rng& rng) {
  const WaveletBasis basis = basis_by_name(config.basis);
  WaveletPacket packet = decompose(noisy, basis, config.levels);

  const NoiseSchedule schedule =
      linear_schedule(config.T, config.beta_start, config.beta_end);
  const ConditionalSchedule cs =
      interpolation_schedule(schedule, config.m_schedule);

  packet.data = cond_sample(denoiser, packet.data, cs, rng);
  return reconstruct(packet);
}

Waveform enhance(const RunConfig& config, const Checkpoint& checkpoint,
                 const Waveform& noisy, Rng& rng) {
  const auto model = restore(config, checkpoint);
  return enhance_with(config, model->denoiser(), noisy, rng);
}

}  // namespace wavediff
