#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wavediff/conditional.hpp"
#include "wavediff/io.hpp"
#include "wavediff/wavelet.hpp"

namespace wavediff {

enum class PipelineMode { synthesis, enhancement };

std::string to_string(PipelineMode mode);
PipelineMode pipeline_mode_from_string(const std::string& name);

/// Full run description. Serializes to flat key=value text ('#' comments);
/// unknown keys are rejected.
struct RunConfig {
  PipelineMode mode = PipelineMode::synthesis;
  WaveletName basis = WaveletName::haar;
  int levels = 1;

  int T = 50;
  double beta_start = 1e-4;
  double beta_end = 0.05;
  MScheduleKind m_schedule = MScheduleKind::ratio;

  int hidden = 16;
  int blocks = 4;
  int emb_dim = 16;
  /// Enhancement mode: channel-concatenate the noisy packet as network
  /// conditioning input. Turning this off makes the m==0 schedule reduce the
  /// whole pipeline bit-for-bit to the synthesis pathway.
  bool condition_on_noisy = true;

  bool enhancer = false;
  double detail_gain_init = 1.0;

  int train_steps = 500;
  int batch_size = 16;
  double learning_rate = 2e-4;
  std::uint64_t seed = 1;

  double sample_rate = 16000.0;
  int item_samples = 1024;
  int data_items = 32;
  double snr_db = 10.0;
  std::string data_dir;  // empty = synthetic harmonic data

  DenoiserArch denoiser_arch() const;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);
std::string to_text(const RunConfig& config);

/// Training data in the wavelet domain: clean packets, and for enhancement
/// mode the paired noisy packets.
struct TrainingData {
  std::vector<Eigen::ArrayXXd> clean;
  std::vector<std::pair<Eigen::ArrayXXd, Eigen::ArrayXXd>> pairs;
};

TrainingData build_training_data(const RunConfig& config);

struct TrainArtifacts {
  Checkpoint checkpoint;
  std::vector<double> trace;
};

/// Runs the full training loop (DWT -> optional enhancer -> denoiser) and
/// returns the trained model plus the per-step loss trace.
TrainArtifacts train(const RunConfig& config);

void save_loss_trace(const std::vector<double>& trace, const std::string& path);

/// Unconditional generation: sample the reverse chain, inverse transform,
/// truncate to the requested sample count.
Waveform generate(const RunConfig& config, const Checkpoint& checkpoint,
                  Eigen::Index length_samples, Rng& rng);
Waveform generate_with(const RunConfig& config, const Denoiser& denoiser,
                       Eigen::Index length_samples, Rng& rng);

/// Conditional enhancement of a noisy waveform: decompose, run the
/// conditional reverse chain anchored on the noisy packet, reconstruct.
Waveform enhance(const RunConfig& config, const Checkpoint& checkpoint,
                 const Waveform& noisy, Rng& rng);
Waveform enhance_with(const RunConfig& config, const Denoiser& denoiser,
                      const Waveform& noisy, Rng& rng);

}  // namespace wavediff
