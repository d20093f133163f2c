#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "wavediff/denoiser.hpp"

namespace wavediff {

/// Multiply-accumulate count of one convolution output channel slab:
/// kernel * c_out * l_out, exact integer arithmetic.
std::int64_t conv_macs(std::int64_t kernel, std::int64_t c_out,
                       std::int64_t l_out);

struct ConvLayerSpec {
  std::string name;
  std::int64_t kernel = 1;
  std::int64_t c_in = 1;
  std::int64_t c_out = 1;
};

/// Convolution layers of the tiny denoiser for a given input channel count.
std::vector<ConvLayerSpec> denoiser_layers(const DenoiserArch& arch);

struct LayerMacs {
  std::string name;
  std::int64_t kernel = 0;
  std::int64_t c_in = 0;
  std::int64_t c_out = 0;
  std::int64_t l_out = 0;
  std::int64_t per_in_channel = 0;  // conv_macs(kernel, c_out, l_out)
  std::int64_t total = 0;           // per_in_channel * c_in

  bool operator==(const LayerMacs&) const = default;
};

struct ShapeMacs {
  std::string label;
  std::int64_t channels = 0;
  std::int64_t frames = 0;
  std::vector<LayerMacs> layers;
  std::int64_t total = 0;

  std::int64_t first_layer_per_in_channel() const;
  bool operator==(const ShapeMacs&) const = default;
};

/// Per-layer MAC counts of the given layers on a channels x frames input
/// (stride-1 convolutions, so l_out == frames throughout).
ShapeMacs pipeline_macs(const std::vector<ConvLayerSpec>& layers,
                        const std::string& label, std::int64_t channels,
                        std::int64_t frames);

/// Denoiser variant: layers derived from the architecture, with the input
/// channel count taken from arch.in_channels.
ShapeMacs pipeline_macs(const DenoiserArch& arch, const std::string& label,
                        std::int64_t frames);

/// Analytic compute comparison across input shapes of equal sample count.
struct MacReport {
  std::vector<ShapeMacs> shapes;

  const ShapeMacs& at(const std::string& label) const;
  /// total(a) / total(b)
  double ratio(const std::string& a, const std::string& b) const;

  std::string to_records() const;
  static MacReport from_records(const std::string& text);
  std::string to_table() const;

  bool operator==(const MacReport&) const = default;
};

/// raw 1 x N, wavelet 2 x N/2, multilevel 2^levels x N/2^levels, all with
/// the same hidden architecture. N must be divisible by 2^levels.
MacReport compare_macs(const DenoiserArch& arch, std::int64_t raw_len,
                       int levels = 2);

struct TimingConfig {
  std::string label;
  DenoiserArch arch;          // in_channels doubles as the shape channel count
  Eigen::Index frames = 8192;
  int schedule_T = 50;
  double beta_start = 1e-4;
  double beta_end = 0.05;
  int batch_size = 1;
  double learning_rate = 2e-4;
  std::uint64_t seed = 1;
};

struct TimingReport {
  std::string label;
  std::string kind;  // "train_step" or "sampling"
  int reps = 0;
  double mean_seconds = 0.0;
  double std_seconds = 0.0;
  double min_seconds = 0.0;
  double audio_seconds = 0.0;  // sampling only
  double rtf = 0.0;            // inference seconds / generated seconds
  std::string environment;

  std::string to_records() const;
  static TimingReport from_records(const std::string& text);
};

std::string environment_descriptor();

/// Times full training steps (forward, backward, Adam) on fixed seeded
/// synthetic packets; warmup reps are run and discarded first.
TimingReport time_training_step(const TimingConfig& cfg, int reps,
                                int warmup = 3);

/// Times the full reverse chain generating the requested amount of audio and
/// reports RTF = elapsed / audio_seconds.
TimingReport time_sampling(const TimingConfig& cfg, double audio_seconds,
                           double sample_rate = 16000.0);

}  // namespace wavediff
