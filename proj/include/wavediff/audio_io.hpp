#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "wavediff/wavelet.hpp"

namespace wavediff {

enum class WavFormat { pcm16, float32 };

/// Reads a mono RIFF/WAVE file, PCM16 or IEEE float32. PCM16 samples are
/// normalized by 1/32768. Anything else (stereo, other bit depths) is an
/// unsupported-format error; structural problems are malformed-header errors.
Waveform read_wav(const std::string& path);

/// Writes a mono RIFF/WAVE file. pcm16 clamps to [-1, 1] and rounds half
/// away from zero; float32 stores the samples narrowed to float.
void write_wav(const Waveform& w, const std::string& path, WavFormat format);

/// Recipe for (clean, noisy) pairs: an AM-modulated harmonic stack with white
/// noise mixed in at an exact SNR. Same spec and seed always produce the
/// identical pair.
struct SyntheticSpec {
  double duration_seconds = 1.0;
  double sample_rate = 16000.0;
  int harmonics = 8;
  double fundamental_min_hz = 80.0;
  double fundamental_max_hz = 300.0;
  double am_rate_hz = 4.0;
  double snr_db = 10.0;  // +infinity disables the noise entirely
  std::uint64_t seed = 1;
};

/// Returns (clean, noisy); achieved SNR matches the request to well within
/// 0.01 dB because the noise is scaled from the exact energy ratio.
std::pair<Waveform, Waveform> synth_pair(const SyntheticSpec& spec);

}  // namespace wavediff
