#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "wavediff/denoiser.hpp"
#include "wavediff/wavelet.hpp"

namespace wavediff {

/// Packet file: "WDPK" magic, u32 version, u32 basis id, u32 levels,
/// u64 original_len, u64 pad_len, f64 sample_rate, then the coefficient
/// matrix row-major as little-endian 64-bit floats. Lossless.
void save_packet(const WaveletPacket& packet, const std::string& path);
WaveletPacket load_packet(const std::string& path);

/// Checkpoint container: "WDCK" magic, u32 version, u32 section count, then
/// sections. The denoiser section stores the architecture descriptor and the
/// flat parameter vector; the optional enhancer section stores one parameter
/// blob per block under the same header scheme. Round-trips bit-exactly.
struct Checkpoint {
  DenoiserArch arch;
  Eigen::VectorXd denoiser_params;
  bool has_enhancer = false;
  int enhancer_levels = 0;
  std::vector<Eigen::VectorXd> enhancer_params;  // coarse to fine
};

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace wavediff
