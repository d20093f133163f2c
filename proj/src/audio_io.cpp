#include "wavediff/audio_io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "wavediff/rng.hpp"

namespace wavediff {

namespace {

std::uint16_t read_u16(const unsigned char* p) {
  return std::uint16_t(p[0]) | std::uint16_t(p[1]) << 8;
}

std::uint32_t read_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 |
         std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(v & 0xff);
  out.push_back(v >> 8 & 0xff);
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(v & 0xff);
  out.push_back(v >> 8 & 0xff);
  out.push_back(v >> 16 & 0xff);
  out.push_back(v >> 24 & 0xff);
}

void put_tag(std::vector<unsigned char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_wav: cannot open '" + path + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());

  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw std::runtime_error("read_wav: malformed RIFF/WAVE header in '" +
                             path + "'");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t data_off = 0, data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size())
      throw std::runtime_error("read_wav: truncated chunk in '" + path + "'");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16)
        throw std::runtime_error("read_wav: malformed fmt chunk in '" + path +
                                 "'");
      format = read_u16(bytes.data() + body);
      channels = read_u16(bytes.data() + body + 2);
      rate = read_u32(bytes.data() + body + 4);
      bits = read_u16(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data_off = body;
      data_len = size;
    }
    pos = body + size + (size % 2);  // chunks are word-aligned
  }

  if (!have_fmt || data_off == 0)
    throw std::runtime_error("read_wav: missing fmt or data chunk in '" +
                             path + "'");
  if (channels != 1)
    throw std::runtime_error("read_wav: unsupported format (only mono): '" +
                             path + "'");
  if (rate == 0)
    throw std::runtime_error("read_wav: malformed sample rate in '" + path +
                             "'");

  Waveform w;
  w.sample_rate = double(rate);
  const unsigned char* data = bytes.data() + data_off;

  if (format == kFormatPcm && bits == 16) {
    const std::size_t n = data_len / 2;
    w.samples.resize(Eigen::Index(n));
    for (std::size_t i = 0; i < n; ++i) {
      const std::int16_t v = std::int16_t(read_u16(data + 2 * i));
      w.samples[Eigen::Index(i)] = double(v) / 32768.0;
    }
  } else if (format == kFormatFloat && bits == 32) {
    const std::size_t n = data_len / 4;
    w.samples.resize(Eigen::Index(n));
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t u = read_u32(data + 4 * i);
      float f;
      std::memcpy(&f, &u, sizeof f);
      w.samples[Eigen::Index(i)] = double(f);
    }
  } else {
    throw std::runtime_error(
        "read_wav: unsupported format (need PCM16 or float32): '" + path +
        "'");
  }
  return w;
}

void write_wav(const Waveform& w, const std::string& path, WavFormat format) {
  if (!w.samples.allFinite())
    throw std::invalid_argument("write_wav: samples must be finite");
  const std::size_t n = std::size_t(w.samples.size());
  const std::uint16_t bytes_per =
      format == WavFormat::pcm16 ? 2 : 4;
  const std::uint32_t data_size = std::uint32_t(n * bytes_per);

  std::vector<unsigned char> out;
  out.reserve(44 + data_size);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_size);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, format == WavFormat::pcm16 ? kFormatPcm : kFormatFloat);
  put_u16(out, 1);  // mono
  const std::uint32_t rate = std::uint32_t(std::llround(w.sample_rate));
  put_u32(out, rate);
  put_u32(out, rate * bytes_per);
  put_u16(out, bytes_per);
  put_u16(out, bytes_per * 8);
  put_tag(out, "data");
  put_u32(out, data_size);

  if (format == WavFormat::pcm16) {
    for (std::size_t i = 0; i < n; ++i) {
      double v = std::round(w.samples[Eigen::Index(i)] * 32768.0);
      if (v > 32767.0) v = 32767.0;
      if (v < -32768.0) v = -32768.0;
      put_u16(out, std::uint16_t(std::int16_t(v)));
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const float f = float(w.samples[Eigen::Index(i)]);
      std::uint32_t u;
      std::memcpy(&u, &f, sizeof u);
      put_u32(out, u);
    }
  }

  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_wav: cannot open '" + path + "'");
  os.write(reinterpret_cast<const char*>(out.data()),
           std::streamsize(out.size()));
  if (!os) throw std::runtime_error("write_wav: write failed for '" + path + "'");
}

std::pair<Waveform, Waveform> synth_pair(const SyntheticSpec& spec) {
  if (!(spec.duration_seconds > 0.0) || !(spec.sample_rate > 0.0) ||
      spec.harmonics < 1 ||
      !(spec.fundamental_min_hz <= spec.fundamental_max_hz))
    throw std::invalid_argument("synth_pair: bad spec");

  const Eigen::Index n =
      Eigen::Index(std::llround(spec.duration_seconds * spec.sample_rate));
  if (n < 1) throw std::invalid_argument("synth_pair: zero-length signal");

  Rng rng(spec.seed);
  const double f0 = spec.fundamental_min_hz +
                    (spec.fundamental_max_hz - spec.fundamental_min_hz) *
                        rng.uniform();
  std::vector<double> phase(std::size_t(spec.harmonics));
  for (auto& p : phase) p = 2.0 * std::numbers::pi * rng.uniform();

  Eigen::ArrayXd carrier = Eigen::ArrayXd::Zero(n);
  for (int k = 1; k <= spec.harmonics; ++k) {
    const double amp = 1.0 / double(k);
    const double omega = 2.0 * std::numbers::pi * k * f0 / spec.sample_rate;
    for (Eigen::Index i = 0; i < n; ++i)
      carrier[i] += amp * std::sin(omega * double(i) + phase[std::size_t(k - 1)]);
  }
  const double peak = carrier.abs().maxCoeff();
  if (peak > 0.0) carrier /= peak;

  Eigen::ArrayXd envelope(n);
  const double am = 2.0 * std::numbers::pi * spec.am_rate_hz / spec.sample_rate;
  for (Eigen::Index i = 0; i < n; ++i)
    envelope[i] = (1.0 + 0.5 * std::sin(am * double(i))) / 1.5;

  Waveform clean;
  clean.sample_rate = spec.sample_rate;
  clean.samples = 0.6 * envelope * carrier;

  Waveform noisy = clean;
  if (std::isfinite(spec.snr_db)) {
    const Eigen::ArrayXd noise = rng.normal_vector(n);
    const double signal_energy = clean.samples.square().sum();
    const double noise_energy = noise.square().sum();
    if (noise_energy > 0.0 && signal_energy > 0.0) {
      const double scale = std::sqrt(
          signal_energy / (noise_energy * std::pow(10.0, spec.snr_db / 10.0)));
      noisy.samples = clean.samples + scale * noise;
    }
  }
  return {std::move(clean), std::move(noisy)};
}

}  // namespace wavediff
