#include "wavediff/io.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace wavediff {

namespace {

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(v >> 8 * i & 0xff);
}

void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(v >> 8 * i & 0xff);
}

void put_f64(std::vector<unsigned char>& out, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, sizeof v);
  put_u64(out, v);
}

class Reader {
 public:
  Reader(std::vector<unsigned char> bytes, std::string path)
      : bytes_(std::move(bytes)), path_(std::move(path)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(bytes_[pos_ + i]) << 8 * i;
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(bytes_[pos_ + i]) << 8 * i;
    pos_ += 8;
    return v;
  }

  double f64() {
    const std::uint64_t v = u64();
    double d;
    std::memcpy(&d, &v, sizeof d);
    return d;
  }

  void magic(const char* tag) {
    need(4);
    if (std::memcmp(bytes_.data() + pos_, tag, 4) != 0)
      throw std::runtime_error("'" + path_ + "': bad magic, expected " + tag);
    pos_ += 4;
  }

  bool exhausted() const { return pos_ == bytes_.size(); }
  const std::string& path() const { return path_; }

 private:
  void need(std::size_t n) {
    if (pos_ + n > bytes_.size())
      throw std::runtime_error("'" + path_ + "': truncated file");
  }
  std::vector<unsigned char> bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

Reader open_reader(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return Reader(std::move(bytes), path);
}

void write_file(const std::vector<unsigned char>& bytes,
                const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()),
           std::streamsize(bytes.size()));
  if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

constexpr std::uint32_t kPacketVersion = 1;
constexpr std::uint32_t kCheckpointVersion = 1;
constexpr std::uint32_t kSectionDenoiser = 1;
constexpr std::uint32_t kSectionEnhancer = 2;

}  // namespace

void save_packet(const WaveletPacket& packet, const std::string& path) {
  std::vector<unsigned char> out;
  out.reserve(44 + std::size_t(packet.data.size()) * 8);
  out.insert(out.end(), {'W', 'D', 'P', 'K'});
  put_u32(out, kPacketVersion);
  put_u32(out, std::uint32_t(packet.basis));
  put_u32(out, std::uint32_t(packet.levels));
  put_u64(out, std::uint64_t(packet.original_len));
  put_u64(out, std::uint64_t(packet.pad_len));
  put_f64(out, packet.sample_rate);
  for (Eigen::Index r = 0; r < packet.data.rows(); ++r)
    for (Eigen::Index c = 0; c < packet.data.cols(); ++c)
      put_f64(out, packet.data(r, c));
  write_file(out, path);
}

WaveletPacket load_packet(const std::string& path) {
  Reader in = open_reader(path);
  in.magic("WDPK");
  if (in.u32() != kPacketVersion)
    throw std::runtime_error("'" + path + "': unsupported packet version");

  WaveletPacket packet;
  const std::uint32_t basis_id = in.u32();
  if (basis_id > std::uint32_t(WaveletName::cdf53))
    throw std::runtime_error("'" + path + "': unknown basis id");
  packet.basis = WaveletName(basis_id);
  packet.levels = int(in.u32());
  packet.original_len = Eigen::Index(in.u64());
  packet.pad_len = Eigen::Index(in.u64());
  packet.sample_rate = in.f64();

  if (packet.levels < 1 || packet.levels > 30 || packet.original_len < 1)
    throw std::runtime_error("'" + path + "': inconsistent packet metadata");
  const Eigen::Index channels = Eigen::Index(1) << packet.levels;
  const Eigen::Index padded = packet.original_len + packet.pad_len;
  if (packet.pad_len < 0 || packet.pad_len >= channels ||
      padded % channels != 0)
    throw std::runtime_error("'" + path + "': inconsistent packet metadata");
  const Eigen::Index frames = padded / channels;

  packet.data.resize(channels, frames);
  for (Eigen::Index r = 0; r < channels; ++r)
    for (Eigen::Index c = 0; c < frames; ++c) packet.data(r, c) = in.f64();
  if (!in.exhausted())
    throw std::runtime_error("'" + path + "': trailing bytes");
  return packet;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  std::vector<unsigned char> out;
  out.insert(out.end(), {'W', 'D', 'C', 'K'});
  put_u32(out, kCheckpointVersion);
  put_u32(out, checkpoint.has_enhancer ? 2 : 1);

  put_u32(out, kSectionDenoiser);
  const DenoiserArch& a = checkpoint.arch;
  put_u32(out, std::uint32_t(a.in_channels));
  put_u32(out, std::uint32_t(a.cond_channels));
  put_u32(out, std::uint32_t(a.hidden));
  put_u32(out, std::uint32_t(a.blocks));
  put_u32(out, std::uint32_t(a.kernel));
  put_u32(out, std::uint32_t(a.dilation_base));
  put_u32(out, std::uint32_t(a.emb_dim));
  put_u64(out, std::uint64_t(checkpoint.denoiser_params.size()));
  for (Eigen::Index i = 0; i < checkpoint.denoiser_params.size(); ++i)
    put_f64(out, checkpoint.denoiser_params[i]);

  if (checkpoint.has_enhancer) {
    put_u32(out, kSectionEnhancer);
    put_u32(out, std::uint32_t(checkpoint.enhancer_levels));
    put_u32(out, std::uint32_t(checkpoint.enhancer_params.size()));
    for (const auto& block : checkpoint.enhancer_params) {
      put_u64(out, std::uint64_t(block.size()));
      for (Eigen::Index i = 0; i < block.size(); ++i) put_f64(out, block[i]);
    }
  }
  write_file(out, path);
}

Checkpoint load_checkpoint(const std::string& path) {
  Reader in = open_reader(path);
  in.magic("WDCK");
  if (in.u32() != kCheckpointVersion)
    throw std::runtime_error("'" + path + "': unsupported checkpoint version");
  const std::uint32_t sections = in.u32();

  Checkpoint c;
  for (std::uint32_t s = 0; s < sections; ++s) {
    const std::uint32_t tag = in.u32();
    if (tag == kSectionDenoiser) {
      c.arch.in_channels = int(in.u32());
      c.arch.cond_channels = int(in.u32());
      c.arch.hidden = int(in.u32());
      c.arch.blocks = int(in.u32());
      c.arch.kernel = int(in.u32());
      c.arch.dilation_base = int(in.u32());
      c.arch.emb_dim = int(in.u32());
      const std::uint64_t count = in.u64();
      if (count != std::uint64_t(c.arch.param_count()))
        throw std::runtime_error("'" + path +
                                 "': parameter count does not match the "
                                 "architecture descriptor");
      c.denoiser_params.resize(Eigen::Index(count));
      for (Eigen::Index i = 0; i < c.denoiser_params.size(); ++i)
        c.denoiser_params[i] = in.f64();
    } else if (tag == kSectionEnhancer) {
      c.has_enhancer = true;
      c.enhancer_levels = int(in.u32());
      const std::uint32_t blocks = in.u32();
      c.enhancer_params.resize(blocks);
      for (auto& block : c.enhancer_params) {
        block.resize(Eigen::Index(in.u64()));
        for (Eigen::Index i = 0; i < block.size(); ++i) block[i] = in.f64();
      }
    } else {
      throw std::runtime_error("'" + path + "': unknown checkpoint section");
    }
  }
  if (!in.exhausted())
    throw std::runtime_error("'" + path + "': trailing bytes");
  return c;
}

}  // namespace wavediff
