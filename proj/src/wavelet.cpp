#include "wavediff/wavelet.hpp"

#include <cmath>
#include <stdexcept>

namespace wavediff {

namespace {

// analysis_hi[k] = (-1)^k * synthesis_lo[N-1-k]; same rule builds
// synthesis_hi from analysis_lo.
Eigen::VectorXd quadrature_mirror(const Eigen::VectorXd& lowpass) {
  const Eigen::Index n = lowpass.size();
  Eigen::VectorXd hi(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    hi[k] = sign * lowpass[n - 1 - k];
  }
  return hi;
}

WaveletBasis from_lowpass_pair(WaveletName name, Eigen::VectorXd analysis_lo,
                               Eigen::VectorXd synthesis_lo) {
  WaveletBasis basis;
  basis.name = name;
  basis.analysis_hi = quadrature_mirror(synthesis_lo);
  basis.synthesis_hi = quadrature_mirror(analysis_lo);
  basis.analysis_lo = std::move(analysis_lo);
  basis.synthesis_lo = std::move(synthesis_lo);
  return basis;
}

Eigen::Index wrap(Eigen::Index i, Eigen::Index n) {
  i %= n;
  return i < 0 ? i + n : i;
}

}  // namespace

std::string to_string(WaveletName name) {
  switch (name) {
    case WaveletName::haar: return "haar";
    case WaveletName::bior1_1: return "bior1.1";
    case WaveletName::bior1_3: return "bior1.3";
    case WaveletName::coif1: return "coif1";
    case WaveletName::db2: return "db2";
    case WaveletName::cdf53: return "cdf53";
  }
  throw std::logic_error("to_string: bad WaveletName");
}

WaveletName wavelet_from_string(const std::string& name) {
  if (name == "haar") return WaveletName::haar;
  if (name == "bior1.1" || name == "bior1_1") return WaveletName::bior1_1;
  if (name == "bior1.3" || name == "bior1_3") return WaveletName::bior1_3;
  if (name == "coif1") return WaveletName::coif1;
  if (name == "db2") return WaveletName::db2;
  if (name == "cdf53") return WaveletName::cdf53;
  throw std::invalid_argument(
      "unknown wavelet basis '" + name +
      "' (valid: haar, bior1.1, bior1.3, coif1, db2, cdf53)");
}

WaveletBasis basis_by_name(WaveletName name) {
  const double s2 = std::sqrt(2.0);
  switch (name) {
    case WaveletName::haar:
    case WaveletName::bior1_1: {
      Eigen::VectorXd lo(2);
      lo << 1.0 / s2, 1.0 / s2;
      return from_lowpass_pair(name, lo, lo);
    }
    case WaveletName::db2: {
      // Two vanishing moments; solving the orthonormality constraints gives
      // (1 +- sqrt(3), 3 +- sqrt(3)) / (4 sqrt(2)).
      const double s3 = std::sqrt(3.0);
      Eigen::VectorXd h(4);
      h << (1.0 + s3) / (4.0 * s2), (3.0 + s3) / (4.0 * s2),
          (3.0 - s3) / (4.0 * s2), (1.0 - s3) / (4.0 * s2);
      return from_lowpass_pair(name, h, h);
    }
    case WaveletName::coif1: {
      const double s7 = std::sqrt(7.0);
      Eigen::VectorXd h(6);
      h << (1.0 - s7) / (16.0 * s2), (5.0 + s7) / (16.0 * s2),
          (14.0 + 2.0 * s7) / (16.0 * s2), (14.0 - 2.0 * s7) / (16.0 * s2),
          (1.0 - s7) / (16.0 * s2), (s7 - 3.0) / (16.0 * s2);
      return from_lowpass_pair(name, h, h);
    }
    case WaveletName::bior1_3: {
      Eigen::VectorXd alo(6), slo(6);
      alo << -1.0 / (8.0 * s2), 1.0 / (8.0 * s2), 8.0 / (8.0 * s2),
          8.0 / (8.0 * s2), 1.0 / (8.0 * s2), -1.0 / (8.0 * s2);
      slo << 0.0, 0.0, 1.0 / s2, 1.0 / s2, 0.0, 0.0;
      return from_lowpass_pair(name, alo, slo);
    }
    case WaveletName::cdf53: {
      // Paper filters [-1/8, 2/8, 6/8, 2/8, -1/8] and [1/2, 1, 1/2] rescaled
      // by sqrt(2) / 1/sqrt(2) so both low-pass sums equal sqrt(2). Padded to
      // a common even length with the correlation centers aligned.
      Eigen::VectorXd alo(6), slo(6);
      alo << -s2 / 8.0, s2 / 4.0, 3.0 * s2 / 4.0, s2 / 4.0, -s2 / 8.0, 0.0;
      slo << 0.0, s2 / 4.0, s2 / 2.0, s2 / 4.0, 0.0, 0.0;
      return from_lowpass_pair(name, alo, slo);
    }
  }
  throw std::invalid_argument("unknown wavelet basis id");
}

WaveletBasis basis_by_name(const std::string& name) {
  return basis_by_name(wavelet_from_string(name));
}

std::pair<Eigen::ArrayXd, Eigen::ArrayXd> dwt_single(
    const Eigen::Ref<const Eigen::ArrayXd>& x, const WaveletBasis& basis) {
  const Eigen::Index n = x.size();
  if (n == 0 || n % 2 != 0)
    throw std::invalid_argument("dwt_single: signal length must be even");
  const Eigen::Index half = n / 2;
  const Eigen::Index taps = basis.length();
  Eigen::ArrayXd approx(half), detail(half);
  for (Eigen::Index m = 0; m < half; ++m) {
    double a = 0.0, d = 0.0;
    for (Eigen::Index j = 0; j < taps; ++j) {
      const double v = x[wrap(2 * m - j, n)];
      a += basis.analysis_lo[j] * v;
      d += basis.analysis_hi[j] * v;
    }
    approx[m] = a;
    detail[m] = d;
  }
  return {std::move(approx), std::move(detail)};
}

Eigen::ArrayXd idwt_single(const Eigen::Ref<const Eigen::ArrayXd>& approx,
                           const Eigen::Ref<const Eigen::ArrayXd>& detail,
                           const WaveletBasis& basis) {
  if (approx.size() != detail.size())
    throw std::invalid_argument("idwt_single: cA/cD length mismatch");
  if (approx.size() == 0)
    throw std::invalid_argument("idwt_single: empty input");
  const Eigen::Index n = 2 * approx.size();
  const Eigen::Index taps = basis.length();
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(n);
  for (Eigen::Index m = 0; m < approx.size(); ++m) {
    for (Eigen::Index j = 0; j < taps; ++j) {
      out[wrap(2 * m - j, n)] += approx[m] * basis.synthesis_lo[j] +
                                 detail[m] * basis.synthesis_hi[j];
    }
  }
  return out;
}

WaveletPacket decompose(const Waveform& signal, const WaveletBasis& basis,
                        int levels) {
  if (levels < 1) throw std::invalid_argument("decompose: levels must be >= 1");
  const Eigen::Index original = signal.samples.size();
  const Eigen::Index block = Eigen::Index(1) << levels;
  if (original < block)
    throw std::invalid_argument("decompose: signal too short for " +
                                std::to_string(levels) + " levels");

  const Eigen::Index pad = (block - original % block) % block;
  Eigen::ArrayXd current = Eigen::ArrayXd::Zero(original + pad);
  current.head(original) = signal.samples;

  const Eigen::Index frames = (original + pad) >> levels;
  WaveletPacket packet;
  packet.data.resize(block, frames);
  packet.basis = basis.name;
  packet.levels = levels;
  packet.original_len = original;
  packet.pad_len = pad;
  packet.sample_rate = signal.sample_rate;

  for (int level = 1; level <= levels; ++level) {
    auto [approx, detail] = dwt_single(current, basis);
    const Eigen::Index stride = Eigen::Index(1) << (levels - level);
    for (Eigen::Index i = 0; i < detail.size(); ++i)
      packet.data(stride + i % stride, i / stride) = detail[i];
    current = std::move(approx);
  }
  packet.data.row(0) = current.transpose();
  return packet;
}

Waveform reconstruct(const WaveletPacket& packet) {
  const int levels = packet.levels;
  const Eigen::Index block = Eigen::Index(1) << levels;
  if (levels < 1 || packet.data.rows() != block ||
      packet.pad_len < 0 || packet.pad_len >= block ||
      packet.original_len <= 0 ||
      packet.data.cols() * block != packet.original_len + packet.pad_len) {
    throw std::invalid_argument("reconstruct: inconsistent packet metadata");
  }
  const WaveletBasis basis = basis_by_name(packet.basis);

  Eigen::ArrayXd current = packet.data.row(0).transpose();
  for (int level = levels; level >= 1; --level) {
    const Eigen::Index stride = Eigen::Index(1) << (levels - level);
    Eigen::ArrayXd detail(current.size());
    for (Eigen::Index i = 0; i < detail.size(); ++i)
      detail[i] = packet.data(stride + i % stride, i / stride);
    current = idwt_single(current, detail, basis);
  }
  Waveform out;
  out.samples = current.head(packet.original_len);
  out.sample_rate = packet.sample_rate;
  return out;
}

}  // namespace wavediff
