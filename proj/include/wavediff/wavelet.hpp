#pragma once

#include <string>
#include <utility>

#include <Eigen/Core>

namespace wavediff {

enum class WaveletName { haar, bior1_1, bior1_3, coif1, db2, cdf53 };

std::string to_string(WaveletName name);
WaveletName wavelet_from_string(const std::string& name);

/// A two-channel perfect-reconstruction filter bank.
///
/// All four filters are stored at a common even length. Analysis is circular
/// convolution followed by keeping the even-phase outputs; synthesis is the
/// adjoint map, so the filters satisfy the correlation-form biorthogonality
/// relations
///
///   sum_k analysis_lo[k] * synthesis_lo[k + 2m] = delta_{m,0}
///   sum_k analysis_hi[k] * synthesis_hi[k + 2m] = delta_{m,0}
///   sum_k analysis_lo[k] * synthesis_hi[k + 2m] = 0
///   sum_k analysis_hi[k] * synthesis_lo[k + 2m] = 0
///
/// and the high-pass filters derive from the opposite low-pass via
/// analysis_hi[k] = (-1)^k * synthesis_lo[N-1-k] (and symmetrically for
/// synthesis_hi). Orthonormal banks (haar, db2, coif1) are self-dual in this
/// storage: synthesis filters equal analysis filters.
struct WaveletBasis {
  WaveletName name;
  Eigen::VectorXd analysis_lo;
  Eigen::VectorXd analysis_hi;
  Eigen::VectorXd synthesis_lo;
  Eigen::VectorXd synthesis_hi;

  Eigen::Index length() const { return analysis_lo.size(); }
  bool orthogonal() const {
    return name == WaveletName::haar || name == WaveletName::db2 ||
           name == WaveletName::coif1;
  }
};

/// Returns the named bank. Coefficients come from closed forms (sqrt(2),
/// sqrt(3), sqrt(7) algebra), normalized so the biorthogonality sums above
/// equal one and orthogonal banks are orthonormal.
WaveletBasis basis_by_name(WaveletName name);
WaveletBasis basis_by_name(const std::string& name);

struct Waveform {
  Eigen::ArrayXd samples;
  double sample_rate = 16000.0;
};

/// Stacked coefficient matrix of a multi-level decomposition plus the
/// metadata needed to invert it.
///
/// Row layout for `levels` = L (channels = 2^L, coarsest first):
///   row 0:                 cA_L
///   row 1:                 cD_L
///   rows [2^j, 2^{j+1}):   cD_{L-j} for j = 1..L-1, interleaved so that
///                          coefficient i of cD_{L-j} lands at
///                          (row 2^j + i mod 2^j, column i / 2^j).
/// Columns of the matrix are therefore aligned in time across all bands.
struct WaveletPacket {
  Eigen::ArrayXXd data;  // channels x frames
  WaveletName basis = WaveletName::haar;
  int levels = 1;
  Eigen::Index original_len = 0;
  Eigen::Index pad_len = 0;
  double sample_rate = 16000.0;

  Eigen::Index channels() const { return data.rows(); }
  Eigen::Index frames() const { return data.cols(); }
};

/// Single analysis split under periodic extension. x must have even length;
/// returns (cA, cD) of half length each.
std::pair<Eigen::ArrayXd, Eigen::ArrayXd> dwt_single(
    const Eigen::Ref<const Eigen::ArrayXd>& x, const WaveletBasis& basis);

/// Exact inverse of dwt_single. cA and cD must have equal length.
Eigen::ArrayXd idwt_single(const Eigen::Ref<const Eigen::ArrayXd>& approx,
                           const Eigen::Ref<const Eigen::ArrayXd>& detail,
                           const WaveletBasis& basis);

/// Zero-pads to a multiple of 2^levels, recursively splits the approximation
/// branch, and packs all bands per the WaveletPacket layout.
WaveletPacket decompose(const Waveform& signal, const WaveletBasis& basis,
                        int levels);

/// Inverts decompose and truncates the trailing pad samples.
Waveform reconstruct(const WaveletPacket& packet);

}  // namespace wavediff
