#ifndef COOPSC_CHANNEL_HPP
#define COOPSC_CHANNEL_HPP

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "coopsc/rng.hpp"

namespace coopsc::channel {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

// 2B real amplitudes; consecutive pairs (values[2k], values[2k+1]) form the
// real and imaginary parts of complex symbol k.
struct SymbolBlock {
  Vec values;
  int B = 0;
};

// One block-flat uplink realization: M x N fading matrix with CN(0,1)
// entries plus the receiver noise variance.
struct ChannelRealization {
  CMat H;
  double noise_variance = 0.0;

  int antennas() const { return static_cast<int>(H.rows()); }
  int users() const { return static_cast<int>(H.cols()); }
};

// Per-user recovered symbols, de-interleaved back to real values.
struct DetectedSymbols {
  Mat X_hat;  // N x 2B
};

struct NoiseSpec {
  double snr_db = 0.0;
  double P = 1.0;  // per-user transmit power budget
};

// Scales `raw` so the average complex-symbol power (1/B) sum |x_k|^2 equals P.
// Throws DegenerateSymbolError for (numerically) zero input, ShapeError for
// odd length.
SymbolBlock normalize_power(const Vec& raw, double P);

double average_symbol_power(const SymbolBlock& block);

// i.i.d. CN(0,1) fading draw, M x N. Deterministic under a fixed rng state.
ChannelRealization sample_channel(int n_users, int n_antennas, Rng& rng);

// Y = H X + noise, columns are symbol slots. All users must share B and are
// assumed power-normalized. noise ~ CN(0, sigma^2 I_M) per slot.
CMat apply_channel(const std::vector<SymbolBlock>& X, const ChannelRealization& chan,
                   Rng& rng);

// Linear MMSE multi-user filter W = (H^H H + (sigma^2/P) I_N)^-1 H^H.
// Degrades to zero-forcing at sigma^2 = 0; throws SingularChannelError when
// that limit is rank-deficient.
CMat mmse_filter(const ChannelRealization& chan, double P = 1.0);

DetectedSymbols mmse_detect(const CMat& Y, const ChannelRealization& chan,
                            double P = 1.0);

double snr_to_noise_variance(const NoiseSpec& spec);

// Interleaved real <-> complex symbol layout conversions.
CMat rows_to_complex(const Mat& rows);   // N x 2B -> N x B
Mat complex_to_rows(const CMat& symbols);  // N x B -> N x 2B

// Post-detection statistics of stream i for a given (H, sigma^2):
// x_hat_i = gain * x_i + e with E|e|^2 = interference_plus_noise. Used by the
// digital and analog baselines for soft demapping / LLSE estimation.
struct StreamStats {
  std::complex<double> gain;
  double interference_plus_noise = 0.0;
};
std::vector<StreamStats> mmse_stream_stats(const ChannelRealization& chan, double P = 1.0);

}  // namespace coopsc::channel

#endif
