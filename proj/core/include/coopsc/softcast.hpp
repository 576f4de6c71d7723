#ifndef COOPSC_SOFTCAST_HPP
#define COOPSC_SOFTCAST_HPP

#include <Eigen/Dense>
#include <vector>

#include "coopsc/digital.hpp"
#include "coopsc/image.hpp"
#include "coopsc/rng.hpp"

namespace coopsc::baseline {

// Orthonormal 2-D DCT-II of one plane and its inverse.
Eigen::MatrixXd dct2(const Eigen::MatrixXd& plane);
Eigen::MatrixXd idct2(const Eigen::MatrixXd& coeffs);

struct SoftcastResult {
  img::Image image;
  double psnr = 0.0;
  long complex_symbols = 0;
};

// Analog transmission: full-frame per-channel DCT, 8x8 coefficient chunks,
// per-chunk gains proportional to variance^(-1/4) under the average power
// budget, LLSE estimation at the receiver (chunk statistics assumed known
// out of band). Degrades gracefully with SNR; always reconstructs.
std::vector<SoftcastResult> softcast_transmit(const std::vector<img::Image>& images,
                                              double snr_db, const ChannelConfig& cfg,
                                              Rng& rng);

SoftcastResult softcast_pipeline(const img::Image& image, double snr_db,
                                 const ChannelConfig& cfg, Rng& rng);

}  // namespace coopsc::baseline

#endif
