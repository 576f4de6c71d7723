#include "coopsc/softcast.hpp"

#include <cmath>
#include <map>

#include "coopsc/errors.hpp"

namespace coopsc::baseline {

namespace {

const Eigen::MatrixXd& dct_matrix(int n) {
  static std::map<int, Eigen::MatrixXd> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  Eigen::MatrixXd D(n, n);
  const double c0 = std::sqrt(1.0 / n);
  const double ck = std::sqrt(2.0 / n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      D(j, i) = (j == 0 ? c0 : ck) * std::cos(M_PI * (2 * i + 1) * j / (2.0 * n));
    }
  }
  return cache.emplace(n, std::move(D)).first->second;
}

constexpr int kChunk = 8;
constexpr double kMinVariance = 1e-20;

struct PlaneChunks {
  Eigen::MatrixXd coeffs;
  std::vector<double> variance;  // per chunk (second moment)
  int chunks_y = 0, chunks_x = 0;

  int chunk_of(int y, int x) const { return (y / kChunk) * chunks_x + (x / kChunk); }
};

PlaneChunks analyze_plane(const Eigen::MatrixXd& plane) {
  PlaneChunks pc;
  pc.coeffs = dct2(plane);
  pc.chunks_y = (static_cast<int>(plane.rows()) + kChunk - 1) / kChunk;
  pc.chunks_x = (static_cast<int>(plane.cols()) + kChunk - 1) / kChunk;
  pc.variance.assign(static_cast<std::size_t>(pc.chunks_y) * pc.chunks_x, 0.0);
  std::vector<int> counts(pc.variance.size(), 0);
  for (int y = 0; y < pc.coeffs.rows(); ++y) {
    for (int x = 0; x < pc.coeffs.cols(); ++x) {
      const int c = pc.chunk_of(y, x);
      pc.variance[c] += pc.coeffs(y, x) * pc.coeffs(y, x);
      ++counts[c];
    }
  }
  for (std::size_t i = 0; i < pc.variance.size(); ++i) {
    pc.variance[i] /= std::max(counts[i], 1);
  }
  return pc;
}

struct UserSignal {
  std::vector<PlaneChunks> planes;
  std::vector<double> values;  // scaled coefficients in stream order
  std::vector<double> gain;    // per value
  std::vector<double> lambda;  // per value (its chunk variance)
  int c = 0, h = 0, w = 0;
};

UserSignal prepare_user(const img::Image& im, double P) {
  UserSignal sig;
  sig.c = im.c;
  sig.h = im.h;
  sig.w = im.w;
  double weighted = 0.0;  // sum over coefficients of sqrt(lambda)
  long total = 0;
  for (int ch = 0; ch < im.c; ++ch) {
    Eigen::MatrixXd plane(im.h, im.w);
    for (int y = 0; y < im.h; ++y) {
      for (int x = 0; x < im.w; ++x) plane(y, x) = im.at(ch, y, x);
    }
    sig.planes.push_back(analyze_plane(plane));
    const PlaneChunks& pc = sig.planes.back();
    for (int y = 0; y < im.h; ++y) {
      for (int x = 0; x < im.w; ++x) {
        const double lam = pc.variance[pc.chunk_of(y, x)];
        if (lam > kMinVariance) weighted += std::sqrt(lam);
        ++total;
      }
    }
  }
  // Average complex-symbol power P <=> average real-sample power P/2:
  // sum_i g_i^2 lambda_i = total * P / 2 with g_i = scale * lambda_i^(-1/4).
  const double scale = std::sqrt(total * P / (2.0 * std::max(weighted, kMinVariance)));
  sig.values.reserve(total);
  for (int ch = 0; ch < im.c; ++ch) {
    const PlaneChunks& pc = sig.planes[ch];
    for (int y = 0; y < im.h; ++y) {
      for (int x = 0; x < im.w; ++x) {
        const double lam = pc.variance[pc.chunk_of(y, x)];
        const double g = lam > kMinVariance ? scale * std::pow(lam, -0.25) : 0.0;
        sig.values.push_back(g * pc.coeffs(y, x));
        sig.gain.push_back(g);
        sig.lambda.push_back(lam);
      }
    }
  }
  return sig;
}

}  // namespace

Eigen::MatrixXd dct2(const Eigen::MatrixXd& plane) {
  const Eigen::MatrixXd& Dr = dct_matrix(static_cast<int>(plane.rows()));
  const Eigen::MatrixXd& Dc = dct_matrix(static_cast<int>(plane.cols()));
  return Dr * plane * Dc.transpose();
}

Eigen::MatrixXd idct2(const Eigen::MatrixXd& coeffs) {
  const Eigen::MatrixXd& Dr = dct_matrix(static_cast<int>(coeffs.rows()));
  const Eigen::MatrixXd& Dc = dct_matrix(static_cast<int>(coeffs.cols()));
  return Dr.transpose() * coeffs * Dc;
}

std::vector<SoftcastResult> softcast_transmit(const std::vector<img::Image>& images,
                                              double snr_db, const ChannelConfig& cfg,
                                              Rng& rng) {
  if (images.empty() || static_cast<int>(images.size()) > cfg.users) {
    throw ShapeError("softcast_transmit: need 1..users images");
  }
  const double sigma2 =
      channel::snr_to_noise_variance(channel::NoiseSpec{snr_db, cfg.P});

  std::vector<UserSignal> sigs;
  for (const img::Image& im : images) sigs.push_back(prepare_user(im, cfg.P));

  long max_reals = 0;
  for (const UserSignal& s : sigs) {
    max_reals = std::max<long>(max_reals, static_cast<long>(s.values.size()));
  }
  const long n_symbols = (max_reals + 1) / 2;
  const int bs = cfg.block_symbols;
  const long n_blocks = (n_symbols + bs - 1) / bs;

  std::vector<std::vector<double>> received(cfg.users);
  for (auto& r : received) r.assign(static_cast<std::size_t>(n_symbols) * 2, 0.0);
  std::vector<std::vector<double>> eff_gain(cfg.users);
  std::vector<std::vector<double>> eff_noise(cfg.users);
  for (int u = 0; u < cfg.users; ++u) {
    eff_gain[u].assign(static_cast<std::size_t>(n_symbols) * 2, 1.0);
    eff_noise[u].assign(static_cast<std::size_t>(n_symbols) * 2, 0.0);
  }

  for (long blk = 0; blk < n_blocks; ++blk) {
    const long sym0 = blk * bs;
    const int count = static_cast<int>(std::min<long>(bs, n_symbols - sym0));
    channel::ChannelRealization chan;
    if (cfg.identity_channel) {
      chan.H = channel::CMat::Identity(cfg.users, cfg.users);
      chan.noise_variance = sigma2;
    } else {
      chan = channel::sample_channel(cfg.users, cfg.antennas, rng);
      chan.noise_variance = sigma2;
    }
    std::vector<channel::SymbolBlock> tx(cfg.users);
    for (int u = 0; u < cfg.users; ++u) {
      channel::Vec raw = channel::Vec::Zero(2 * count);
      if (u < static_cast<int>(sigs.size())) {
        const auto& vals = sigs[u].values;
        for (int k = 0; k < 2 * count; ++k) {
          const long idx = sym0 * 2 + k;
          if (idx < static_cast<long>(vals.size())) raw(k) = vals[idx];
        }
      } else {
        // Companion users carry unit-power analog filler.
        for (int k = 0; k < 2 * count; ++k) {
          raw(k) = std::sqrt(cfg.P / 2.0) * rng.normal();
        }
      }
      tx[u] = channel::SymbolBlock{raw, count};
    }
    const channel::CMat Y = channel::apply_channel(tx, chan, rng);
    const channel::CMat W = channel::mmse_filter(chan, cfg.P);
    const channel::CMat Xhat = W * Y;
    const auto stats = channel::mmse_stream_stats(chan, cfg.P);
    for (int u = 0; u < static_cast<int>(sigs.size()); ++u) {
      const double mu = std::abs(stats[u].gain);
      const std::complex<double> rot =
          mu > 0 ? std::conj(stats[u].gain) / mu : std::complex<double>(1.0, 0.0);
      for (int k = 0; k < count; ++k) {
        const std::complex<double> z = rot * Xhat(u, k);
        const long idx = (sym0 + k) * 2;
        received[u][idx] = z.real();
        received[u][idx + 1] = z.imag();
        eff_gain[u][idx] = eff_gain[u][idx + 1] = mu;
        eff_noise[u][idx] = eff_noise[u][idx + 1] =
            stats[u].interference_plus_noise / 2.0;  // per real dimension
      }
    }
  }

  std::vector<SoftcastResult> results;
  for (int u = 0; u < static_cast<int>(sigs.size()); ++u) {
    const UserSignal& s = sigs[u];
    SoftcastResult res;
    res.complex_symbols = (static_cast<long>(s.values.size()) + 1) / 2;
    img::Image out(s.c, s.h, s.w);
    long idx = 0;
    for (int ch = 0; ch < s.c; ++ch) {
      Eigen::MatrixXd coeffs(s.h, s.w);
      for (int y = 0; y < s.h; ++y) {
        for (int x = 0; x < s.w; ++x, ++idx) {
          const double g = s.gain[idx];
          const double lam = s.lambda[idx];
          const double mu = eff_gain[u][idx];
          const double nu = eff_noise[u][idx];
          // LLSE of v from z = mu*g*v + n.
          const double a = mu * g;
          const double denom = a * a * lam + nu;
          coeffs(y, x) = denom > 0 ? (a * lam / denom) * received[u][idx] : 0.0;
        }
      }
      const Eigen::MatrixXd plane = idct2(coeffs);
      for (int y = 0; y < s.h; ++y) {
        for (int x = 0; x < s.w; ++x) {
          out.at(ch, y, x) = std::clamp(plane(y, x), 0.0, 1.0);
        }
      }
    }
    res.psnr = img::psnr(out, images[u]);
    res.image = std::move(out);
    results.push_back(std::move(res));
  }
  return results;
}

SoftcastResult softcast_pipeline(const img::Image& image, double snr_db,
                                 const ChannelConfig& cfg, Rng& rng) {
  return softcast_transmit({image}, snr_db, cfg, rng)[0];
}

}  // namespace coopsc::baseline
