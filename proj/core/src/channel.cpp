#include "coopsc/channel.hpp"

#include <cmath>
#include <string>

#include "coopsc/errors.hpp"

namespace coopsc::channel {

SymbolBlock normalize_power(const Vec& raw, double P) {
  if (raw.size() == 0 || raw.size() % 2 != 0) {
    throw ShapeError("normalize_power: length must be a positive multiple of 2, got " +
                     std::to_string(raw.size()));
  }
  if (P <= 0.0) {
    throw ConfigError("normalize_power: power budget must be positive");
  }
  const int B = static_cast<int>(raw.size()) / 2;
  const double norm = raw.norm();
  if (!(norm > 1e-150)) {
    throw DegenerateSymbolError("normalize_power: zero-norm symbol block");
  }
  SymbolBlock out;
  out.B = B;
  // (1/B) sum |x_k|^2 = ||values||^2 / B target P  =>  scale by sqrt(B P) / norm.
  out.values = raw * (std::sqrt(static_cast<double>(B) * P) / norm);
  return out;
}

double average_symbol_power(const SymbolBlock& block) {
  return block.values.squaredNorm() / static_cast<double>(block.B);
}

ChannelRealization sample_channel(int n_users, int n_antennas, Rng& rng) {
  if (n_users < 1 || n_antennas < 1) {
    throw ShapeError("sample_channel: need at least one user and one antenna");
  }
  ChannelRealization chan;
  chan.H.resize(n_antennas, n_users);
  for (int r = 0; r < n_antennas; ++r) {
    for (int c = 0; c < n_users; ++c) {
      chan.H(r, c) = rng.cnormal();
    }
  }
  return chan;
}

CMat rows_to_complex(const Mat& rows) {
  if (rows.cols() % 2 != 0) {
    throw ShapeError("rows_to_complex: row length must be even");
  }
  const int B = static_cast<int>(rows.cols()) / 2;
  CMat out(rows.rows(), B);
  for (int r = 0; r < rows.rows(); ++r) {
    for (int k = 0; k < B; ++k) {
      out(r, k) = std::complex<double>(rows(r, 2 * k), rows(r, 2 * k + 1));
    }
  }
  return out;
}

Mat complex_to_rows(const CMat& symbols) {
  Mat out(symbols.rows(), 2 * symbols.cols());
  for (int r = 0; r < symbols.rows(); ++r) {
    for (int k = 0; k < symbols.cols(); ++k) {
      out(r, 2 * k) = symbols(r, k).real();
      out(r, 2 * k + 1) = symbols(r, k).imag();
    }
  }
  return out;
}

CMat apply_channel(const std::vector<SymbolBlock>& X, const ChannelRealization& chan,
                   Rng& rng) {
  const int N = chan.users();
  const int M = chan.antennas();
  if (static_cast<int>(X.size()) != N) {
    throw ShapeError("apply_channel: got " + std::to_string(X.size()) +
                     " symbol blocks for " + std::to_string(N) + " users");
  }
  const int B = X.empty() ? 0 : X[0].B;
  Mat stacked(N, 2 * B);
  for (int i = 0; i < N; ++i) {
    if (X[i].B != B || X[i].values.size() != 2 * B) {
      throw ShapeError("apply_channel: user " + std::to_string(i) +
                       " has mismatched symbol count");
    }
    stacked.row(i) = X[i].values.transpose();
  }
  const CMat Xc = rows_to_complex(stacked);
  CMat Y = chan.H * Xc;
  if (chan.noise_variance > 0.0) {
    const double scale = std::sqrt(chan.noise_variance);
    for (int r = 0; r < M; ++r) {
      for (int c = 0; c < B; ++c) {
        Y(r, c) += scale * rng.cnormal();
      }
    }
  }
  return Y;
}

CMat mmse_filter(const ChannelRealization& chan, double P) {
  const int N = chan.users();
  if (chan.antennas() < N) {
    throw ShapeError("mmse_filter: need at least as many antennas as users");
  }
  const CMat Hh = chan.H.adjoint();
  CMat G = Hh * chan.H;
  const double reg = chan.noise_variance / P;
  G.diagonal().array() += std::complex<double>(reg, 0.0);
  if (reg == 0.0) {
    Eigen::FullPivLU<CMat> lu(G);
    if (!lu.isInvertible()) {
      throw SingularChannelError(
          "mmse_detect: noiseless detection with rank-deficient channel");
    }
    return lu.inverse() * Hh;
  }
  return G.ldlt().solve(Hh);
}

DetectedSymbols mmse_detect(const CMat& Y, const ChannelRealization& chan, double P) {
  if (Y.rows() != chan.antennas()) {
    throw ShapeError("mmse_detect: Y row count does not match antenna count");
  }
  const CMat W = mmse_filter(chan, P);
  return DetectedSymbols{complex_to_rows(W * Y)};
}

double snr_to_noise_variance(const NoiseSpec& spec) {
  if (spec.P <= 0.0) {
    throw ConfigError("snr_to_noise_variance: power budget must be positive");
  }
  return spec.P / std::pow(10.0, spec.snr_db / 10.0);
}

std::vector<StreamStats> mmse_stream_stats(const ChannelRealization& chan, double P) {
  const CMat W = mmse_filter(chan, P);
  const CMat G = W * chan.H;  // N x N effective mixing matrix
  const int N = chan.users();
  std::vector<StreamStats> stats(N);
  for (int i = 0; i < N; ++i) {
    stats[i].gain = G(i, i);
    double v = chan.noise_variance * W.row(i).squaredNorm();
    for (int j = 0; j < N; ++j) {
      if (j != i) v += P * std::norm(G(i, j));
    }
    stats[i].interference_plus_noise = v;
  }
  return stats;
}

}  // namespace coopsc::channel
