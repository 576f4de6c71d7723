#include "coopsc/digital.hpp"

#include <cmath>

#include "coopsc/errors.hpp"

namespace coopsc::baseline {

std::vector<std::uint8_t> bytes_to_bits(const std::vector<std::uint8_t>& bytes) {
  std::vector<std::uint8_t> bits;
  bits.reserve(bytes.size() * 8);
  for (std::uint8_t b : bytes) {
    for (int i = 7; i >= 0; --i) bits.push_back((b >> i) & 1);
  }
  return bits;
}

std::vector<std::uint8_t> bits_to_bytes(const std::vector<std::uint8_t>& bits) {
  std::vector<std::uint8_t> bytes(bits.size() / 8, 0);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    std::uint8_t b = 0;
    for (int j = 0; j < 8; ++j) b = static_cast<std::uint8_t>((b << 1) | bits[i * 8 + j]);
    bytes[i] = b;
  }
  return bytes;
}

double bpsk_map(std::uint8_t bit) { return bit ? -1.0 : 1.0; }
std::uint8_t bpsk_demap(double value) { return value < 0.0 ? 1 : 0; }

namespace {

struct UserStream {
  std::vector<std::uint8_t> payload_bytes;  // header + jpeg
  std::vector<std::vector<std::uint8_t>> codewords;
  DigitalTrace trace;
  bool carries_image = false;
};

UserStream make_stream(const std::vector<std::uint8_t>& jpeg, const LdpcCode& code) {
  UserStream s;
  s.trace.jpeg_bytes = static_cast<long>(jpeg.size());
  // 4-byte big-endian length header so the receiver can strip padding.
  std::vector<std::uint8_t> payload;
  const std::uint32_t len = static_cast<std::uint32_t>(jpeg.size());
  payload.push_back(static_cast<std::uint8_t>(len >> 24));
  payload.push_back(static_cast<std::uint8_t>(len >> 16));
  payload.push_back(static_cast<std::uint8_t>(len >> 8));
  payload.push_back(static_cast<std::uint8_t>(len));
  payload.insert(payload.end(), jpeg.begin(), jpeg.end());
  s.payload_bytes = payload;

  std::vector<std::uint8_t> bits = bytes_to_bits(payload);
  s.trace.payload_bits = static_cast<long>(bits.size());
  const int k = code.k();
  const long padded = ((s.trace.payload_bits + k - 1) / k) * k;
  bits.resize(padded, 0);
  s.trace.padded_bits = padded;
  s.trace.n_blocks = static_cast<int>(padded / k);
  s.trace.coded_bits = static_cast<long>(s.trace.n_blocks) * code.n();
  s.trace.complex_symbols = s.trace.coded_bits / 2;
  s.codewords.reserve(s.trace.n_blocks);
  for (int b = 0; b < s.trace.n_blocks; ++b) {
    std::vector<std::uint8_t> info(bits.begin() + static_cast<long>(b) * k,
                                   bits.begin() + static_cast<long>(b + 1) * k);
    s.codewords.push_back(code.encode(info));
  }
  return s;
}

channel::ChannelRealization draw_channel(const ChannelConfig& cfg, double sigma2,
                                         Rng& rng) {
  if (cfg.identity_channel) {
    channel::ChannelRealization chan;
    chan.H = channel::CMat::Identity(cfg.users, cfg.users);
    chan.noise_variance = sigma2;
    return chan;
  }
  channel::ChannelRealization chan = channel::sample_channel(cfg.users, cfg.antennas, rng);
  chan.noise_variance = sigma2;
  return chan;
}

}  // namespace

std::vector<DigitalResult> digital_transmit(const std::vector<img::Image>& images,
                                            int jpeg_quality, double snr_db,
                                            const ChannelConfig& cfg, Rng& rng) {
  if (images.empty() || static_cast<int>(images.size()) > cfg.users) {
    throw ShapeError("digital_transmit: need 1..users images");
  }
  const LdpcCode& code = LdpcCode::rate34_648();
  if (cfg.block_symbols * 2 != code.n()) {
    throw ConfigError("digital_transmit: block_symbols must equal n/2 of the code");
  }
  const double sigma2 =
      channel::snr_to_noise_variance(channel::NoiseSpec{snr_db, cfg.P});

  // Per-user streams; users beyond the given images carry random payloads of
  // the first image's length.
  std::vector<std::vector<std::uint8_t>> jpegs;
  for (const img::Image& im : images) jpegs.push_back(img::encode_jpeg(im, jpeg_quality));
  std::vector<UserStream> streams;
  for (int u = 0; u < cfg.users; ++u) {
    if (u < static_cast<int>(jpegs.size())) {
      streams.push_back(make_stream(jpegs[u], code));
      streams.back().carries_image = true;
    } else {
      std::vector<std::uint8_t> filler(jpegs[0].size());
      for (auto& b : filler) b = static_cast<std::uint8_t>(rng.next_u64() & 0xFF);
      streams.push_back(make_stream(filler, code));
    }
  }

  int max_blocks = 0;
  for (const UserStream& s : streams) max_blocks = std::max(max_blocks, s.trace.n_blocks);

  std::vector<std::vector<double>> rx_llrs(cfg.users);
  for (int u = 0; u < cfg.users; ++u) {
    rx_llrs[u].reserve(static_cast<std::size_t>(streams[u].trace.coded_bits));
  }

  const double amp = 1.0 / std::sqrt(2.0);  // per-real-dimension BPSK amplitude
  for (int blk = 0; blk < max_blocks; ++blk) {
    const channel::ChannelRealization chan = draw_channel(cfg, sigma2, rng);
    std::vector<channel::SymbolBlock> tx(cfg.users);
    for (int u = 0; u < cfg.users; ++u) {
      channel::Vec raw = channel::Vec::Zero(code.n());
      if (blk < streams[u].trace.n_blocks) {
        for (int i = 0; i < code.n(); ++i) {
          raw(i) = bpsk_map(streams[u].codewords[blk][i]);
        }
        tx[u] = channel::normalize_power(raw, cfg.P);
      } else {
        tx[u] = channel::SymbolBlock{raw, code.n() / 2};  // silent user
      }
    }
    const channel::CMat Y = channel::apply_channel(tx, chan, rng);
    const channel::CMat W = channel::mmse_filter(chan, cfg.P);
    const channel::CMat Xhat = W * Y;
    const auto stats = channel::mmse_stream_stats(chan, cfg.P);
    for (int u = 0; u < cfg.users; ++u) {
      if (blk >= streams[u].trace.n_blocks) continue;
      const double mu = std::abs(stats[u].gain);
      const double nu = std::max(stats[u].interference_plus_noise, 1e-12);
      const std::complex<double> rot =
          mu > 0 ? std::conj(stats[u].gain) / mu : std::complex<double>(1.0, 0.0);
      const double coef = 4.0 * amp * mu / nu;
      for (int k = 0; k < cfg.block_symbols; ++k) {
        const std::complex<double> z = rot * Xhat(u, k);
        rx_llrs[u].push_back(coef * z.real());
        rx_llrs[u].push_back(coef * z.imag());
      }
    }
  }

  std::vector<DigitalResult> results;
  for (int u = 0; u < static_cast<int>(images.size()); ++u) {
    UserStream& s = streams[u];
    std::vector<std::uint8_t> bits;
    bits.reserve(static_cast<std::size_t>(s.trace.padded_bits));
    for (int blk = 0; blk < s.trace.n_blocks; ++blk) {
      std::vector<double> llrs(rx_llrs[u].begin() + static_cast<long>(blk) * code.n(),
                               rx_llrs[u].begin() + static_cast<long>(blk + 1) * code.n());
      LdpcCode::DecodeResult dec = code.decode(llrs);
      if (!dec.ok) ++s.trace.ldpc_failures;
      bits.insert(bits.end(), dec.info.begin(), dec.info.end());
    }
    DigitalResult res;
    res.trace = s.trace;
    bits.resize(static_cast<std::size_t>(((s.trace.payload_bits + 7) / 8) * 8));
    const std::vector<std::uint8_t> bytes = bits_to_bytes(bits);
    std::vector<std::uint8_t> jpeg;
    bool framed = false;
    if (bytes.size() >= 4) {
      const std::uint32_t len = (static_cast<std::uint32_t>(bytes[0]) << 24) |
                                (static_cast<std::uint32_t>(bytes[1]) << 16) |
                                (static_cast<std::uint32_t>(bytes[2]) << 8) |
                                static_cast<std::uint32_t>(bytes[3]);
      if (len + 4 <= bytes.size()) {
        jpeg.assign(bytes.begin() + 4, bytes.begin() + 4 + len);
        framed = true;
      }
    }
    res.trace.bit_exact =
        framed && std::equal(s.payload_bytes.begin(), s.payload_bytes.end(), bytes.begin());
    if (s.trace.ldpc_failures == 0 && framed && img::has_jpeg_magic(jpeg)) {
      img::Image decoded;
      if (img::decode_jpeg(jpeg, &decoded)) {
        res.outcome.ok = true;
        res.outcome.psnr = img::psnr(decoded, images[u]);
        res.outcome.image = std::move(decoded);
      }
    }
    res.trace.decode_ok = res.outcome.ok;
    results.push_back(std::move(res));
  }
  return results;
}

DigitalResult digital_pipeline(const img::Image& image, int jpeg_quality, double snr_db,
                               const ChannelConfig& cfg, Rng& rng) {
  return digital_transmit({image}, jpeg_quality, snr_db, cfg, rng)[0];
}

SymbolBudget count_symbols(const DigitalTrace& trace) {
  return SymbolBudget{trace.complex_symbols};
}

}  // namespace coopsc::baseline
