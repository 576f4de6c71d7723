#ifndef COOPSC_DIGITAL_HPP
#define COOPSC_DIGITAL_HPP

#include <vector>

#include "coopsc/channel.hpp"
#include "coopsc/image.hpp"
#include "coopsc/ldpc.hpp"
#include "coopsc/rng.hpp"

namespace coopsc::baseline {

// Shared uplink configuration for the classical pipelines. One fading block
// spans `block_symbols` complex channel uses (one LDPC codeword at BPSK with
// two coded bits per complex symbol).
struct ChannelConfig {
  int users = 2;
  int antennas = 4;
  double P = 1.0;
  int block_symbols = 324;
  bool identity_channel = false;  // H = I, sigma^2 from snr still applies
};

struct SymbolBudget {
  long complex_symbol_count = 0;
};

struct ReconstructionOutcome {
  bool ok = false;     // set iff LDPC and JPEG decode both succeeded
  img::Image image;    // valid when ok
  double psnr = 0.0;   // vs the transmitted original, when ok
};

struct DigitalTrace {
  long jpeg_bytes = 0;
  long payload_bits = 0;  // length header + JPEG stream
  long padded_bits = 0;   // after zero-padding to whole codewords
  int n_blocks = 0;
  long coded_bits = 0;
  long complex_symbols = 0;  // this user's channel uses
  int ldpc_failures = 0;
  bool decode_ok = false;
  bool bit_exact = false;  // recovered JPEG bytes identical to transmitted
};

struct DigitalResult {
  ReconstructionOutcome outcome;
  DigitalTrace trace;
};

// All users transmit their JPEG streams simultaneously; fading redrawn per
// codeword block, MMSE separation, soft demapping, BP decoding.
std::vector<DigitalResult> digital_transmit(const std::vector<img::Image>& images,
                                            int jpeg_quality, double snr_db,
                                            const ChannelConfig& cfg, Rng& rng);

// Single-image form: the image rides user 0 while the other users carry
// random payloads of matched length, so multi-user interference is realistic.
DigitalResult digital_pipeline(const img::Image& image, int jpeg_quality, double snr_db,
                               const ChannelConfig& cfg, Rng& rng);

SymbolBudget count_symbols(const DigitalTrace& trace);

// Bit helpers shared with tests.
std::vector<std::uint8_t> bytes_to_bits(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> bits_to_bytes(const std::vector<std::uint8_t>& bits);

// BPSK map {0,1} -> {+1,-1} and its threshold inverse.
double bpsk_map(std::uint8_t bit);
std::uint8_t bpsk_demap(double value);

}  // namespace coopsc::baseline

#endif
