#ifndef COOPSC_LDPC_HPP
#define COOPSC_LDPC_HPP

#include <cstdint>
#include <vector>

namespace coopsc::baseline {

// Quasi-cyclic rate-3/4 LDPC code, block length 648 (IEEE 802.11n family,
// Z = 27). Systematic encoding via a precomputed parity solve; sum-product
// belief-propagation decoding with early syndrome exit.
class LdpcCode {
 public:
  static const LdpcCode& rate34_648();

  int n() const { return n_; }
  int k() const { return k_; }
  double rate() const { return static_cast<double>(k_) / n_; }

  // k info bits -> n coded bits (systematic: info first, parity last).
  std::vector<std::uint8_t> encode(const std::vector<std::uint8_t>& info) const;

  struct DecodeResult {
    std::vector<std::uint8_t> info;  // k bits
    bool ok = false;                 // all parity checks satisfied
    int iterations = 0;
  };

  // llrs: n values, positive favouring bit 0.
  DecodeResult decode(const std::vector<double>& llrs, int max_iters = 50) const;

  bool syndrome_ok(const std::vector<std::uint8_t>& codeword) const;

 private:
  LdpcCode(int z, const std::vector<std::vector<int>>& base);

  int n_ = 0, k_ = 0, m_ = 0;
  // Sparse parity-check structure.
  std::vector<std::vector<int>> check_vars_;  // per check row: variable indices
  std::vector<std::vector<int>> var_checks_;  // per variable: check rows
  // Dense GF(2) parity generator: parity = P * info (bit-packed rows).
  std::vector<std::vector<std::uint64_t>> parity_gen_;
};

}  // namespace coopsc::baseline

#endif
