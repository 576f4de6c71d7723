#ifndef COOPSC_RNG_HPP
#define COOPSC_RNG_HPP

#include <complex>
#include <cstdint>
#include <random>

namespace coopsc {

// Deterministic seed derivation, used to give every worker / trial its own
// independent stream from one master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c);

// Owned random source. Gaussian variates use Box-Muller on the (bit-exact)
// mt19937_64 engine so that streams are reproducible across standard
// libraries, not just across runs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [lo, hi], inclusive.
  int uniform_int(int lo, int hi);

  // Standard normal.
  double normal();

  // Circularly-symmetric complex normal CN(0, 1): variance 1/2 per dimension.
  std::complex<double> cnormal() {
    const double s = 0.7071067811865475244;  // 1/sqrt(2)
    return {normal() * s, normal() * s};
  }

  // Fisher-Yates shuffle.
  template <typename Seq>
  void shuffle(Seq& seq) {
    for (std::size_t i = seq.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(0, static_cast<int>(i) - 1));
      std::swap(seq[i - 1], seq[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace coopsc

#endif
