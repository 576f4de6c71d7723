#include "coopsc/ldpc.hpp"

#include <cmath>
#include <stdexcept>

#include "coopsc/errors.hpp"

namespace coopsc::baseline {

namespace {

// IEEE 802.11n prototype matrix, rate 3/4, Z = 27 (6 x 24 blocks; entries are
// cyclic shifts, -1 is the zero block).
const std::vector<std::vector<int>>& base_matrix_34_z27() {
  static const std::vector<std::vector<int>> base = {
      {16, 17, 22, 24, 9, 3, 14, -1, 4, 2, 7, -1, 26, -1, 2, -1, 21, -1, 1, 0, -1, -1, -1, -1},
      {25, 12, 12, 3, 3, 26, 6, 21, -1, 15, 22, -1, 15, -1, 4, -1, -1, 16, -1, 0, 0, -1, -1, -1},
      {25, 18, 26, 16, 22, 23, 9, -1, 0, -1, 4, -1, 4, -1, 8, 23, 11, -1, -1, -1, 0, 0, -1, -1},
      {9, 7, 0, 1, 17, -1, -1, 7, 3, -1, 3, 23, -1, 16, -1, -1, 21, -1, 0, -1, -1, 0, 0, -1},
      {24, 5, 26, 7, 1, -1, -1, 15, 24, 15, -1, 8, -1, 13, -1, 13, -1, 11, -1, -1, -1, -1, 0, 0},
      {2, 2, 19, 14, 24, 1, 15, 19, -1, 21, -1, 2, -1, 24, -1, 3, -1, 2, 1, -1, -1, -1, -1, 0}};
  return base;
}

constexpr double kLlrClamp = 25.0;

}  // namespace

LdpcCode::LdpcCode(int z, const std::vector<std::vector<int>>& base) {
  const int block_rows = static_cast<int>(base.size());
  const int block_cols = static_cast<int>(base[0].size());
  m_ = block_rows * z;
  n_ = block_cols * z;
  k_ = n_ - m_;

  // Expand the prototype into sparse row structure.
  check_vars_.assign(m_, {});
  var_checks_.assign(n_, {});
  for (int br = 0; br < block_rows; ++br) {
    for (int bc = 0; bc < block_cols; ++bc) {
      const int shift = base[br][bc];
      if (shift < 0) continue;
      for (int r = 0; r < z; ++r) {
        const int row = br * z + r;
        const int col = bc * z + (r + shift) % z;
        check_vars_[row].push_back(col);
        var_checks_[col].push_back(row);
      }
    }
  }

  // Solve H2 * parity = H1 * info over GF(2) with H2 the last m_ columns.
  // Gaussian elimination of [H2 | H1] gives parity_gen_ = H2^-1 H1.
  const int words_k = (k_ + 63) / 64;
  const int words_m = (m_ + 63) / 64;
  std::vector<std::vector<std::uint64_t>> h2(m_, std::vector<std::uint64_t>(words_m, 0));
  std::vector<std::vector<std::uint64_t>> h1(m_, std::vector<std::uint64_t>(words_k, 0));
  for (int row = 0; row < m_; ++row) {
    for (int col : check_vars_[row]) {
      if (col < k_) {
        h1[row][col / 64] ^= 1ULL << (col % 64);
      } else {
        const int p = col - k_;
        h2[row][p / 64] ^= 1ULL << (p % 64);
      }
    }
  }
  for (int col = 0; col < m_; ++col) {
    int pivot = -1;
    for (int row = col; row < m_; ++row) {
      if ((h2[row][col / 64] >> (col % 64)) & 1ULL) {
        pivot = row;
        break;
      }
    }
    if (pivot < 0) {
      throw std::logic_error("ldpc: parity part of H is singular");
    }
    std::swap(h2[col], h2[pivot]);
    std::swap(h1[col], h1[pivot]);
    for (int row = 0; row < m_; ++row) {
      if (row == col) continue;
      if ((h2[row][col / 64] >> (col % 64)) & 1ULL) {
        for (int w = 0; w < words_m; ++w) h2[row][w] ^= h2[col][w];
        for (int w = 0; w < words_k; ++w) h1[row][w] ^= h1[col][w];
      }
    }
  }
  parity_gen_ = std::move(h1);  // row p gives parity bit p as <row, info>
}

const LdpcCode& LdpcCode::rate34_648() {
  static const LdpcCode code(27, base_matrix_34_z27());
  return code;
}

std::vector<std::uint8_t> LdpcCode::encode(const std::vector<std::uint8_t>& info) const {
  if (static_cast<int>(info.size()) != k_) {
    throw ShapeError("ldpc encode: expected " + std::to_string(k_) + " info bits");
  }
  const int words_k = (k_ + 63) / 64;
  std::vector<std::uint64_t> packed(words_k, 0);
  for (int i = 0; i < k_; ++i) {
    if (info[i]) packed[i / 64] ^= 1ULL << (i % 64);
  }
  std::vector<std::uint8_t> out(n_, 0);
  std::copy(info.begin(), info.end(), out.begin());
  for (int p = 0; p < m_; ++p) {
    std::uint64_t acc = 0;
    for (int w = 0; w < words_k; ++w) acc ^= parity_gen_[p][w] & packed[w];
    out[k_ + p] = static_cast<std::uint8_t>(__builtin_popcountll(acc) & 1);
  }
  return out;
}

bool LdpcCode::syndrome_ok(const std::vector<std::uint8_t>& codeword) const {
  if (static_cast<int>(codeword.size()) != n_) return false;
  for (int row = 0; row < m_; ++row) {
    int parity = 0;
    for (int col : check_vars_[row]) parity ^= codeword[col];
    if (parity) return false;
  }
  return true;
}

LdpcCode::DecodeResult LdpcCode::decode(const std::vector<double>& llrs,
                                        int max_iters) const {
  if (static_cast<int>(llrs.size()) != n_) {
    throw ShapeError("ldpc decode: expected " + std::to_string(n_) + " LLRs");
  }
  // Messages stored per (check, var-slot) edge.
  std::vector<std::vector<double>> check_to_var(m_);
  for (int row = 0; row < m_; ++row) check_to_var[row].assign(check_vars_[row].size(), 0.0);

  std::vector<double> posterior(n_);
  std::vector<std::uint8_t> hard(n_);
  auto clamp = [](double x) {
    if (x > kLlrClamp) return kLlrClamp;
    if (x < -kLlrClamp) return -kLlrClamp;
    return x;
  };

  DecodeResult result;
  for (int it = 1; it <= max_iters; ++it) {
    // Check update with tanh rule (first iteration uses channel LLRs only).
    for (int row = 0; row < m_; ++row) {
      const auto& vars = check_vars_[row];
      const std::size_t deg = vars.size();
      double prod = 1.0;
      int zero_count = 0;
      std::vector<double> tanhs(deg);
      for (std::size_t e = 0; e < deg; ++e) {
        const double v_in =
            clamp((it == 1 ? llrs[vars[e]]
                           : posterior[vars[e]] - check_to_var[row][e]));
        double th = std::tanh(0.5 * v_in);
        if (std::abs(th) < 1e-12) {
          ++zero_count;
          th = th < 0 ? -1e-12 : 1e-12;
        }
        tanhs[e] = th;
        prod *= th;
      }
      for (std::size_t e = 0; e < deg; ++e) {
        double t = (zero_count > 1) ? 0.0 : prod / tanhs[e];
        t = std::min(std::max(t, -0.9999999999), 0.9999999999);
        check_to_var[row][e] = 2.0 * std::atanh(t);
      }
    }
    // Variable update.
    for (int col = 0; col < n_; ++col) posterior[col] = llrs[col];
    for (int row = 0; row < m_; ++row) {
      const auto& vars = check_vars_[row];
      for (std::size_t e = 0; e < vars.size(); ++e) {
        posterior[vars[e]] += check_to_var[row][e];
      }
    }
    for (int col = 0; col < n_; ++col) {
      posterior[col] = clamp(posterior[col]);
      hard[col] = posterior[col] < 0.0 ? 1 : 0;
    }
    result.iterations = it;
    if (syndrome_ok(hard)) {
      result.ok = true;
      break;
    }
  }
  result.info.assign(hard.begin(), hard.begin() + k_);
  return result;
}

}  // namespace coopsc::baseline
