#pragma once

// Table-driven log2/exp2 in fixed point. Power sums v^k are computed as
// exp2(k * log2(v)), the way a match-action pipeline without multipliers can.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace dfa {

struct LogTableConfig {
  int frac_bits = 8;
};

class LogTable {
 public:
  static constexpr std::uint32_t kSaturated = std::numeric_limits<std::uint32_t>::max();

  explicit LogTable(LogTableConfig cfg = {}) : frac_bits_(cfg.frac_bits) {
    if (frac_bits_ < 1 || frac_bits_ > 16) throw std::invalid_argument("frac_bits must be in [1, 16]");
    const std::uint32_t n = 1U << frac_bits_;
    const double scale = static_cast<double>(n);
    log_.resize(n);
    exp_.resize(n);
    for (std::uint32_t m = 0; m < n; ++m) {
      const double x = static_cast<double>(m) / scale;
      log_[m] = static_cast<std::uint32_t>(std::llround(std::log2(1.0 + x) * scale));
      exp_[m] = static_cast<std::uint64_t>(std::llround(std::exp2(x) * static_cast<double>(1ULL << kExpBits)));
    }
  }

  int frac_bits() const { return frac_bits_; }

  /// Fixed-point log2 with frac_bits fractional bits. The integer part is the
  /// index of the leading one; the mantissa below it is rounded to frac_bits
  /// and looked up in the log table. Requires v >= 1.
  std::uint32_t log2(std::uint32_t v) const {
    if (v == 0) throw std::domain_error("log2(0)");
    const int f = frac_bits_;
    int e = 31 - __builtin_clz(v);
    std::uint32_t mant;
    if (e <= f) {
      mant = (v << (f - e)) & mask();
    } else {
      // Keep f bits below the leading one, round to nearest on the next bit.
      const int drop = e - f;
      std::uint64_t r = (std::uint64_t{v} + (std::uint64_t{1} << (drop - 1))) >> drop;
      if (r >> (f + 1)) {
        ++e;
        r >>= 1;
      }
      mant = static_cast<std::uint32_t>(r) & mask();
    }
    return (static_cast<std::uint32_t>(e) << f) + log_[mant];
  }

  /// Round-to-nearest of 2^(q / 2^frac_bits), saturating at 2^32 - 1.
  std::uint32_t exp2(std::uint64_t q) const {
    const std::uint64_t ip = q >> frac_bits_;
    if (ip >= 32) return kSaturated;
    const std::uint64_t m = exp_[q & mask()];  // 2^(frac) scaled by 2^kExpBits
    const int shift = kExpBits - static_cast<int>(ip);
    const std::uint64_t r = shift == 0 ? m : (m + (std::uint64_t{1} << (shift - 1))) >> shift;
    return r > kSaturated ? kSaturated : static_cast<std::uint32_t>(r);
  }

  /// Approximate v^k for k in {1,2,3}; 0 maps to 0.
  std::uint32_t pow(std::uint32_t v, int k) const {
    if (k < 1 || k > 3) throw std::invalid_argument("power must be 1, 2 or 3");
    if (v == 0) return 0;
    return exp2(static_cast<std::uint64_t>(k) * log2(v));
  }

  std::uint32_t operator()(std::uint32_t v, int k) const { return pow(v, k); }

  bool operator==(const LogTable& o) const {
    return frac_bits_ == o.frac_bits_ && log_ == o.log_ && exp_ == o.exp_;
  }

  /// Upper bound on |pow(v,k)/v^k - 1| for non-saturating results.
  static double relative_error_bound(int k, int frac_bits) {
    return std::exp2(static_cast<double>(k + 1) / static_cast<double>(1 << frac_bits)) - 1.0;
  }

 private:
  static constexpr int kExpBits = 31;

  std::uint32_t mask() const { return (1U << frac_bits_) - 1U; }

  int frac_bits_;
  std::vector<std::uint32_t> log_;
  std::vector<std::uint64_t> exp_;
};

/// Exact v^k; v^3 < 2^96 always fits.
inline unsigned __int128 oracle_pow(std::uint32_t v, int k) {
  unsigned __int128 r = 1;
  for (int i = 0; i < k; ++i) r *= v;
  return r;
}

/// Exact power reduced to register width; the ground-truth addend in exact mode.
struct ExactPow {
  std::uint32_t operator()(std::uint32_t v, int k) const { return static_cast<std::uint32_t>(oracle_pow(v, k)); }
};

}  // namespace dfa
