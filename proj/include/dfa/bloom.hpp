#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dfa/core.hpp"

namespace dfa {

struct BloomConfig {
  std::size_t partitions = 4;
  std::size_t bits_per_partition = std::size_t{1} << 16;
};

namespace detail {

inline std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

inline std::uint64_t tuple_hash(const FiveTuple& t, std::uint64_t seed) {
  std::uint64_t h = mix64(seed ^ 0x9E3779B97F4A7C15ULL);
  h = mix64(h ^ ((std::uint64_t{t.src_ip.value} << 32) | t.dst_ip.value));
  h = mix64(h ^ ((std::uint64_t{t.src_port} << 24) | (std::uint64_t{t.dst_port} << 8) | t.protocol));
  return h;
}

}  // namespace detail

/// One hash per partition; a key is present iff its bit is set in every partition.
class PartitionedBloom {
 public:
  explicit PartitionedBloom(BloomConfig cfg = {}) : cfg_(cfg), bits_(cfg.partitions * cfg.bits_per_partition) {
    if (cfg.partitions == 0 || cfg.bits_per_partition == 0) throw std::invalid_argument("empty bloom filter");
  }

  std::size_t index(const FiveTuple& t, std::size_t partition) const {
    return partition * cfg_.bits_per_partition + detail::tuple_hash(t, partition) % cfg_.bits_per_partition;
  }

  void insert(const FiveTuple& t) {
    for (std::size_t p = 0; p < cfg_.partitions; ++p) bits_[index(t, p)] = true;
  }

  bool contains(const FiveTuple& t) const {
    for (std::size_t p = 0; p < cfg_.partitions; ++p) {
      if (!bits_[index(t, p)]) return false;
    }
    return true;
  }

  void set_bit(std::size_t i, bool v) { bits_[i] = v; }
  void reset() { bits_.assign(bits_.size(), false); }
  const BloomConfig& config() const { return cfg_; }

 private:
  BloomConfig cfg_;
  std::vector<bool> bits_;
};

/// Control-plane shadow of a PartitionedBloom with per-bit counters, so keys
/// can be removed. Returns the bit indices whose counter reached zero.
class CountingBloom {
 public:
  explicit CountingBloom(BloomConfig cfg = {}) : shape_(cfg), counts_(cfg.partitions * cfg.bits_per_partition) {}

  void insert(const FiveTuple& t) {
    for (std::size_t p = 0; p < shape_.config().partitions; ++p) ++counts_[shape_.index(t, p)];
  }

  std::vector<std::size_t> remove(const FiveTuple& t) {
    std::vector<std::size_t> cleared;
    for (std::size_t p = 0; p < shape_.config().partitions; ++p) {
      auto i = shape_.index(t, p);
      if (counts_[i] > 0 && --counts_[i] == 0) cleared.push_back(i);
    }
    return cleared;
  }

  bool contains(const FiveTuple& t) const {
    for (std::size_t p = 0; p < shape_.config().partitions; ++p) {
      if (counts_[shape_.index(t, p)] == 0) return false;
    }
    return true;
  }

 private:
  PartitionedBloom shape_;  // used only for index computation
  std::vector<std::uint32_t> counts_;
};

}  // namespace dfa
