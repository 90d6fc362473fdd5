#pragma once

// Domain types shared by every stage: flow identity, timestamps, per-flow
// register state, the 45 byte feature vector and the 64 byte memory entry.

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

#include "dfa/bytes.hpp"

namespace dfa {

/// Minimal value-or-error holder used by the decoders.
template <class T, class E>
class Result {
 public:
  Result(T value) : data_(std::move(value)) {}  // NOLINT(google-explicit-constructor)
  Result(E error) : data_(error) {}             // NOLINT(google-explicit-constructor)

  bool ok() const { return data_.index() == 0; }
  explicit operator bool() const { return ok(); }

  const T& value() const& {
    if (!ok()) throw std::logic_error("Result::value() on error");
    return std::get<0>(data_);
  }
  T&& value() && {
    if (!ok()) throw std::logic_error("Result::value() on error");
    return std::get<0>(std::move(data_));
  }
  const T& operator*() const& { return value(); }
  const T* operator->() const { return &value(); }

  E error() const {
    if (ok()) throw std::logic_error("Result::error() on value");
    return std::get<1>(data_);
  }

 private:
  std::variant<T, E> data_;
};

struct Ipv4 {
  std::uint32_t value = 0;

  static constexpr Ipv4 from_octets(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
    return Ipv4{(std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) | (std::uint32_t{c} << 8) | d};
  }

  static Ipv4 parse(std::string_view text) {
    std::uint32_t out = 0;
    int parts = 0;
    std::uint32_t cur = 0;
    int digits = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
      if (i == text.size() || text[i] == '.') {
        if (digits == 0 || cur > 255) throw std::invalid_argument("bad IPv4 address: " + std::string(text));
        out = (out << 8) | cur;
        ++parts;
        cur = 0;
        digits = 0;
      } else if (text[i] >= '0' && text[i] <= '9' && digits < 3) {
        cur = cur * 10 + static_cast<std::uint32_t>(text[i] - '0');
        ++digits;
      } else {
        throw std::invalid_argument("bad IPv4 address: " + std::string(text));
      }
    }
    if (parts != 4) throw std::invalid_argument("bad IPv4 address: " + std::string(text));
    return Ipv4{out};
  }

  std::string to_string() const {
    return std::to_string(value >> 24) + "." + std::to_string((value >> 16) & 0xFF) + "." +
           std::to_string((value >> 8) & 0xFF) + "." + std::to_string(value & 0xFF);
  }

  auto operator<=>(const Ipv4&) const = default;
};

inline constexpr std::uint8_t kProtoTcp = 6;
inline constexpr std::uint8_t kProtoUdp = 17;

struct FiveTuple {
  static constexpr std::size_t kWireSize = 17;

  Ipv4 src_ip;
  Ipv4 dst_ip;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint8_t protocol = 0;

  auto operator<=>(const FiveTuple&) const = default;

  std::string to_string() const {
    return src_ip.to_string() + ":" + std::to_string(src_port) + "->" + dst_ip.to_string() + ":" +
           std::to_string(dst_port) + "/" + std::to_string(protocol);
  }
};

/// Writes the 17 byte form: 13 bytes of identity followed by 4 reserved zero bytes.
inline void encode_five_tuple(const FiveTuple& t, mutable_byte_span out) {
  put_u32(out, 0, t.src_ip.value);
  put_u32(out, 4, t.dst_ip.value);
  put_u16(out, 8, t.src_port);
  put_u16(out, 10, t.dst_port);
  put_u8(out, 12, t.protocol);
  put_u32(out, 13, 0);
}

/// Returns false if any reserved byte is nonzero.
inline bool decode_five_tuple(byte_span in, FiveTuple& t) {
  if (get_u32(in, 13) != 0) return false;
  t.src_ip = Ipv4{get_u32(in, 0)};
  t.dst_ip = Ipv4{get_u32(in, 4)};
  t.src_port = get_u16(in, 8);
  t.dst_port = get_u16(in, 10);
  t.protocol = get_u8(in, 12);
  return true;
}

/// Nanoseconds since the start of the simulated trace.
struct Timestamp {
  std::uint64_t ns = 0;

  /// The data plane keeps only the low 32 bits.
  constexpr std::uint32_t low32() const { return static_cast<std::uint32_t>(ns); }

  auto operator<=>(const Timestamp&) const = default;
};

inline constexpr std::uint64_t kNsPerUs = 1'000;
inline constexpr std::uint64_t kNsPerMs = 1'000'000;
inline constexpr std::uint64_t kNsPerSec = 1'000'000'000;

/// Per-flow data plane registers. All sums wrap modulo 2^32.
struct FeatureState {
  std::uint32_t packet_count = 0;
  std::uint32_t last_ts32 = 0;
  std::array<std::uint32_t, 3> sum_iat{};  // sum of IAT^1, IAT^2, IAT^3
  std::array<std::uint32_t, 3> sum_ps{};   // sum of PS^1, PS^2, PS^3

  bool operator==(const FeatureState&) const = default;
};

/// The transmitted part of the flow state: packet count, six sums, five-tuple.
struct FeatureVector {
  static constexpr std::size_t kWireSize = 45;

  std::uint32_t packet_count = 0;
  std::array<std::uint32_t, 3> sum_iat{};
  std::array<std::uint32_t, 3> sum_ps{};
  FiveTuple five_tuple;

  bool operator==(const FeatureVector&) const = default;

  static FeatureVector from_state(const FeatureState& fs, const FiveTuple& tuple) {
    return FeatureVector{fs.packet_count, fs.sum_iat, fs.sum_ps, tuple};
  }
};

inline void encode_feature_vector(const FeatureVector& v, mutable_byte_span out) {
  put_u32(out, 0, v.packet_count);
  for (std::size_t k = 0; k < 3; ++k) put_u32(out, 4 + 4 * k, v.sum_iat[k]);
  for (std::size_t k = 0; k < 3; ++k) put_u32(out, 16 + 4 * k, v.sum_ps[k]);
  encode_five_tuple(v.five_tuple, out.subspan(28, FiveTuple::kWireSize));
}

inline std::array<std::uint8_t, FeatureVector::kWireSize> encode_feature_vector(const FeatureVector& v) {
  std::array<std::uint8_t, FeatureVector::kWireSize> out{};
  encode_feature_vector(v, out);
  return out;
}

inline bool decode_feature_vector(byte_span in, FeatureVector& v) {
  v.packet_count = get_u32(in, 0);
  for (std::size_t k = 0; k < 3; ++k) v.sum_iat[k] = get_u32(in, 4 + 4 * k);
  for (std::size_t k = 0; k < 3; ++k) v.sum_ps[k] = get_u32(in, 16 + 4 * k);
  return decode_five_tuple(in.subspan(28, FiveTuple::kWireSize), v.five_tuple);
}

/// One 64 byte collector memory cell.
///
/// Layout (big-endian): flow_id@0, packet_count@4, sum_iat1..3@8..20,
/// sum_ps1..3@20..32, five_tuple@32..49, checksum@49..53, zero padding@53..64.
/// The checksum is CRC-32 over bytes [0, 49).
struct TelemetryEntry {
  static constexpr std::size_t kWireSize = 64;
  static constexpr std::size_t kChecksumOffset = 49;
  static constexpr std::size_t kPaddingOffset = 53;

  std::uint32_t flow_id = 0;
  FeatureVector features;
  std::uint32_t checksum = 0;  // filled in by encode_entry / decode_entry

  /// Compares the content fields only.
  bool same_content(const TelemetryEntry& o) const { return flow_id == o.flow_id && features == o.features; }
  bool operator==(const TelemetryEntry&) const = default;
};

using EntryBytes = std::array<std::uint8_t, TelemetryEntry::kWireSize>;

inline void encode_entry(const TelemetryEntry& e, mutable_byte_span out) {
  if (out.size() < TelemetryEntry::kWireSize) throw std::invalid_argument("entry buffer shorter than 64 bytes");
  put_u32(out, 0, e.flow_id);
  encode_feature_vector(e.features, out.subspan(4, FeatureVector::kWireSize));
  const std::uint32_t crc = crc32(byte_span(out.data(), TelemetryEntry::kChecksumOffset));
  put_u32(out, TelemetryEntry::kChecksumOffset, crc);
  for (std::size_t i = TelemetryEntry::kPaddingOffset; i < TelemetryEntry::kWireSize; ++i) out[i] = 0;
}

inline EntryBytes encode_entry(const TelemetryEntry& e) {
  EntryBytes out{};
  encode_entry(e, out);
  return out;
}

enum class CellState : std::uint8_t { Written, Empty, Corrupt };

inline const char* to_string(CellState s) {
  switch (s) {
    case CellState::Written: return "written";
    case CellState::Empty: return "empty";
    case CellState::Corrupt: return "corrupt";
  }
  return "?";
}

struct DecodedCell {
  CellState state = CellState::Empty;
  TelemetryEntry entry;  // meaningful only when state == Written
};

/// Classifies a 64 byte cell. An all-zero cell is Empty; a checksum mismatch,
/// nonzero padding or nonzero reserved tuple bytes make it Corrupt.
inline DecodedCell decode_entry(byte_span b) {
  if (b.size() != TelemetryEntry::kWireSize) throw std::invalid_argument("entry must be exactly 64 bytes");
  bool all_zero = true;
  for (std::uint8_t x : b) {
    if (x != 0) {
      all_zero = false;
      break;
    }
  }
  if (all_zero) return {CellState::Empty, {}};

  DecodedCell out{CellState::Corrupt, {}};
  const std::uint32_t stored = get_u32(b, TelemetryEntry::kChecksumOffset);
  if (stored != crc32(b.first(TelemetryEntry::kChecksumOffset))) return out;
  for (std::size_t i = TelemetryEntry::kPaddingOffset; i < TelemetryEntry::kWireSize; ++i) {
    if (b[i] != 0) return out;
  }
  out.entry.flow_id = get_u32(b, 0);
  if (!decode_feature_vector(b.subspan(4, FeatureVector::kWireSize), out.entry.features)) return out;
  out.entry.checksum = stored;
  out.state = CellState::Written;
  return out;
}

}  // namespace dfa

template <>
struct std::hash<dfa::FiveTuple> {
  std::size_t operator()(const dfa::FiveTuple& t) const noexcept {
    std::uint64_t h = (std::uint64_t{t.src_ip.value} << 32) | t.dst_ip.value;
    std::uint64_t l = (std::uint64_t{t.src_port} << 24) | (std::uint64_t{t.dst_port} << 8) | t.protocol;
    h ^= l + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    h ^= h >> 33;
    h *= 0xFF51AFD7ED558CCDULL;
    h ^= h >> 33;
    return static_cast<std::size_t>(h);
  }
};
