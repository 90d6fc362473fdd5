#pragma once

// Big-endian field access, CRC-32 and hex helpers shared by the codecs.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dfa {

using byte_span = std::span<const std::uint8_t>;
using mutable_byte_span = std::span<std::uint8_t>;

inline void put_u8(mutable_byte_span b, std::size_t off, std::uint8_t v) { b[off] = v; }

inline void put_u16(mutable_byte_span b, std::size_t off, std::uint16_t v) {
  b[off] = static_cast<std::uint8_t>(v >> 8);
  b[off + 1] = static_cast<std::uint8_t>(v);
}

inline void put_u24(mutable_byte_span b, std::size_t off, std::uint32_t v) {
  b[off] = static_cast<std::uint8_t>(v >> 16);
  b[off + 1] = static_cast<std::uint8_t>(v >> 8);
  b[off + 2] = static_cast<std::uint8_t>(v);
}

inline void put_u32(mutable_byte_span b, std::size_t off, std::uint32_t v) {
  b[off] = static_cast<std::uint8_t>(v >> 24);
  b[off + 1] = static_cast<std::uint8_t>(v >> 16);
  b[off + 2] = static_cast<std::uint8_t>(v >> 8);
  b[off + 3] = static_cast<std::uint8_t>(v);
}

inline void put_u64(mutable_byte_span b, std::size_t off, std::uint64_t v) {
  put_u32(b, off, static_cast<std::uint32_t>(v >> 32));
  put_u32(b, off + 4, static_cast<std::uint32_t>(v));
}

inline std::uint8_t get_u8(byte_span b, std::size_t off) { return b[off]; }

inline std::uint16_t get_u16(byte_span b, std::size_t off) {
  return static_cast<std::uint16_t>((b[off] << 8) | b[off + 1]);
}

inline std::uint32_t get_u24(byte_span b, std::size_t off) {
  return (std::uint32_t{b[off]} << 16) | (std::uint32_t{b[off + 1]} << 8) | b[off + 2];
}

inline std::uint32_t get_u32(byte_span b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | b[off + 3];
}

inline std::uint64_t get_u64(byte_span b, std::size_t off) {
  return (std::uint64_t{get_u32(b, off)} << 32) | get_u32(b, off + 4);
}

namespace detail {

constexpr std::array<std::uint32_t, 256> make_crc32_table() {
  std::array<std::uint32_t, 256> t{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t c = i;
    for (int k = 0; k < 8; ++k) c = (c & 1U) ? (0xEDB88320U ^ (c >> 1)) : (c >> 1);
    t[i] = c;
  }
  return t;
}

inline constexpr auto crc32_table = make_crc32_table();

}  // namespace detail

/// Incremental CRC-32 (IEEE 802.3, reflected, init and final XOR 0xFFFFFFFF).
class Crc32 {
 public:
  void update(byte_span data) {
    for (std::uint8_t byte : data) state_ = detail::crc32_table[(state_ ^ byte) & 0xFFU] ^ (state_ >> 8);
  }
  void update_byte(std::uint8_t byte) {
    state_ = detail::crc32_table[(state_ ^ byte) & 0xFFU] ^ (state_ >> 8);
  }
  std::uint32_t value() const { return state_ ^ 0xFFFFFFFFU; }

 private:
  std::uint32_t state_ = 0xFFFFFFFFU;
};

inline std::uint32_t crc32(byte_span data) {
  Crc32 c;
  c.update(data);
  return c.value();
}

inline std::string to_hex(byte_span data) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (std::uint8_t b : data) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xF]);
  }
  return out;
}

/// Parses a hex string; whitespace and ':' separators are ignored.
inline std::vector<std::uint8_t> from_hex(std::string_view text) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  std::vector<std::uint8_t> out;
  int hi = -1;
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == ':' || c == '\n' || c == '\r') continue;
    int n = nibble(c);
    if (n < 0) throw std::invalid_argument(std::string("invalid hex character '") + c + "'");
    if (hi < 0) {
      hi = n;
    } else {
      out.push_back(static_cast<std::uint8_t>((hi << 4) | n));
      hi = -1;
    }
  }
  if (hi >= 0) throw std::invalid_argument("odd number of hex digits");
  return out;
}

}  // namespace dfa
