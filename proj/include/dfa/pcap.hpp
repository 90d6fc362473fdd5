#pragma once

// Classic pcap (link type Ethernet) to packet events, and the reverse for
// writing synthetic traces. Only headers are written; orig_len carries the size.

#include <algorithm>
#include <array>
#include <iterator>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dfa/bytes.hpp"
#include "dfa/core.hpp"
#include "dfa/reporter.hpp"

namespace dfa::pcap {

inline constexpr std::uint32_t kMagicMicro = 0xA1B2C3D4U;
inline constexpr std::uint32_t kMagicNano = 0xA1B23C4DU;
inline constexpr std::uint32_t kLinkTypeEthernet = 1;

namespace detail {

inline std::uint32_t swap32(std::uint32_t v) { return __builtin_bswap32(v); }

inline std::uint32_t le32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
}

inline void put_le32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_le16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

}  // namespace detail

/// Extracts the five-tuple, flags and timestamp from one captured Ethernet frame.
inline Packet parse_frame(byte_span frame, std::uint32_t wire_len, Timestamp ts) {
  Packet p;
  p.ts = ts;
  p.size_bytes = wire_len;
  p.malformed = true;
  std::size_t off = 12;
  if (frame.size() < off + 2) return p;
  std::uint16_t type = get_u16(frame, off);
  off += 2;
  if (type == 0x8100) {
    if (frame.size() < off + 4) return p;
    type = get_u16(frame, off + 2);
    off += 4;
  }
  if (type != 0x0800 || frame.size() < off + 20) return p;
  const std::size_t ihl = std::size_t{frame[off] & 0x0FU} * 4;
  if ((frame[off] >> 4) != 4 || ihl < 20 || frame.size() < off + ihl) return p;
  p.tuple.protocol = frame[off + 9];
  p.tuple.src_ip = Ipv4{get_u32(frame, off + 12)};
  p.tuple.dst_ip = Ipv4{get_u32(frame, off + 16)};
  const std::size_t l4 = off + ihl;
  if (p.tuple.protocol == kProtoTcp) {
    if (frame.size() < l4 + 14) return p;
    p.tcp_flags = frame[l4 + 13];
  } else if (p.tuple.protocol == kProtoUdp) {
    if (frame.size() < l4 + 8) return p;
  } else {
    p.malformed = false;  // other protocols: valid, untracked, no ports
    return p;
  }
  p.tuple.src_port = get_u16(frame, l4);
  p.tuple.dst_port = get_u16(frame, l4 + 2);
  p.malformed = false;
  return p;
}

/// Reads a classic pcap file; timestamps are made relative to the first record.
inline std::vector<Packet> read_pcap(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open pcap file: " + path);
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.size() < 24) throw std::runtime_error("pcap file too short: " + path);

  const std::uint32_t raw = detail::le32(data.data());
  bool swapped = false;
  bool nanos = false;
  if (raw == kMagicMicro || raw == kMagicNano) {
    nanos = raw == kMagicNano;
  } else if (detail::swap32(raw) == kMagicMicro || detail::swap32(raw) == kMagicNano) {
    swapped = true;
    nanos = detail::swap32(raw) == kMagicNano;
  } else {
    throw std::runtime_error("not a classic pcap file: " + path);
  }
  auto u32 = [&](std::size_t off) {
    const std::uint32_t v = detail::le32(data.data() + off);
    return swapped ? detail::swap32(v) : v;
  };
  if (u32(20) != kLinkTypeEthernet) throw std::runtime_error("pcap link type is not Ethernet: " + path);

  std::vector<Packet> out;
  std::size_t off = 24;
  std::uint64_t first = 0;
  bool have_first = false;
  while (off + 16 <= data.size()) {
    const std::uint64_t sec = u32(off);
    const std::uint64_t frac = u32(off + 4);
    const std::uint32_t incl = u32(off + 8);
    const std::uint32_t orig = u32(off + 12);
    off += 16;
    if (off + incl > data.size()) throw std::runtime_error("truncated pcap record in " + path);
    const std::uint64_t abs_ns = sec * kNsPerSec + (nanos ? frac : frac * kNsPerUs);
    if (!have_first) {
      first = abs_ns;
      have_first = true;
    }
    const std::uint64_t rel = abs_ns >= first ? abs_ns - first : 0;
    out.push_back(parse_frame(byte_span(data.data() + off, incl), orig, Timestamp{rel}));
    off += incl;
  }
  return out;
}

/// Writes packets as nanosecond pcap records holding Ethernet/IPv4/L4 headers only.
inline void write_pcap(const std::string& path, const std::vector<Packet>& packets) {
  std::vector<std::uint8_t> out;
  detail::put_le32(out, kMagicNano);
  detail::put_le16(out, 2);
  detail::put_le16(out, 4);
  detail::put_le32(out, 0);
  detail::put_le32(out, 0);
  detail::put_le32(out, 65535);
  detail::put_le32(out, kLinkTypeEthernet);
  for (const auto& p : packets) {
    const bool tcp = p.tuple.protocol == kProtoTcp;
    const std::size_t l4 = tcp ? 20 : 8;
    std::vector<std::uint8_t> f(14 + 20 + l4, 0);
    put_u16(f, 12, 0x0800);
    f[14] = 0x45;
    put_u16(f, 16, static_cast<std::uint16_t>(p.size_bytes >= 14 ? p.size_bytes - 14 : 0));
    f[22] = 64;
    f[23] = p.tuple.protocol;
    put_u32(f, 26, p.tuple.src_ip.value);
    put_u32(f, 30, p.tuple.dst_ip.value);
    put_u16(f, 34, p.tuple.src_port);
    put_u16(f, 36, p.tuple.dst_port);
    if (tcp) {
      f[34 + 12] = 0x50;
      f[34 + 13] = p.tcp_flags;
    } else {
      put_u16(f, 38, 8);
    }
    detail::put_le32(out, static_cast<std::uint32_t>(p.ts.ns / kNsPerSec));
    detail::put_le32(out, static_cast<std::uint32_t>(p.ts.ns % kNsPerSec));
    detail::put_le32(out, static_cast<std::uint32_t>(f.size()));
    detail::put_le32(out, std::max<std::uint32_t>(p.size_bytes, static_cast<std::uint32_t>(f.size())));
    out.insert(out.end(), f.begin(), f.end());
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write pcap file: " + path);
  os.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

}  // namespace dfa::pcap
