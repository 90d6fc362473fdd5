#pragma once

// Bit-exact codecs for the two frame types on the telemetry path:
//   Reporter -> Translator: Ethernet/IPv4/UDP(40050) + 8 B base header + 45 B features
//   Translator -> Collector: Ethernet/IPv4/UDP(4791) + BTH + RETH + payload + ICRC
// All multi-byte fields are big-endian. IPv4 options are not supported.

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dfa/bytes.hpp"
#include "dfa/core.hpp"

namespace dfa::wire {

inline constexpr std::size_t kEthLen = 14;
inline constexpr std::size_t kIpv4Len = 20;
inline constexpr std::size_t kUdpLen = 8;
inline constexpr std::size_t kL4Offset = kEthLen + kIpv4Len;  // 34
inline constexpr std::size_t kUdpPayloadOffset = kL4Offset + kUdpLen;  // 42

inline constexpr std::uint16_t kEtherTypeIpv4 = 0x0800;
inline constexpr std::uint16_t kDtaPort = 40050;
inline constexpr std::uint16_t kRoceV2Port = 4791;

inline constexpr std::size_t kDtaBaseLen = 8;
inline constexpr std::size_t kDtaFrameLen = kUdpPayloadOffset + kDtaBaseLen + FeatureVector::kWireSize;  // 95
inline constexpr std::uint8_t kDtaVersion = 1;
inline constexpr std::uint8_t kDtaFlagFeatureReport = 0x01;

inline constexpr std::size_t kBthLen = 12;
inline constexpr std::size_t kRethLen = 16;
inline constexpr std::size_t kIcrcLen = 4;
inline constexpr std::size_t kRocePayloadOffset = kUdpPayloadOffset + kBthLen + kRethLen;  // 70
inline constexpr std::size_t kRoceMaxPayload = 128;
inline constexpr std::size_t kRoceMaxFrameLen = kRocePayloadOffset + kRoceMaxPayload + kIcrcLen;
inline constexpr std::uint8_t kOpcodeWriteOnly = 0x2A;  // UC RDMA WRITE Only
inline constexpr std::uint16_t kDefaultPkey = 0xFFFF;

constexpr std::size_t rocev2_frame_len(std::size_t payload_len) {
  return kRocePayloadOffset + payload_len + kIcrcLen;
}

constexpr bool valid_rdma_payload_len(std::size_t n) {
  return n == 8 || n == 16 || n == 32 || n == 64 || n == 128;
}

enum class WireError : std::uint8_t {
  NotDta,       // not IPv4/UDP to the DTA port; forward as normal traffic
  NotRoce,      // not IPv4/UDP to 4791
  BadLength,    // truncated, oversized or length fields inconsistent
  BadMagic,     // unknown DTA version
  BadFlags,     // DTA flags without the feature-report bit or with reserved bits
  BadChecksum,  // IPv4 header or UDP checksum mismatch
  BadOpcode,    // RoCEv2 opcode other than WRITE Only
  BadIcrc,
  BadPayload,   // payload length not one of the supported sizes or != dma_len
};

inline const char* to_string(WireError e) {
  switch (e) {
    case WireError::NotDta: return "NotDta";
    case WireError::NotRoce: return "NotRoce";
    case WireError::BadLength: return "BadLength";
    case WireError::BadMagic: return "BadMagic";
    case WireError::BadFlags: return "BadFlags";
    case WireError::BadChecksum: return "BadChecksum";
    case WireError::BadOpcode: return "BadOpcode";
    case WireError::BadIcrc: return "BadIcrc";
    case WireError::BadPayload: return "BadPayload";
  }
  return "?";
}

using Mac = std::array<std::uint8_t, 6>;

/// L2-L4 addressing for frames a node emits.
struct NetConfig {
  Mac src_mac{0x02, 0x00, 0x00, 0x00, 0x00, 0x01};
  Mac dst_mac{0x02, 0x00, 0x00, 0x00, 0x00, 0x02};
  Ipv4 src_ip = Ipv4::from_octets(192, 168, 0, 1);
  Ipv4 dst_ip = Ipv4::from_octets(192, 168, 0, 2);
  std::uint16_t src_port = 49152;
  std::uint8_t ttl = 64;
  std::uint8_t tos = 0;
};

struct Ipv4Info {
  Ipv4 src;
  Ipv4 dst;
  std::uint8_t tos = 0;
  std::uint16_t total_len = 0;
  std::uint16_t id = 0;
  std::uint16_t flags_frag = 0;
  std::uint8_t ttl = 0;
  std::uint8_t protocol = 0;
  std::uint16_t checksum = 0;
};

struct UdpInfo {
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint16_t length = 0;
  std::uint16_t checksum = 0;
};

struct L2L4Info {
  Mac dst_mac{};
  Mac src_mac{};
  std::uint16_t ether_type = 0;
  Ipv4Info ip;
  UdpInfo udp;
};

/// Reporter -> Translator telemetry message.
struct DtaReport {
  std::uint8_t flags = kDtaFlagFeatureReport;
  std::uint16_t reporter_id = 0;
  std::uint32_t flow_id = 0;
  FeatureVector features;

  bool operator==(const DtaReport&) const = default;
};

namespace detail {

inline std::uint32_t ones_complement_add(std::uint32_t sum, byte_span data) {
  std::size_t i = 0;
  for (; i + 1 < data.size(); i += 2) sum += (std::uint32_t{data[i]} << 8) | data[i + 1];
  if (i < data.size()) sum += std::uint32_t{data[i]} << 8;
  return sum;
}

inline std::uint16_t ones_complement_fold(std::uint32_t sum) {
  while (sum >> 16) sum = (sum & 0xFFFF) + (sum >> 16);
  return static_cast<std::uint16_t>(~sum & 0xFFFF);
}

inline void write_l2_l3_l4(mutable_byte_span f, const NetConfig& net, std::uint16_t dst_port,
                           std::size_t udp_payload_len) {
  for (std::size_t i = 0; i < 6; ++i) {
    f[i] = net.dst_mac[i];
    f[6 + i] = net.src_mac[i];
  }
  put_u16(f, 12, kEtherTypeIpv4);

  const std::size_t ip_total = kIpv4Len + kUdpLen + udp_payload_len;
  put_u8(f, 14, 0x45);
  put_u8(f, 15, net.tos);
  put_u16(f, 16, static_cast<std::uint16_t>(ip_total));
  put_u16(f, 18, 0);
  put_u16(f, 20, 0x4000);  // DF
  put_u8(f, 22, net.ttl);
  put_u8(f, 23, kProtoUdp);
  put_u16(f, 24, 0);
  put_u32(f, 26, net.src_ip.value);
  put_u32(f, 30, net.dst_ip.value);
  put_u16(f, 24, ones_complement_fold(ones_complement_add(0, f.subspan(kEthLen, kIpv4Len))));

  put_u16(f, 34, net.src_port);
  put_u16(f, 36, dst_port);
  put_u16(f, 38, static_cast<std::uint16_t>(kUdpLen + udp_payload_len));
  put_u16(f, 40, 0);
}

inline std::uint16_t udp_checksum(byte_span frame) {
  const std::uint16_t udp_len = get_u16(frame, 38);
  std::uint32_t sum = 0;
  sum = ones_complement_add(sum, frame.subspan(26, 8));  // src + dst address
  sum += kProtoUdp;
  sum += udp_len;
  std::array<std::uint8_t, kUdpLen> hdr{};
  for (std::size_t i = 0; i < kUdpLen; ++i) hdr[i] = frame[kL4Offset + i];
  hdr[6] = hdr[7] = 0;
  sum = ones_complement_add(sum, hdr);
  sum = ones_complement_add(sum, frame.subspan(kUdpPayloadOffset, udp_len - kUdpLen));
  const std::uint16_t c = ones_complement_fold(sum);
  return c == 0 ? 0xFFFF : c;
}

inline L2L4Info read_l2_l4(byte_span f) {
  L2L4Info o;
  for (std::size_t i = 0; i < 6; ++i) {
    o.dst_mac[i] = f[i];
    o.src_mac[i] = f[6 + i];
  }
  o.ether_type = get_u16(f, 12);
  o.ip.tos = f[15];
  o.ip.total_len = get_u16(f, 16);
  o.ip.id = get_u16(f, 18);
  o.ip.flags_frag = get_u16(f, 20);
  o.ip.ttl = f[22];
  o.ip.protocol = f[23];
  o.ip.checksum = get_u16(f, 24);
  o.ip.src = Ipv4{get_u32(f, 26)};
  o.ip.dst = Ipv4{get_u32(f, 30)};
  o.udp.src_port = get_u16(f, 34);
  o.udp.dst_port = get_u16(f, 36);
  o.udp.length = get_u16(f, 38);
  o.udp.checksum = get_u16(f, 40);
  return o;
}

// Shared L2-L4 screening: returns the error for frames that are not IPv4/UDP
// to `port`, or whose headers are malformed. `not_ours` is the pass-through code.
inline bool screen_udp(byte_span f, std::uint16_t port, WireError not_ours, WireError& err) {
  if (f.size() < kUdpPayloadOffset) {
    err = WireError::BadLength;
    return false;
  }
  if (get_u16(f, 12) != kEtherTypeIpv4 || (f[14] >> 4) != 4 || f[23] != kProtoUdp || get_u16(f, 36) != port) {
    err = not_ours;
    return false;
  }
  if ((f[14] & 0x0F) != 5) {
    err = WireError::BadLength;
    return false;
  }
  return true;
}

}  // namespace detail

inline bool dta_flags_valid(std::uint8_t flags) { return flags == kDtaFlagFeatureReport; }

/// Encodes a report into `out` (at least kDtaFrameLen bytes); returns the frame length.
inline std::size_t dta_encode_into(const DtaReport& r, const NetConfig& net, mutable_byte_span out) {
  if (!dta_flags_valid(r.flags)) throw std::invalid_argument("DTA flags must be exactly the feature-report bit");
  if (out.size() < kDtaFrameLen) throw std::invalid_argument("output buffer too small for DTA frame");
  auto f = out.first(kDtaFrameLen);
  detail::write_l2_l3_l4(f, net, kDtaPort, kDtaBaseLen + FeatureVector::kWireSize);
  put_u8(f, 42, kDtaVersion);
  put_u8(f, 43, r.flags);
  put_u16(f, 44, r.reporter_id);
  put_u32(f, 46, r.flow_id);
  encode_feature_vector(r.features, f.subspan(50, FeatureVector::kWireSize));
  put_u16(f, 40, detail::udp_checksum(f));
  return kDtaFrameLen;
}

inline std::vector<std::uint8_t> dta_encode(const DtaReport& r, const NetConfig& net = {}) {
  std::vector<std::uint8_t> out(kDtaFrameLen);
  dta_encode_into(r, net, out);
  return out;
}

inline Result<DtaReport, WireError> dta_decode(byte_span f) {
  WireError err{};
  if (!detail::screen_udp(f, kDtaPort, WireError::NotDta, err)) return err;
  if (f.size() != kDtaFrameLen || get_u16(f, 16) != kDtaFrameLen - kEthLen ||
      get_u16(f, 38) != kDtaFrameLen - kL4Offset) {
    return WireError::BadLength;
  }
  if (f[42] != kDtaVersion) return WireError::BadMagic;
  if (!dta_flags_valid(f[43])) return WireError::BadFlags;
  if (detail::ones_complement_fold(detail::ones_complement_add(0, f.subspan(kEthLen, kIpv4Len))) != 0) {
    return WireError::BadChecksum;
  }
  const std::uint16_t udp_ck = get_u16(f, 40);
  if (udp_ck != 0 && udp_ck != detail::udp_checksum(f)) return WireError::BadChecksum;

  DtaReport r;
  r.flags = f[43];
  r.reporter_id = get_u16(f, 44);
  r.flow_id = get_u32(f, 46);
  if (!decode_feature_vector(f.subspan(50, FeatureVector::kWireSize), r.features)) return WireError::BadPayload;
  return r;
}

/// Invariant CRC over a RoCEv2 frame without its trailing ICRC: eight 0xFF
/// bytes stand in for the absent LRH; IP TOS, TTL, header checksum, the UDP
/// checksum and the BTH reserved byte are replaced by all-ones.
inline std::uint32_t icrc(byte_span frame_wo_icrc) {
  if (frame_wo_icrc.size() < kUdpPayloadOffset + kBthLen) throw std::invalid_argument("frame too short for ICRC");
  Crc32 c;
  for (int i = 0; i < 8; ++i) c.update_byte(0xFF);
  std::array<std::uint8_t, kIpv4Len + kUdpLen + kBthLen> hdr{};
  for (std::size_t i = 0; i < hdr.size(); ++i) hdr[i] = frame_wo_icrc[kEthLen + i];
  hdr[1] = 0xFF;                 // TOS
  hdr[8] = 0xFF;                 // TTL
  hdr[10] = hdr[11] = 0xFF;      // IP checksum
  hdr[26] = hdr[27] = 0xFF;      // UDP checksum
  hdr[kIpv4Len + kUdpLen + 4] = 0xFF;  // BTH FECN/BECN/reserved
  c.update(hdr);
  c.update(frame_wo_icrc.subspan(kUdpPayloadOffset + kBthLen));
  return c.value();
}

struct RoceWriteParams {
  std::uint64_t virtual_addr = 0;
  std::uint32_t rkey = 0;
  std::uint32_t dest_qp = 0;  // 24 bit
  std::uint32_t psn = 0;      // 24 bit
  std::uint16_t pkey = kDefaultPkey;
  bool ack_req = false;

  bool operator==(const RoceWriteParams&) const = default;
};

/// Encodes a WRITE Only frame into `out`; returns the frame length.
inline std::size_t rocev2_encode_write_only_into(const RoceWriteParams& p, byte_span payload, const NetConfig& net,
                                                 mutable_byte_span out) {
  if (!valid_rdma_payload_len(payload.size())) {
    throw std::invalid_argument("RDMA payload length must be 8, 16, 32, 64 or 128 bytes");
  }
  if (p.dest_qp > 0xFFFFFF || p.psn > 0xFFFFFF) throw std::invalid_argument("dest_qp and psn are 24-bit fields");
  const std::size_t len = rocev2_frame_len(payload.size());
  if (out.size() < len) throw std::invalid_argument("output buffer too small for RoCEv2 frame");
  auto f = out.first(len);
  detail::write_l2_l3_l4(f, net, kRoceV2Port, kBthLen + kRethLen + payload.size() + kIcrcLen);
  put_u8(f, 42, kOpcodeWriteOnly);
  put_u8(f, 43, 0);  // SE=0 M=0 PadCnt=0 TVer=0
  put_u16(f, 44, p.pkey);
  put_u8(f, 46, 0);
  put_u24(f, 47, p.dest_qp);
  put_u8(f, 50, p.ack_req ? 0x80 : 0x00);
  put_u24(f, 51, p.psn);
  put_u64(f, 54, p.virtual_addr);
  put_u32(f, 62, p.rkey);
  put_u32(f, 66, static_cast<std::uint32_t>(payload.size()));
  for (std::size_t i = 0; i < payload.size(); ++i) f[kRocePayloadOffset + i] = payload[i];
  put_u32(f, len - kIcrcLen, icrc(f.first(len - kIcrcLen)));
  return len;
}

inline std::vector<std::uint8_t> rocev2_encode_write_only(const RoceWriteParams& p, byte_span payload,
                                                          const NetConfig& net = {}) {
  std::vector<std::uint8_t> out(rocev2_frame_len(payload.size()));
  rocev2_encode_write_only_into(p, payload, net, out);
  return out;
}

/// A decoded WRITE Only frame. `payload` aliases the input frame.
struct RoceWriteView {
  RoceWriteParams params;
  std::uint8_t opcode = 0;
  std::uint32_t dma_len = 0;
  std::uint32_t icrc = 0;
  byte_span payload;
};

struct RoceDecodeOptions {
  bool check_icrc = true;
};

inline Result<RoceWriteView, WireError> rocev2_decode(byte_span f, RoceDecodeOptions opt = {}) {
  WireError err{};
  if (!detail::screen_udp(f, kRoceV2Port, WireError::NotRoce, err)) return err;
  if (f.size() < kRocePayloadOffset + kIcrcLen || f.size() > kRoceMaxFrameLen ||
      get_u16(f, 16) != f.size() - kEthLen || get_u16(f, 38) != f.size() - kL4Offset) {
    return WireError::BadLength;
  }
  if (f[42] != kOpcodeWriteOnly) return WireError::BadOpcode;
  if (detail::ones_complement_fold(detail::ones_complement_add(0, f.subspan(kEthLen, kIpv4Len))) != 0) {
    return WireError::BadChecksum;
  }
  const std::size_t payload_len = f.size() - kRocePayloadOffset - kIcrcLen;
  RoceWriteView v;
  v.opcode = f[42];
  v.params.pkey = get_u16(f, 44);
  v.params.dest_qp = get_u24(f, 47);
  v.params.ack_req = (f[50] & 0x80) != 0;
  v.params.psn = get_u24(f, 51);
  v.params.virtual_addr = get_u64(f, 54);
  v.params.rkey = get_u32(f, 62);
  v.dma_len = get_u32(f, 66);
  v.icrc = get_u32(f, f.size() - kIcrcLen);
  if (!valid_rdma_payload_len(payload_len) || v.dma_len != payload_len) return WireError::BadPayload;
  if (opt.check_icrc && v.icrc != icrc(f.first(f.size() - kIcrcLen))) return WireError::BadIcrc;
  v.payload = f.subspan(kRocePayloadOffset, payload_len);
  return v;
}

inline L2L4Info read_headers(byte_span frame) {
  if (frame.size() < kUdpPayloadOffset) throw std::invalid_argument("frame shorter than Ethernet/IPv4/UDP headers");
  return detail::read_l2_l4(frame);
}

}  // namespace dfa::wire
