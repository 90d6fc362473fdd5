#pragma once

// Human-readable field tables for DTA and RoCEv2 frames.

#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>

#include "dfa/core.hpp"
#include "dfa/wire.hpp"

namespace dfa {

namespace detail {

inline std::string hex_n(std::uint64_t v, int digits) {
  std::ostringstream s;
  s << "0x" << std::hex << std::setw(digits) << std::setfill('0') << v;
  return s.str();
}

inline std::string mac_string(const wire::Mac& m) {
  char buf[18];
  std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", m[0], m[1], m[2], m[3], m[4], m[5]);
  return buf;
}

inline void field(std::ostream& os, const std::string& name, const std::string& value) {
  os << "  " << std::left << std::setw(22) << name << value << '\n';
}

inline void describe_l2_l4(std::ostream& os, const wire::L2L4Info& h) {
  field(os, "eth.dst", mac_string(h.dst_mac));
  field(os, "eth.src", mac_string(h.src_mac));
  field(os, "eth.type", hex_n(h.ether_type, 4));
  field(os, "ip.tos", hex_n(h.ip.tos, 2));
  field(os, "ip.total_length", std::to_string(h.ip.total_len));
  field(os, "ip.id", hex_n(h.ip.id, 4));
  field(os, "ip.flags_frag", hex_n(h.ip.flags_frag, 4));
  field(os, "ip.ttl", std::to_string(h.ip.ttl));
  field(os, "ip.protocol", std::to_string(h.ip.protocol));
  field(os, "ip.checksum", hex_n(h.ip.checksum, 4));
  field(os, "ip.src", h.ip.src.to_string());
  field(os, "ip.dst", h.ip.dst.to_string());
  field(os, "udp.src_port", std::to_string(h.udp.src_port));
  field(os, "udp.dst_port", std::to_string(h.udp.dst_port));
  field(os, "udp.length", std::to_string(h.udp.length));
  field(os, "udp.checksum", hex_n(h.udp.checksum, 4));
}

inline void describe_features(std::ostream& os, const std::string& prefix, const FeatureVector& f) {
  field(os, prefix + "packet_count", std::to_string(f.packet_count));
  for (int k = 0; k < 3; ++k) field(os, prefix + "sum_iat" + std::to_string(k + 1), std::to_string(f.sum_iat[k]));
  for (int k = 0; k < 3; ++k) field(os, prefix + "sum_ps" + std::to_string(k + 1), std::to_string(f.sum_ps[k]));
  field(os, prefix + "five_tuple", f.five_tuple.to_string());
}

}  // namespace detail

enum class FrameKind : std::uint8_t { Dta, Roce, Unknown };

inline FrameKind classify_frame(byte_span f) {
  if (f.size() < wire::kUdpPayloadOffset || get_u16(f, 12) != wire::kEtherTypeIpv4 || f[23] != kProtoUdp) {
    return FrameKind::Unknown;
  }
  const std::uint16_t port = get_u16(f, 36);
  if (port == wire::kDtaPort) return FrameKind::Dta;
  if (port == wire::kRoceV2Port) return FrameKind::Roce;
  return FrameKind::Unknown;
}

/// Prints the field table of a frame. On failure prints the classified parse
/// error to `err` and returns false.
inline bool describe_frame(byte_span f, std::ostream& os, std::ostream& err) {
  const FrameKind kind = classify_frame(f);
  if (kind == FrameKind::Unknown) {
    err << "parse error: NotDta/NotRoce (not an IPv4/UDP frame to port " << wire::kDtaPort << " or "
        << wire::kRoceV2Port << ", " << f.size() << " bytes)\n";
    return false;
  }
  if (kind == FrameKind::Dta) {
    auto r = wire::dta_decode(f);
    if (!r) {
      err << "parse error: DTA " << wire::to_string(r.error()) << '\n';
      return false;
    }
    os << "frame DTA feature report (" << f.size() << " bytes)\n";
    detail::describe_l2_l4(os, wire::read_headers(f));
    detail::field(os, "dta.version", std::to_string(f[42]));
    detail::field(os, "dta.flags", detail::hex_n(r->flags, 2));
    detail::field(os, "dta.reporter_id", std::to_string(r->reporter_id));
    detail::field(os, "dta.flow_id", std::to_string(r->flow_id));
    detail::describe_features(os, "features.", r->features);
    return true;
  }
  auto v = wire::rocev2_decode(f);
  if (!v) {
    err << "parse error: RoCEv2 " << wire::to_string(v.error()) << '\n';
    return false;
  }
  os << "frame RoCEv2 (" << f.size() << " bytes)\n";
  detail::describe_l2_l4(os, wire::read_headers(f));
  detail::field(os, "bth.opcode", detail::hex_n(v->opcode, 2) + (v->opcode == wire::kOpcodeWriteOnly ? " WRITE-Only" : ""));
  detail::field(os, "bth.flags", detail::hex_n(f[43], 2));
  detail::field(os, "bth.pkey", detail::hex_n(v->params.pkey, 4));
  detail::field(os, "bth.dest_qp", detail::hex_n(v->params.dest_qp, 6));
  detail::field(os, "bth.ack_req", v->params.ack_req ? "1" : "0");
  detail::field(os, "bth.psn", std::to_string(v->params.psn));
  detail::field(os, "reth.virtual_addr", detail::hex_n(v->params.virtual_addr, 16));
  detail::field(os, "reth.rkey", detail::hex_n(v->params.rkey, 8));
  detail::field(os, "reth.dma_length", std::to_string(v->dma_len));
  detail::field(os, "icrc", detail::hex_n(v->icrc, 8) + " (valid)");
  if (v->payload.size() == TelemetryEntry::kWireSize) {
    const auto cell = decode_entry(v->payload);
    detail::field(os, "entry.state", to_string(cell.state));
    if (cell.state == CellState::Written) {
      detail::field(os, "entry.flow_id", std::to_string(cell.entry.flow_id));
      detail::describe_features(os, "entry.", cell.entry.features);
      detail::field(os, "entry.checksum", detail::hex_n(cell.entry.checksum, 8));
    }
  } else {
    detail::field(os, "payload", to_hex(v->payload));
  }
  return true;
}

}  // namespace dfa
