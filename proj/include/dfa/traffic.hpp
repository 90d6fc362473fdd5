#pragma once

// Deterministic synthetic packet traces.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "dfa/core.hpp"
#include "dfa/reporter.hpp"

namespace dfa {

/// Fixed value or integer-uniform on [lo, hi].
struct Distribution {
  enum class Kind : std::uint8_t { Fixed, Uniform };
  Kind kind = Kind::Fixed;
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;

  static Distribution fixed(std::uint64_t v) { return {Kind::Fixed, v, v}; }
  static Distribution uniform(std::uint64_t lo, std::uint64_t hi) { return {Kind::Uniform, lo, hi}; }

  /// "fixed:N" | "uniform:A,B" | "N"
  static Distribution parse(const std::string& s) {
    auto num = [&](const std::string& t) -> std::uint64_t {
      if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos) {
        throw std::invalid_argument("bad distribution '" + s + "'");
      }
      return std::stoull(t);
    };
    if (s.rfind("uniform:", 0) == 0) {
      const auto body = s.substr(8);
      const auto comma = body.find(',');
      if (comma == std::string::npos) throw std::invalid_argument("uniform distribution needs 'uniform:A,B'");
      return uniform(num(body.substr(0, comma)), num(body.substr(comma + 1)));
    }
    if (s.rfind("fixed:", 0) == 0) return fixed(num(s.substr(6)));
    return fixed(num(s));
  }

  std::string to_string() const {
    return kind == Kind::Fixed ? "fixed:" + std::to_string(lo)
                               : "uniform:" + std::to_string(lo) + "," + std::to_string(hi);
  }

  void validate(const char* what) const {
    if (lo > hi) throw std::invalid_argument(std::string(what) + ": uniform bounds must satisfy a <= b");
  }

  template <class Rng>
  std::uint64_t sample(Rng& rng) const {
    if (kind == Kind::Fixed || lo == hi) return lo;
    // Modulo reduction keeps streams identical across standard libraries.
    return lo + rng() % (hi - lo + 1);
  }
};

struct TrafficSpec {
  std::size_t num_flows = 1000;
  std::size_t packets_per_flow = 100;
  Distribution gap_ns = Distribution::fixed(1 * kNsPerMs);
  Distribution size_bytes = Distribution::uniform(64, 1500);
  double tcp_fraction = 0.5;
  std::uint64_t seed = 1;
  /// Flow start offsets are uniform on [0, start_jitter_ns].
  std::uint64_t start_jitter_ns = 0;

  void validate() const {
    if (num_flows == 0) throw std::invalid_argument("traffic: num_flows must be positive");
    if (num_flows > (std::size_t{1} << 24)) throw std::invalid_argument("traffic: at most 2^24 flows");
    if (packets_per_flow == 0) throw std::invalid_argument("traffic: packets_per_flow must be positive");
    if (!(tcp_fraction >= 0.0 && tcp_fraction <= 1.0)) throw std::invalid_argument("traffic: tcp_fraction must be in [0,1]");
    gap_ns.validate("traffic.gap");
    size_bytes.validate("traffic.size");
    if (size_bytes.hi > 0xFFFF) throw std::invalid_argument("traffic: packet size must fit 16 bits");
  }
};

/// Five-tuple of flow `i`: the source address encodes the index, so tuples are unique.
inline FiveTuple flow_tuple(std::size_t i, bool tcp, std::mt19937_64& rng) {
  FiveTuple t;
  t.src_ip = Ipv4{0x0A000000U + static_cast<std::uint32_t>(i + 1)};
  t.dst_ip = Ipv4{0xAC100000U + static_cast<std::uint32_t>(rng() % 65536)};
  t.src_port = static_cast<std::uint16_t>(1024 + rng() % 60000);
  t.dst_port = tcp ? static_cast<std::uint16_t>((rng() & 1) ? 443 : 80) : static_cast<std::uint16_t>(5000 + rng() % 1000);
  t.protocol = tcp ? kProtoTcp : kProtoUdp;
  return t;
}

/// Timestamp-ordered packet stream. TCP flows open with SYN and close with FIN.
/// Ties are broken by flow index, then packet index.
inline std::vector<Packet> gen_traffic(const TrafficSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  struct Keyed {
    Packet pkt;
    std::uint32_t flow;
    std::uint32_t idx;
  };
  std::vector<Keyed> all;
  all.reserve(spec.num_flows * spec.packets_per_flow);
  for (std::size_t f = 0; f < spec.num_flows; ++f) {
    const bool tcp = static_cast<double>(rng() >> 11) * 0x1.0p-53 < spec.tcp_fraction;
    const FiveTuple tuple = flow_tuple(f, tcp, rng);
    std::uint64_t t = spec.start_jitter_ns ? rng() % (spec.start_jitter_ns + 1) : 0;
    for (std::size_t k = 0; k < spec.packets_per_flow; ++k) {
      if (k > 0) t += spec.gap_ns.sample(rng);
      Packet p;
      p.ts = Timestamp{t};
      p.tuple = tuple;
      p.size_bytes = static_cast<std::uint32_t>(spec.size_bytes.sample(rng));
      if (tcp) {
        p.tcp_flags = tcp_flag::kAck;
        if (k == 0) p.tcp_flags = tcp_flag::kSyn;
        if (k + 1 == spec.packets_per_flow) p.tcp_flags |= tcp_flag::kFin;
      }
      all.push_back({p, static_cast<std::uint32_t>(f), static_cast<std::uint32_t>(k)});
    }
  }
  std::sort(all.begin(), all.end(), [](const Keyed& a, const Keyed& b) {
    if (a.pkt.ts != b.pkt.ts) return a.pkt.ts < b.pkt.ts;
    if (a.flow != b.flow) return a.flow < b.flow;
    return a.idx < b.idx;
  });
  std::vector<Packet> out;
  out.reserve(all.size());
  for (auto& k : all) out.push_back(k.pkt);
  return out;
}

}  // namespace dfa
