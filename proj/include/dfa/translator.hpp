#pragma once

// Rewrites feature reports into RDMA WRITE Only frames aimed at the flow's
// next history slot in the collector's memory region.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dfa/core.hpp"
#include "dfa/wire.hpp"

namespace dfa {

inline constexpr std::size_t kHistoryDepth = 10;
inline constexpr std::size_t kCellSize = TelemetryEntry::kWireSize;

/// Parameters the collector hands out during connection setup.
struct ConnectionParams {
  std::uint64_t base_va = 0;
  std::uint64_t region_len = 0;
  std::uint32_t rkey = 0;
  std::uint32_t dest_qp = 0;

  bool operator==(const ConnectionParams&) const = default;
};

struct QueuePairState {
  std::uint32_t dest_qp = 0;
  std::uint32_t rkey = 0;
  std::uint64_t region_base = 0;
  std::uint64_t region_len = 0;
  std::uint32_t next_psn = 0;
};

/// One 8-bit slot counter per flow, wrapping at the history depth.
class HistoryCounters {
 public:
  HistoryCounters(std::size_t flows, std::size_t depth = kHistoryDepth) : depth_(depth), counters_(flows, 0) {
    if (depth == 0 || depth > 255) throw std::invalid_argument("history depth must be in [1, 255]");
  }

  /// Returns the current slot and advances the flow's counter.
  std::optional<std::uint8_t> next(std::uint32_t flow_id) {
    if (flow_id >= counters_.size()) return std::nullopt;
    std::uint8_t& c = counters_[flow_id];
    const std::uint8_t slot = c;
    c = static_cast<std::uint8_t>((c + 1) % depth_);
    return slot;
  }

  std::uint8_t peek(std::uint32_t flow_id) const { return counters_.at(flow_id); }
  std::size_t flows() const { return counters_.size(); }
  std::size_t depth() const { return depth_; }

 private:
  std::size_t depth_;
  std::vector<std::uint8_t> counters_;
};

struct TranslatorConfig {
  std::size_t flow_capacity = 2 * (std::size_t{1} << 17);
  std::size_t history_depth = kHistoryDepth;
  wire::NetConfig net{wire::Mac{0x02, 0, 0, 0, 0, 0x02}, wire::Mac{0x02, 0, 0, 0, 0, 0x03},
                      Ipv4::from_octets(192, 168, 0, 2), Ipv4::from_octets(192, 168, 0, 3), 49152, 64, 0};
};

enum class TranslateStatus : std::uint8_t { Emitted, PassThrough, DroppedParse, DroppedRange, DroppedBounds };

struct TranslateOutcome {
  TranslateStatus status = TranslateStatus::DroppedParse;
  std::vector<std::uint8_t> frame;  // the RoCEv2 frame, or the original frame on pass-through
  std::uint64_t virtual_addr = 0;
  std::uint32_t psn = 0;
  std::uint8_t slot = 0;
};

class Translator {
 public:
  explicit Translator(TranslatorConfig cfg = {})
      : cfg_(cfg), history_(cfg.flow_capacity, cfg.history_depth) {}

  /// Installs the queue-pair parameters. May be called once.
  void connect(const ConnectionParams& p) {
    if (qp_) throw std::logic_error("translator already connected");
    if (p.dest_qp > 0xFFFFFF) throw std::invalid_argument("dest_qp is a 24-bit field");
    qp_ = QueuePairState{p.dest_qp, p.rkey, p.base_va, p.region_len, 0};
  }

  bool connected() const { return qp_.has_value(); }
  const QueuePairState& queue_pair() const {
    if (!qp_) throw std::logic_error("translator not connected");
    return *qp_;
  }

  std::optional<std::uint8_t> next_history_slot(std::uint32_t flow_id) {
    auto s = history_.next(flow_id);
    if (!s) ++dropped_range_;
    return s;
  }

  /// Address of a slot, or nullopt if the 64 B cell does not fit the region.
  std::optional<std::uint64_t> map_address(std::uint32_t flow_id, std::uint32_t slot) const {
    const auto& qp = queue_pair();
    if (slot >= cfg_.history_depth) return std::nullopt;
    const std::uint64_t cell = std::uint64_t{flow_id} * cfg_.history_depth + slot;
    if ((cell + 1) * kCellSize > qp.region_len) return std::nullopt;
    return qp.region_base + cell * kCellSize;
  }

  TranslateOutcome translate(byte_span dta_frame) {
    auto parsed = wire::dta_decode(dta_frame);
    if (!parsed) {
      TranslateOutcome out;
      if (parsed.error() == wire::WireError::NotDta) {
        out.status = TranslateStatus::PassThrough;
        out.frame.assign(dta_frame.begin(), dta_frame.end());
        ++passed_through_;
      } else {
        out.status = TranslateStatus::DroppedParse;
        ++dropped_parse_;
      }
      return out;
    }
    return translate(*parsed);
  }

  /// Already-parsed path. Bounds are checked before the slot counter and PSN
  /// advance, so both move exactly once per emitted frame.
  TranslateOutcome translate(const wire::DtaReport& r) {
    auto& qp = qp_mut();
    TranslateOutcome out;
    if (r.flow_id >= history_.flows()) {
      out.status = TranslateStatus::DroppedRange;
      ++dropped_range_;
      return out;
    }
    const std::uint8_t slot = history_.peek(r.flow_id);
    const auto va = map_address(r.flow_id, slot);
    if (!va) {
      out.status = TranslateStatus::DroppedBounds;
      ++dropped_bounds_;
      return out;
    }
    history_.next(r.flow_id);

    TelemetryEntry e;
    e.flow_id = r.flow_id;
    e.features = r.features;
    const EntryBytes payload = encode_entry(e);

    wire::RoceWriteParams p;
    p.virtual_addr = *va;
    p.rkey = qp.rkey;
    p.dest_qp = qp.dest_qp;
    p.psn = qp.next_psn;
    out.frame = wire::rocev2_encode_write_only(p, payload, cfg_.net);
    out.status = TranslateStatus::Emitted;
    out.virtual_addr = *va;
    out.psn = qp.next_psn;
    out.slot = slot;
    qp.next_psn = (qp.next_psn + 1) & 0xFFFFFF;
    ++translated_;
    return out;
  }

  /// Raw write for benchmarks: arbitrary payload at a given cell offset of
  /// `payload.size()` bytes; wraps within the region. Returns the frame length.
  std::size_t emit_raw(std::uint64_t cell_index, byte_span payload, mutable_byte_span out) {
    auto& qp = qp_mut();
    const std::uint64_t cells = qp.region_len / payload.size();
    wire::RoceWriteParams p;
    p.virtual_addr = qp.region_base + (cell_index % cells) * payload.size();
    p.rkey = qp.rkey;
    p.dest_qp = qp.dest_qp;
    p.psn = qp.next_psn;
    const std::size_t n = wire::rocev2_encode_write_only_into(p, payload, cfg_.net, out);
    qp.next_psn = (qp.next_psn + 1) & 0xFFFFFF;
    ++translated_;
    return n;
  }

  const HistoryCounters& history() const { return history_; }
  const TranslatorConfig& config() const { return cfg_; }

  std::uint64_t translated() const { return translated_; }
  std::uint64_t dropped() const { return dropped_parse_ + dropped_range_ + dropped_bounds_; }

  std::map<std::string, std::uint64_t> metrics() const {
    return {{"translator.translated", translated_},
            {"translator.passed_through", passed_through_},
            {"translator.dropped_parse", dropped_parse_},
            {"translator.dropped_range", dropped_range_},
            {"translator.dropped_bounds", dropped_bounds_}};
  }

 private:
  QueuePairState& qp_mut() {
    if (!qp_) throw std::logic_error("translator not connected");
    return *qp_;
  }

  TranslatorConfig cfg_;
  HistoryCounters history_;
  std::optional<QueuePairState> qp_;
  std::uint64_t translated_ = 0;
  std::uint64_t passed_through_ = 0;
  std::uint64_t dropped_parse_ = 0;
  std::uint64_t dropped_range_ = 0;
  std::uint64_t dropped_bounds_ = 0;
};

}  // namespace dfa
