#pragma once

// The feature-extracting switch: an ingress stage (classification, report
// gating, clone decision) and an egress stage (register update, report
// assembly) per pipeline, plus the control agent that admits and removes flows.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "dfa/bloom.hpp"
#include "dfa/core.hpp"
#include "dfa/logapprox.hpp"
#include "dfa/wire.hpp"

namespace dfa {

namespace tcp_flag {
inline constexpr std::uint8_t kFin = 0x01;
inline constexpr std::uint8_t kSyn = 0x02;
inline constexpr std::uint8_t kRst = 0x04;
inline constexpr std::uint8_t kPsh = 0x08;
inline constexpr std::uint8_t kAck = 0x10;
}  // namespace tcp_flag

struct Packet {
  Timestamp ts;
  FiveTuple tuple;
  std::uint32_t size_bytes = 0;
  std::uint8_t tcp_flags = 0;
  bool malformed = false;

  bool operator==(const Packet&) const = default;
};

enum class DigestReason : std::uint8_t { NewTcpSyn, TcpFin, NewUdp };

inline const char* to_string(DigestReason r) {
  switch (r) {
    case DigestReason::NewTcpSyn: return "NewTcpSyn";
    case DigestReason::TcpFin: return "TcpFin";
    case DigestReason::NewUdp: return "NewUdp";
  }
  return "?";
}

struct Digest {
  FiveTuple tuple;
  DigestReason reason = DigestReason::NewTcpSyn;
  Timestamp ts;
  std::size_t pipeline = 0;
};

inline constexpr std::size_t kPipelineFlowCapacity = std::size_t{1} << 17;  // 131,072
inline constexpr std::uint64_t kDefaultPeriodNs = 20 * kNsPerMs;

/// Register update for one tracked packet. `pow(v, k)` yields the addend for v^k.
/// The first packet of a flow contributes no IAT terms.
template <class Pow>
FeatureState update_features(FeatureState fs, std::uint32_t size_bytes, Timestamp ts, const Pow& pow) {
  const std::uint32_t ts32 = ts.low32();
  if (fs.packet_count >= 1) {
    const std::uint32_t iat = ts32 - fs.last_ts32;
    for (int k = 1; k <= 3; ++k) fs.sum_iat[k - 1] += pow(iat, k);
  }
  for (int k = 1; k <= 3; ++k) fs.sum_ps[k - 1] += pow(size_bytes, k);
  fs.packet_count += 1;
  fs.last_ts32 = ts32;
  return fs;
}

/// Builds the telemetry message from (unchanged) register state.
inline wire::DtaReport make_report(std::uint32_t flow_id, const FeatureState& fs, const FiveTuple& tuple,
                                   std::uint16_t reporter_id = 0) {
  wire::DtaReport r;
  r.flags = wire::kDtaFlagFeatureReport;
  r.reporter_id = reporter_id;
  r.flow_id = flow_id;
  r.features = FeatureVector::from_state(fs, tuple);
  return r;
}

/// Selects log-table or exact arithmetic at runtime.
struct PowerFn {
  const LogTable* table = nullptr;  // null => exact (mod 2^32)
  std::uint32_t operator()(std::uint32_t v, int k) const { return table ? table->pow(v, k) : ExactPow{}(v, k); }
};

struct BridgedMeta {
  Timestamp ingress_ts;
  bool tracked = false;
  bool clone = false;
  std::uint32_t flow_id = 0;
  std::uint32_t slot = 0;
};

struct PipelineConfig {
  std::size_t flow_capacity = kPipelineFlowCapacity;
  std::uint64_t period_ns = kDefaultPeriodNs;
  BloomConfig bloom;
  /// Egress-local clock as a function of the ingress timestamp; only observed, never used.
  std::function<Timestamp(Timestamp)> egress_clock;
};

class Pipeline {
 public:
  struct IngressResult {
    BridgedMeta meta;
    std::optional<Digest> digest;
  };

  struct Tracking {
    Timestamp last_report_ts;
    Timestamp last_seen_ts;
    std::uint64_t period_ns = 0;
  };

  Pipeline(std::size_t index, PipelineConfig cfg, PowerFn pow)
      : index_(index), cfg_(std::move(cfg)), pow_(pow), bloom_(cfg_.bloom) {
    if (cfg_.flow_capacity == 0 || cfg_.flow_capacity > kPipelineFlowCapacity) {
      throw std::invalid_argument("pipeline flow capacity must be in [1, 131072]");
    }
    if (cfg_.period_ns == 0) throw std::invalid_argument("monitoring period must be positive");
    features_.resize(cfg_.flow_capacity);
    tracking_.resize(cfg_.flow_capacity);
    slot_flow_.resize(cfg_.flow_capacity);
    slot_tuple_.resize(cfg_.flow_capacity);
  }

  IngressResult ingress(const Packet& pkt) {
    IngressResult out;
    out.meta.ingress_ts = pkt.ts;
    auto it = table_.find(pkt.tuple);
    if (it != table_.end()) {
      const std::uint32_t slot = it->second;
      auto& tr = tracking_[slot];
      out.meta.tracked = true;
      out.meta.slot = slot;
      out.meta.flow_id = slot_flow_[slot];
      tr.last_seen_ts = pkt.ts;
      if (pkt.ts > tr.last_report_ts && pkt.ts.ns - tr.last_report_ts.ns > tr.period_ns) {
        out.meta.clone = true;
        tr.last_report_ts = pkt.ts;
      }
      if (pkt.tuple.protocol == kProtoTcp && (pkt.tcp_flags & tcp_flag::kFin)) {
        out.digest = Digest{pkt.tuple, DigestReason::TcpFin, pkt.ts, index_};
      }
      return out;
    }
    if (pkt.tuple.protocol == kProtoTcp) {
      if (pkt.tcp_flags & tcp_flag::kSyn) out.digest = Digest{pkt.tuple, DigestReason::NewTcpSyn, pkt.ts, index_};
    } else if (pkt.tuple.protocol == kProtoUdp) {
      if (bloom_.contains(pkt.tuple)) {
        ++bloom_suppressed_;
      } else {
        bloom_.insert(pkt.tuple);
        out.digest = Digest{pkt.tuple, DigestReason::NewUdp, pkt.ts, index_};
      }
    }
    return out;
  }

  /// Updates registers and, for a cloned packet, assembles the report. Time
  /// comes from the bridged metadata only.
  std::optional<wire::DtaReport> egress(const Packet& pkt, const BridgedMeta& meta, std::uint16_t reporter_id) {
    if (cfg_.egress_clock) last_egress_clock_ = cfg_.egress_clock(pkt.ts);
    if (!meta.tracked) return std::nullopt;
    auto& fs = features_[meta.slot];
    fs = update_features(fs, pkt.size_bytes, meta.ingress_ts, pow_);
    if (!meta.clone) return std::nullopt;
    return make_report(meta.flow_id, fs, slot_tuple_[meta.slot], reporter_id);
  }

  bool install(const FiveTuple& t, std::uint32_t flow_id, Timestamp now, std::optional<std::uint64_t> period = {}) {
    if (table_.count(t)) return false;
    std::uint32_t slot;
    if (!free_slots_.empty()) {
      slot = free_slots_.top();
      free_slots_.pop();
    } else if (next_slot_ < cfg_.flow_capacity) {
      slot = next_slot_++;
    } else {
      return false;
    }
    table_.emplace(t, slot);
    features_[slot] = FeatureState{};
    tracking_[slot] = Tracking{now, now, period.value_or(cfg_.period_ns)};
    slot_flow_[slot] = flow_id;
    slot_tuple_[slot] = t;
    return true;
  }

  std::optional<std::uint32_t> remove(const FiveTuple& t) {
    auto it = table_.find(t);
    if (it == table_.end()) return std::nullopt;
    const std::uint32_t slot = it->second;
    table_.erase(it);
    free_slots_.push(slot);
    return slot_flow_[slot];
  }

  std::optional<std::uint32_t> lookup(const FiveTuple& t) const {
    auto it = table_.find(t);
    if (it == table_.end()) return std::nullopt;
    return slot_flow_[it->second];
  }

  std::optional<FeatureState> state(const FiveTuple& t) const {
    auto it = table_.find(t);
    if (it == table_.end()) return std::nullopt;
    return features_[it->second];
  }

  std::optional<Tracking> tracking(const FiveTuple& t) const {
    auto it = table_.find(t);
    if (it == table_.end()) return std::nullopt;
    return tracking_[it->second];
  }

  std::vector<FiveTuple> idle_flows(Timestamp now, std::uint64_t timeout_ns) const {
    std::vector<FiveTuple> out;
    for (const auto& [t, slot] : table_) {
      if (now.ns > tracking_[slot].last_seen_ts.ns + timeout_ns) out.push_back(t);
    }
    return out;
  }

  std::size_t size() const { return table_.size(); }
  std::size_t capacity() const { return cfg_.flow_capacity; }
  std::size_t index() const { return index_; }
  PartitionedBloom& bloom() { return bloom_; }
  const PartitionedBloom& bloom() const { return bloom_; }
  std::uint64_t bloom_suppressed() const { return bloom_suppressed_; }
  std::optional<Timestamp> last_egress_clock() const { return last_egress_clock_; }

 private:
  std::size_t index_;
  PipelineConfig cfg_;
  PowerFn pow_;
  PartitionedBloom bloom_;
  std::unordered_map<FiveTuple, std::uint32_t> table_;  // tuple -> register slot
  std::vector<FeatureState> features_;
  std::vector<Tracking> tracking_;
  std::vector<std::uint32_t> slot_flow_;
  std::vector<FiveTuple> slot_tuple_;
  std::priority_queue<std::uint32_t, std::vector<std::uint32_t>, std::greater<>> free_slots_;
  std::uint32_t next_slot_ = 0;
  std::uint64_t bloom_suppressed_ = 0;
  std::optional<Timestamp> last_egress_clock_;
};

struct ReporterConfig {
  std::size_t pipelines = 2;
  PipelineConfig pipeline;
  std::uint16_t reporter_id = 0;
  /// Fractional bits of the log tables; nullopt selects exact arithmetic.
  std::optional<int> frac_bits = 8;
};

struct IngestResult {
  bool forward = true;
  std::optional<wire::DtaReport> report;
  std::optional<Digest> digest;
};

class Reporter {
 public:
  explicit Reporter(ReporterConfig cfg = {}) : cfg_(std::move(cfg)) {
    if (cfg_.pipelines == 0) throw std::invalid_argument("reporter needs at least one pipeline");
    if (cfg_.frac_bits) table_ = std::make_unique<LogTable>(LogTableConfig{*cfg_.frac_bits});
    for (std::size_t i = 0; i < cfg_.pipelines; ++i) pipelines_.emplace_back(i, cfg_.pipeline, PowerFn{table_.get()});
  }

  Reporter(const Reporter&) = delete;
  Reporter& operator=(const Reporter&) = delete;

  std::size_t pipeline_for(const FiveTuple& t) const {
    return static_cast<std::size_t>(detail::tuple_hash(t, 0xD1F0) % pipelines_.size());
  }

  IngestResult ingest(const Packet& pkt) {
    ++packets_;
    IngestResult out;
    if (pkt.malformed) {
      ++malformed_;
      return out;
    }
    auto& p = pipelines_[pipeline_for(pkt.tuple)];
    auto in = p.ingress(pkt);
    out.digest = in.digest;
    if (out.digest) ++digests_;
    if (in.meta.tracked) ++tracked_packets_;
    out.report = p.egress(pkt, in.meta, cfg_.reporter_id);
    if (out.report) ++reports_;
    return out;
  }

  bool install_flow(const FiveTuple& t, std::uint32_t flow_id, Timestamp now,
                    std::optional<std::uint64_t> period = {}) {
    return pipelines_[pipeline_for(t)].install(t, flow_id, now, period);
  }

  std::optional<std::uint32_t> remove_flow(const FiveTuple& t) { return pipelines_[pipeline_for(t)].remove(t); }

  std::optional<std::uint32_t> lookup(const FiveTuple& t) const { return pipelines_[pipeline_for(t)].lookup(t); }
  std::optional<FeatureState> state(const FiveTuple& t) const { return pipelines_[pipeline_for(t)].state(t); }

  Pipeline& pipeline(std::size_t i) { return pipelines_.at(i); }
  const Pipeline& pipeline(std::size_t i) const { return pipelines_.at(i); }
  std::size_t pipeline_count() const { return pipelines_.size(); }
  std::size_t total_capacity() const { return pipelines_.size() * cfg_.pipeline.flow_capacity; }
  const ReporterConfig& config() const { return cfg_; }
  const LogTable* log_table() const { return table_.get(); }

  std::map<std::string, std::uint64_t> metrics() const {
    std::uint64_t suppressed = 0;
    std::uint64_t tracked = 0;
    for (const auto& p : pipelines_) {
      suppressed += p.bloom_suppressed();
      tracked += p.size();
    }
    return {{"reporter.packets", packets_},
            {"reporter.tracked_packets", tracked_packets_},
            {"reporter.malformed", malformed_},
            {"reporter.digests", digests_},
            {"reporter.reports", reports_},
            {"reporter.bloom_suppressed", suppressed},
            {"reporter.tracked_flows", tracked}};
  }

 private:
  ReporterConfig cfg_;
  std::unique_ptr<LogTable> table_;
  std::vector<Pipeline> pipelines_;
  std::uint64_t packets_ = 0;
  std::uint64_t tracked_packets_ = 0;
  std::uint64_t malformed_ = 0;
  std::uint64_t digests_ = 0;
  std::uint64_t reports_ = 0;
};

struct ControlConfig {
  /// Digests processed per simulated second; 0 disables the cap.
  double digest_rate_cap = 1000.0;
  /// Flows idle longer than this are removed by sweep_idle(); 0 disables.
  std::uint64_t idle_timeout_ns = 0;
  /// Admission policy; empty accepts every flow.
  std::function<bool(const Digest&)> admit;
};

enum class ControlActionKind : std::uint8_t { InstallFlow, RemoveFlow, Ignore };

struct ControlAction {
  ControlActionKind kind = ControlActionKind::Ignore;
  std::uint32_t flow_id = 0;
};

/// Owns flow admission: consumes digests, allocates the lowest free flow ID and
/// programs the reporter's classification tables and bloom filters.
class ControlAgent {
 public:
  ControlAgent(Reporter& reporter, ControlConfig cfg = {})
      : reporter_(reporter), cfg_(std::move(cfg)) {
    for (std::size_t i = 0; i < reporter.pipeline_count(); ++i) {
      shadow_.emplace_back(reporter.config().pipeline.bloom);
    }
  }

  void submit(const Digest& d) { queue_.push_back(d); }
  std::size_t pending() const { return queue_.size(); }

  /// Processes queued digests whose processing time is <= now. Returns the count processed.
  std::size_t run_until(Timestamp now) {
    std::size_t n = 0;
    while (!queue_.empty()) {
      Timestamp at = queue_.front().ts;
      if (cfg_.digest_rate_cap > 0 && next_free_.ns > at.ns) at = next_free_;
      if (at.ns > now.ns) break;
      Digest d = queue_.front();
      queue_.pop_front();
      handle_digest(d, at);
      if (cfg_.digest_rate_cap > 0) {
        next_free_ = Timestamp{at.ns + static_cast<std::uint64_t>(static_cast<double>(kNsPerSec) / cfg_.digest_rate_cap)};
      }
      ++n;
    }
    return n;
  }

  /// Processes everything queued regardless of time; returns the count processed.
  std::size_t drain() { return run_until(Timestamp{~std::uint64_t{0} >> 1}); }

  ControlAction handle_digest(const Digest& d, Timestamp now) {
    ++digests_;
    if (d.reason == DigestReason::TcpFin) return remove(d.tuple);

    if (d.reason == DigestReason::NewUdp) shadow_[reporter_.pipeline_for(d.tuple)].insert(d.tuple);
    if (reporter_.lookup(d.tuple)) {
      ++ignored_;
      return {};
    }
    if (cfg_.admit && !cfg_.admit(d)) {
      ++rejected_policy_;
      return {};
    }
    const auto id = peek_free_id();
    if (!id || !reporter_.install_flow(d.tuple, *id, now)) {
      ++rejected_capacity_;
      return {};
    }
    take_id(*id);
    ++installed_;
    return {ControlActionKind::InstallFlow, *id};
  }

  ControlAction remove(const FiveTuple& t) {
    auto id = reporter_.remove_flow(t);
    if (!id) {
      ++ignored_;
      return {};
    }
    free_ids_.push(*id);
    if (t.protocol == kProtoUdp) {
      const std::size_t p = reporter_.pipeline_for(t);
      for (std::size_t bit : shadow_[p].remove(t)) reporter_.pipeline(p).bloom().set_bit(bit, false);
    }
    ++removed_;
    return {ControlActionKind::RemoveFlow, *id};
  }

  /// Removes flows idle beyond the configured timeout. Returns the number removed.
  std::size_t sweep_idle(Timestamp now) {
    if (cfg_.idle_timeout_ns == 0) return 0;
    std::size_t n = 0;
    for (std::size_t p = 0; p < reporter_.pipeline_count(); ++p) {
      for (const auto& t : reporter_.pipeline(p).idle_flows(now, cfg_.idle_timeout_ns)) {
        if (remove(t).kind == ControlActionKind::RemoveFlow) ++n;
      }
    }
    return n;
  }

  std::map<std::string, std::uint64_t> metrics() const {
    return {{"control.digests", digests_},
            {"control.installed", installed_},
            {"control.removed", removed_},
            {"control.rejected_capacity", rejected_capacity_},
            {"control.rejected_policy", rejected_policy_},
            {"control.ignored", ignored_}};
  }

  std::uint64_t rejected_capacity() const { return rejected_capacity_; }
  std::uint64_t installed() const { return installed_; }
  const CountingBloom& shadow_bloom(std::size_t pipeline) const { return shadow_.at(pipeline); }

 private:
  std::optional<std::uint32_t> peek_free_id() const {
    if (!free_ids_.empty()) return free_ids_.top();
    if (next_id_ < reporter_.total_capacity()) return next_id_;
    return std::nullopt;
  }

  void take_id(std::uint32_t id) {
    if (!free_ids_.empty() && free_ids_.top() == id) {
      free_ids_.pop();
    } else {
      ++next_id_;
    }
  }

  Reporter& reporter_;
  ControlConfig cfg_;
  std::deque<Digest> queue_;
  std::vector<CountingBloom> shadow_;
  std::priority_queue<std::uint32_t, std::vector<std::uint32_t>, std::greater<>> free_ids_;
  std::uint32_t next_id_ = 0;
  Timestamp next_free_;
  std::uint64_t digests_ = 0;
  std::uint64_t installed_ = 0;
  std::uint64_t removed_ = 0;
  std::uint64_t rejected_capacity_ = 0;
  std::uint64_t rejected_policy_ = 0;
  std::uint64_t ignored_ = 0;
};

}  // namespace dfa
