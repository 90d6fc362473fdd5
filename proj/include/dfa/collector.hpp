#pragma once

// The telemetry sink: an emulated RDMA-registered memory region, the NIC-side
// write applier, the occupancy scan, history readback and statistics.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "dfa/core.hpp"
#include "dfa/translator.hpp"
#include "dfa/wire.hpp"

namespace dfa {

enum class CopyModel : std::uint8_t { Direct, Staged };

inline const char* to_string(CopyModel m) { return m == CopyModel::Direct ? "direct" : "staged"; }

inline CopyModel parse_copy_model(const std::string& s) {
  if (s == "direct") return CopyModel::Direct;
  if (s == "staged") return CopyModel::Staged;
  throw std::invalid_argument("copy model must be 'direct' or 'staged', got '" + s + "'");
}

struct CollectorConfig {
  std::size_t num_flows = 1024;
  std::size_t history_depth = kHistoryDepth;
  /// Overrides num_flows * history_depth * 64 when nonzero (benchmark regions).
  std::uint64_t region_len = 0;
  std::uint64_t base_va = 0x7F00'0000'0000ULL;
  std::uint32_t rkey = 0x5EED'0001U;
  std::uint32_t dest_qp = 0x000011U;
  bool check_icrc = true;
  CopyModel copy_model = CopyModel::Direct;
  /// Staged mode: writes land in a host buffer and are copied to the region in batches.
  std::size_t staging_batch = 256;
  /// Busy-wait per staged batch flush, standing in for the host-to-device copy setup cost.
  std::uint64_t staging_latency_ns = 0;
};

class MemoryRegion {
 public:
  MemoryRegion(std::uint64_t base_va, std::uint64_t length, std::uint32_t rkey)
      : base_va_(base_va), rkey_(rkey), bytes_(length, 0) {}

  std::uint64_t base_va() const { return base_va_; }
  std::uint64_t length() const { return bytes_.size(); }
  std::uint32_t rkey() const { return rkey_; }
  std::size_t num_cells() const { return bytes_.size() / kCellSize; }

  byte_span cell(std::size_t i) const { return byte_span(bytes_).subspan(i * kCellSize, kCellSize); }
  byte_span bytes() const { return bytes_; }
  mutable_byte_span mutable_bytes() { return bytes_; }

 private:
  std::uint64_t base_va_;
  std::uint32_t rkey_;
  std::vector<std::uint8_t> bytes_;
};

struct ScanResult {
  std::uint64_t written = 0;
  std::uint64_t empty = 0;
  std::uint64_t corrupt = 0;
  std::vector<CellState> cells;  // filled when requested

  std::uint64_t total() const { return written + empty + corrupt; }
};

/// Classifies every cell. Work is split across threads; the result does not
/// depend on the split.
inline ScanResult scan_region(const MemoryRegion& region, bool keep_cells = false) {
  const std::size_t n = region.num_cells();
  ScanResult out;
  if (keep_cells) out.cells.resize(n);
  const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  const std::size_t workers = std::min(hw, n / 65536 + 1);
  std::vector<ScanResult> partial(workers);
  auto work = [&](std::size_t w) {
    const std::size_t lo = n * w / workers;
    const std::size_t hi = n * (w + 1) / workers;
    auto& r = partial[w];
    for (std::size_t i = lo; i < hi; ++i) {
      const CellState s = decode_entry(region.cell(i)).state;
      if (keep_cells) out.cells[i] = s;
      switch (s) {
        case CellState::Written: ++r.written; break;
        case CellState::Empty: ++r.empty; break;
        case CellState::Corrupt: ++r.corrupt; break;
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(work, w);
  work(0);
  for (auto& t : threads) t.join();
  for (const auto& r : partial) {
    out.written += r.written;
    out.empty += r.empty;
    out.corrupt += r.corrupt;
  }
  return out;
}

enum class ApplyStatus : std::uint8_t { Applied, DroppedParse, DroppedQp, DroppedRkey, DroppedBounds };

struct HistoryRecord {
  std::uint32_t slot = 0;
  TelemetryEntry entry;
};

class Collector {
 public:
  explicit Collector(CollectorConfig cfg = {})
      : cfg_(cfg),
        region_(cfg.base_va,
                cfg.region_len ? cfg.region_len : std::uint64_t{cfg.num_flows} * cfg.history_depth * kCellSize,
                cfg.rkey) {
    if (cfg_.history_depth == 0 || cfg_.history_depth > 255) throw std::invalid_argument("bad history depth");
    if (cfg_.staging_batch == 0) throw std::invalid_argument("staging batch must be positive");
  }

  /// Hands out the single write-only queue pair. A second call is rejected.
  ConnectionParams handshake() {
    if (connected_) throw std::logic_error("collector queue pair already handed out");
    connected_ = true;
    return ConnectionParams{region_.base_va(), region_.length(), region_.rkey(), cfg_.dest_qp};
  }

  ApplyStatus apply_write(byte_span frame) {
    auto parsed = wire::rocev2_decode(frame, {cfg_.check_icrc});
    if (!parsed) return drop(dropped_parse_, ApplyStatus::DroppedParse);
    const auto& w = *parsed;
    if (w.params.dest_qp != cfg_.dest_qp) return drop(dropped_qp_, ApplyStatus::DroppedQp);
    if (w.params.rkey != region_.rkey()) return drop(dropped_rkey_, ApplyStatus::DroppedRkey);
    const std::uint64_t va = w.params.virtual_addr;
    if (va < region_.base_va() || va - region_.base_va() > region_.length() ||
        region_.length() - (va - region_.base_va()) < w.payload.size()) {
      return drop(dropped_bounds_, ApplyStatus::DroppedBounds);
    }
    if (have_psn_ && w.params.psn != expected_psn_) ++psn_out_of_order_;
    have_psn_ = true;
    expected_psn_ = (w.params.psn + 1) & 0xFFFFFF;

    const std::uint64_t off = va - region_.base_va();
    if (cfg_.copy_model == CopyModel::Direct) {
      std::memcpy(region_.mutable_bytes().data() + off, w.payload.data(), w.payload.size());
    } else {
      staged_.push_back({off, staging_bytes_.size(), w.payload.size()});
      staging_bytes_.insert(staging_bytes_.end(), w.payload.begin(), w.payload.end());
      if (staged_.size() >= cfg_.staging_batch) flush_staging();
    }
    ++applied_;
    return ApplyStatus::Applied;
  }

  /// Barrier: completes outstanding staged copies. Required before scan/read.
  void quiesce() { flush_staging(); }

  ScanResult scan(bool keep_cells = false) const {
    require_quiescent();
    return scan_region(region_, keep_cells);
  }

  /// Written entries of the flow's ring, oldest first. The newest entry is the
  /// one with the largest packet count; the ring is read starting after it.
  std::vector<HistoryRecord> read_history(std::uint32_t flow_id) const {
    require_quiescent();
    std::vector<HistoryRecord> ring;
    const std::uint64_t first = std::uint64_t{flow_id} * cfg_.history_depth;
    if ((first + cfg_.history_depth) > region_.num_cells()) return ring;
    std::optional<std::size_t> newest;
    std::vector<std::optional<TelemetryEntry>> slots(cfg_.history_depth);
    for (std::size_t s = 0; s < cfg_.history_depth; ++s) {
      auto d = decode_entry(region_.cell(first + s));
      if (d.state != CellState::Written || d.entry.flow_id != flow_id) continue;
      slots[s] = d.entry;
      if (!newest || d.entry.features.packet_count > slots[*newest]->features.packet_count) newest = s;
    }
    if (!newest) return ring;
    for (std::size_t i = 1; i <= cfg_.history_depth; ++i) {
      const std::size_t s = (*newest + i) % cfg_.history_depth;
      if (slots[s]) ring.push_back({static_cast<std::uint32_t>(s), *slots[s]});
    }
    return ring;
  }

  const MemoryRegion& region() const { return region_; }
  /// Direct access for fault injection in tests.
  MemoryRegion& mutable_region() { return region_; }
  const CollectorConfig& config() const { return cfg_; }

  std::uint64_t applied() const { return applied_; }
  std::uint64_t dropped() const { return dropped_parse_ + dropped_qp_ + dropped_rkey_ + dropped_bounds_; }
  std::uint64_t psn_out_of_order() const { return psn_out_of_order_; }

  std::map<std::string, std::uint64_t> metrics() const {
    return {{"collector.applied", applied_},
            {"collector.dropped_parse", dropped_parse_},
            {"collector.dropped_qp", dropped_qp_},
            {"collector.dropped_rkey", dropped_rkey_},
            {"collector.dropped_bounds", dropped_bounds_},
            {"collector.psn_out_of_order", psn_out_of_order_},
            {"collector.staged_flushes", staged_flushes_}};
  }

 private:
  struct StagedWrite {
    std::uint64_t region_offset;
    std::size_t buffer_offset;
    std::size_t len;
  };

  ApplyStatus drop(std::uint64_t& counter, ApplyStatus s) {
    ++counter;
    return s;
  }

  void require_quiescent() const {
    if (!staged_.empty()) throw std::logic_error("collector not quiesced: staged writes outstanding");
  }

  void flush_staging() {
    if (staged_.empty()) return;
    if (cfg_.staging_latency_ns > 0) {
      const auto until = std::chrono::steady_clock::now() + std::chrono::nanoseconds(cfg_.staging_latency_ns);
      while (std::chrono::steady_clock::now() < until) {
      }
    }
    auto dst = region_.mutable_bytes();
    for (const auto& w : staged_) std::memcpy(dst.data() + w.region_offset, staging_bytes_.data() + w.buffer_offset, w.len);
    staged_.clear();
    staging_bytes_.clear();
    ++staged_flushes_;
  }

  CollectorConfig cfg_;
  MemoryRegion region_;
  bool connected_ = false;
  bool have_psn_ = false;
  std::uint32_t expected_psn_ = 0;
  std::vector<StagedWrite> staged_;
  std::vector<std::uint8_t> staging_bytes_;
  std::uint64_t applied_ = 0;
  std::uint64_t dropped_parse_ = 0;
  std::uint64_t dropped_qp_ = 0;
  std::uint64_t dropped_rkey_ = 0;
  std::uint64_t dropped_bounds_ = 0;
  std::uint64_t psn_out_of_order_ = 0;
  std::uint64_t staged_flushes_ = 0;
};

/// Moment statistics of one quantity. Unset fields are undefined for the sample.
struct MomentStats {
  std::uint64_t samples = 0;
  std::optional<double> mean;
  std::optional<double> variance;
  std::optional<double> stddev;
  std::optional<double> cov;  // coefficient of variation
  std::optional<double> skewness;
};

struct FlowStats {
  std::uint32_t packets = 0;
  MomentStats iat;
  MomentStats ps;
  std::uint64_t volume = 0;  // sum of packet sizes in bytes
};

/// Mean, variance, std, cov and skewness from power sums S1..S3 over n samples.
/// Central moments are formed exactly in 128-bit integers before division:
///   n^2 m2 = n S2 - S1^2,   n^3 m3 = n^2 S3 - 3 n S1 S2 + 2 S1^3.
inline MomentStats moments_from_sums(std::uint64_t n, std::uint64_t s1, std::uint64_t s2, std::uint64_t s3) {
  MomentStats m;
  m.samples = n;
  if (n == 0) return m;
  using i128 = __int128;
  const i128 N = static_cast<i128>(n);
  const i128 S1 = static_cast<i128>(s1);
  const i128 S2 = static_cast<i128>(s2);
  const i128 S3 = static_cast<i128>(s3);
  const long double mean = static_cast<long double>(s1) / static_cast<long double>(n);
  m.mean = static_cast<double>(mean);
  if (n < 2) return m;
  const i128 c2 = N * S2 - S1 * S1;                           // n^2 * m2
  const i128 c3 = N * N * S3 - 3 * N * S1 * S2 + 2 * S1 * S1 * S1;  // n^3 * m3
  const long double nn = static_cast<long double>(n) * static_cast<long double>(n);
  const long double var = static_cast<long double>(c2) / nn;
  m.variance = static_cast<double>(var);
  const long double sd = std::sqrt(std::max(var, 0.0L));
  m.stddev = static_cast<double>(sd);
  if (mean > 0) m.cov = static_cast<double>(sd / mean);
  if (c2 > 0) m.skewness = static_cast<double>(static_cast<long double>(c3) / std::pow(static_cast<long double>(c2), 1.5L));
  return m;
}

/// Statistics between two cumulative snapshots of one flow (or since flow
/// start when `prev` is empty). Deltas use wrapping 32-bit subtraction.
///
/// Packet sizes have one sample per packet. IATs have one sample per packet
/// after the flow's first, so an absolute snapshot carries packet_count - 1.
inline FlowStats reconstruct_stats(const std::optional<TelemetryEntry>& prev, const TelemetryEntry& e) {
  if (prev && prev->flow_id != e.flow_id) throw std::invalid_argument("entries belong to different flows");
  const FeatureVector zero{};
  const FeatureVector& a = prev ? prev->features : zero;
  const FeatureVector& b = e.features;
  FlowStats st;
  st.packets = b.packet_count - a.packet_count;
  std::uint64_t iat_n = st.packets;
  if (a.packet_count == 0 && iat_n > 0) iat_n -= 1;
  auto d = [](std::uint32_t x, std::uint32_t y) { return std::uint64_t{static_cast<std::uint32_t>(x - y)}; };
  st.iat = moments_from_sums(iat_n, d(b.sum_iat[0], a.sum_iat[0]), d(b.sum_iat[1], a.sum_iat[1]),
                             d(b.sum_iat[2], a.sum_iat[2]));
  st.ps = moments_from_sums(st.packets, d(b.sum_ps[0], a.sum_ps[0]), d(b.sum_ps[1], a.sum_ps[1]),
                            d(b.sum_ps[2], a.sum_ps[2]));
  st.volume = d(b.sum_ps[0], a.sum_ps[0]);
  return st;
}

inline void write_scan_csv(std::ostream& os, const Collector& c) {
  os << "cell_index,flow_id,slot,state,packet_count,sum_iat1,sum_iat2,sum_iat3,sum_ps1,sum_ps2,sum_ps3,"
        "src_ip,dst_ip,src_port,dst_port,protocol\n";
  const auto& region = c.region();
  const std::size_t depth = c.config().history_depth;
  for (std::size_t i = 0; i < region.num_cells(); ++i) {
    auto d = decode_entry(region.cell(i));
    if (d.state == CellState::Empty) continue;
    os << i << ',';
    if (d.state == CellState::Corrupt) {
      os << ",," << to_string(d.state) << ",,,,,,,,,,,,\n";
      continue;
    }
    const auto& f = d.entry.features;
    os << d.entry.flow_id << ',' << (i % depth) << ',' << to_string(d.state) << ',' << f.packet_count << ','
       << f.sum_iat[0] << ',' << f.sum_iat[1] << ',' << f.sum_iat[2] << ',' << f.sum_ps[0] << ',' << f.sum_ps[1]
       << ',' << f.sum_ps[2] << ',' << f.five_tuple.src_ip.to_string() << ',' << f.five_tuple.dst_ip.to_string()
       << ',' << f.five_tuple.src_port << ',' << f.five_tuple.dst_port << ',' << int{f.five_tuple.protocol}
       << '\n';
  }
}

inline void write_history_csv(std::ostream& os, const Collector& c, std::uint32_t flow_id) {
  os << "order,slot,flow_id,packet_count,mean_iat_ns,std_iat_ns,mean_ps,std_ps,volume\n";
  std::optional<TelemetryEntry> prev;
  std::size_t order = 0;
  auto opt = [&os](const std::optional<double>& v) {
    if (v) os << *v;
  };
  for (const auto& rec : c.read_history(flow_id)) {
    const auto st = reconstruct_stats(prev, rec.entry);
    os << order++ << ',' << rec.slot << ',' << rec.entry.flow_id << ',' << rec.entry.features.packet_count << ',';
    opt(st.iat.mean);
    os << ',';
    opt(st.iat.stddev);
    os << ',';
    opt(st.ps.mean);
    os << ',';
    opt(st.ps.stddev);
    os << ',' << st.volume << '\n';
    prev = rec.entry;
  }
}

}  // namespace dfa
