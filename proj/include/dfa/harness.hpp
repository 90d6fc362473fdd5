#pragma once

// Event-driven simulation wiring Reporter -> Translator -> Collector over two
// simulated links, and the written-vs-sent validation run on top of it.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "dfa/collector.hpp"
#include "dfa/reporter.hpp"
#include "dfa/traffic.hpp"
#include "dfa/translator.hpp"
#include "dfa/wire.hpp"

namespace dfa {

struct LinkConfig {
  double loss_rate = 0.0;
  /// Frames are held in a window of this many and released in random order.
  std::size_t reorder_window = 0;
  std::uint64_t latency_ns = 0;

  void validate(const char* name) const {
    if (!(loss_rate >= 0.0 && loss_rate <= 1.0)) throw std::invalid_argument(std::string(name) + ": loss must be in [0,1]");
  }
};

struct FabricConfig {
  LinkConfig reporter_to_translator;
  LinkConfig translator_to_collector;
};

/// A lossy, reordering, delaying unidirectional link. Delivery happens through
/// the owning simulation's event queue.
class Link {
 public:
  Link(LinkConfig cfg, std::uint64_t seed) : cfg_(cfg), rng_(seed) { cfg.validate("link"); }

  /// Returns the frames released for delivery (zero or more, possibly reordered).
  std::vector<std::vector<std::uint8_t>> send(std::vector<std::uint8_t> frame) {
    ++sent_;
    std::vector<std::vector<std::uint8_t>> out;
    if (cfg_.loss_rate > 0.0 && uniform() < cfg_.loss_rate) {
      ++dropped_;
      return out;
    }
    if (cfg_.reorder_window == 0) {
      out.push_back(std::move(frame));
      return out;
    }
    held_.push_back(std::move(frame));
    if (held_.size() > cfg_.reorder_window) out.push_back(release_one());
    return out;
  }

  std::vector<std::vector<std::uint8_t>> flush() {
    std::vector<std::vector<std::uint8_t>> out;
    while (!held_.empty()) out.push_back(release_one());
    return out;
  }

  const LinkConfig& config() const { return cfg_; }
  std::uint64_t sent() const { return sent_; }
  std::uint64_t dropped() const { return dropped_; }

 private:
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  std::vector<std::uint8_t> release_one() {
    const std::size_t i = rng_() % held_.size();
    std::swap(held_[i], held_.back());
    auto f = std::move(held_.back());
    held_.pop_back();
    return f;
  }

  LinkConfig cfg_;
  std::mt19937_64 rng_;
  std::vector<std::vector<std::uint8_t>> held_;
  std::uint64_t sent_ = 0;
  std::uint64_t dropped_ = 0;
};

struct RunConfig {
  TrafficSpec traffic;
  FabricConfig fabric;
  ReporterConfig reporter;
  ControlConfig control;
  TranslatorConfig translator;
  CollectorConfig collector;
  wire::NetConfig reporter_net;

  /// Sizes the translator and collector for the traffic's flow count.
  static RunConfig for_traffic(const TrafficSpec& t) {
    RunConfig c;
    c.traffic = t;
    c.collector.num_flows = t.num_flows;
    c.translator.flow_capacity = t.num_flows;
    return c;
  }

  void validate() const {
    traffic.validate();
    fabric.reporter_to_translator.validate("fabric.reporter_to_translator");
    fabric.translator_to_collector.validate("fabric.translator_to_collector");
    if (translator.history_depth != collector.history_depth) {
      throw std::invalid_argument("translator and collector history depths differ");
    }
    if (collector.num_flows < traffic.num_flows) {
      throw std::invalid_argument("collector region holds " + std::to_string(collector.num_flows) +
                                  " flows but traffic has " + std::to_string(traffic.num_flows));
    }
  }
};

struct RunMetrics {
  std::uint64_t packets = 0;
  std::uint64_t digests = 0;
  std::uint64_t flows_installed = 0;
  std::uint64_t reports_sent = 0;
  std::uint64_t writes_applied = 0;
  std::uint64_t fabric_drops = 0;
  std::uint64_t translator_drops = 0;
  std::uint64_t collector_drops = 0;
  std::uint64_t gating_violations = 0;
  std::uint64_t min_reports_per_flow = 0;  // over installed flows
  std::uint64_t max_reports_per_flow = 0;
  ScanResult scan;
  double discrepancy = 0.0;
  double elapsed_seconds = 0.0;
  std::map<std::string, std::uint64_t> counters;

  bool conserved() const { return reports_sent == writes_applied + fabric_drops + translator_drops + collector_drops; }
};

/// Owns the three components and the links between them.
class Simulation {
 public:
  explicit Simulation(RunConfig cfg)
      : cfg_(std::move(cfg)),
        reporter_(cfg_.reporter),
        control_(reporter_, cfg_.control),
        translator_(cfg_.translator),
        collector_(cfg_.collector),
        to_translator_(cfg_.fabric.reporter_to_translator, cfg_.traffic.seed ^ 0xA5A5'0001ULL),
        to_collector_(cfg_.fabric.translator_to_collector, cfg_.traffic.seed ^ 0xA5A5'0002ULL) {
    cfg_.validate();
    translator_.connect(collector_.handshake());
  }

  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  /// Feeds one packet, in timestamp order.
  void step(const Packet& pkt) {
    if (pkt.ts < now_) throw std::invalid_argument("packet timestamps must be non-decreasing");
    now_ = pkt.ts;
    deliver_until(now_);
    control_.run_until(now_);
    const std::uint64_t idle = cfg_.control.idle_timeout_ns;
    if (idle > 0 && now_.ns >= next_sweep_ns_) {
      control_.sweep_idle(now_);
      next_sweep_ns_ = now_.ns + std::max<std::uint64_t>(idle / 2, 1);
    }
    ++packets_;
    auto r = reporter_.ingest(pkt);
    if (r.digest) control_.submit(*r.digest);
    if (r.report) {
      ++reports_sent_;
      auto& n = reports_per_flow_[r.report->flow_id];
      auto [it, fresh] = last_report_.try_emplace(r.report->flow_id, pkt.ts);
      if (!fresh) {
        if (pkt.ts.ns - it->second.ns <= reporter_.config().pipeline.period_ns) ++gating_violations_;
        it->second = pkt.ts;
      }
      ++n;
      for (auto& f : to_translator_.send(wire::dta_encode(*r.report, cfg_.reporter_net))) {
        schedule(now_.ns + to_translator_.config().latency_ns, Hop::Translator, std::move(f));
      }
      deliver_until(now_);
    }
  }

  /// Drains links and the event queue, then quiesces the collector.
  void finish() {
    for (auto& f : to_translator_.flush()) schedule(now_.ns + to_translator_.config().latency_ns, Hop::Translator, std::move(f));
    deliver_until(Timestamp{std::numeric_limits<std::uint64_t>::max()});
    for (auto& f : to_collector_.flush()) schedule(now_.ns + to_collector_.config().latency_ns, Hop::Collector, std::move(f));
    deliver_until(Timestamp{std::numeric_limits<std::uint64_t>::max()});
    collector_.quiesce();
  }

  RunMetrics metrics() const {
    RunMetrics m;
    m.packets = packets_;
    m.reports_sent = reports_sent_;
    m.writes_applied = collector_.applied();
    m.fabric_drops = to_translator_.dropped() + to_collector_.dropped();
    m.translator_drops = translator_.dropped();
    m.collector_drops = collector_.dropped();
    m.gating_violations = gating_violations_;
    m.flows_installed = control_.installed();
    m.digests = reporter_.metrics().at("reporter.digests");
    m.scan = collector_.scan();
    const auto sent = static_cast<double>(m.reports_sent);
    m.discrepancy = m.reports_sent == 0 ? 0.0
                                        : std::abs(static_cast<double>(m.scan.written) - sent) / sent;
    bool first = true;
    for (const auto& [flow, n] : reports_per_flow_) {
      m.min_reports_per_flow = first ? n : std::min(m.min_reports_per_flow, n);
      m.max_reports_per_flow = std::max(m.max_reports_per_flow, n);
      first = false;
    }
    // Installed flows that never reported count as zero.
    if (m.flows_installed > reports_per_flow_.size()) m.min_reports_per_flow = 0;
    for (const auto& src : {reporter_.metrics(), control_.metrics(), translator_.metrics(), collector_.metrics()}) {
      m.counters.insert(src.begin(), src.end());
    }
    m.counters["fabric.reporter_to_translator.dropped"] = to_translator_.dropped();
    m.counters["fabric.translator_to_collector.dropped"] = to_collector_.dropped();
    return m;
  }

  Reporter& reporter() { return reporter_; }
  ControlAgent& control() { return control_; }
  Translator& translator() { return translator_; }
  Collector& collector() { return collector_; }
  const Collector& collector() const { return collector_; }
  const std::unordered_map<std::uint32_t, std::uint64_t>& reports_per_flow() const { return reports_per_flow_; }
  const RunConfig& config() const { return cfg_; }

 private:
  enum class Hop : std::uint8_t { Translator, Collector };

  struct Event {
    std::uint64_t at;
    std::uint64_t seq;
    Hop hop;
    std::vector<std::uint8_t> frame;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const { return a.at != b.at ? a.at > b.at : a.seq > b.seq; }
  };

  void schedule(std::uint64_t at, Hop hop, std::vector<std::uint8_t> frame) {
    events_.push_back(Event{at, seq_++, hop, std::move(frame)});
    std::push_heap(events_.begin(), events_.end(), Later{});
  }

  void deliver_until(Timestamp t) {
    while (!events_.empty() && events_.front().at <= t.ns) {
      std::pop_heap(events_.begin(), events_.end(), Later{});
      Event ev = std::move(events_.back());
      events_.pop_back();
      if (ev.hop == Hop::Translator) {
        auto out = translator_.translate(ev.frame);
        if (out.status != TranslateStatus::Emitted) continue;
        for (auto& f : to_collector_.send(std::move(out.frame))) {
          schedule(ev.at + to_collector_.config().latency_ns, Hop::Collector, std::move(f));
        }
      } else {
        collector_.apply_write(ev.frame);
      }
    }
  }

  RunConfig cfg_;
  Reporter reporter_;
  ControlAgent control_;
  Translator translator_;
  Collector collector_;
  Link to_translator_;
  Link to_collector_;
  std::vector<Event> events_;  // min-heap on (at, seq)
  std::uint64_t seq_ = 0;
  Timestamp now_;
  std::uint64_t packets_ = 0;
  std::uint64_t reports_sent_ = 0;
  std::uint64_t gating_violations_ = 0;
  std::uint64_t next_sweep_ns_ = 0;
  std::unordered_map<std::uint32_t, std::uint64_t> reports_per_flow_;
  std::unordered_map<std::uint32_t, Timestamp> last_report_;
};

/// Drives a packet stream through a fresh simulation and validates the region.
inline RunMetrics run_trace(const RunConfig& cfg, const std::vector<Packet>& trace) {
  const auto t0 = std::chrono::steady_clock::now();
  Simulation sim(cfg);
  for (const auto& p : trace) sim.step(p);
  sim.finish();
  RunMetrics m = sim.metrics();
  m.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return m;
}

inline RunMetrics run_pipeline(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  auto trace = gen_traffic(cfg.traffic);
  RunMetrics m = run_trace(cfg, trace);
  m.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return m;
}

/// Validation-experiment shorthand. The digest rate cap is lifted so every
/// flow is admitted on its first packet and the run measures transport only.
inline RunMetrics run_pipeline(const TrafficSpec& spec, const FabricConfig& fabric, std::uint64_t period_ns,
                               std::optional<int> frac_bits) {
  RunConfig cfg = RunConfig::for_traffic(spec);
  cfg.control.digest_rate_cap = 0;
  cfg.fabric = fabric;
  cfg.reporter.pipeline.period_ns = period_ns;
  cfg.reporter.frac_bits = frac_bits;
  return run_pipeline(cfg);
}

inline void print_summary(std::ostream& os, const RunMetrics& m) {
  os << "packets               " << m.packets << '\n'
     << "digests               " << m.digests << '\n'
     << "flows_installed       " << m.flows_installed << '\n'
     << "reports_sent          " << m.reports_sent << '\n'
     << "writes_applied        " << m.writes_applied << '\n'
     << "fabric_drops          " << m.fabric_drops << '\n'
     << "translator_drops      " << m.translator_drops << '\n'
     << "collector_drops       " << m.collector_drops << '\n'
     << "cells_written         " << m.scan.written << '\n'
     << "cells_empty           " << m.scan.empty << '\n'
     << "cells_corrupt         " << m.scan.corrupt << '\n'
     << "reports_per_flow      " << m.min_reports_per_flow << ".." << m.max_reports_per_flow << '\n'
     << "gating_violations     " << m.gating_violations << '\n'
     << "discrepancy           " << m.discrepancy << '\n'
     << "elapsed_s             " << m.elapsed_seconds << '\n';
}

}  // namespace dfa
