#pragma once

// INI-style run configuration:
//
//   [section]
//   key = value    ; or # comments
//
// Unknown sections and keys are errors, reported with their line number.

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "dfa/harness.hpp"

namespace dfa {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, std::size_t line, const std::string& msg)
      : std::runtime_error(source + (line ? ":" + std::to_string(line) : std::string()) + ": " + msg), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct AppConfig {
  RunConfig run;
  /// When set, packets are read from this capture instead of being generated.
  std::optional<std::string> pcap;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_uint(const std::string& v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw std::invalid_argument("expected an unsigned integer, got '" + v + "'");
  return out;
}

inline double parse_double(const std::string& v) {
  std::size_t pos = 0;
  double d = 0;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) throw std::invalid_argument("expected a number, got '" + v + "'");
  return d;
}

inline bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("expected a boolean, got '" + v + "'");
}

}  // namespace detail

/// Parses configuration text. `source` names the input in error messages.
inline AppConfig parse_config(std::istream& in, const std::string& source = "config") {
  AppConfig c;
  RunConfig& r = c.run;
  std::optional<std::size_t> collector_flows;
  using Setter = std::function<void(const std::string&)>;
  using detail::parse_bool, detail::parse_double, detail::parse_uint;
  auto both = [&](auto member, auto value) {
    r.fabric.reporter_to_translator.*member = value;
    r.fabric.translator_to_collector.*member = value;
  };
  const std::map<std::string, std::map<std::string, Setter>> schema = {
      {"reporter",
       {{"period_ns", [&](const std::string& v) { r.reporter.pipeline.period_ns = parse_uint<std::uint64_t>(v); }},
        {"pipelines", [&](const std::string& v) { r.reporter.pipelines = parse_uint<std::size_t>(v); }},
        {"flow_capacity", [&](const std::string& v) { r.reporter.pipeline.flow_capacity = parse_uint<std::size_t>(v); }},
        {"f_bits",
         [&](const std::string& v) {
           if (v == "exact") {
             r.reporter.frac_bits.reset();
           } else {
             const int f = parse_uint<int>(v);
             if (f < 1 || f > 16) throw std::invalid_argument("f_bits must be in [1,16] or 'exact'");
             r.reporter.frac_bits = f;
           }
         }},
        {"reporter_id", [&](const std::string& v) { r.reporter.reporter_id = parse_uint<std::uint16_t>(v); }},
        {"digest_rate_cap", [&](const std::string& v) { r.control.digest_rate_cap = parse_double(v); }},
        {"idle_timeout_ns", [&](const std::string& v) { r.control.idle_timeout_ns = parse_uint<std::uint64_t>(v); }}}},
      {"translator",
       {{"history_depth", [&](const std::string& v) {
          r.translator.history_depth = parse_uint<std::size_t>(v);
          r.collector.history_depth = r.translator.history_depth;
        }}}},
      {"collector",
       {{"num_flows", [&](const std::string& v) { collector_flows = parse_uint<std::size_t>(v); }},
        {"copy_model", [&](const std::string& v) { r.collector.copy_model = parse_copy_model(v); }},
        {"staging_latency_ns", [&](const std::string& v) { r.collector.staging_latency_ns = parse_uint<std::uint64_t>(v); }},
        {"staging_batch", [&](const std::string& v) { r.collector.staging_batch = parse_uint<std::size_t>(v); }},
        {"check_icrc", [&](const std::string& v) { r.collector.check_icrc = parse_bool(v); }}}},
      {"fabric",
       {{"loss", [&](const std::string& v) { both(&LinkConfig::loss_rate, parse_double(v)); }},
        {"reorder", [&](const std::string& v) { both(&LinkConfig::reorder_window, parse_uint<std::size_t>(v)); }},
        {"latency_ns", [&](const std::string& v) { both(&LinkConfig::latency_ns, parse_uint<std::uint64_t>(v)); }},
        {"r2t_loss", [&](const std::string& v) { r.fabric.reporter_to_translator.loss_rate = parse_double(v); }},
        {"t2c_loss", [&](const std::string& v) { r.fabric.translator_to_collector.loss_rate = parse_double(v); }},
        {"r2t_reorder", [&](const std::string& v) { r.fabric.reporter_to_translator.reorder_window = parse_uint<std::size_t>(v); }},
        {"t2c_reorder", [&](const std::string& v) { r.fabric.translator_to_collector.reorder_window = parse_uint<std::size_t>(v); }},
        {"r2t_latency_ns", [&](const std::string& v) { r.fabric.reporter_to_translator.latency_ns = parse_uint<std::uint64_t>(v); }},
        {"t2c_latency_ns", [&](const std::string& v) { r.fabric.translator_to_collector.latency_ns = parse_uint<std::uint64_t>(v); }}}},
      {"traffic",
       {{"num_flows", [&](const std::string& v) { r.traffic.num_flows = parse_uint<std::size_t>(v); }},
        {"packets_per_flow", [&](const std::string& v) { r.traffic.packets_per_flow = parse_uint<std::size_t>(v); }},
        {"gap_ns", [&](const std::string& v) { r.traffic.gap_ns = Distribution::parse(v); }},
        {"size_bytes", [&](const std::string& v) { r.traffic.size_bytes = Distribution::parse(v); }},
        {"tcp_fraction", [&](const std::string& v) { r.traffic.tcp_fraction = parse_double(v); }},
        {"seed", [&](const std::string& v) { r.traffic.seed = parse_uint<std::uint64_t>(v); }},
        {"start_jitter_ns", [&](const std::string& v) { r.traffic.start_jitter_ns = parse_uint<std::uint64_t>(v); }},
        {"pcap", [&](const std::string& v) { c.pcap = v; }}}},
  };

  const std::map<std::string, Setter>* section = nullptr;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto cut = line.find_first_of(";#");
    const std::string s = detail::trim(cut == std::string::npos ? line : line.substr(0, cut));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(source, lineno, "malformed section header");
      const std::string name = detail::trim(s.substr(1, s.size() - 2));
      auto it = schema.find(name);
      if (it == schema.end()) throw ConfigError(source, lineno, "unknown section [" + name + "]");
      section = &it->second;
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(source, lineno, "expected 'key = value'");
    if (!section) throw ConfigError(source, lineno, "key outside of any section");
    const std::string key = detail::trim(s.substr(0, eq));
    const std::string value = detail::trim(s.substr(eq + 1));
    auto k = section->find(key);
    if (k == section->end()) throw ConfigError(source, lineno, "unknown key '" + key + "'");
    if (value.empty()) throw ConfigError(source, lineno, "empty value for '" + key + "'");
    try {
      k->second(value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(source, lineno, key + ": " + e.what());
    }
  }

  if (const char* env = std::getenv("DFA_SEED"); env && *env) {
    try {
      r.traffic.seed = parse_uint<std::uint64_t>(env);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("DFA_SEED", 0, e.what());
    }
  }

  r.collector.num_flows = collector_flows.value_or(r.traffic.num_flows);
  r.translator.flow_capacity = r.collector.num_flows;
  try {
    r.validate();
    if (r.reporter.pipelines == 0) throw std::invalid_argument("reporter.pipelines must be positive");
    if (r.reporter.pipeline.flow_capacity == 0 || r.reporter.pipeline.flow_capacity > kPipelineFlowCapacity) {
      throw std::invalid_argument("reporter.flow_capacity must be in [1, 131072]");
    }
    if (r.reporter.pipeline.period_ns == 0) throw std::invalid_argument("reporter.period_ns must be positive");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(source, 0, e.what());
  }
  return c;
}

inline AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot open configuration file");
  return parse_config(in, path);
}

inline AppConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

}  // namespace dfa
