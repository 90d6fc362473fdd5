// dfa: run the validation pipeline, benchmark the write path, decode frames.
//
// Exit codes: 0 ok, 1 validation or parse failure, 2 usage or configuration error.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dfa/dfa.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

struct RunArgs {
  std::string config;
  double threshold = 0.001;
  std::string csv;
};

struct BenchArgs {
  std::vector<std::string> sizes{"8", "16", "32", "64", "128"};
  double duration = 1.0;
  std::string out;
  std::string copy_model = "direct";
  std::uint64_t staging_latency_ns = 0;
  bool compare = false;
};

struct DecodeArgs {
  std::string hex;
  std::string file;
};

int cmd_run(const RunArgs& a) {
  dfa::AppConfig cfg;
  try {
    cfg = dfa::load_config(a.config);
  } catch (const dfa::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (a.threshold < 0) {
    std::cerr << "--threshold must be non-negative\n";
    return kExitUsage;
  }

  std::vector<dfa::Packet> trace;
  try {
    if (cfg.pcap) {
      trace = dfa::pcap::read_pcap(*cfg.pcap);
      std::stable_sort(trace.begin(), trace.end(), [](const auto& x, const auto& y) { return x.ts < y.ts; });
    } else {
      trace = dfa::gen_traffic(cfg.run.traffic);
    }
  } catch (const std::exception& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitUsage;
  }

  const auto t0 = std::chrono::steady_clock::now();
  dfa::Simulation sim(cfg.run);
  for (const auto& p : trace) sim.step(p);
  sim.finish();
  auto m = sim.metrics();
  m.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  dfa::print_summary(std::cout, m);
  if (!a.csv.empty()) {
    std::ofstream os(a.csv);
    if (!os) {
      std::cerr << "cannot write " << a.csv << '\n';
      return kExitUsage;
    }
    dfa::write_scan_csv(os, sim.collector());
  }
  if (!m.conserved()) {
    std::cout << "result FAIL (conservation violated)\n";
    return kExitFail;
  }
  const bool ok = m.discrepancy <= a.threshold;
  std::cout << "result " << (ok ? "PASS" : "FAIL") << " (discrepancy " << m.discrepancy << ", threshold " << a.threshold
            << ")\n";
  return ok ? kExitOk : kExitFail;
}

int cmd_bench(const BenchArgs& a) {
  std::vector<std::size_t> sizes;
  for (const auto& s : a.sizes) {
    try {
      std::size_t pos = 0;
      const auto v = std::stoull(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      sizes.push_back(v);
    } catch (const std::exception&) {
      std::cerr << "bad payload size '" << s << "'\n";
      return kExitUsage;
    }
  }
  dfa::BenchConfig cfg;
  try {
    dfa::validate_bench_sizes(sizes);
    cfg.copy_model = dfa::parse_copy_model(a.copy_model);
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << '\n';
    return kExitUsage;
  }
  if (!(a.duration > 0)) {
    std::cerr << "--duration must be positive\n";
    return kExitUsage;
  }
  cfg.duration = std::chrono::duration<double>(a.duration);
  cfg.staging_latency_ns = a.staging_latency_ns;

  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) {
      std::cerr << "cannot write " << a.out << '\n';
      return kExitUsage;
    }
  }
  std::ostream& os = a.out.empty() ? std::cout : file;
  const auto rows = dfa::bench_payload_sweep(sizes, cfg);
  dfa::write_sweep_csv(os, rows);
  dfa::print_reference_annotations(std::cout);
  if (a.compare) {
    const auto c = dfa::staged_vs_direct_compare(cfg);
    dfa::write_compare_csv(std::cout, c);
    dfa::print_compare_annotations(std::cout, c);
  }
  return kExitOk;
}

int cmd_decode(const DecodeArgs& a) {
  std::vector<std::string> frames;
  if (!a.hex.empty()) {
    frames.push_back(a.hex);
  } else {
    std::ifstream in(a.file);
    if (!in) {
      std::cerr << "cannot open " << a.file << '\n';
      return kExitUsage;
    }
    // One frame per line; blank lines and '#' comments are skipped.
    for (std::string line; std::getline(in, line);) {
      const auto cut = line.find('#');
      if (cut != std::string::npos) line.resize(cut);
      if (line.find_first_not_of(" \t\r") != std::string::npos) frames.push_back(line);
    }
  }
  int rc = kExitOk;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (i) std::cout << '\n';
    std::vector<std::uint8_t> bytes;
    try {
      bytes = dfa::from_hex(frames[i]);
    } catch (const std::invalid_argument& e) {
      std::cerr << "parse error: bad hex (" << e.what() << ")\n";
      rc = kExitFail;
      continue;
    }
    if (!dfa::describe_frame(bytes, std::cout, std::cerr)) rc = kExitFail;
  }
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flow-feature telemetry pipeline: simulation, benchmark and frame decoder"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run the written-vs-sent validation experiment from a config file");
  run_cmd->add_option("config", run.config, "INI configuration file")->required();
  run_cmd->add_option("--threshold", run.threshold, "Maximum accepted discrepancy (fraction)")->capture_default_str();
  run_cmd->add_option("--csv", run.csv, "Write the per-cell scan as CSV to this path");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Measure software write rates across RDMA payload sizes");
  bench_cmd->add_option("--sizes", bench.sizes, "Comma-separated payload sizes from {8,16,32,64,128}")
      ->delimiter(',')
      ->capture_default_str();
  bench_cmd->add_option("--duration", bench.duration, "Seconds per payload size")->capture_default_str();
  bench_cmd->add_option("--out", bench.out, "CSV output path (default: stdout)");
  bench_cmd->add_option("--copy-model", bench.copy_model, "Collector copy model: direct or staged")->capture_default_str();
  bench_cmd->add_option("--staging-latency-ns", bench.staging_latency_ns, "Per-batch staging latency for the staged model")
      ->capture_default_str();
  bench_cmd->add_flag("--compare", bench.compare, "Also compare direct and staged copies at 64 B");

  DecodeArgs decode;
  auto* decode_cmd = app.add_subcommand("decode", "Decode a DTA or RoCEv2 frame given as hex");
  auto* hex_opt = decode_cmd->add_option("--hex", decode.hex, "Frame bytes as hex");
  auto* file_opt = decode_cmd->add_option("--file", decode.file, "File with one hex frame per line");
  hex_opt->excludes(file_opt);
  decode_cmd->require_option(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (*run_cmd) return cmd_run(run);
  if (*bench_cmd) return cmd_bench(bench);
  return cmd_decode(decode);
}
