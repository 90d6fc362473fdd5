#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "dfa/reporter.hpp"

using namespace dfa;

namespace {

FiveTuple tcp_tuple(std::uint32_t n = 1) {
  FiveTuple t;
  t.src_ip = Ipv4{0x0A000000U + n};
  t.dst_ip = Ipv4::parse("10.0.0.2");
  t.src_port = 1234;
  t.dst_port = 80;
  t.protocol = kProtoTcp;
  return t;
}

FiveTuple udp_tuple(std::uint32_t n = 1) {
  FiveTuple t = tcp_tuple(n);
  t.protocol = kProtoUdp;
  t.dst_port = 5000;
  return t;
}

Packet pkt(std::uint64_t ts_ns, const FiveTuple& t, std::uint32_t size = 100, std::uint8_t flags = 0) {
  Packet p;
  p.ts = Timestamp{ts_ns};
  p.tuple = t;
  p.size_bytes = size;
  p.tcp_flags = flags;
  return p;
}

ReporterConfig one_pipeline(std::optional<int> f = 8) {
  ReporterConfig c;
  c.pipelines = 1;
  c.frac_bits = f;
  return c;
}

constexpr std::uint64_t us = kNsPerUs;
constexpr std::uint64_t ms = kNsPerMs;

}  // namespace

TEST(UpdateFeatures, FirstPacketHasNoIat) {
  const LogTable t;
  const auto fs = update_features(FeatureState{}, 100, Timestamp{0}, PowerFn{&t});
  EXPECT_EQ(fs.packet_count, 1U);
  EXPECT_EQ(fs.sum_iat, (std::array<std::uint32_t, 3>{0, 0, 0}));
  EXPECT_EQ(fs.sum_ps[0], t.pow(100, 1));
}

TEST(UpdateFeatures, ExactThreePacketTrace) {
  FeatureState fs;
  const PowerFn exact{};
  fs = update_features(fs, 100, Timestamp{0}, exact);
  fs = update_features(fs, 200, Timestamp{100 * us}, exact);
  fs = update_features(fs, 400, Timestamp{250 * us}, exact);
  EXPECT_EQ(fs.packet_count, 3U);
  EXPECT_EQ(fs.sum_ps[0], 700U);
  EXPECT_EQ(fs.sum_ps[1], 210000U);
  EXPECT_EQ(fs.sum_ps[2], 73'000'000U);
  EXPECT_EQ(fs.sum_iat[0], 250000U);
  EXPECT_EQ(fs.sum_iat[1], static_cast<std::uint32_t>(100000ULL * 100000 + 150000ULL * 150000));
  EXPECT_EQ(fs.sum_iat[2], static_cast<std::uint32_t>(100000ULL * 100000 * 100000 + 150000ULL * 150000 * 150000));
}

TEST(UpdateFeatures, ApproxWithinBoundOfExact) {
  const LogTable t;
  FeatureState a, e;
  const std::uint64_t ts[] = {0, 100 * us, 250 * us};
  const std::uint32_t sz[] = {100, 200, 400};
  for (int i = 0; i < 3; ++i) {
    a = update_features(a, sz[i], Timestamp{ts[i]}, PowerFn{&t});
    e = update_features(e, sz[i], Timestamp{ts[i]}, PowerFn{});
  }
  // Compare only sums that do not wrap: PS for k=1..3 and IAT for k=1.
  for (int k = 1; k <= 3; ++k) {
    const double b = LogTable::relative_error_bound(k, 8);
    EXPECT_LE(std::fabs(static_cast<double>(a.sum_ps[k - 1]) / e.sum_ps[k - 1] - 1), b) << "ps k=" << k;
  }
  EXPECT_LE(std::fabs(static_cast<double>(a.sum_iat[0]) / e.sum_iat[0] - 1), LogTable::relative_error_bound(1, 8));
}

TEST(UpdateFeatures, IatUsesWrappingLow32) {
  FeatureState fs;
  fs = update_features(fs, 1, Timestamp{0xFFFFFF00ULL}, PowerFn{});
  fs = update_features(fs, 1, Timestamp{0x100000010ULL}, PowerFn{});
  EXPECT_EQ(fs.sum_iat[0], 0x110U);
}

TEST(MakeReport, LayoutAndPurity) {
  FeatureState fs;
  fs = update_features(fs, 100, Timestamp{0}, PowerFn{});
  const auto r1 = make_report(9, fs, tcp_tuple());
  const auto r2 = make_report(9, fs, tcp_tuple());
  EXPECT_EQ(r1, r2);
  EXPECT_EQ(encode_feature_vector(r1.features), encode_feature_vector(r2.features));
  const auto zero = make_report(0, FeatureState{}, tcp_tuple());
  const auto b = encode_feature_vector(zero.features);
  EXPECT_EQ(b.size(), 45U);
  for (std::size_t i = 0; i < 28; ++i) EXPECT_EQ(b[i], 0);
  EXPECT_EQ(get_u32(b, 28), tcp_tuple().src_ip.value);
}

TEST(Pipeline, GatingExample) {
  Reporter r(one_pipeline());
  const auto t = tcp_tuple();
  ASSERT_TRUE(r.install_flow(t, 0, Timestamp{0}));
  EXPECT_FALSE(r.ingest(pkt(0, t, 100, tcp_flag::kAck)).report);
  EXPECT_FALSE(r.ingest(pkt(5 * ms, t, 100, tcp_flag::kAck)).report);
  auto rep = r.ingest(pkt(21 * ms, t, 100, tcp_flag::kAck));
  ASSERT_TRUE(rep.report);
  EXPECT_EQ(rep.report->features.packet_count, 3U);  // includes the triggering packet
}

TEST(Pipeline, GatingIsStrict) {
  Reporter r(one_pipeline());
  const auto t = tcp_tuple();
  ASSERT_TRUE(r.install_flow(t, 0, Timestamp{0}));
  EXPECT_FALSE(r.ingest(pkt(20 * ms, t)).report);
  EXPECT_TRUE(r.ingest(pkt(20 * ms + 1, t)).report);
  EXPECT_FALSE(r.ingest(pkt(40 * ms + 1, t)).report);
  EXPECT_TRUE(r.ingest(pkt(40 * ms + 2, t)).report);
}

TEST(Pipeline, PerFlowPeriodOverride) {
  Reporter r(one_pipeline());
  const auto t = tcp_tuple();
  ASSERT_TRUE(r.install_flow(t, 0, Timestamp{0}, 500 * ms));
  EXPECT_FALSE(r.ingest(pkt(499 * ms, t)).report);
  EXPECT_TRUE(r.ingest(pkt(501 * ms, t)).report);
}

TEST(Pipeline, UdpDigestSuppressedByBloom) {
  Reporter r(one_pipeline());
  const auto u = udp_tuple();
  auto first = r.ingest(pkt(0, u));
  ASSERT_TRUE(first.digest);
  EXPECT_EQ(first.digest->reason, DigestReason::NewUdp);
  EXPECT_FALSE(r.ingest(pkt(1, u)).digest);
  EXPECT_EQ(r.metrics().at("reporter.bloom_suppressed"), 1U);
}

TEST(Pipeline, AckOnlyTcpIsSilent) {
  Reporter r(one_pipeline());
  auto out = r.ingest(pkt(0, tcp_tuple(), 100, tcp_flag::kAck));
  EXPECT_FALSE(out.digest);
  EXPECT_FALSE(out.report);
  EXPECT_TRUE(out.forward);
}

TEST(Pipeline, SynAndFinDigests) {
  Reporter r(one_pipeline());
  const auto t = tcp_tuple();
  auto syn = r.ingest(pkt(0, t, 60, tcp_flag::kSyn));
  ASSERT_TRUE(syn.digest);
  EXPECT_EQ(syn.digest->reason, DigestReason::NewTcpSyn);
  // FIN of an untracked flow is not reported.
  EXPECT_FALSE(r.ingest(pkt(1, t, 60, tcp_flag::kFin | tcp_flag::kAck)).digest);
  ASSERT_TRUE(r.install_flow(t, 0, Timestamp{1}));
  auto fin = r.ingest(pkt(2, t, 60, tcp_flag::kFin | tcp_flag::kAck));
  ASSERT_TRUE(fin.digest);
  EXPECT_EQ(fin.digest->reason, DigestReason::TcpFin);
}

TEST(Pipeline, MalformedPacketsAreCountedAndIgnored) {
  Reporter r(one_pipeline());
  Packet p = pkt(0, tcp_tuple(), 100, tcp_flag::kSyn);
  p.malformed = true;
  auto out = r.ingest(p);
  EXPECT_FALSE(out.digest);
  EXPECT_EQ(r.metrics().at("reporter.malformed"), 1U);
}

TEST(Pipeline, CapacityLimit) {
  EXPECT_THROW(Pipeline(0, [] { PipelineConfig c; c.flow_capacity = kPipelineFlowCapacity + 1; return c; }(), PowerFn{}), std::invalid_argument);
  PipelineConfig pc;
  pc.flow_capacity = 4;
  Pipeline p(0, pc, PowerFn{});
  for (std::uint32_t i = 0; i < 4; ++i) EXPECT_TRUE(p.install(tcp_tuple(i), i, Timestamp{0}));
  EXPECT_FALSE(p.install(tcp_tuple(99), 99, Timestamp{0}));
  EXPECT_FALSE(p.install(tcp_tuple(0), 7, Timestamp{0}));  // duplicate
}

TEST(Pipeline, EgressClockIsNotUsedForGating) {
  ReporterConfig c = one_pipeline();
  // A wildly skewed egress clock must not change reporting decisions.
  c.pipeline.egress_clock = [](Timestamp t) { return Timestamp{t.ns * 1000 + 12345}; };
  Reporter r(c);
  const auto t = tcp_tuple();
  ASSERT_TRUE(r.install_flow(t, 0, Timestamp{0}));
  EXPECT_FALSE(r.ingest(pkt(5 * ms, t)).report);
  EXPECT_TRUE(r.ingest(pkt(21 * ms, t)).report);
  EXPECT_EQ(r.pipeline(0).last_egress_clock()->ns, 21 * ms * 1000 + 12345);
}

TEST(Reporter, PipelineSelectionIsStable) {
  Reporter r;
  for (std::uint32_t i = 0; i < 100; ++i) EXPECT_EQ(r.pipeline_for(tcp_tuple(i)), r.pipeline_for(tcp_tuple(i)));
}

TEST(ControlAgent, FirstInstallGetsFlowZero) {
  Reporter r(one_pipeline());
  ControlAgent ca(r);
  auto d = r.ingest(pkt(0, tcp_tuple(), 60, tcp_flag::kSyn)).digest;
  ASSERT_TRUE(d);
  const auto a = ca.handle_digest(*d, Timestamp{0});
  EXPECT_EQ(a.kind, ControlActionKind::InstallFlow);
  EXPECT_EQ(a.flow_id, 0U);
  EXPECT_EQ(r.lookup(tcp_tuple()), 0U);
}

TEST(ControlAgent, CapacityRejection) {
  Reporter r(one_pipeline());
  ControlAgent ca(r);
  for (std::uint32_t i = 0; i < kPipelineFlowCapacity; ++i) {
    ASSERT_EQ(ca.handle_digest(Digest{tcp_tuple(i), DigestReason::NewTcpSyn, Timestamp{0}, 0}, Timestamp{0}).kind,
              ControlActionKind::InstallFlow);
  }
  const auto a = ca.handle_digest(Digest{udp_tuple(1), DigestReason::NewUdp, Timestamp{0}, 0}, Timestamp{0});
  EXPECT_EQ(a.kind, ControlActionKind::Ignore);
  EXPECT_EQ(ca.rejected_capacity(), 1U);
}

TEST(ControlAgent, FinFreesIdForReuseWithZeroState) {
  Reporter r(one_pipeline(std::nullopt));
  ControlAgent ca(r);
  for (std::uint32_t i = 0; i < 8; ++i) {
    ca.handle_digest(Digest{tcp_tuple(i), DigestReason::NewTcpSyn, Timestamp{0}, 0}, Timestamp{0});
  }
  r.ingest(pkt(10, tcp_tuple(5), 500, tcp_flag::kAck));
  ASSERT_EQ(r.state(tcp_tuple(5))->packet_count, 1U);
  auto fin = r.ingest(pkt(20, tcp_tuple(5), 60, tcp_flag::kFin)).digest;
  ASSERT_TRUE(fin);
  const auto rm = ca.handle_digest(*fin, Timestamp{20});
  EXPECT_EQ(rm.kind, ControlActionKind::RemoveFlow);
  EXPECT_EQ(rm.flow_id, 5U);
  const auto again = ca.handle_digest(Digest{tcp_tuple(77), DigestReason::NewTcpSyn, Timestamp{30}, 0}, Timestamp{30});
  EXPECT_EQ(again.flow_id, 5U);
  EXPECT_EQ(*r.state(tcp_tuple(77)), FeatureState{});
}

TEST(ControlAgent, UdpRemovalClearsBloomBits) {
  ReporterConfig c = one_pipeline();
  Reporter r(c);
  ControlConfig cc;
  cc.idle_timeout_ns = 100 * ms;
  ControlAgent ca(r, cc);
  const auto u = udp_tuple(3);
  auto d = r.ingest(pkt(0, u)).digest;
  ASSERT_TRUE(d);
  ca.submit(*d);
  EXPECT_EQ(ca.run_until(Timestamp{0}), 1U);
  ASSERT_TRUE(r.lookup(u));
  EXPECT_TRUE(ca.shadow_bloom(0).contains(u));
  EXPECT_EQ(ca.sweep_idle(Timestamp{200 * ms}), 1U);
  EXPECT_FALSE(r.lookup(u));
  EXPECT_FALSE(r.pipeline(0).bloom().contains(u));
  // The flow is new again and produces a fresh digest.
  EXPECT_TRUE(r.ingest(pkt(300 * ms, u)).digest);
}

TEST(ControlAgent, RateCapDefersDigests) {
  Reporter r(one_pipeline());
  ControlConfig cc;
  cc.digest_rate_cap = 1000.0;  // one per ms
  ControlAgent ca(r, cc);
  for (std::uint32_t i = 0; i < 5; ++i) ca.submit(Digest{tcp_tuple(i), DigestReason::NewTcpSyn, Timestamp{0}, 0});
  EXPECT_EQ(ca.run_until(Timestamp{0}), 1U);
  EXPECT_EQ(ca.run_until(Timestamp{2 * ms}), 2U);
  EXPECT_EQ(ca.pending(), 2U);
  EXPECT_EQ(ca.drain(), 2U);
}

TEST(ControlAgent, AdmissionPolicy) {
  Reporter r(one_pipeline());
  ControlConfig cc;
  cc.admit = [](const Digest& d) { return d.tuple.protocol == kProtoTcp; };
  ControlAgent ca(r, cc);
  EXPECT_EQ(ca.handle_digest(Digest{udp_tuple(), DigestReason::NewUdp, Timestamp{0}, 0}, Timestamp{0}).kind,
            ControlActionKind::Ignore);
  EXPECT_EQ(ca.handle_digest(Digest{tcp_tuple(), DigestReason::NewTcpSyn, Timestamp{0}, 0}, Timestamp{0}).kind,
            ControlActionKind::InstallFlow);
  EXPECT_EQ(ca.metrics().at("control.rejected_policy"), 1U);
}

TEST(ControlAgent, FlowIdsAreGlobalAcrossPipelines) {
  Reporter r;  // two pipelines
  ControlAgent ca(r);
  std::set<std::uint32_t> ids;
  for (std::uint32_t i = 0; i < 100; ++i) {
    const auto a = ca.handle_digest(Digest{tcp_tuple(i), DigestReason::NewTcpSyn, Timestamp{0}, 0}, Timestamp{0});
    ids.insert(a.flow_id);
  }
  EXPECT_EQ(ids.size(), 100U);
  EXPECT_EQ(*ids.rbegin(), 99U);
  EXPECT_GT(r.pipeline(0).size(), 0U);
  EXPECT_GT(r.pipeline(1).size(), 0U);
}

TEST(Bloom, NoFalseNegatives) {
  PartitionedBloom b;
  std::mt19937_64 rng(5);
  std::vector<FiveTuple> in;
  for (int i = 0; i < 50000; ++i) {
    FiveTuple t = udp_tuple(static_cast<std::uint32_t>(rng()));
    t.src_port = static_cast<std::uint16_t>(rng());
    b.insert(t);
    in.push_back(t);
  }
  for (const auto& t : in) ASSERT_TRUE(b.contains(t));
  b.reset();
  EXPECT_FALSE(b.contains(in.front()));
}

TEST(Bloom, CountingRemoveReportsClearedBits) {
  CountingBloom c;
  const auto a = udp_tuple(1);
  c.insert(a);
  c.insert(a);
  EXPECT_TRUE(c.remove(a).empty());
  EXPECT_EQ(c.remove(a).size(), 4U);
  EXPECT_FALSE(c.contains(a));
}
