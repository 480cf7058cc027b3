#include <doctest.h>

#include <cmath>

#include "chunkscope/diagnosis.hpp"

using namespace chunkscope;

namespace {

TcpSnapshot snap(micros_t srtt, micros_t srttvar, int cwnd = 10, std::int64_t retx = 0,
                 micros_t t_offset = 0) {
  TcpSnapshot s;
  s.t_offset = t_offset;
  s.cwnd = cwnd;
  s.srtt = srtt;
  s.srttvar = srttvar;
  s.retx = retx;
  s.mss = 1460;
  return s;
}

JoinedChunk chunk_with(micros_t d_fb, micros_t d_lb, std::int64_t size,
                       std::vector<TcpSnapshot> snaps, micros_t d_be = 0,
                       CacheStatus status = CacheStatus::hit_memory,
                       micros_t d_read = ms_to_us(1.0)) {
  PlayerChunkRecord player;
  player.session_id = "s";
  player.chunk_id = 1;
  player.d_fb = d_fb;
  player.d_lb = d_lb;
  player.bitrate_kbps = 1000;
  player.avg_fr = 30;
  CdnChunkRecord cdn;
  cdn.session_id = "s";
  cdn.chunk_id = 1;
  cdn.d_wait = ms_to_us(0.5);
  cdn.d_open = ms_to_us(0.5);
  cdn.d_read = d_read;
  cdn.d_be = d_be;
  cdn.cache_status = status;
  cdn.chunk_size = size;
  auto joined = derive(player, cdn, std::move(snaps), 6.0);
  REQUIRE(joined.has_value());
  return *joined;
}

} // namespace

TEST_CASE("rto formula is bit-exact") {
  CHECK(rto_us(ms_to_us(60.0), ms_to_us(5.0)) == ms_to_us(280.0));
  CHECK(rto_us(ms_to_us(100.0), ms_to_us(0.0)) == ms_to_us(300.0));
  CHECK(rto_us(ms_to_us(55.0), ms_to_us(11.25)) == ms_to_us(300.0));
}

TEST_CASE("connection throughput: mss * cwnd / srtt in bytes per second") {
  CHECK(conn_throughput_Bps(snap(ms_to_us(100.0), 0, 10)) == doctest::Approx(146'000.0));
  CHECK(conn_throughput_Bps(snap(ms_to_us(1000.0), 0, 1)) == doctest::Approx(1'460.0));
  // Linearity in cwnd.
  const double base = conn_throughput_Bps(snap(ms_to_us(60.0), 0, 7));
  CHECK(conn_throughput_Bps(snap(ms_to_us(60.0), 0, 14)) == doctest::Approx(2.0 * base));
}

namespace {

// Six-chunk session matching the documented hand computation: d_fb spikes on
// chunk 6 with a simultaneous tp_inst spike, while srtt/server/cwnd stay
// mid-range there (the guards are strict inequalities over order statistics,
// so the quiet metrics wiggle like real samples and the candidate sits inside
// the pack).
std::vector<JoinedChunk> six_chunk_session(double spike_srtt_ms = 60.0) {
  const micros_t d_fb_ms[] = {100, 102, 98, 101, 99, 400};
  const double srtt_ms[] = {59.5, 61.0, 59.8, 60.9, 60.4, spike_srtt_ms};
  const double read_ms[] = {1.0, 1.4, 1.1, 1.3, 1.35, 1.2};
  const int cwnd[] = {12, 13, 12, 13, 12, 12};
  std::vector<JoinedChunk> chunks;
  for (int i = 0; i < 6; ++i) {
    const micros_t d_lb = i == 5 ? ms_to_us(20.0) : ms_to_us(800.0);
    auto chunk = chunk_with(ms_to_us(static_cast<double>(d_fb_ms[i])), d_lb, 750'000,
                            {snap(ms_to_us(srtt_ms[i]), ms_to_us(5.0), cwnd[i])}, 0,
                            CacheStatus::hit_memory, ms_to_us(read_ms[i]));
    chunk.player.chunk_id = i + 1;
    chunks.push_back(chunk);
  }
  return chunks;
}

} // namespace

TEST_CASE("Eq. 4 outlier detection on the hand-computed six-chunk session") {
  // d_fb = [100,102,98,101,99,400] ms: mu=150, sigma=111.81, mu+2sigma=373.6.
  std::vector<JoinedChunk> chunks = six_chunk_session();

  auto flags = detect_ds_outliers(chunks);
  REQUIRE(flags.size() == 1);
  CHECK(flags[0].chunk_index == 5);
  CHECK(flags[0].evidence.at("d_fb_sigma_dist") > 2.0);
  CHECK(flags[0].evidence.at("tp_inst_sigma_dist") > 2.0);
  CHECK(flags[0].evidence.at("srtt_sigma_dist") < 1.0);

  // Cross-check the statistics against the spec's hand computation.
  auto stats = compute_session_stats(chunks);
  CHECK(us_to_ms(static_cast<micros_t>(stats.d_fb.mean)) == doctest::Approx(150.0));
  CHECK(stats.d_fb.sigma / 1000.0 == doctest::Approx(111.8).epsilon(0.01));
}

TEST_CASE("Eq. 4: identical chunks flag nothing (sigma = 0, strict inequality)") {
  std::vector<JoinedChunk> chunks;
  for (int i = 0; i < 6; ++i) {
    chunks.push_back(chunk_with(ms_to_us(100.0), ms_to_us(800.0), 750'000,
                                {snap(ms_to_us(60.0), ms_to_us(5.0))}));
  }
  CHECK(detect_ds_outliers(chunks).empty());
}

TEST_CASE("Eq. 4: srtt spike vetoes the download-stack verdict") {
  // Same shape as the flagged session, except the spike chunk's srtt jumped
  // too; the network is the suspect then, not the download stack.
  std::vector<JoinedChunk> chunks = six_chunk_session(/*spike_srtt_ms=*/400.0);
  CHECK(detect_ds_outliers(chunks).empty());
}

TEST_CASE("Eq. 4: sessions shorter than four chunks are skipped") {
  std::vector<JoinedChunk> chunks;
  for (int i = 0; i < 3; ++i) {
    chunks.push_back(chunk_with(ms_to_us(i == 2 ? 900.0 : 100.0), ms_to_us(800.0), 750'000,
                                {snap(ms_to_us(60.0), ms_to_us(5.0))}));
  }
  CHECK(detect_ds_outliers(chunks).empty());
}

TEST_CASE("Eq. 4 scale stability: scaling all d_fb leaves the flag set unchanged") {
  std::vector<JoinedChunk> chunks = six_chunk_session();
  auto flags_before = detect_ds_outliers(chunks);
  REQUIRE(flags_before.size() == 1);
  for (auto &chunk : chunks) chunk.player.d_fb *= 3;
  auto flags_after = detect_ds_outliers(chunks);
  REQUIRE(flags_before.size() == flags_after.size());
  for (std::size_t i = 0; i < flags_before.size(); ++i) {
    CHECK(flags_before[i].chunk_index == flags_after[i].chunk_index);
  }
}

TEST_CASE("Eq. 5 lower bound: substitution, clamping, missing snapshot") {
  // d_fb=900, d_cdn=5, d_be=0, rto(60,5)=280 -> 615 ms.
  auto chunk = chunk_with(ms_to_us(900.0), ms_to_us(500.0), 750'000,
                          {snap(ms_to_us(60.0), ms_to_us(5.0))});
  chunk.cdn.d_wait = ms_to_us(1.0);
  chunk.cdn.d_open = ms_to_us(1.0);
  chunk.cdn.d_read = ms_to_us(3.0);
  auto bound = estimate_persistent_ds(chunk);
  REQUIRE(bound.has_value());
  CHECK(*bound == ms_to_us(615.0));

  auto small = chunk_with(ms_to_us(250.0), ms_to_us(500.0), 750'000,
                          {snap(ms_to_us(60.0), ms_to_us(5.0))});
  small.cdn.d_wait = ms_to_us(1.0);
  small.cdn.d_open = ms_to_us(1.0);
  small.cdn.d_read = ms_to_us(3.0);
  bound = estimate_persistent_ds(small);
  REQUIRE(bound.has_value());
  CHECK(*bound == 0); // clamped

  auto no_snap = chunk_with(ms_to_us(900.0), ms_to_us(500.0), 750'000, {});
  CHECK_FALSE(estimate_persistent_ds(no_snap).has_value());
}

TEST_CASE("baseline rtt: min composition over chunks") {
  std::vector<JoinedChunk> chunks;
  const double srtt_ms[] = {60, 55, 70};
  const double rtt0_ms[] = {80, 50, 90};
  for (int i = 0; i < 3; ++i) {
    auto chunk = chunk_with(ms_to_us(rtt0_ms[i] + 2.0), ms_to_us(800.0), 750'000,
                            {snap(ms_to_us(srtt_ms[i]), ms_to_us(5.0))});
    chunk.rtt0_ub = ms_to_us(rtt0_ms[i]);
    chunks.push_back(chunk);
  }
  auto baseline = baseline_rtt_us(chunks);
  REQUIRE(baseline.has_value());
  CHECK(*baseline == ms_to_us(50.0));

  CHECK_FALSE(baseline_rtt_us({}).has_value());

  auto single = chunk_with(ms_to_us(122.0), ms_to_us(800.0), 750'000,
                           {snap(ms_to_us(100.0), ms_to_us(5.0))});
  single.rtt0_ub = ms_to_us(120.0);
  auto one = baseline_rtt_us({single});
  REQUIRE(one.has_value());
  CHECK(*one == ms_to_us(100.0));
}

TEST_CASE("classification priority: miss with dominant backend wins") {
  SessionStats stats;
  // miss with d_be = 75 ms dominating server latency.
  auto miss = chunk_with(ms_to_us(150.0), ms_to_us(800.0), 750'000,
                         {snap(ms_to_us(60.0), ms_to_us(5.0))}, ms_to_us(75.0),
                         CacheStatus::miss);
  auto label = classify_chunk(miss, stats, false, {});
  CHECK(label.label == LabelKind::cache_miss_latency);
  CHECK(label.evidence.at("d_be_ms") == doctest::Approx(75.0));

  // Eq. 4 flag takes precedence over everything.
  label = classify_chunk(miss, stats, true, {{"d_fb_sigma_dist", 3.0}});
  CHECK(label.label == LabelKind::download_stack_buffered);
  REQUIRE(!label.secondary.empty());
  CHECK(label.secondary.front() == LabelKind::cache_miss_latency);
}

TEST_CASE("classification: disk timer window, loss, throughput, baseline, rendering") {
  SessionStats stats;

  auto disk = chunk_with(ms_to_us(80.0), ms_to_us(800.0), 750'000,
                         {snap(ms_to_us(60.0), ms_to_us(5.0))});
  disk.cdn.cache_status = CacheStatus::hit_disk;
  disk.cdn.d_read = ms_to_us(11.0);
  CHECK(classify_chunk(disk, stats, false, {}).label == LabelKind::disk_timer_latency);
  disk.cdn.d_read = ms_to_us(16.0); // outside [timer, timer+5)
  CHECK(classify_chunk(disk, stats, false, {}).label != LabelKind::disk_timer_latency);

  // Loss with bad perf: retx delta across snapshots, perf < 1.
  auto lossy = chunk_with(sec_to_us(2.0), sec_to_us(5.0), 750'000,
                          {snap(ms_to_us(60.0), ms_to_us(5.0), 10, 0),
                           snap(ms_to_us(60.0), ms_to_us(5.0), 5, 4, ms_to_us(500.0))});
  CHECK(classify_chunk(lossy, stats, false, {}).label == LabelKind::network_loss);

  // Bad perf, throughput share 0.9, no loss.
  auto slow = chunk_with(ms_to_us(700.0), ms_to_us(6300.0), 750'000,
                         {snap(ms_to_us(60.0), ms_to_us(5.0))});
  auto label = classify_chunk(slow, stats, false, {});
  CHECK(label.label == LabelKind::throughput_limited);
  CHECK(label.evidence.at("throughput_share") == doctest::Approx(0.9));

  // High baseline rtt0.
  auto far = chunk_with(ms_to_us(160.0), ms_to_us(800.0), 750'000,
                        {snap(ms_to_us(150.0), ms_to_us(5.0))});
  CHECK(classify_chunk(far, stats, false, {}).label == LabelKind::network_baseline_latency);

  // Visible rendering trouble.
  auto droppy = chunk_with(ms_to_us(80.0), ms_to_us(800.0), 750'000,
                           {snap(ms_to_us(60.0), ms_to_us(5.0))});
  droppy.player.drop_fr = 90;
  droppy.player.avg_fr = 15; // 90 / 180 = 50% dropped
  CHECK(classify_chunk(droppy, stats, false, {}).label == LabelKind::rendering_drop);
  droppy.player.vis = false;
  CHECK(classify_chunk(droppy, stats, false, {}).label == LabelKind::none);
}

TEST_CASE("classification is total: every chunk gets exactly one primary label") {
  SessionStats stats;
  auto plain = chunk_with(ms_to_us(70.0), ms_to_us(900.0), 750'000,
                          {snap(ms_to_us(60.0), ms_to_us(5.0))});
  auto label = classify_chunk(plain, stats, false, {});
  CHECK(label.label == LabelKind::none);
  CHECK(label.secondary.empty());
}

TEST_CASE("session summary: cv of srtt and rebuffer ratio") {
  JoinedSession session;
  session.meta = SessionMeta{};
  session.meta.session_id = "s";
  session.meta.chunk_duration_s = 6.0;

  // SRTT samples [50,50,50] -> cv 0; then [100,300] -> cv 0.5.
  auto c1 = chunk_with(ms_to_us(100.0), ms_to_us(900.0), 750'000,
                       {snap(ms_to_us(50.0), 0), snap(ms_to_us(50.0), 0, 10, 0, 1000),
                        snap(ms_to_us(50.0), 0, 10, 0, 2000)});
  session.chunks = {c1};
  auto summary = session_summary(session, {});
  CHECK(summary.cv_srtt == doctest::Approx(0.0));
  CHECK(summary.rebuffer_ratio == doctest::Approx(0.0));
  CHECK(summary.startup_delay == ms_to_us(1000.0));

  auto c2 = chunk_with(ms_to_us(100.0), ms_to_us(900.0), 750'000,
                       {snap(ms_to_us(100.0), 0), snap(ms_to_us(300.0), 0, 10, 0, 1000)});
  session.chunks = {c2};
  summary = session_summary(session, {});
  CHECK(summary.cv_srtt == doctest::Approx(0.5));

  // 6 s of playback + 2 s of stalling -> ratio 0.25.
  auto stalled = c1;
  stalled.player.buf_count = 1;
  stalled.player.buf_dur = sec_to_us(2.0);
  session.chunks = {stalled};
  summary = session_summary(session, {});
  CHECK(summary.rebuffer_ratio == doctest::Approx(2.0 / 8.0));
}

TEST_CASE("scorecard: matching, precision/recall, n/a conventions") {
  DiagnosisLabel hit;
  hit.session_id = "s";
  hit.chunk_id = 1;
  hit.label = LabelKind::download_stack_buffered;
  DiagnosisLabel miss_label;
  miss_label.session_id = "s";
  miss_label.chunk_id = 2;
  miss_label.label = LabelKind::download_stack_buffered;

  GroundTruth t1{"s", 1, LabelKind::download_stack_buffered, {}};
  GroundTruth t3{"s", 3, LabelKind::download_stack_buffered, {}};

  auto card = score_against_truth({{hit, miss_label}}, {t1, t3});
  const auto &score = card.by_kind.at("download_stack_buffered");
  CHECK(score.truth_count == 2);
  CHECK(score.detected_count == 2);
  CHECK(score.true_positives == 1);
  CHECK(*score.precision == doctest::Approx(0.5));
  CHECK(*score.recall == doctest::Approx(0.5));

  // No positives for a kind: recall is n/a (absent), not zero.
  auto empty_card = score_against_truth({{hit}}, {});
  CHECK_FALSE(empty_card.by_kind.at("download_stack_buffered").recall.has_value());
  CHECK(empty_card.by_kind.at("download_stack_buffered").precision.has_value());
}
