#include <doctest.h>

#include "chunkscope/model.hpp"
#include "chunkscope/records_io.hpp"
#include "chunkscope/rng.hpp"

using namespace chunkscope;

namespace {

PlayerChunkRecord sample_player(Rng &rng, const std::string &session, int chunk) {
  PlayerChunkRecord rec;
  rec.session_id = session;
  rec.chunk_id = chunk;
  rec.d_fb = rng.uniform_int(0, 2'000'000);
  rec.d_lb = rng.uniform_int(1, 8'000'000);
  rec.bitrate_kbps = static_cast<double>(rng.uniform_int(200, 6000));
  rec.buf_count = static_cast<int>(rng.uniform_int(0, 2));
  rec.buf_dur = rec.buf_count == 0 ? 0 : rng.uniform_int(1, 4'000'000);
  rec.vis = rng.bernoulli(0.9);
  rec.avg_fr = rng.uniform(0.0, 60.0);
  rec.drop_fr = static_cast<int>(rng.uniform_int(0, 180));
  return rec;
}

CdnChunkRecord sample_cdn(Rng &rng, const std::string &session, int chunk) {
  CdnChunkRecord rec;
  rec.session_id = session;
  rec.chunk_id = chunk;
  rec.d_wait = rng.uniform_int(0, 900);
  rec.d_open = rng.uniform_int(0, 900);
  rec.d_read = rng.uniform_int(50, 12'000);
  rec.cache_status = static_cast<CacheStatus>(rng.uniform_int(0, 2));
  rec.d_be = rec.cache_status == CacheStatus::miss ? rng.uniform_int(40'000, 200'000) : 0;
  rec.chunk_size = rng.uniform_int(10'000, 4'000'000);
  return rec;
}

TcpSnapshot sample_snapshot(Rng &rng, const std::string &session, int chunk) {
  TcpSnapshot snap;
  snap.session_id = session;
  snap.chunk_id = chunk;
  snap.t_offset = rng.uniform_int(0, 3'000'000);
  snap.cwnd = static_cast<int>(rng.uniform_int(1, 400));
  snap.srtt = rng.uniform_int(1'000, 400'000);
  snap.srttvar = rng.uniform_int(0, 100'000);
  snap.retx = rng.uniform_int(0, 50);
  snap.mss = 1460;
  return snap;
}

} // namespace

TEST_CASE("derive: perf score boundary and direct substitution") {
  PlayerChunkRecord player;
  player.session_id = "s";
  player.chunk_id = 1;
  player.d_fb = sec_to_us(0.5);
  player.d_lb = sec_to_us(5.5);
  CdnChunkRecord cdn;
  cdn.session_id = "s";
  cdn.chunk_id = 1;
  cdn.chunk_size = 1000;

  auto joined = derive(player, cdn, {}, 6.0);
  REQUIRE(joined.has_value());
  CHECK(joined->perf_score == doctest::Approx(1.0));

  player.d_fb = sec_to_us(1.0);
  player.d_lb = sec_to_us(11.0);
  joined = derive(player, cdn, {}, 6.0);
  REQUIRE(joined.has_value());
  CHECK(joined->perf_score == doctest::Approx(0.5));
}

TEST_CASE("derive: rtt0 upper bound from Eq. 1 rearrangement") {
  PlayerChunkRecord player;
  player.session_id = "s";
  player.chunk_id = 1;
  player.d_fb = ms_to_us(120.0);
  player.d_lb = ms_to_us(500.0);
  CdnChunkRecord cdn;
  cdn.session_id = "s";
  cdn.chunk_id = 1;
  cdn.d_wait = ms_to_us(1.0);
  cdn.d_open = ms_to_us(1.0);
  cdn.d_read = ms_to_us(3.0);
  cdn.d_be = 0;
  cdn.chunk_size = 750'000;

  auto joined = derive(player, cdn, {}, 6.0);
  REQUIRE(joined.has_value());
  CHECK(joined->rtt0_ub == ms_to_us(115.0));
  CHECK(joined->server_latency == ms_to_us(5.0));
  CHECK_FALSE(joined->inconsistent_timing);
  CHECK(joined->tp_inst == doctest::Approx(750'000.0 / 0.5));
}

TEST_CASE("derive: rejects non-positive d_lb, flags negative rtt0") {
  PlayerChunkRecord player;
  player.session_id = "s";
  player.chunk_id = 1;
  player.d_fb = ms_to_us(10.0);
  player.d_lb = 0;
  CdnChunkRecord cdn;
  cdn.session_id = "s";
  cdn.chunk_id = 1;
  CHECK_FALSE(derive(player, cdn, {}, 6.0).has_value());

  player.d_lb = ms_to_us(100.0);
  cdn.d_read = ms_to_us(50.0); // server latency exceeds d_fb: inconsistent clocks
  auto joined = derive(player, cdn, {}, 6.0);
  REQUIRE(joined.has_value());
  CHECK(joined->rtt0_ub < 0);
  CHECK(joined->inconsistent_timing);
}

TEST_CASE("Eq. 1 closure: server latency + rtt0_ub reproduces d_fb exactly") {
  Rng rng(99);
  for (int i = 0; i < 200; ++i) {
    auto player = sample_player(rng, "p", 1);
    auto cdn = sample_cdn(rng, "p", 1);
    auto joined = derive(player, cdn, {}, 6.0);
    REQUIRE(joined.has_value());
    // D_DS defined as the residual makes the decomposition exact.
    const micros_t ds_residual = joined->player.d_fb - joined->server_latency - joined->rtt0_ub;
    CHECK(joined->server_latency + joined->rtt0_ub + ds_residual == joined->player.d_fb);
    CHECK((joined->perf_score < 1.0) == (player.d_fb + player.d_lb > sec_to_us(6.0)));
  }
}

TEST_CASE("serialization round-trip is field-exact for every record type") {
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    const auto player = sample_player(rng, "sess-" + std::to_string(i), i + 1);
    auto player2 = player_from_jsonl(to_jsonl(player));
    REQUIRE(player2.has_value());
    CHECK(player2->session_id == player.session_id);
    CHECK(player2->chunk_id == player.chunk_id);
    CHECK(player2->d_fb == player.d_fb);
    CHECK(player2->d_lb == player.d_lb);
    CHECK(player2->bitrate_kbps == player.bitrate_kbps);
    CHECK(player2->buf_count == player.buf_count);
    CHECK(player2->buf_dur == player.buf_dur);
    CHECK(player2->vis == player.vis);
    CHECK(player2->avg_fr == player.avg_fr);
    CHECK(player2->drop_fr == player.drop_fr);

    const auto cdn = sample_cdn(rng, "sess-" + std::to_string(i), i + 1);
    auto cdn2 = cdn_from_jsonl(to_jsonl(cdn));
    REQUIRE(cdn2.has_value());
    CHECK(cdn2->d_wait == cdn.d_wait);
    CHECK(cdn2->d_open == cdn.d_open);
    CHECK(cdn2->d_read == cdn.d_read);
    CHECK(cdn2->d_be == cdn.d_be);
    CHECK(cdn2->cache_status == cdn.cache_status);
    CHECK(cdn2->chunk_size == cdn.chunk_size);

    const auto snap = sample_snapshot(rng, "sess", i + 1);
    auto snap2 = snapshot_from_jsonl(to_jsonl(snap));
    REQUIRE(snap2.has_value());
    CHECK(snap2->t_offset == snap.t_offset);
    CHECK(snap2->cwnd == snap.cwnd);
    CHECK(snap2->srtt == snap.srtt);
    CHECK(snap2->srttvar == snap.srttvar);
    CHECK(snap2->retx == snap.retx);
    CHECK(snap2->mss == snap.mss);
  }
}

TEST_CASE("joined chunk serialization round-trip") {
  Rng rng(13);
  const auto player = sample_player(rng, "sess", 3);
  const auto cdn = sample_cdn(rng, "sess", 3);
  std::vector<TcpSnapshot> snaps = {sample_snapshot(rng, "sess", 3),
                                    sample_snapshot(rng, "sess", 3)};
  auto joined = derive(player, cdn, snaps, 6.0);
  REQUIRE(joined.has_value());
  auto joined2 = joined_from_jsonl(to_jsonl(*joined));
  REQUIRE(joined2.has_value());
  CHECK(joined2->player.d_fb == joined->player.d_fb);
  CHECK(joined2->cdn.chunk_size == joined->cdn.chunk_size);
  CHECK(joined2->snapshots.size() == 2);
  CHECK(joined2->snapshots[1].srtt == joined->snapshots[1].srtt);
  CHECK(joined2->rtt0_ub == joined->rtt0_ub);
  CHECK(joined2->tp_inst == joined->tp_inst);
  CHECK(joined2->perf_score == joined->perf_score);
  CHECK(joined2->server_latency == joined->server_latency);
}

TEST_CASE("meta and truth round-trip; two-valued cache encoding accepted") {
  SessionMeta meta;
  meta.session_id = "s1";
  meta.client_ip = "10.1.2.3";
  meta.user_agent = "Windows/Chrome";
  meta.cdn_client_ip = "10.1.2.3";
  meta.cdn_user_agent = "Windows/Chrome";
  meta.video_length_s = 120;
  meta.chunk_duration_s = 6;
  meta.pop_id = "pop-1";
  meta.server_id = "srv-2";
  meta.org_label = "Org";
  meta.distance_km = 42.5;
  meta.day = 3;
  meta.video_id = 17;
  meta.video_rank = 17;
  auto meta2 = meta_from_jsonl(to_jsonl(meta));
  REQUIRE(meta2.has_value());
  CHECK(meta2->client_ip == meta.client_ip);
  CHECK(meta2->day == meta.day);
  CHECK(meta2->video_rank == meta.video_rank);

  CHECK(parse_cache_status("hit") == CacheStatus::hit_memory);
  CHECK(parse_cache_status("hit_disk") == CacheStatus::hit_disk);
  CHECK(parse_cache_status("miss") == CacheStatus::miss);
  CHECK_FALSE(parse_cache_status("warm").has_value());

  GroundTruth truth{"s1", 7, LabelKind::download_stack_buffered, {{"injected_ds_delay_ms", 500.0}}};
  auto truth2 = truth_from_jsonl(to_jsonl(truth));
  REQUIRE(truth2.has_value());
  CHECK(truth2->injected == LabelKind::download_stack_buffered);
  CHECK(truth2->params.at("injected_ds_delay_ms") == 500.0);
}

TEST_CASE("malformed lines are rejected, not mangled") {
  CHECK_FALSE(player_from_jsonl("{not json").has_value());
  CHECK_FALSE(player_from_jsonl("{\"session_id\":\"x\"}").has_value()); // missing d_fb etc.
  // buf_count = 0 with nonzero buf_dur violates the invariant.
  PlayerChunkRecord rec;
  rec.session_id = "x";
  rec.chunk_id = 1;
  rec.d_lb = 1;
  std::string line = to_jsonl(rec);
  auto pos = line.find("\"buf_dur\":0.0");
  REQUIRE(pos != std::string::npos);
  line.replace(pos, 13, "\"buf_dur\":5.0");
  CHECK_FALSE(player_from_jsonl(line).has_value());
}
