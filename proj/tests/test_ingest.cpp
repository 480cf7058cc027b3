#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "chunkscope/ingest.hpp"
#include "chunkscope/records_io.hpp"
#include "chunkscope/rng.hpp"
#include "chunkscope/simulator.hpp"

using namespace chunkscope;

namespace {

PlayerChunkRecord make_player(const std::string &session, int chunk) {
  PlayerChunkRecord rec;
  rec.session_id = session;
  rec.chunk_id = chunk;
  rec.d_fb = ms_to_us(100.0);
  rec.d_lb = ms_to_us(900.0);
  rec.bitrate_kbps = 1000;
  rec.avg_fr = 30;
  return rec;
}

CdnChunkRecord make_cdn(const std::string &session, int chunk) {
  CdnChunkRecord rec;
  rec.session_id = session;
  rec.chunk_id = chunk;
  rec.d_wait = ms_to_us(0.5);
  rec.d_open = ms_to_us(0.5);
  rec.d_read = ms_to_us(1.0);
  rec.chunk_size = 750'000;
  return rec;
}

SessionMeta make_meta(const std::string &session, const std::string &ip, int day = 0,
                      double video_length_s = 120.0) {
  SessionMeta meta;
  meta.session_id = session;
  meta.client_ip = ip;
  meta.cdn_client_ip = ip;
  meta.user_agent = "Windows/Chrome";
  meta.cdn_user_agent = "Windows/Chrome";
  meta.video_length_s = video_length_s;
  meta.chunk_duration_s = 6.0;
  meta.pop_id = "pop-0";
  meta.server_id = "srv-0";
  meta.org_label = "Org";
  meta.day = day;
  meta.video_id = 1;
  meta.video_rank = 1;
  return meta;
}

} // namespace

TEST_CASE("join: matching pair joins, orphans counted") {
  auto result = join_records({make_player("a", 1)}, {make_cdn("a", 1)}, {}, {make_meta("a", "1.2.3.4")});
  CHECK(result.report.joined == 1);
  CHECK(result.report.player_orphans == 0);
  CHECK(result.report.cdn_orphans == 0);
  REQUIRE(result.sessions.size() == 1);
  CHECK(result.sessions[0].chunks.size() == 1);

  result = join_records({make_player("a", 1)}, {}, {}, {});
  CHECK(result.report.joined == 0);
  CHECK(result.report.player_orphans == 1);

  result = join_records({}, {make_cdn("a", 1)}, {}, {});
  CHECK(result.report.cdn_orphans == 1);
}

TEST_CASE("join: duplicates quarantined on both sides") {
  auto result = join_records({make_player("a", 1), make_player("a", 1)}, {make_cdn("a", 1)}, {}, {});
  CHECK(result.report.duplicate_player == 2);
  CHECK(result.report.joined == 0);
  CHECK(result.report.cdn_orphans == 1);
}

TEST_CASE("join: rejected records (d_lb = 0) are counted, not dropped silently") {
  auto player = make_player("a", 1);
  player.d_lb = 0;
  auto result = join_records({player}, {make_cdn("a", 1)}, {}, {});
  CHECK(result.report.rejected_joins == 1);
  CHECK(result.report.joined == 0);
}

TEST_CASE("join is symmetric in input order") {
  std::vector<PlayerChunkRecord> player;
  std::vector<CdnChunkRecord> cdn;
  std::vector<TcpSnapshot> tcp;
  std::vector<SessionMeta> meta;
  for (int s = 0; s < 5; ++s) {
    const std::string id = "sess-" + std::to_string(s);
    meta.push_back(make_meta(id, "10.0.0." + std::to_string(s + 1)));
    for (int c = 1; c <= 4; ++c) {
      player.push_back(make_player(id, c));
      cdn.push_back(make_cdn(id, c));
      TcpSnapshot snap;
      snap.session_id = id;
      snap.chunk_id = c;
      snap.t_offset = 0;
      snap.cwnd = 10;
      snap.srtt = ms_to_us(60.0);
      snap.srttvar = ms_to_us(5.0);
      snap.mss = 1460;
      tcp.push_back(snap);
    }
  }

  auto forward = join_records(player, cdn, tcp, meta);

  Rng rng(3);
  auto shuffle = [&rng](auto &v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
    }
  };
  shuffle(player);
  shuffle(cdn);
  shuffle(tcp);
  shuffle(meta);
  auto shuffled = join_records(player, cdn, tcp, meta);

  REQUIRE(forward.sessions.size() == shuffled.sessions.size());
  for (std::size_t i = 0; i < forward.sessions.size(); ++i) {
    REQUIRE(forward.sessions[i].chunks.size() == shuffled.sessions[i].chunks.size());
    for (std::size_t c = 0; c < forward.sessions[i].chunks.size(); ++c) {
      CHECK(to_jsonl(forward.sessions[i].chunks[c]) == to_jsonl(shuffled.sessions[i].chunks[c]));
    }
  }
}

TEST_CASE("proxy filter: ip mismatch, ua mismatch, volume rule") {
  auto ok = make_meta("keep", "1.1.1.1");
  ok.video_length_s = 30 * 60; // 30 minutes: under the daily cap

  auto mismatch_ip = make_meta("drop-ip", "1.1.1.2");
  mismatch_ip.cdn_client_ip = "1.1.1.3";

  auto mismatch_ua = make_meta("drop-ua", "1.1.1.4");
  mismatch_ua.cdn_user_agent = "Windows/Other";

  std::vector<SessionMeta> sessions = {ok, mismatch_ip, mismatch_ua};
  // One IP watching 100 sessions x 20 minutes on the same day: 2000 > 1440.
  for (int i = 0; i < 100; ++i) {
    sessions.push_back(make_meta("vol-" + std::to_string(i), "9.9.9.9", 1, 20 * 60));
  }

  auto drops = filter_proxies(sessions, {});
  REQUIRE(drops.size() == 102);
  std::map<std::string, ProxyDropReason> by_id;
  for (const auto &d : drops) by_id[d.session_id] = d.reason;
  CHECK(by_id.count("keep") == 0);
  CHECK(by_id["drop-ip"] == ProxyDropReason::ip_mismatch);
  CHECK(by_id["drop-ua"] == ProxyDropReason::ua_mismatch);
  CHECK(by_id["vol-0"] == ProxyDropReason::volume);
  CHECK(by_id["vol-99"] == ProxyDropReason::volume);

  // Idempotence: filtering the kept set drops nothing.
  std::vector<SessionMeta> kept;
  for (const auto &m : sessions) {
    if (!by_id.count(m.session_id)) kept.push_back(m);
  }
  CHECK(filter_proxies(kept, {}).empty());
}

TEST_CASE("report counts reconcile with inputs") {
  std::vector<PlayerChunkRecord> player = {make_player("a", 1), make_player("a", 2),
                                           make_player("b", 1), make_player("c", 1),
                                           make_player("c", 1)};
  std::vector<CdnChunkRecord> cdn = {make_cdn("a", 1), make_cdn("a", 2), make_cdn("d", 9)};
  auto result = join_records(player, cdn, {}, {make_meta("a", "2.2.2.2")});
  const auto &report = result.report;
  // player: 2 joined + 1 orphan (b) + 2 duplicate copies (c) = 5.
  CHECK(report.joined + report.player_orphans + report.duplicate_player + report.rejected_joins ==
        static_cast<std::int64_t>(player.size()));
  // cdn: 2 joined + 1 orphan (d) = 3.
  CHECK(report.joined + report.cdn_orphans + report.duplicate_cdn ==
        static_cast<std::int64_t>(cdn.size()));
  CHECK(report.kept_fraction == 1.0);
}

TEST_CASE("file-level ingest on simulator output joins everything") {
  const std::string dir = std::filesystem::temp_directory_path() / "chunkscope_ingest_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);

  SimConfig config = default_sim_config();
  config.n_sessions = 20;
  config.n_videos = 30;
  config.seed = 5;

  std::ofstream player(dir + "/player.jsonl"), cdn(dir + "/cdn.jsonl"), tcp(dir + "/tcp.jsonl"),
      meta(dir + "/sessions.jsonl");
  std::int64_t chunks = 0;
  run_simulation(config, [&](SessionOutput &&session) {
    for (const auto &rec : session.player) player << to_jsonl(rec) << "\n";
    for (const auto &rec : session.cdn) cdn << to_jsonl(rec) << "\n";
    for (const auto &rec : session.snapshots) tcp << to_jsonl(rec) << "\n";
    meta << to_jsonl(session.meta) << "\n";
    chunks += static_cast<std::int64_t>(session.player.size());
  });
  player.close();
  cdn.close();
  tcp.close();
  meta.close();

  // Damage one line to exercise the malformed counter.
  {
    std::ofstream append(dir + "/player.jsonl", std::ios::app);
    append << "{broken json\n";
  }

  IngestPaths paths{dir + "/player.jsonl", dir + "/cdn.jsonl", dir + "/tcp.jsonl",
                    dir + "/sessions.jsonl"};
  auto result = run_ingest(paths, dir);
  REQUIRE(std::holds_alternative<JoinReport>(result));
  const auto &report = std::get<JoinReport>(result);
  CHECK(report.joined == chunks);
  CHECK(report.player_orphans == 0);
  CHECK(report.cdn_orphans == 0);
  CHECK(report.player_malformed == 1);
  CHECK(report.dropped_snapshots == 0);
  CHECK(report.sessions_kept == config.n_sessions);

  auto loaded = load_joined_sessions(dir + "/joined.jsonl", dir + "/sessions_kept.jsonl");
  REQUIRE(std::holds_alternative<std::vector<JoinedSession>>(loaded));
  const auto &sessions = std::get<std::vector<JoinedSession>>(loaded);
  CHECK(static_cast<std::int64_t>(sessions.size()) == config.n_sessions);
  std::int64_t loaded_chunks = 0;
  for (const auto &session : sessions) {
    loaded_chunks += static_cast<std::int64_t>(session.chunks.size());
    for (const auto &chunk : session.chunks) CHECK(!chunk.snapshots.empty());
  }
  CHECK(loaded_chunks == chunks);

  std::filesystem::remove_all(dir);
}

TEST_CASE("empty files ingest to an empty, zero-counter report") {
  const std::string dir = std::filesystem::temp_directory_path() / "chunkscope_ingest_empty";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  for (const char *name : {"player.jsonl", "cdn.jsonl", "tcp.jsonl", "sessions.jsonl"}) {
    std::ofstream out(dir + "/" + name);
  }
  IngestPaths paths{dir + "/player.jsonl", dir + "/cdn.jsonl", dir + "/tcp.jsonl",
                    dir + "/sessions.jsonl"};
  auto result = run_ingest(paths, dir);
  REQUIRE(std::holds_alternative<JoinReport>(result));
  const auto &report = std::get<JoinReport>(result);
  CHECK(report.joined == 0);
  CHECK(report.player_lines == 0);
  CHECK(report.player_malformed == 0);

  auto missing = run_ingest({dir + "/nope.jsonl", dir + "/cdn.jsonl", dir + "/tcp.jsonl",
                             dir + "/sessions.jsonl"},
                            dir);
  CHECK(std::holds_alternative<IngestError>(missing));
  std::filesystem::remove_all(dir);
}
