#include "chunkscope/ingest.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <json.hpp>

#include "chunkscope/records_io.hpp"

namespace chunkscope {

namespace {

using Key = std::pair<std::string, int>;

// Reads a JSON-Lines file through `parse`; malformed lines are counted and
// skipped, never silently dropped.
template <typename Record, typename Parser>
bool read_jsonl(const std::string &path, Parser parse, std::vector<Record> &out,
                std::int64_t &lines, std::int64_t &malformed, std::string &error) {
  std::ifstream in(path);
  if (!in.is_open()) {
    error = "cannot open " + path;
    return false;
  }
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ++lines;
    auto rec = parse(line);
    if (!rec) {
      ++malformed;
      std::cerr << "warning: " << path << ":" << line_no << ": malformed line skipped\n";
      continue;
    }
    out.push_back(std::move(*rec));
  }
  return true;
}

// Splits a keyed record list into unique-by-key entries and quarantined
// duplicate copies (every copy of a duplicated key is quarantined).
template <typename Record>
std::map<Key, Record> dedupe(std::vector<Record> &&records, std::int64_t &duplicates) {
  std::map<Key, std::vector<Record>> by_key;
  for (auto &rec : records) {
    by_key[{rec.session_id, rec.chunk_id}].push_back(std::move(rec));
  }
  std::map<Key, Record> unique;
  for (auto &[key, copies] : by_key) {
    if (copies.size() == 1) {
      unique.emplace(key, std::move(copies.front()));
    } else {
      duplicates += static_cast<std::int64_t>(copies.size());
    }
  }
  return unique;
}

} // namespace

const char *to_string(ProxyDropReason reason) {
  switch (reason) {
  case ProxyDropReason::ip_mismatch: return "ip_mismatch";
  case ProxyDropReason::ua_mismatch: return "ua_mismatch";
  case ProxyDropReason::volume: return "volume";
  }
  return "volume";
}

std::vector<ProxyDrop> filter_proxies(const std::vector<SessionMeta> &sessions,
                                      const IngestOptions &options) {
  // Per-(ip, day) video minutes, over all sessions of that IP that day.
  std::map<std::pair<std::string, int>, double> minutes;
  for (const auto &meta : sessions) {
    minutes[{meta.client_ip, meta.day}] += meta.video_length_s / 60.0;
  }

  std::vector<ProxyDrop> drops;
  for (const auto &meta : sessions) {
    if (meta.client_ip != meta.cdn_client_ip) {
      drops.push_back({meta.session_id, ProxyDropReason::ip_mismatch});
    } else if (meta.user_agent != meta.cdn_user_agent) {
      drops.push_back({meta.session_id, ProxyDropReason::ua_mismatch});
    } else if (minutes[{meta.client_ip, meta.day}] > options.volume_threshold_min_per_day) {
      drops.push_back({meta.session_id, ProxyDropReason::volume});
    }
  }
  return drops;
}

JoinResult join_records(std::vector<PlayerChunkRecord> player, std::vector<CdnChunkRecord> cdn,
                        std::vector<TcpSnapshot> tcp, std::vector<SessionMeta> meta,
                        const IngestOptions &options) {
  JoinResult result;
  JoinReport &report = result.report;

  auto player_by_key = dedupe(std::move(player), report.duplicate_player);
  auto cdn_by_key = dedupe(std::move(cdn), report.duplicate_cdn);

  std::map<Key, std::vector<TcpSnapshot>> tcp_by_key;
  for (auto &snap : tcp) {
    tcp_by_key[{snap.session_id, snap.chunk_id}].push_back(std::move(snap));
  }

  // Last metadata record wins on duplicate session ids.
  std::map<std::string, SessionMeta> meta_by_session;
  for (auto &m : meta) meta_by_session[m.session_id] = std::move(m);
  report.sessions_total = static_cast<std::int64_t>(meta_by_session.size());

  std::vector<SessionMeta> meta_list;
  meta_list.reserve(meta_by_session.size());
  for (const auto &[id, m] : meta_by_session) meta_list.push_back(m);
  result.dropped = filter_proxies(meta_list, options);

  std::set<std::string> dropped_sessions;
  for (const auto &drop : result.dropped) {
    dropped_sessions.insert(drop.session_id);
    switch (drop.reason) {
    case ProxyDropReason::ip_mismatch: ++report.proxy_dropped_ip; break;
    case ProxyDropReason::ua_mismatch: ++report.proxy_dropped_ua; break;
    case ProxyDropReason::volume: ++report.proxy_dropped_volume; break;
    }
  }
  report.sessions_kept = report.sessions_total - static_cast<std::int64_t>(dropped_sessions.size());
  report.kept_fraction = report.sessions_total == 0
                             ? 1.0
                             : static_cast<double>(report.sessions_kept) /
                                   static_cast<double>(report.sessions_total);

  // Join on (session_id, chunk_id); both maps are ordered, so the output is
  // sorted and independent of input order.
  std::map<std::string, JoinedSession> sessions;
  for (auto &[key, player_rec] : player_by_key) {
    auto cdn_it = cdn_by_key.find(key);
    if (cdn_it == cdn_by_key.end()) {
      ++report.player_orphans;
      continue;
    }
    if (dropped_sessions.count(key.first)) {
      // Proxy session: the pair exists but is filtered out with its session.
      ++report.joined;
      cdn_by_key.erase(cdn_it);
      continue;
    }

    auto meta_it = meta_by_session.find(key.first);
    const double tau = meta_it != meta_by_session.end() ? meta_it->second.chunk_duration_s : 6.0;

    std::vector<TcpSnapshot> snaps;
    if (auto tcp_it = tcp_by_key.find(key); tcp_it != tcp_by_key.end()) {
      snaps = std::move(tcp_it->second);
      std::sort(snaps.begin(), snaps.end(), [](const TcpSnapshot &a, const TcpSnapshot &b) {
        return std::tie(a.t_offset, a.retx, a.cwnd, a.srtt, a.srttvar) <
               std::tie(b.t_offset, b.retx, b.cwnd, b.srtt, b.srttvar);
      });
      tcp_by_key.erase(tcp_it);
    }

    auto joined = derive(player_rec, cdn_it->second, std::move(snaps), tau);
    if (!joined) {
      ++report.rejected_joins;
      cdn_by_key.erase(cdn_it);
      continue;
    }
    ++report.joined;

    auto [sess_it, created] = sessions.try_emplace(key.first);
    if (created) {
      if (meta_it != meta_by_session.end()) {
        sess_it->second.meta = meta_it->second;
      } else {
        sess_it->second.meta.session_id = key.first;
        sess_it->second.meta.org_label = "unknown";
        sess_it->second.meta.video_length_s = 0;
      }
    }
    sess_it->second.chunks.push_back(std::move(*joined));
    cdn_by_key.erase(cdn_it);
  }
  report.cdn_orphans = static_cast<std::int64_t>(cdn_by_key.size());

  for (const auto &[key, snaps] : tcp_by_key) {
    report.dropped_snapshots += static_cast<std::int64_t>(snaps.size());
  }

  result.sessions.reserve(sessions.size());
  for (auto &[id, session] : sessions) result.sessions.push_back(std::move(session));
  return result;
}

std::string JoinReport::to_json() const {
  nlohmann::json j{{"player_lines", player_lines},
                   {"cdn_lines", cdn_lines},
                   {"tcp_lines", tcp_lines},
                   {"meta_lines", meta_lines},
                   {"player_malformed", player_malformed},
                   {"cdn_malformed", cdn_malformed},
                   {"tcp_malformed", tcp_malformed},
                   {"meta_malformed", meta_malformed},
                   {"joined", joined},
                   {"player_orphans", player_orphans},
                   {"cdn_orphans", cdn_orphans},
                   {"duplicate_player", duplicate_player},
                   {"duplicate_cdn", duplicate_cdn},
                   {"dropped_snapshots", dropped_snapshots},
                   {"rejected_joins", rejected_joins},
                   {"sessions_total", sessions_total},
                   {"sessions_kept", sessions_kept},
                   {"proxy_dropped_ip", proxy_dropped_ip},
                   {"proxy_dropped_ua", proxy_dropped_ua},
                   {"proxy_dropped_volume", proxy_dropped_volume},
                   {"kept_fraction", kept_fraction}};
  return j.dump(2);
}

std::variant<JoinReport, IngestError> run_ingest(const IngestPaths &paths,
                                                 const std::string &out_dir,
                                                 const IngestOptions &options) {
  std::vector<PlayerChunkRecord> player;
  std::vector<CdnChunkRecord> cdn;
  std::vector<TcpSnapshot> tcp;
  std::vector<SessionMeta> meta;
  JoinReport counters;
  std::string error;

  if (!read_jsonl(paths.player, player_from_jsonl, player, counters.player_lines,
                  counters.player_malformed, error) ||
      !read_jsonl(paths.cdn, cdn_from_jsonl, cdn, counters.cdn_lines, counters.cdn_malformed,
                  error) ||
      !read_jsonl(paths.tcp, snapshot_from_jsonl, tcp, counters.tcp_lines, counters.tcp_malformed,
                  error) ||
      !read_jsonl(paths.meta, meta_from_jsonl, meta, counters.meta_lines, counters.meta_malformed,
                  error)) {
    return IngestError{error};
  }

  JoinResult joined = join_records(std::move(player), std::move(cdn), std::move(tcp),
                                   std::move(meta), options);
  joined.report.player_lines = counters.player_lines;
  joined.report.cdn_lines = counters.cdn_lines;
  joined.report.tcp_lines = counters.tcp_lines;
  joined.report.meta_lines = counters.meta_lines;
  joined.report.player_malformed = counters.player_malformed;
  joined.report.cdn_malformed = counters.cdn_malformed;
  joined.report.tcp_malformed = counters.tcp_malformed;
  joined.report.meta_malformed = counters.meta_malformed;

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) return IngestError{"cannot create " + out_dir};

  {
    std::ofstream out(out_dir + "/joined.jsonl");
    if (!out.is_open()) return IngestError{"cannot write " + out_dir + "/joined.jsonl"};
    for (const auto &session : joined.sessions) {
      for (const auto &chunk : session.chunks) out << to_jsonl(chunk) << "\n";
    }
  }
  {
    std::ofstream out(out_dir + "/sessions_kept.jsonl");
    if (!out.is_open()) return IngestError{"cannot write sessions_kept.jsonl"};
    for (const auto &session : joined.sessions) out << to_jsonl(session.meta) << "\n";
  }
  {
    std::ofstream out(out_dir + "/dropped_sessions.jsonl");
    if (!out.is_open()) return IngestError{"cannot write dropped_sessions.jsonl"};
    for (const auto &drop : joined.dropped) {
      nlohmann::json j{{"session_id", drop.session_id}, {"reason", to_string(drop.reason)}};
      out << j.dump() << "\n";
    }
  }
  {
    std::ofstream out(out_dir + "/join_report.json");
    if (!out.is_open()) return IngestError{"cannot write join_report.json"};
    out << joined.report.to_json() << "\n";
  }
  return joined.report;
}

std::variant<std::vector<JoinedSession>, IngestError>
load_joined_sessions(const std::string &joined_path, const std::string &sessions_path) {
  std::map<std::string, SessionMeta> metas;
  {
    std::ifstream in(sessions_path);
    if (!in.is_open()) return IngestError{"cannot open " + sessions_path};
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto meta = meta_from_jsonl(line);
      if (!meta) return IngestError{"malformed session metadata in " + sessions_path};
      metas[meta->session_id] = std::move(*meta);
    }
  }

  std::map<std::string, JoinedSession> sessions;
  {
    std::ifstream in(joined_path);
    if (!in.is_open()) return IngestError{"cannot open " + joined_path};
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto chunk = joined_from_jsonl(line);
      if (!chunk) return IngestError{"malformed joined chunk in " + joined_path};
      auto [it, created] = sessions.try_emplace(chunk->session_id());
      if (created) {
        auto meta_it = metas.find(chunk->session_id());
        if (meta_it != metas.end()) {
          it->second.meta = meta_it->second;
        } else {
          it->second.meta.session_id = chunk->session_id();
          it->second.meta.org_label = "unknown";
        }
      }
      it->second.chunks.push_back(std::move(*chunk));
    }
  }

  std::vector<JoinedSession> out;
  out.reserve(sessions.size());
  for (auto &[id, session] : sessions) {
    std::sort(session.chunks.begin(), session.chunks.end(),
              [](const JoinedChunk &a, const JoinedChunk &b) { return a.chunk_id() < b.chunk_id(); });
    out.push_back(std::move(session));
  }
  return out;
}

} // namespace chunkscope
