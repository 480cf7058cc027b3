#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "chunkscope/model.hpp"

namespace chunkscope {

// Join/filter bookkeeping; counts reconcile exactly with input line counts.
struct JoinReport {
  std::int64_t player_lines = 0;
  std::int64_t cdn_lines = 0;
  std::int64_t tcp_lines = 0;
  std::int64_t meta_lines = 0;
  std::int64_t player_malformed = 0;
  std::int64_t cdn_malformed = 0;
  std::int64_t tcp_malformed = 0;
  std::int64_t meta_malformed = 0;
  std::int64_t joined = 0;
  std::int64_t player_orphans = 0;
  std::int64_t cdn_orphans = 0;
  std::int64_t duplicate_player = 0; // quarantined copies
  std::int64_t duplicate_cdn = 0;
  std::int64_t dropped_snapshots = 0; // keyed to no joined chunk
  std::int64_t rejected_joins = 0;    // derive() refused (e.g. d_lb <= 0)
  std::int64_t sessions_total = 0;
  std::int64_t sessions_kept = 0;
  std::int64_t proxy_dropped_ip = 0;
  std::int64_t proxy_dropped_ua = 0;
  std::int64_t proxy_dropped_volume = 0;
  double kept_fraction = 1.0;

  std::string to_json() const;
};

struct JoinedSession {
  SessionMeta meta;
  std::vector<JoinedChunk> chunks; // ordered by chunk_id
};

enum class ProxyDropReason { ip_mismatch, ua_mismatch, volume };

const char *to_string(ProxyDropReason reason);

struct ProxyDrop {
  std::string session_id;
  ProxyDropReason reason;
};

struct IngestOptions {
  // Per-IP video minutes per day above which every session of that IP on that
  // day is treated as proxy traffic.
  double volume_threshold_min_per_day = 1440.0;
};

// In-memory join of the four record streams. Input order is irrelevant: keys
// are authoritative and the output is sorted by (session_id, chunk_id).
struct JoinResult {
  std::vector<JoinedSession> sessions;
  std::vector<ProxyDrop> dropped;
  JoinReport report;
};

JoinResult join_records(std::vector<PlayerChunkRecord> player, std::vector<CdnChunkRecord> cdn,
                        std::vector<TcpSnapshot> tcp, std::vector<SessionMeta> meta,
                        const IngestOptions &options = {});

// Proxy filter on its own (idempotent): drops sessions whose beacon and CDN
// identities disagree, plus all sessions of any (ip, day) whose total video
// minutes exceed the threshold.
std::vector<ProxyDrop> filter_proxies(const std::vector<SessionMeta> &sessions,
                                      const IngestOptions &options);

// File-level driver: reads the four JSON-Lines inputs (malformed lines are
// counted and skipped), joins, filters, and writes joined.jsonl,
// sessions_kept.jsonl, and join_report.json under out_dir.
struct IngestPaths {
  std::string player;
  std::string cdn;
  std::string tcp;
  std::string meta;
};

struct IngestError {
  std::string message;
};

std::variant<JoinReport, IngestError> run_ingest(const IngestPaths &paths,
                                                 const std::string &out_dir,
                                                 const IngestOptions &options = {});

// Shared helper: loads a joined.jsonl + sessions_kept.jsonl pair back into
// memory (used by diagnose/analyze).
std::variant<std::vector<JoinedSession>, IngestError>
load_joined_sessions(const std::string &joined_path, const std::string &sessions_path);

} // namespace chunkscope
