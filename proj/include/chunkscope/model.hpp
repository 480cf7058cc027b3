#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chunkscope/time.hpp"

namespace chunkscope {

// Domain types shared by the simulator, ingest, and the diagnosis engine.
// All values are immutable once constructed and safe to share across workers.

enum class CacheStatus { hit_memory, hit_disk, miss };

const char *to_string(CacheStatus status);
// Accepts both the three-valued encoding ("hit_memory"/"hit_disk"/"miss") and
// the two-valued one ("hit"/"miss"); a plain "hit" maps to hit_memory.
std::optional<CacheStatus> parse_cache_status(const std::string &text);

// Client-side per-chunk milestones and playout/rendering counters.
struct PlayerChunkRecord {
  std::string session_id;
  int chunk_id = 0;        // 1-based
  micros_t d_fb = 0;       // first-byte delay
  micros_t d_lb = 0;       // first-to-last-byte window
  double bitrate_kbps = 0; // requested bitrate
  int buf_count = 0;       // rebuffering events attributed to this chunk
  micros_t buf_dur = 0;    // rebuffering duration attributed to this chunk
  bool vis = true;         // player visible while the chunk displayed
  double avg_fr = 0;       // rendered frames/second
  int drop_fr = 0;         // dropped frames
};

// Server-side per-chunk timings, cache status, and size.
struct CdnChunkRecord {
  std::string session_id;
  int chunk_id = 0;
  micros_t d_wait = 0;
  micros_t d_open = 0;
  micros_t d_read = 0;
  micros_t d_be = 0; // backend latency, includes its network delay; 0 unless miss
  CacheStatus cache_status = CacheStatus::hit_memory;
  std::int64_t chunk_size = 0; // bytes

  micros_t d_cdn() const { return d_wait + d_open + d_read; }
};

// Sampled kernel TCP state for the serving connection.
struct TcpSnapshot {
  std::string session_id;
  int chunk_id = 0;
  micros_t t_offset = 0; // since chunk transfer start
  int cwnd = 0;          // segments
  micros_t srtt = 0;     // smoothed
  micros_t srttvar = 0;
  std::int64_t retx = 0; // cumulative for the connection
  int mss = 0;           // bytes
};

// Per-session metadata carrying both the beacon-side and CDN-side identity
// fields the proxy filter needs.
struct SessionMeta {
  std::string session_id;
  std::string client_ip;     // beacon side
  std::string user_agent;    // beacon side, "OS/Browser"
  std::string cdn_client_ip; // address seen by the CDN
  std::string cdn_user_agent;
  double video_length_s = 0;
  double chunk_duration_s = 6.0; // tau
  std::string pop_id;
  std::string server_id;
  std::string org_label;
  double distance_km = 0;
  int day = 0; // dataset day index
  int video_id = 0;
  int video_rank = 0; // 1 = most popular
};

// Fused player+CDN view with derived quantities.
struct JoinedChunk {
  PlayerChunkRecord player;
  CdnChunkRecord cdn;
  std::vector<TcpSnapshot> snapshots; // ordered by t_offset

  micros_t rtt0_ub = 0;       // d_fb - d_cdn - d_be; negative only on bad input
  double tp_inst = 0;         // bytes/s, chunk_size / d_lb
  double perf_score = 0;      // tau / (d_fb + d_lb), times in seconds
  micros_t server_latency = 0; // d_cdn + d_be
  bool inconsistent_timing = false; // rtt0_ub came out negative

  const std::string &session_id() const { return player.session_id; }
  int chunk_id() const { return player.chunk_id; }
};

enum class LabelKind {
  cache_miss_latency,
  disk_timer_latency,
  network_baseline_latency,
  network_latency_variation,
  network_loss,
  throughput_limited,
  download_stack_buffered,
  persistent_download_stack,
  rendering_drop,
  none,
};

const char *to_string(LabelKind kind);
std::optional<LabelKind> parse_label_kind(const std::string &text);

// Per-chunk bottleneck classification; evidence keys are fixed per kind.
struct DiagnosisLabel {
  std::string session_id;
  int chunk_id = 0;
  LabelKind label = LabelKind::none;
  std::vector<LabelKind> secondary;
  std::map<std::string, double> evidence;
};

// Simulator-only injected fault record; never read by diagnosis.
struct GroundTruth {
  std::string session_id;
  int chunk_id = 0;
  LabelKind injected = LabelKind::none;
  std::map<std::string, double> params;
};

// Fills the derived fields from the fused raw fields. Rejects non-positive
// d_lb (the division oracle for tp_inst) and non-positive tau.
std::optional<JoinedChunk> derive(const PlayerChunkRecord &player, const CdnChunkRecord &cdn,
                                  std::vector<TcpSnapshot> snapshots, double tau_s);

} // namespace chunkscope
