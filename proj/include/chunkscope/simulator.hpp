#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "chunkscope/catalog.hpp"
#include "chunkscope/lru_cache.hpp"
#include "chunkscope/model.hpp"
#include "chunkscope/rng.hpp"
#include "chunkscope/sim_config.hpp"
#include "chunkscope/tcp_path.hpp"

namespace chunkscope {

struct CdnServeResult {
  micros_t d_wait = 0;
  micros_t d_open = 0;
  micros_t d_read = 0;
  micros_t d_be = 0;
  CacheStatus status = CacheStatus::hit_memory;

  micros_t server_latency() const { return d_wait + d_open + d_read + d_be; }
};

// One cache lookup + serving-latency draw. Memory hits read within the
// async-read timer; disk hits pay the timer plus a short window; misses draw
// the backend latency and populate both cache levels.
CdnServeResult cdn_serve(const ChunkKey &key, TwoLevelCache &cache, const SimConfig &config,
                         Rng &rng);

// Rate-based selection: highest ladder rate <= 0.8x the moving average of the
// last (up to) three chunk download rates; the first chunk takes the lowest
// rung, and a rebuffering event steps one rung down regardless of throughput.
double abr_select(const std::vector<double> &recent_rates_kbps,
                  const std::vector<double> &ladder_kbps, bool panic, double current_kbps);

// Chunk-granular playback buffer: +tau on each completion, draining at 1 s/s
// while playing; playback starts once the buffer reaches the startup
// threshold. A stall opens when the buffer empties and is attributed to the
// chunk that was playing; it closes at the next completion.
class PlayoutTracker {
public:
  PlayoutTracker(micros_t startup_buffer, micros_t tau) : startup_(startup_buffer), tau_(tau) {}

  struct Step {
    bool stalled = false;
    micros_t stall_duration = 0;
    int stalled_chunk = 0; // 1-based chunk whose playout ran dry
    micros_t buffer_before = 0; // at the chunk's request instant
    micros_t buffer_after = 0;  // right after this completion
    bool playing_throughout = false; // playback active over the whole window
  };

  // Chunk completions arrive in order; `completion` and `request` are session
  // clock instants with request == previous completion.
  Step on_completion(micros_t completion, micros_t request);

  bool started() const { return started_; }
  micros_t play_start() const { return play_start_; }

private:
  micros_t available() const { return static_cast<micros_t>(completed_) * tau_; }
  micros_t played_at(micros_t t) const;

  micros_t startup_;
  micros_t tau_;
  int completed_ = 0;
  bool started_ = false;
  micros_t play_start_ = 0;
  micros_t anchor_t_ = 0;
  micros_t anchor_played_ = 0;
};

// Per-chunk internals the logs do not carry; used by tests and the
// acceptance suite (closure checks, buffer semantics), never serialized.
struct ChunkDebug {
  micros_t rtt0 = 0;            // the chunk's first-byte round trip
  micros_t transfer_duration = 0;
  micros_t injected_ds = 0;     // total extra download-stack delay in d_fb
  bool ds_buffered = false;
  std::int64_t lost_segments = 0;
  std::int64_t segments = 0;
  micros_t buffer_before = 0;
  micros_t buffer_after = 0;
  bool playing_throughout = false;
  double download_rate = 0; // tau / (d_fb + d_lb)
};

struct SessionOutput {
  SessionMeta meta;
  std::vector<PlayerChunkRecord> player;
  std::vector<CdnChunkRecord> cdn;
  std::vector<TcpSnapshot> snapshots;
  std::vector<GroundTruth> truth;
  std::vector<ChunkDebug> debug;
  micros_t startup_delay = 0; // exact, from the playout model
};

// Simulates one session end to end against the shared cache. Sessions are
// indexed 0..n-1; all randomness derives from (config.seed, session_index).
SessionOutput simulate_session(const SimConfig &config, const Catalog &catalog,
                               TwoLevelCache &cache, std::int64_t session_index);

// Fills both cache levels in ascending-popularity order, so the most popular
// content ends most-recently-used: the steady warm state of a long-running
// CDN rather than a cold start.
void prewarm_cache(TwoLevelCache &cache, const Catalog &catalog,
                   const std::vector<double> &ladder_kbps);

// Runs the whole configured workload. Sessions execute sequentially: the
// cache is shared mutable state, and interleaving them would make
// cache_status depend on scheduling, breaking byte determinism.
void run_simulation(const SimConfig &config,
                    const std::function<void(SessionOutput &&)> &sink);

} // namespace chunkscope
