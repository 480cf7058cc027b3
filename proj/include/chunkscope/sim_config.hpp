#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace chunkscope {

// Path profile: one network class (base RTT, jitter/spike behavior, loss,
// bandwidth). Sessions draw a client /24 from the profile's prefix pool, so
// prefix-level analyses can be checked against the generating profile.
struct PathProfile {
  std::string name;
  std::string org_label;
  double weight = 1.0;
  int n_prefixes = 4;
  std::string prefix_base = "10.0.0.0"; // first /24 of the pool
  double base_rtt_ms = 30.0;
  double jitter_ms = 8.0; // lognormal queueing delay, median jitter/4
  double spike_prob = 0.0;
  double spike_min_ms = 100.0;
  double spike_max_ms = 600.0;
  double loss_rate = 0.0; // per segment per round
  double rto_timeout_prob = 0.3; // lossy rounds recovered by timeout
  double bandwidth_bytes_per_s = 6e6;
  double distance_km = 100.0;
};

// Client profile: OS/browser label plus download-stack fault behavior and the
// rendering drop curve (piecewise linear in download rate, knots at 1.0/1.5).
struct ClientProfile {
  std::string label; // "OS/Browser"
  double weight = 1.0;
  double ds_fault_rate = 0.0; // per-chunk probability of a buffered delivery
  double ds_delay_median_ms = 800.0;
  double ds_delay_sigma = 0.4;
  double vis_rate = 0.95;
  double fps = 30.0;
  double drop_base = 0.02;     // drop fraction at rate >= 1.5
  double drop_at_rate1 = 0.45; // drop fraction at rate <= 1.0
  double drop_at_rate15 = 0.05;
  double drop_noise = 0.04; // uniform +/- noise on the curve
  double cpu_overload_prob = 0.0;
  double overload_drop_min = 0.35;
  double overload_drop_max = 0.80;
};

struct CacheConfig {
  std::int64_t memory_entries = 65536;
  std::int64_t disk_entries = 80000;
};

// Memory-hit reads are bimodal (hot fast path vs a slower event-loop pass),
// the same shape the production read-latency distributions show below the
// async-read timer.
struct CdnLatencyConfig {
  double async_read_timer_ms = 10.0;
  double wait_max_ms = 0.1;         // D_wait ~ U[0, wait_max)
  double open_max_ms = 0.1;         // D_open ~ U[0, open_max)
  double read_fast_fraction = 0.25; // share of memory reads on the hot path
  double read_fast_median_ms = 0.4;
  double read_fast_sigma = 0.25;
  double read_median_ms = 1.6;      // slow-mode median, lognormal
  double read_sigma = 0.08;
  double disk_window_ms = 2.0;      // disk-hit D_read ~ timer + U[0, window)
};

struct BackendConfig {
  double base_ms = 78.0; // lognormal median
  double sigma = 0.35;
  double shift_ms = 0.0;
};

struct SimConfig {
  std::uint64_t seed = 1;
  std::int64_t n_videos = 1000;
  double zipf_exponent = 0.959;
  std::int64_t n_sessions = 100;
  std::int64_t chunks_min = 8;
  std::int64_t chunks_max = 30;
  double chunk_duration_s = 6.0; // tau
  std::vector<double> bitrate_ladder_kbps = {400, 800, 1600, 2500, 4000};
  double startup_buffer_s = 6.0;
  std::int64_t iw_segments = 10;
  std::int64_t mss = 1460;
  std::int64_t n_days = 10;
  std::int64_t n_pops = 3;
  std::int64_t n_servers = 12;
  double snapshot_interval_ms = 500.0;
  double first_chunk_loss_multiplier = 8.0; // 1.0 = uniform per-chunk loss
  bool first_chunk_ds_enabled = false;
  double first_chunk_ds_median_ms = 300.0;
  double first_chunk_ds_sigma = 0.25;
  bool prewarm_cache = true; // start from the steady warm state
  CacheConfig cache;
  CdnLatencyConfig cdn;
  BackendConfig backend;
  std::vector<PathProfile> paths;
  std::vector<ClientProfile> clients;
};

// Defaults tuned to land on the documented workload constants (hit/miss
// latency medians, top-10% popularity share, rendering confirm band).
SimConfig default_sim_config();

struct ConfigError {
  std::string message;
  int line = 0;
};

// Parses the config text format: `key = value` pairs, `[table]` sections,
// `[[table]]` array-of-table sections, values are integers, floats, booleans,
// quoted strings, or single-line arrays. Unknown keys are errors.
std::variant<SimConfig, ConfigError> parse_sim_config(const std::string &text);

// Semantic validation shared by the parser and programmatic configs.
std::optional<std::string> validate_sim_config(const SimConfig &config);

// FNV-1a 64 over the config source text (or the canonical tag for builtin
// defaults); stamped into run manifests.
std::string config_fingerprint(const std::string &text);

} // namespace chunkscope
