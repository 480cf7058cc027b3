#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "chunkscope/diagnosis.hpp"
#include "chunkscope/ingest.hpp"
#include "chunkscope/model.hpp"

namespace chunkscope {

// Cross-session aggregations. All reductions are either integer sums, counts,
// or sorted-vector statistics, so sharded execution merges to byte-identical
// results for any worker count.

struct PrefixPersistence {
  std::string prefix; // "a.b.c.0/24"
  int days_in_tail = 0;
  int total_days = 0;
  double recurrence = 0;
  bool persistent = false; // top decile by recurrence
};

struct OrgCvRow {
  std::string org_label;
  std::int64_t sessions = 0;
  std::int64_t high_cv_sessions = 0; // cv_srtt > 1
  double fraction = 0;
};

struct RankBucketRow {
  int bucket = 0; // ranks [2^b, 2^(b+1))
  std::int64_t rank_lo = 0;
  std::int64_t rank_hi = 0;
  std::int64_t chunks = 0;
  std::int64_t misses = 0;
  double miss_rate = 0;
  std::optional<double> mean_hit_server_latency_ms; // hits only
};

struct RebufLossRow {
  int chunk_id = 0;
  std::int64_t chunks = 0;
  std::int64_t rebuf = 0;          // chunks at this position with a stall
  std::int64_t loss = 0;           // chunks at this position with retx delta > 0
  std::int64_t rebuf_and_loss = 0; // both at this position
  std::int64_t session_rebuf_and_loss = 0; // loss here, stall anywhere in session
  std::int64_t retx_sum = 0;
  std::int64_t segment_sum = 0;
  double p_rebuf = 0;
  double p_rebuf_given_loss = 0;         // positional conditional
  double p_session_rebuf_given_loss = 0; // any-rebuffer conditional
  double mean_retx_rate = 0;
};

struct ShareSplit {
  std::int64_t chunks = 0;
  double median_latency_share = 0;
  double median_throughput_share = 0;
};

struct FirstChunkComparison {
  std::int64_t first_count = 0;
  std::int64_t other_count = 0;
  bool insufficient = false; // fewer than 100 chunks in an arm
  double median_first_ms = 0;
  double median_other_ms = 0;
  double median_difference_ms = 0;
};

struct RenderingPartition {
  std::int64_t confirm = 0;
  std::int64_t low_rate_good = 0;
  std::int64_t high_rate_bad = 0;
  double confirm_fraction = 0;
};

struct DropRateBucket {
  std::string user_agent; // "all" rows aggregate every profile
  int bucket = 0;         // rate in [bucket*0.25, (bucket+1)*0.25)
  std::int64_t chunks = 0;
  std::int64_t dropped_frames = 0;
  std::int64_t total_frames = 0;
  double drop_fraction = 0;
};

struct AggregateOptions {
  double tail_threshold_ms = 100.0;
  std::int64_t org_min_sessions = 50;
  double first_chunk_srtt_lo_ms = 60.0;
  double first_chunk_srtt_hi_ms = 65.0;
  double first_chunk_dcdn_max_ms = 5.0;
  std::int64_t first_chunk_min_per_arm = 100;
  std::int64_t iw_segments = 10;
  double rendering_rate_threshold = 1.5;
  double rendering_drop_threshold = 0.30;
  std::size_t cdf_max_points = 256;
};

struct AnalysisResult {
  std::vector<PrefixPersistence> prefix_persistence;
  std::vector<OrgCvRow> org_cv;
  std::vector<RankBucketRow> popularity;
  std::vector<RebufLossRow> rebuf_loss;
  ShareSplit shares_good; // perf_score >= 1
  ShareSplit shares_bad;  // perf_score < 1
  FirstChunkComparison first_chunk;
  RenderingPartition rendering;
  std::vector<DropRateBucket> drop_by_rate;
  // Sessions with at least one miss: mean within-session miss ratio.
  std::int64_t sessions_with_miss = 0;
  double mean_session_miss_ratio = 0;
  std::int64_t total_chunks = 0;
  std::int64_t total_sessions = 0;
};

// Pure in-memory analysis; `jobs` shards the per-session map phase.
AnalysisResult analyze(const std::vector<JoinedSession> &sessions,
                       const std::vector<SessionSummary> &summaries,
                       const AggregateOptions &options = {}, int jobs = 1);

// Writes one CSV per analysis plus analysis_summary.json under reports_dir.
struct AnalyzeError {
  std::string message;
};

std::variant<AnalysisResult, AnalyzeError>
write_analysis(const std::vector<JoinedSession> &sessions,
               const std::vector<SessionSummary> &summaries, const std::string &reports_dir,
               const AggregateOptions &options = {}, int jobs = 1);

// File-level driver: loads ingest + diagnose outputs from in_dir.
std::variant<AnalysisResult, AnalyzeError> run_analyze(const std::string &in_dir,
                                                       const std::string &reports_dir,
                                                       const AggregateOptions &options = {},
                                                       int jobs = 1);

} // namespace chunkscope
