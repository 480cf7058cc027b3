#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "chunkscope/ingest.hpp"
#include "chunkscope/model.hpp"
#include "chunkscope/tcp_path.hpp"

namespace chunkscope {

// Sender-side throughput estimate from one TCP snapshot: mss * cwnd / srtt.
double conn_throughput_Bps(const TcpSnapshot &snapshot);

struct MetricStat {
  double mean = 0;
  double sigma = 0; // population standard deviation
};

// Per-session mean/sigma over the chunks of {d_fb, tp_inst, srtt,
// server_latency, cwnd}; srtt/cwnd come from each chunk's first snapshot.
struct SessionStats {
  MetricStat d_fb;
  MetricStat tp_inst;
  MetricStat srtt;
  MetricStat server_latency;
  MetricStat cwnd;
  int chunks_with_snapshots = 0;
};

SessionStats compute_session_stats(const std::vector<JoinedChunk> &chunks);

struct DiagnosisOptions {
  bool leave_one_out = false;  // exclude the candidate from its own mean/sigma
  int min_session_chunks = 4;  // below this, no transient-DS verdict
  double disk_timer_ms = 10.0;
  double disk_window_ms = 5.0; // classification window above the timer
  double baseline_threshold_ms = 100.0;
  double throughput_share_threshold = 0.5;
  double rendering_drop_threshold = 0.30;
};

struct DsOutlierFlag {
  std::size_t chunk_index = 0;
  std::map<std::string, double> evidence; // sigma distances per metric
};

// Transient download-stack detector: d_fb and tp_inst more than two sigma
// above their session means while srtt, server latency, and cwnd all sit
// below one sigma.
std::vector<DsOutlierFlag> detect_ds_outliers(const std::vector<JoinedChunk> &chunks,
                                              const DiagnosisOptions &options = {});

// Lower bound on the chunk's download-stack latency from the RTO slack:
// max(0, d_fb - d_cdn - d_be - rto). Unavailable without a snapshot.
std::optional<micros_t> estimate_persistent_ds(const JoinedChunk &chunk);

// Session baseline RTT: min over chunks of min(first-snapshot srtt, rtt0_ub).
// Chunks flagged with inconsistent timing contribute their srtt only.
std::optional<micros_t> baseline_rtt_us(const std::vector<JoinedChunk> &chunks);

std::int64_t chunk_retx_delta(const JoinedChunk &chunk);

// Priority classification over the individual detectors; total on any input.
DiagnosisLabel classify_chunk(const JoinedChunk &chunk, const SessionStats &stats,
                              bool ds_flagged, const std::map<std::string, double> &ds_evidence,
                              const DiagnosisOptions &options = {});

struct SessionSummary {
  std::string session_id;
  std::string org_label;
  std::string client_ip;
  std::string user_agent;
  int day = 0;
  int n_chunks = 0;
  micros_t startup_delay = 0; // log proxy: d_fb + d_lb of chunk 1
  double rebuffer_ratio = 0;
  double avg_bitrate_kbps = 0;
  double dropped_fraction = 0;
  double cv_srtt = 0; // population sigma/mean over all session SRTT samples
  double retx_rate = 0;
  std::optional<micros_t> baseline_rtt;
  std::map<std::string, std::int64_t> label_histogram;
};

SessionSummary session_summary(const JoinedSession &session,
                               const std::vector<DiagnosisLabel> &labels);

std::string to_jsonl(const SessionSummary &summary);
std::optional<SessionSummary> summary_from_jsonl(const std::string &line);

// Whole-session diagnosis: Eq.-style detectors first, then per-chunk labels.
struct SessionDiagnosis {
  std::vector<DiagnosisLabel> labels;
  SessionSummary summary;
};

SessionDiagnosis diagnose_session(const JoinedSession &session,
                                  const DiagnosisOptions &options = {});

// Detector scorecard against simulator ground truth. A truth entry counts as
// detected when its kind appears among the chunk's primary or secondary
// labels; precision/recall are null when undefined (no detections/positives).
struct KindScore {
  std::int64_t truth_count = 0;
  std::int64_t detected_count = 0;
  std::int64_t true_positives = 0;
  std::optional<double> precision;
  std::optional<double> recall;
};

struct Scorecard {
  std::map<std::string, KindScore> by_kind;
  std::string to_json() const;
};

Scorecard score_against_truth(const std::vector<std::vector<DiagnosisLabel>> &labels_by_session,
                              const std::vector<GroundTruth> &truth);

// File-level driver: reads joined.jsonl/sessions_kept.jsonl from in_dir,
// writes labels.jsonl + sessions_summary.jsonl (+ scorecard.json when a truth
// file is given). `jobs` sessions are diagnosed in parallel; output order is
// by session id regardless.
struct DiagnoseError {
  std::string message;
};

struct DiagnoseCounters {
  std::int64_t sessions = 0;
  std::int64_t chunks = 0;
  std::int64_t labels_emitted = 0;
};

std::variant<DiagnoseCounters, DiagnoseError>
run_diagnose(const std::string &in_dir, const std::string &labels_path,
             const std::string &summary_path, const std::string &truth_path,
             const std::string &scorecard_path, const DiagnosisOptions &options, int jobs);

} // namespace chunkscope
