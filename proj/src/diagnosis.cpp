#include "chunkscope/diagnosis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <set>
#include <thread>

#include <json.hpp>

#include "chunkscope/records_io.hpp"

namespace chunkscope {

namespace {

MetricStat stat_of(const std::vector<double> &values) {
  MetricStat s;
  if (values.empty()) return s;
  double sum = 0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double sq = 0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.sigma = std::sqrt(sq / static_cast<double>(values.size()));
  return s;
}

MetricStat stat_excluding(const std::vector<double> &values, std::size_t skip) {
  std::vector<double> rest;
  rest.reserve(values.size() - 1);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i != skip) rest.push_back(values[i]);
  }
  return stat_of(rest);
}

struct MetricColumns {
  std::vector<double> d_fb;
  std::vector<double> tp_inst;
  std::vector<double> srtt;
  std::vector<double> server_latency;
  std::vector<double> cwnd;
};

MetricColumns columns_of(const std::vector<JoinedChunk> &chunks) {
  MetricColumns cols;
  for (const auto &chunk : chunks) {
    cols.d_fb.push_back(static_cast<double>(chunk.player.d_fb));
    cols.tp_inst.push_back(chunk.tp_inst);
    cols.server_latency.push_back(static_cast<double>(chunk.server_latency));
    if (!chunk.snapshots.empty()) {
      cols.srtt.push_back(static_cast<double>(chunk.snapshots.front().srtt));
      cols.cwnd.push_back(static_cast<double>(chunk.snapshots.front().cwnd));
    }
  }
  return cols;
}

double total_frames(const PlayerChunkRecord &rec, double tau_s) {
  return static_cast<double>(rec.drop_fr) + rec.avg_fr * tau_s;
}

double drop_fraction(const PlayerChunkRecord &rec, double tau_s) {
  const double total = total_frames(rec, tau_s);
  return total > 0 ? static_cast<double>(rec.drop_fr) / total : 0.0;
}

} // namespace

double conn_throughput_Bps(const TcpSnapshot &snapshot) {
  return static_cast<double>(snapshot.mss) * static_cast<double>(snapshot.cwnd) /
         us_to_sec(snapshot.srtt);
}

SessionStats compute_session_stats(const std::vector<JoinedChunk> &chunks) {
  const MetricColumns cols = columns_of(chunks);
  SessionStats stats;
  stats.d_fb = stat_of(cols.d_fb);
  stats.tp_inst = stat_of(cols.tp_inst);
  stats.srtt = stat_of(cols.srtt);
  stats.server_latency = stat_of(cols.server_latency);
  stats.cwnd = stat_of(cols.cwnd);
  stats.chunks_with_snapshots = static_cast<int>(cols.srtt.size());
  return stats;
}

std::vector<DsOutlierFlag> detect_ds_outliers(const std::vector<JoinedChunk> &chunks,
                                              const DiagnosisOptions &options) {
  std::vector<DsOutlierFlag> flags;
  if (chunks.size() < static_cast<std::size_t>(options.min_session_chunks)) return flags;

  const MetricColumns cols = columns_of(chunks);
  // Chunks without snapshots cannot clear the srtt/cwnd guards; when any are
  // missing the snapshot-borne columns no longer align by index, so only
  // fully-instrumented sessions are screened.
  if (cols.srtt.size() != chunks.size()) return flags;

  MetricStat d_fb = stat_of(cols.d_fb);
  MetricStat tp = stat_of(cols.tp_inst);
  MetricStat srtt = stat_of(cols.srtt);
  MetricStat server = stat_of(cols.server_latency);
  MetricStat cwnd = stat_of(cols.cwnd);

  for (std::size_t i = 0; i < chunks.size(); ++i) {
    if (options.leave_one_out) {
      d_fb = stat_excluding(cols.d_fb, i);
      tp = stat_excluding(cols.tp_inst, i);
      srtt = stat_excluding(cols.srtt, i);
      server = stat_excluding(cols.server_latency, i);
      cwnd = stat_excluding(cols.cwnd, i);
    }
    const bool fb_high = cols.d_fb[i] > d_fb.mean + 2.0 * d_fb.sigma;
    const bool tp_high = cols.tp_inst[i] > tp.mean + 2.0 * tp.sigma;
    const bool srtt_calm = cols.srtt[i] < srtt.mean + srtt.sigma;
    const bool server_calm = cols.server_latency[i] < server.mean + server.sigma;
    const bool cwnd_calm = cols.cwnd[i] < cwnd.mean + cwnd.sigma;
    if (fb_high && tp_high && srtt_calm && server_calm && cwnd_calm) {
      DsOutlierFlag flag;
      flag.chunk_index = i;
      auto sigma_dist = [](double value, const MetricStat &s) {
        return s.sigma > 0 ? (value - s.mean) / s.sigma : 0.0;
      };
      flag.evidence = {{"d_fb_sigma_dist", sigma_dist(cols.d_fb[i], d_fb)},
                       {"tp_inst_sigma_dist", sigma_dist(cols.tp_inst[i], tp)},
                       {"srtt_sigma_dist", sigma_dist(cols.srtt[i], srtt)},
                       {"server_latency_sigma_dist", sigma_dist(cols.server_latency[i], server)},
                       {"cwnd_sigma_dist", sigma_dist(cols.cwnd[i], cwnd)}};
      flags.push_back(std::move(flag));
    }
  }
  return flags;
}

std::optional<micros_t> estimate_persistent_ds(const JoinedChunk &chunk) {
  if (chunk.snapshots.empty()) return std::nullopt;
  const TcpSnapshot &first = chunk.snapshots.front();
  const micros_t slack =
      chunk.player.d_fb - chunk.cdn.d_cdn() - chunk.cdn.d_be - rto_us(first.srtt, first.srttvar);
  return std::max<micros_t>(0, slack);
}

std::optional<micros_t> baseline_rtt_us(const std::vector<JoinedChunk> &chunks) {
  std::optional<micros_t> best;
  for (const auto &chunk : chunks) {
    if (chunk.snapshots.empty()) continue;
    micros_t sample = chunk.snapshots.front().srtt;
    if (!chunk.inconsistent_timing) sample = std::min(sample, chunk.rtt0_ub);
    if (!best || sample < *best) best = sample;
  }
  return best;
}

std::int64_t chunk_retx_delta(const JoinedChunk &chunk) {
  if (chunk.snapshots.empty()) return 0;
  return chunk.snapshots.back().retx - chunk.snapshots.front().retx;
}

DiagnosisLabel classify_chunk(const JoinedChunk &chunk, const SessionStats &stats,
                              bool ds_flagged, const std::map<std::string, double> &ds_evidence,
                              const DiagnosisOptions &options) {
  (void)stats;
  DiagnosisLabel label;
  label.session_id = chunk.session_id();
  label.chunk_id = chunk.chunk_id();

  struct Match {
    LabelKind kind;
    std::map<std::string, double> evidence;
  };
  std::vector<Match> matches;

  if (ds_flagged) {
    matches.push_back({LabelKind::download_stack_buffered, ds_evidence});
  }

  const double server_ms = us_to_ms(chunk.server_latency);
  const double d_be_ms = us_to_ms(chunk.cdn.d_be);
  if (chunk.cdn.cache_status == CacheStatus::miss && chunk.server_latency > 0 &&
      chunk.cdn.d_be * 2 > chunk.server_latency) {
    matches.push_back({LabelKind::cache_miss_latency,
                       {{"d_be_ms", d_be_ms}, {"server_latency_ms", server_ms}}});
  }

  const double d_read_ms = us_to_ms(chunk.cdn.d_read);
  if (chunk.cdn.cache_status != CacheStatus::miss && d_read_ms >= options.disk_timer_ms &&
      d_read_ms < options.disk_timer_ms + options.disk_window_ms) {
    matches.push_back({LabelKind::disk_timer_latency, {{"d_read_ms", d_read_ms}}});
  }

  const std::int64_t retx_delta = chunk_retx_delta(chunk);
  if (retx_delta > 0 && chunk.perf_score < 1.0) {
    matches.push_back({LabelKind::network_loss,
                       {{"retx_delta", static_cast<double>(retx_delta)},
                        {"perf_score", chunk.perf_score}}});
  }

  const double window = static_cast<double>(chunk.player.d_fb + chunk.player.d_lb);
  const double throughput_share =
      window > 0 ? static_cast<double>(chunk.player.d_lb) / window : 0.0;
  if (chunk.perf_score < 1.0 && throughput_share > options.throughput_share_threshold) {
    matches.push_back({LabelKind::throughput_limited,
                       {{"throughput_share", throughput_share},
                        {"perf_score", chunk.perf_score}}});
  }

  const double rtt0_ms = us_to_ms(chunk.rtt0_ub);
  if (!chunk.inconsistent_timing && rtt0_ms > options.baseline_threshold_ms) {
    matches.push_back({LabelKind::network_baseline_latency, {{"rtt0_ub_ms", rtt0_ms}}});
  }

  if (auto bound = estimate_persistent_ds(chunk); bound && *bound > 0) {
    matches.push_back(
        {LabelKind::persistent_download_stack, {{"ds_lower_bound_ms", us_to_ms(*bound)}}});
  }

  const double tau_s = chunk.perf_score * us_to_sec(chunk.player.d_fb + chunk.player.d_lb);
  const double dropped = drop_fraction(chunk.player, tau_s);
  if (chunk.player.vis && dropped > options.rendering_drop_threshold) {
    matches.push_back({LabelKind::rendering_drop, {{"drop_fraction", dropped}}});
  }

  if (matches.empty()) {
    label.label = LabelKind::none;
    return label;
  }
  label.label = matches.front().kind;
  label.evidence = std::move(matches.front().evidence);
  for (std::size_t i = 1; i < matches.size(); ++i) label.secondary.push_back(matches[i].kind);
  return label;
}

SessionSummary session_summary(const JoinedSession &session,
                               const std::vector<DiagnosisLabel> &labels) {
  SessionSummary s;
  s.session_id = session.meta.session_id;
  s.org_label = session.meta.org_label;
  s.client_ip = session.meta.client_ip;
  s.user_agent = session.meta.user_agent;
  s.day = session.meta.day;
  s.n_chunks = static_cast<int>(session.chunks.size());

  const double tau_s = session.meta.chunk_duration_s;
  micros_t buf_total = 0;
  double bitrate_sum = 0;
  double drop_sum = 0;
  double frames_sum = 0;
  std::int64_t segments = 0;
  std::int64_t retx_last = 0;
  std::vector<double> srtt_samples;

  // Startup-delay proxy from logs: first chunk's d_fb + d_lb.
  if (!session.chunks.empty()) {
    const JoinedChunk *first = &session.chunks.front();
    for (const auto &chunk : session.chunks) {
      if (chunk.chunk_id() < first->chunk_id()) first = &chunk;
    }
    s.startup_delay = first->player.d_fb + first->player.d_lb;
  }

  for (const auto &chunk : session.chunks) {
    buf_total += chunk.player.buf_dur;
    bitrate_sum += chunk.player.bitrate_kbps;
    drop_sum += chunk.player.drop_fr;
    frames_sum += total_frames(chunk.player, tau_s);
    const std::int64_t mss = chunk.snapshots.empty() ? 1460 : chunk.snapshots.front().mss;
    segments += (chunk.cdn.chunk_size + mss - 1) / mss;
    for (const auto &snap : chunk.snapshots) {
      srtt_samples.push_back(static_cast<double>(snap.srtt));
      retx_last = std::max(retx_last, snap.retx);
    }
  }

  const double played_s = static_cast<double>(session.chunks.size()) * tau_s;
  const double buf_s = us_to_sec(buf_total);
  s.rebuffer_ratio = (buf_s + played_s) > 0 ? buf_s / (buf_s + played_s) : 0.0;
  s.avg_bitrate_kbps =
      session.chunks.empty() ? 0.0 : bitrate_sum / static_cast<double>(session.chunks.size());
  s.dropped_fraction = frames_sum > 0 ? drop_sum / frames_sum : 0.0;

  const MetricStat srtt_stat = stat_of(srtt_samples);
  s.cv_srtt = srtt_stat.mean > 0 ? srtt_stat.sigma / srtt_stat.mean : 0.0;
  s.retx_rate = segments > 0 ? static_cast<double>(retx_last) / static_cast<double>(segments) : 0.0;
  s.baseline_rtt = baseline_rtt_us(session.chunks);

  for (const auto &label : labels) {
    s.label_histogram[to_string(label.label)] += 1;
  }
  return s;
}

SessionDiagnosis diagnose_session(const JoinedSession &session, const DiagnosisOptions &options) {
  SessionDiagnosis result;
  const SessionStats stats = compute_session_stats(session.chunks);
  const std::vector<DsOutlierFlag> flags = detect_ds_outliers(session.chunks, options);

  std::map<std::size_t, const DsOutlierFlag *> flagged;
  for (const auto &flag : flags) flagged[flag.chunk_index] = &flag;

  static const std::map<std::string, double> kNoEvidence;
  for (std::size_t i = 0; i < session.chunks.size(); ++i) {
    auto it = flagged.find(i);
    result.labels.push_back(classify_chunk(session.chunks[i], stats, it != flagged.end(),
                                           it != flagged.end() ? it->second->evidence
                                                               : kNoEvidence,
                                           options));
  }
  result.summary = session_summary(session, result.labels);
  return result;
}

std::string to_jsonl(const SessionSummary &s) {
  nlohmann::json hist = nlohmann::json::object();
  for (const auto &[k, v] : s.label_histogram) hist[k] = v;
  nlohmann::json j{{"session_id", s.session_id},
                   {"org_label", s.org_label},
                   {"client_ip", s.client_ip},
                   {"user_agent", s.user_agent},
                   {"day", s.day},
                   {"n_chunks", s.n_chunks},
                   {"startup_delay", us_to_ms(s.startup_delay)},
                   {"rebuffer_ratio", s.rebuffer_ratio},
                   {"avg_bitrate", s.avg_bitrate_kbps},
                   {"dropped_fraction", s.dropped_fraction},
                   {"cv_srtt", s.cv_srtt},
                   {"retx_rate", s.retx_rate},
                   {"label_histogram", hist}};
  if (s.baseline_rtt) {
    j["baseline_rtt"] = us_to_ms(*s.baseline_rtt);
  } else {
    j["baseline_rtt"] = nullptr;
  }
  return j.dump();
}

std::optional<SessionSummary> summary_from_jsonl(const std::string &line) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  SessionSummary s;
  try {
    s.session_id = j.at("session_id").get<std::string>();
    s.org_label = j.at("org_label").get<std::string>();
    s.client_ip = j.at("client_ip").get<std::string>();
    s.user_agent = j.at("user_agent").get<std::string>();
    s.day = j.at("day").get<int>();
    s.n_chunks = j.at("n_chunks").get<int>();
    s.startup_delay = ms_to_us(j.at("startup_delay").get<double>());
    s.rebuffer_ratio = j.at("rebuffer_ratio").get<double>();
    s.avg_bitrate_kbps = j.at("avg_bitrate").get<double>();
    s.dropped_fraction = j.at("dropped_fraction").get<double>();
    s.cv_srtt = j.at("cv_srtt").get<double>();
    s.retx_rate = j.at("retx_rate").get<double>();
    if (!j.at("baseline_rtt").is_null()) {
      s.baseline_rtt = ms_to_us(j.at("baseline_rtt").get<double>());
    }
    for (const auto &[k, v] : j.at("label_histogram").items()) {
      s.label_histogram[k] = v.get<std::int64_t>();
    }
  } catch (...) {
    return std::nullopt;
  }
  return s;
}

Scorecard score_against_truth(const std::vector<std::vector<DiagnosisLabel>> &labels_by_session,
                              const std::vector<GroundTruth> &truth) {
  Scorecard card;
  // (session, chunk) -> set of detected kinds (primary + secondary).
  std::map<std::pair<std::string, int>, std::set<LabelKind>> detected;
  for (const auto &session_labels : labels_by_session) {
    for (const auto &label : session_labels) {
      if (label.label != LabelKind::none) {
        auto &kinds = detected[{label.session_id, label.chunk_id}];
        kinds.insert(label.label);
        for (LabelKind kind : label.secondary) kinds.insert(kind);
      }
    }
  }

  for (const auto &[key, kinds] : detected) {
    for (LabelKind kind : kinds) card.by_kind[to_string(kind)].detected_count += 1;
  }
  for (const auto &t : truth) {
    KindScore &score = card.by_kind[to_string(t.injected)];
    score.truth_count += 1;
    auto it = detected.find({t.session_id, t.chunk_id});
    if (it != detected.end() && it->second.count(t.injected)) score.true_positives += 1;
  }
  for (auto &[kind, score] : card.by_kind) {
    // Both are n/a (not zero) when undefined: no detections, or no injected
    // truth of this kind to score against.
    if (score.detected_count > 0 && score.truth_count > 0) {
      score.precision =
          static_cast<double>(score.true_positives) / static_cast<double>(score.detected_count);
    }
    if (score.truth_count > 0) {
      score.recall =
          static_cast<double>(score.true_positives) / static_cast<double>(score.truth_count);
    }
  }
  return card;
}

std::string Scorecard::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto &[kind, score] : by_kind) {
    nlohmann::json entry{{"truth_count", score.truth_count},
                         {"detected_count", score.detected_count},
                         {"true_positives", score.true_positives}};
    entry["precision"] = score.precision ? nlohmann::json(*score.precision) : nlohmann::json();
    entry["recall"] = score.recall ? nlohmann::json(*score.recall) : nlohmann::json();
    j[kind] = entry;
  }
  return j.dump(2);
}

std::variant<DiagnoseCounters, DiagnoseError>
run_diagnose(const std::string &in_dir, const std::string &labels_path,
             const std::string &summary_path, const std::string &truth_path,
             const std::string &scorecard_path, const DiagnosisOptions &options, int jobs) {
  auto loaded =
      load_joined_sessions(in_dir + "/joined.jsonl", in_dir + "/sessions_kept.jsonl");
  if (std::holds_alternative<IngestError>(loaded)) {
    return DiagnoseError{std::get<IngestError>(loaded).message};
  }
  const auto &sessions = std::get<std::vector<JoinedSession>>(loaded);

  std::vector<SessionDiagnosis> results(sessions.size());
  const int workers = std::max(1, jobs);
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= sessions.size()) break;
        results[i] = diagnose_session(sessions[i], options);
      }
    });
  }
  for (auto &t : pool) t.join();

  DiagnoseCounters counters;
  counters.sessions = static_cast<std::int64_t>(sessions.size());

  std::ofstream labels_out(labels_path);
  if (!labels_out.is_open()) return DiagnoseError{"cannot write " + labels_path};
  std::ofstream summary_out(summary_path);
  if (!summary_out.is_open()) return DiagnoseError{"cannot write " + summary_path};
  for (const auto &result : results) {
    for (const auto &label : result.labels) {
      labels_out << to_jsonl(label) << "\n";
      ++counters.labels_emitted;
    }
    counters.chunks += static_cast<std::int64_t>(result.labels.size());
    summary_out << to_jsonl(result.summary) << "\n";
  }

  if (!truth_path.empty()) {
    std::ifstream truth_in(truth_path);
    if (!truth_in.is_open()) return DiagnoseError{"cannot open " + truth_path};
    std::vector<GroundTruth> truth;
    std::string line;
    while (std::getline(truth_in, line)) {
      if (line.empty()) continue;
      auto t = truth_from_jsonl(line);
      if (t) truth.push_back(std::move(*t));
    }
    std::vector<std::vector<DiagnosisLabel>> labels_by_session;
    labels_by_session.reserve(results.size());
    for (auto &result : results) labels_by_session.push_back(std::move(result.labels));
    const Scorecard card = score_against_truth(labels_by_session, truth);
    std::ofstream card_out(scorecard_path);
    if (!card_out.is_open()) return DiagnoseError{"cannot write " + scorecard_path};
    card_out << card.to_json() << "\n";
  }
  return counters;
}

} // namespace chunkscope
