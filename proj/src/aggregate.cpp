#include "chunkscope/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include <json.hpp>

#include "chunkscope/net.hpp"

namespace chunkscope {

namespace {

int rank_bucket(int rank) {
  int bucket = 0;
  while ((2 << bucket) <= rank) ++bucket; // bucket b covers [2^b, 2^(b+1))
  return bucket;
}

constexpr double kRateBucketWidth = 0.25;
constexpr int kRateBucketMax = 12; // rates >= 3.0 pool in the last bucket

int rate_bucket(double rate) {
  const int b = static_cast<int>(rate / kRateBucketWidth);
  return std::clamp(b, 0, kRateBucketMax);
}

struct PopularityAgg {
  std::int64_t chunks = 0;
  std::int64_t misses = 0;
  std::int64_t hit_latency_sum_us = 0;
  std::int64_t hits = 0;
};

struct RebufAgg {
  std::int64_t chunks = 0;
  std::int64_t rebuf = 0;
  std::int64_t loss = 0;
  std::int64_t rebuf_and_loss = 0;
  std::int64_t session_rebuf_and_loss = 0;
  std::int64_t retx_sum = 0;
  std::int64_t segment_sum = 0;
};

struct DropAgg {
  std::int64_t chunks = 0;
  std::int64_t dropped = 0;
  std::int64_t total = 0;
};

// Everything a shard of sessions contributes. All fields merge associatively
// (integer sums, minima, set union, in-order vector concatenation), which is
// what makes --jobs N byte-identical to --jobs 1.
struct Partial {
  std::map<std::pair<std::uint32_t, int>, micros_t> prefix_day_min_baseline;
  std::set<int> days_seen;
  std::map<std::string, std::pair<std::int64_t, std::int64_t>> org_sessions; // total, cv>1
  std::map<int, PopularityAgg> popularity;
  std::map<int, RebufAgg> rebuf;
  std::map<std::pair<std::string, int>, DropAgg> drop_by_rate;
  std::vector<double> latency_share_good;
  std::vector<double> latency_share_bad;
  std::vector<micros_t> first_chunk_dfb;
  std::vector<micros_t> other_chunk_dfb;
  std::vector<micros_t> d_wait, d_open, d_read, server_hit, server_miss;
  std::vector<double> session_miss_ratio;
  std::int64_t sessions_with_miss = 0;
  std::int64_t rendering_confirm = 0;
  std::int64_t rendering_low_rate_good = 0;
  std::int64_t rendering_high_rate_bad = 0;
  std::int64_t total_chunks = 0;
  std::int64_t total_sessions = 0;

  void merge(Partial &&other) {
    for (auto &[key, value] : other.prefix_day_min_baseline) {
      auto [it, inserted] = prefix_day_min_baseline.try_emplace(key, value);
      if (!inserted) it->second = std::min(it->second, value);
    }
    days_seen.insert(other.days_seen.begin(), other.days_seen.end());
    for (auto &[org, counts] : other.org_sessions) {
      auto &mine = org_sessions[org];
      mine.first += counts.first;
      mine.second += counts.second;
    }
    for (auto &[bucket, agg] : other.popularity) {
      auto &mine = popularity[bucket];
      mine.chunks += agg.chunks;
      mine.misses += agg.misses;
      mine.hit_latency_sum_us += agg.hit_latency_sum_us;
      mine.hits += agg.hits;
    }
    for (auto &[pos, agg] : other.rebuf) {
      auto &mine = rebuf[pos];
      mine.chunks += agg.chunks;
      mine.rebuf += agg.rebuf;
      mine.loss += agg.loss;
      mine.rebuf_and_loss += agg.rebuf_and_loss;
      mine.session_rebuf_and_loss += agg.session_rebuf_and_loss;
      mine.retx_sum += agg.retx_sum;
      mine.segment_sum += agg.segment_sum;
    }
    for (auto &[key, agg] : other.drop_by_rate) {
      auto &mine = drop_by_rate[key];
      mine.chunks += agg.chunks;
      mine.dropped += agg.dropped;
      mine.total += agg.total;
    }
    auto append = [](auto &dst, auto &src) {
      dst.insert(dst.end(), src.begin(), src.end());
    };
    append(latency_share_good, other.latency_share_good);
    append(latency_share_bad, other.latency_share_bad);
    append(first_chunk_dfb, other.first_chunk_dfb);
    append(other_chunk_dfb, other.other_chunk_dfb);
    append(d_wait, other.d_wait);
    append(d_open, other.d_open);
    append(d_read, other.d_read);
    append(server_hit, other.server_hit);
    append(server_miss, other.server_miss);
    append(session_miss_ratio, other.session_miss_ratio);
    sessions_with_miss += other.sessions_with_miss;
    rendering_confirm += other.rendering_confirm;
    rendering_low_rate_good += other.rendering_low_rate_good;
    rendering_high_rate_bad += other.rendering_high_rate_bad;
    total_chunks += other.total_chunks;
    total_sessions += other.total_sessions;
  }
};

void map_session(const JoinedSession &session, const SessionSummary *summary,
                 const AggregateOptions &options, Partial &out) {
  out.total_sessions += 1;
  const double tau_s = session.meta.chunk_duration_s;
  const micros_t tau_us = sec_to_us(tau_s);

  if (summary) {
    auto &org = out.org_sessions[summary->org_label];
    org.first += 1;
    if (summary->cv_srtt > 1.0) org.second += 1;
    out.days_seen.insert(summary->day);
    if (summary->baseline_rtt) {
      if (auto ip = parse_ipv4(summary->client_ip)) {
        const auto key = std::make_pair(prefix24(*ip), summary->day);
        auto [it, inserted] = out.prefix_day_min_baseline.try_emplace(key, *summary->baseline_rtt);
        if (!inserted) it->second = std::min(it->second, *summary->baseline_rtt);
      }
    }
  }

  bool session_has_rebuf = false;
  std::int64_t session_misses = 0;
  for (const auto &chunk : session.chunks) {
    if (chunk.player.buf_count > 0) session_has_rebuf = true;
    if (chunk.cdn.cache_status == CacheStatus::miss) ++session_misses;
  }
  if (session_misses > 0) {
    out.sessions_with_miss += 1;
    out.session_miss_ratio.push_back(static_cast<double>(session_misses) /
                                     static_cast<double>(session.chunks.size()));
  }

  for (const auto &chunk : session.chunks) {
    out.total_chunks += 1;

    // Popularity buckets.
    const int rank = std::max(1, session.meta.video_rank);
    auto &pop = out.popularity[rank_bucket(rank)];
    pop.chunks += 1;
    if (chunk.cdn.cache_status == CacheStatus::miss) {
      ++pop.misses;
    } else {
      ++pop.hits;
      pop.hit_latency_sum_us += chunk.server_latency;
    }

    // Loss-position and rebuffering frequencies.
    const std::int64_t retx_delta = chunk_retx_delta(chunk);
    const std::int64_t mss = chunk.snapshots.empty() ? 1460 : chunk.snapshots.front().mss;
    auto &pos = out.rebuf[chunk.chunk_id()];
    pos.chunks += 1;
    if (chunk.player.buf_count > 0) ++pos.rebuf;
    if (retx_delta > 0) {
      ++pos.loss;
      if (chunk.player.buf_count > 0) ++pos.rebuf_and_loss;
      if (session_has_rebuf) ++pos.session_rebuf_and_loss;
    }
    pos.retx_sum += retx_delta;
    pos.segment_sum += (chunk.cdn.chunk_size + mss - 1) / mss;

    // Latency/throughput shares split by the performance score.
    const double window = static_cast<double>(chunk.player.d_fb + chunk.player.d_lb);
    if (window > 0) {
      const double latency_share = static_cast<double>(chunk.player.d_fb) / window;
      if (chunk.perf_score < 1.0) {
        out.latency_share_bad.push_back(latency_share);
      } else {
        out.latency_share_good.push_back(latency_share);
      }
    }

    // First-chunk comparison over the performance-equivalent set.
    if (!chunk.snapshots.empty()) {
      const double srtt_ms = us_to_ms(chunk.snapshots.front().srtt);
      const bool equivalent =
          retx_delta == 0 && chunk.snapshots.back().cwnd > options.iw_segments &&
          srtt_ms > options.first_chunk_srtt_lo_ms && srtt_ms < options.first_chunk_srtt_hi_ms &&
          us_to_ms(chunk.cdn.d_cdn()) < options.first_chunk_dcdn_max_ms &&
          chunk.cdn.cache_status != CacheStatus::miss;
      if (equivalent) {
        (chunk.chunk_id() == 1 ? out.first_chunk_dfb : out.other_chunk_dfb)
            .push_back(chunk.player.d_fb);
      }
    }

    // Rendering hypothesis partition and the drop-vs-rate curve (visible only).
    if (chunk.player.vis && chunk.player.d_fb + chunk.player.d_lb > 0) {
      const double rate = static_cast<double>(tau_us) /
                          static_cast<double>(chunk.player.d_fb + chunk.player.d_lb);
      const std::int64_t rendered = std::llround(chunk.player.avg_fr * tau_s);
      const std::int64_t total = chunk.player.drop_fr + rendered;
      const double dropped =
          total > 0 ? static_cast<double>(chunk.player.drop_fr) / static_cast<double>(total) : 0.0;

      const bool low_rate = rate < options.rendering_rate_threshold;
      const bool bad_frames = dropped > options.rendering_drop_threshold;
      if (low_rate == bad_frames) {
        out.rendering_confirm += 1;
      } else if (low_rate) {
        out.rendering_low_rate_good += 1;
      } else {
        out.rendering_high_rate_bad += 1;
      }

      auto bump = [&](const std::string &ua) {
        auto &agg = out.drop_by_rate[{ua, rate_bucket(rate)}];
        agg.chunks += 1;
        agg.dropped += chunk.player.drop_fr;
        agg.total += total;
      };
      bump("all");
      bump(session.meta.user_agent);
    }

    // CDN latency breakdown series.
    out.d_wait.push_back(chunk.cdn.d_wait);
    out.d_open.push_back(chunk.cdn.d_open);
    out.d_read.push_back(chunk.cdn.d_read);
    (chunk.cdn.cache_status == CacheStatus::miss ? out.server_miss : out.server_hit)
        .push_back(chunk.server_latency);
  }
}

double median_sorted(const std::vector<double> &sorted) {
  if (sorted.empty()) return 0.0;
  const std::size_t n = sorted.size();
  return n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

double median_us_ms(std::vector<micros_t> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  const double mid = n % 2 == 1 ? static_cast<double>(values[n / 2])
                                : 0.5 * (static_cast<double>(values[n / 2 - 1]) +
                                         static_cast<double>(values[n / 2]));
  return mid / 1000.0;
}

std::string fmt(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", value);
  return buf;
}

// Sorted-value CDF, decimated to at most max_points rows.
void write_cdf_rows(std::ofstream &out, const std::string &series, std::vector<micros_t> values,
                    std::size_t max_points) {
  if (values.empty()) return;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  const std::size_t m = std::min(max_points, n);
  std::size_t last_idx = n; // sentinel
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t idx = m == 1 ? n - 1 : j * (n - 1) / (m - 1);
    if (idx == last_idx) continue;
    last_idx = idx;
    out << series << "," << fmt(us_to_ms(values[idx])) << ","
        << fmt(static_cast<double>(idx + 1) / static_cast<double>(n)) << "\n";
  }
}

void write_share_cdf_rows(std::ofstream &out, const std::string &series,
                          std::vector<double> values, std::size_t max_points) {
  if (values.empty()) return;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  const std::size_t m = std::min(max_points, n);
  std::size_t last_idx = n;
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t idx = m == 1 ? n - 1 : j * (n - 1) / (m - 1);
    if (idx == last_idx) continue;
    last_idx = idx;
    out << series << "," << fmt(values[idx]) << ","
        << fmt(static_cast<double>(idx + 1) / static_cast<double>(n)) << "\n";
  }
}

} // namespace

AnalysisResult analyze(const std::vector<JoinedSession> &sessions,
                       const std::vector<SessionSummary> &summaries,
                       const AggregateOptions &options, int jobs) {
  std::map<std::string, const SessionSummary *> summary_by_id;
  for (const auto &s : summaries) summary_by_id[s.session_id] = &s;

  const int workers = std::max(1, jobs);
  const std::size_t n = sessions.size();
  const std::size_t shard_size = workers > 0 ? (n + workers - 1) / std::max(1, workers) : n;
  std::vector<Partial> partials(static_cast<std::size_t>(workers));
  {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        const std::size_t lo = static_cast<std::size_t>(w) * shard_size;
        const std::size_t hi = std::min(n, lo + shard_size);
        for (std::size_t i = lo; i < hi; ++i) {
          auto it = summary_by_id.find(sessions[i].meta.session_id);
          map_session(sessions[i], it != summary_by_id.end() ? it->second : nullptr, options,
                      partials[static_cast<std::size_t>(w)]);
        }
      });
    }
    for (auto &t : pool) t.join();
  }

  Partial all;
  for (auto &p : partials) all.merge(std::move(p));

  AnalysisResult result;
  result.total_chunks = all.total_chunks;
  result.total_sessions = all.total_sessions;

  // Prefix persistence over the dataset's day span.
  const int total_days = static_cast<int>(all.days_seen.size());
  std::map<std::uint32_t, int> tail_days;
  std::set<std::uint32_t> prefixes;
  for (const auto &[key, baseline] : all.prefix_day_min_baseline) {
    prefixes.insert(key.first);
    if (us_to_ms(baseline) > options.tail_threshold_ms) tail_days[key.first] += 1;
  }
  for (std::uint32_t prefix : prefixes) {
    PrefixPersistence row;
    row.prefix = format_prefix24(prefix);
    row.days_in_tail = tail_days.count(prefix) ? tail_days[prefix] : 0;
    row.total_days = total_days;
    row.recurrence = total_days > 0 ? static_cast<double>(row.days_in_tail) / total_days : 0.0;
    result.prefix_persistence.push_back(row);
  }
  std::sort(result.prefix_persistence.begin(), result.prefix_persistence.end(),
            [](const PrefixPersistence &a, const PrefixPersistence &b) {
              if (a.recurrence != b.recurrence) return a.recurrence > b.recurrence;
              return a.prefix < b.prefix;
            });
  const std::size_t persistent_count = static_cast<std::size_t>(
      std::ceil(static_cast<double>(result.prefix_persistence.size()) * 0.10));
  for (std::size_t i = 0; i < result.prefix_persistence.size(); ++i) {
    result.prefix_persistence[i].persistent =
        i < persistent_count && result.prefix_persistence[i].days_in_tail > 0;
  }

  // Organization CV ranking.
  for (const auto &[org, counts] : all.org_sessions) {
    if (counts.first < options.org_min_sessions) continue;
    OrgCvRow row;
    row.org_label = org;
    row.sessions = counts.first;
    row.high_cv_sessions = counts.second;
    row.fraction = static_cast<double>(counts.second) / static_cast<double>(counts.first);
    result.org_cv.push_back(row);
  }
  std::sort(result.org_cv.begin(), result.org_cv.end(), [](const OrgCvRow &a, const OrgCvRow &b) {
    if (a.fraction != b.fraction) return a.fraction > b.fraction;
    return a.org_label < b.org_label;
  });

  // Popularity buckets.
  for (const auto &[bucket, agg] : all.popularity) {
    RankBucketRow row;
    row.bucket = bucket;
    row.rank_lo = 1LL << bucket;
    row.rank_hi = (2LL << bucket) - 1;
    row.chunks = agg.chunks;
    row.misses = agg.misses;
    row.miss_rate = agg.chunks > 0
                        ? static_cast<double>(agg.misses) / static_cast<double>(agg.chunks)
                        : 0.0;
    if (agg.hits > 0) {
      row.mean_hit_server_latency_ms =
          static_cast<double>(agg.hit_latency_sum_us) / static_cast<double>(agg.hits) / 1000.0;
    }
    result.popularity.push_back(row);
  }

  if (!all.session_miss_ratio.empty()) {
    double sum = 0;
    for (double r : all.session_miss_ratio) sum += r;
    result.mean_session_miss_ratio = sum / static_cast<double>(all.session_miss_ratio.size());
  }
  result.sessions_with_miss = all.sessions_with_miss;

  // Rebuffering and loss by chunk position.
  for (const auto &[position, agg] : all.rebuf) {
    RebufLossRow row;
    row.chunk_id = position;
    row.chunks = agg.chunks;
    row.rebuf = agg.rebuf;
    row.loss = agg.loss;
    row.rebuf_and_loss = agg.rebuf_and_loss;
    row.session_rebuf_and_loss = agg.session_rebuf_and_loss;
    row.retx_sum = agg.retx_sum;
    row.segment_sum = agg.segment_sum;
    row.p_rebuf =
        agg.chunks > 0 ? static_cast<double>(agg.rebuf) / static_cast<double>(agg.chunks) : 0.0;
    row.p_rebuf_given_loss =
        agg.loss > 0 ? static_cast<double>(agg.rebuf_and_loss) / static_cast<double>(agg.loss)
                     : 0.0;
    row.p_session_rebuf_given_loss =
        agg.loss > 0
            ? static_cast<double>(agg.session_rebuf_and_loss) / static_cast<double>(agg.loss)
            : 0.0;
    row.mean_retx_rate = agg.segment_sum > 0 ? static_cast<double>(agg.retx_sum) /
                                                   static_cast<double>(agg.segment_sum)
                                             : 0.0;
    result.rebuf_loss.push_back(row);
  }

  // Shares.
  std::sort(all.latency_share_good.begin(), all.latency_share_good.end());
  std::sort(all.latency_share_bad.begin(), all.latency_share_bad.end());
  result.shares_good.chunks = static_cast<std::int64_t>(all.latency_share_good.size());
  result.shares_good.median_latency_share = median_sorted(all.latency_share_good);
  result.shares_good.median_throughput_share = 1.0 - result.shares_good.median_latency_share;
  result.shares_bad.chunks = static_cast<std::int64_t>(all.latency_share_bad.size());
  result.shares_bad.median_latency_share = median_sorted(all.latency_share_bad);
  result.shares_bad.median_throughput_share = 1.0 - result.shares_bad.median_latency_share;

  // First-chunk comparison.
  result.first_chunk.first_count = static_cast<std::int64_t>(all.first_chunk_dfb.size());
  result.first_chunk.other_count = static_cast<std::int64_t>(all.other_chunk_dfb.size());
  result.first_chunk.insufficient =
      result.first_chunk.first_count < options.first_chunk_min_per_arm ||
      result.first_chunk.other_count < options.first_chunk_min_per_arm;
  result.first_chunk.median_first_ms = median_us_ms(all.first_chunk_dfb);
  result.first_chunk.median_other_ms = median_us_ms(all.other_chunk_dfb);
  result.first_chunk.median_difference_ms =
      result.first_chunk.median_first_ms - result.first_chunk.median_other_ms;

  // Rendering partition.
  result.rendering.confirm = all.rendering_confirm;
  result.rendering.low_rate_good = all.rendering_low_rate_good;
  result.rendering.high_rate_bad = all.rendering_high_rate_bad;
  const std::int64_t rendering_total =
      all.rendering_confirm + all.rendering_low_rate_good + all.rendering_high_rate_bad;
  result.rendering.confirm_fraction =
      rendering_total > 0
          ? static_cast<double>(all.rendering_confirm) / static_cast<double>(rendering_total)
          : 0.0;

  for (const auto &[key, agg] : all.drop_by_rate) {
    DropRateBucket row;
    row.user_agent = key.first;
    row.bucket = key.second;
    row.chunks = agg.chunks;
    row.dropped_frames = agg.dropped;
    row.total_frames = agg.total;
    row.drop_fraction =
        agg.total > 0 ? static_cast<double>(agg.dropped) / static_cast<double>(agg.total) : 0.0;
    result.drop_by_rate.push_back(row);
  }

  return result;
}

std::variant<AnalysisResult, AnalyzeError>
write_analysis(const std::vector<JoinedSession> &sessions,
               const std::vector<SessionSummary> &summaries, const std::string &reports_dir,
               const AggregateOptions &options, int jobs) {
  AnalysisResult result = analyze(sessions, summaries, options, jobs);

  std::error_code ec;
  std::filesystem::create_directories(reports_dir, ec);
  if (ec) return AnalyzeError{"cannot create " + reports_dir};

  auto open = [&](const std::string &name, std::ofstream &out) {
    out.open(reports_dir + "/" + name);
    return out.is_open();
  };

  {
    std::ofstream out;
    if (!open("prefix_persistence.csv", out)) return AnalyzeError{"cannot write prefix csv"};
    out << "prefix,days_in_tail,total_days,recurrence,persistent\n";
    for (const auto &row : result.prefix_persistence) {
      out << row.prefix << "," << row.days_in_tail << "," << row.total_days << ","
          << fmt(row.recurrence) << "," << (row.persistent ? 1 : 0) << "\n";
    }
  }
  {
    std::ofstream out;
    if (!open("org_cv.csv", out)) return AnalyzeError{"cannot write org csv"};
    out << "org_label,sessions,high_cv_sessions,fraction\n";
    for (const auto &row : result.org_cv) {
      out << row.org_label << "," << row.sessions << "," << row.high_cv_sessions << ","
          << fmt(row.fraction) << "\n";
    }
  }
  {
    std::ofstream out;
    if (!open("popularity.csv", out)) return AnalyzeError{"cannot write popularity csv"};
    out << "bucket,rank_lo,rank_hi,chunks,misses,miss_rate,mean_hit_server_latency_ms\n";
    for (const auto &row : result.popularity) {
      out << row.bucket << "," << row.rank_lo << "," << row.rank_hi << "," << row.chunks << ","
          << row.misses << "," << fmt(row.miss_rate) << ",";
      if (row.mean_hit_server_latency_ms) out << fmt(*row.mean_hit_server_latency_ms);
      out << "\n";
    }
  }
  {
    std::ofstream out;
    if (!open("rebuf_loss.csv", out)) return AnalyzeError{"cannot write rebuf csv"};
    out << "chunk_id,chunks,rebuf,loss,rebuf_and_loss,session_rebuf_and_loss,p_rebuf,"
           "p_rebuf_given_loss,p_session_rebuf_given_loss,mean_retx_rate\n";
    for (const auto &row : result.rebuf_loss) {
      out << row.chunk_id << "," << row.chunks << "," << row.rebuf << "," << row.loss << ","
          << row.rebuf_and_loss << "," << row.session_rebuf_and_loss << "," << fmt(row.p_rebuf)
          << "," << fmt(row.p_rebuf_given_loss) << "," << fmt(row.p_session_rebuf_given_loss)
          << "," << fmt(row.mean_retx_rate) << "\n";
    }
  }
  {
    std::ofstream out;
    if (!open("shares.csv", out)) return AnalyzeError{"cannot write shares csv"};
    out << "split,chunks,median_latency_share,median_throughput_share\n";
    out << "good," << result.shares_good.chunks << ","
        << fmt(result.shares_good.median_latency_share) << ","
        << fmt(result.shares_good.median_throughput_share) << "\n";
    out << "bad," << result.shares_bad.chunks << "," << fmt(result.shares_bad.median_latency_share)
        << "," << fmt(result.shares_bad.median_throughput_share) << "\n";
  }
  {
    std::ofstream out;
    if (!open("rendering.csv", out)) return AnalyzeError{"cannot write rendering csv"};
    out << "category,chunks\n";
    out << "confirm," << result.rendering.confirm << "\n";
    out << "low_rate_good," << result.rendering.low_rate_good << "\n";
    out << "high_rate_bad," << result.rendering.high_rate_bad << "\n";
  }
  {
    std::ofstream out;
    if (!open("drop_by_rate.csv", out)) return AnalyzeError{"cannot write drop csv"};
    out << "user_agent,bucket,rate_lo,rate_hi,chunks,dropped_frames,total_frames,drop_fraction\n";
    for (const auto &row : result.drop_by_rate) {
      out << row.user_agent << "," << row.bucket << "," << fmt(row.bucket * kRateBucketWidth)
          << "," << fmt((row.bucket + 1) * kRateBucketWidth) << "," << row.chunks << ","
          << row.dropped_frames << "," << row.total_frames << "," << fmt(row.drop_fraction)
          << "\n";
    }
  }

  // CDF-shaped outputs need the raw per-chunk vectors; a single-threaded
  // re-scan keeps them out of the merged partial and stays deterministic.
  {
    std::map<std::string, const SessionSummary *> summary_by_id;
    for (const auto &s : summaries) summary_by_id[s.session_id] = &s;
    Partial all;
    for (const auto &session : sessions) {
      auto it = summary_by_id.find(session.meta.session_id);
      map_session(session, it != summary_by_id.end() ? it->second : nullptr, options, all);
    }

    std::ofstream out;
    if (!open("cdn_breakdown.csv", out)) return AnalyzeError{"cannot write breakdown csv"};
    out << "series,value_ms,cdf\n";
    write_cdf_rows(out, "d_wait", std::move(all.d_wait), options.cdf_max_points);
    write_cdf_rows(out, "d_open", std::move(all.d_open), options.cdf_max_points);
    write_cdf_rows(out, "d_read", std::move(all.d_read), options.cdf_max_points);
    write_cdf_rows(out, "server_latency_hit", std::move(all.server_hit), options.cdf_max_points);
    write_cdf_rows(out, "server_latency_miss", std::move(all.server_miss), options.cdf_max_points);

    std::ofstream first_out;
    if (!open("first_chunk_cdf.csv", first_out)) return AnalyzeError{"cannot write first csv"};
    first_out << "arm,d_fb_ms,cdf\n";
    write_cdf_rows(first_out, "first", std::move(all.first_chunk_dfb), options.cdf_max_points);
    write_cdf_rows(first_out, "other", std::move(all.other_chunk_dfb), options.cdf_max_points);

    std::ofstream shares_out;
    if (!open("shares_cdf.csv", shares_out)) return AnalyzeError{"cannot write shares cdf"};
    shares_out << "split,latency_share,cdf\n";
    write_share_cdf_rows(shares_out, "good", std::move(all.latency_share_good),
                         options.cdf_max_points);
    write_share_cdf_rows(shares_out, "bad", std::move(all.latency_share_bad),
                         options.cdf_max_points);
  }

  {
    nlohmann::json j;
    j["total_sessions"] = result.total_sessions;
    j["total_chunks"] = result.total_chunks;
    j["sessions_with_miss"] = result.sessions_with_miss;
    j["mean_session_miss_ratio"] = result.mean_session_miss_ratio;
    j["rendering"] = {{"confirm", result.rendering.confirm},
                      {"low_rate_good", result.rendering.low_rate_good},
                      {"high_rate_bad", result.rendering.high_rate_bad},
                      {"confirm_fraction", result.rendering.confirm_fraction}};
    j["shares"] = {{"good_chunks", result.shares_good.chunks},
                   {"good_median_latency_share", result.shares_good.median_latency_share},
                   {"bad_chunks", result.shares_bad.chunks},
                   {"bad_median_latency_share", result.shares_bad.median_latency_share},
                   {"bad_median_throughput_share", result.shares_bad.median_throughput_share},
                   {"good_median_throughput_share", result.shares_good.median_throughput_share}};
    j["first_chunk"] = {{"first_count", result.first_chunk.first_count},
                        {"other_count", result.first_chunk.other_count},
                        {"insufficient", result.first_chunk.insufficient},
                        {"median_first_ms", result.first_chunk.median_first_ms},
                        {"median_other_ms", result.first_chunk.median_other_ms},
                        {"median_difference_ms", result.first_chunk.median_difference_ms}};
    std::ofstream out;
    if (!open("analysis_summary.json", out)) return AnalyzeError{"cannot write summary json"};
    out << j.dump(2) << "\n";
  }

  return result;
}

std::variant<AnalysisResult, AnalyzeError> run_analyze(const std::string &in_dir,
                                                       const std::string &reports_dir,
                                                       const AggregateOptions &options, int jobs) {
  auto loaded = load_joined_sessions(in_dir + "/joined.jsonl", in_dir + "/sessions_kept.jsonl");
  if (std::holds_alternative<IngestError>(loaded)) {
    return AnalyzeError{std::get<IngestError>(loaded).message};
  }
  const auto &sessions = std::get<std::vector<JoinedSession>>(loaded);

  std::vector<SessionSummary> summaries;
  {
    std::ifstream in(in_dir + "/sessions_summary.jsonl");
    if (!in.is_open()) {
      return AnalyzeError{"cannot open " + in_dir + "/sessions_summary.jsonl (run diagnose first)"};
    }
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto s = summary_from_jsonl(line);
      if (!s) return AnalyzeError{"malformed session summary"};
      summaries.push_back(std::move(*s));
    }
  }
  return write_analysis(sessions, summaries, reports_dir, options, jobs);
}

} // namespace chunkscope
