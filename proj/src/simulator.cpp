#include "chunkscope/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "chunkscope/net.hpp"

namespace chunkscope {

namespace {

constexpr std::uint64_t kStreamSession = 0x73657373; // session identity draws
constexpr std::uint64_t kStreamCdn = 0x63646e00;     // serving latencies
constexpr std::uint64_t kStreamNet = 0x6e657400;     // rtt + loss
constexpr std::uint64_t kStreamClient = 0x636c6e74;  // ds faults + rendering

micros_t ms_us(double ms) { return ms_to_us(ms); }

std::size_t weighted_pick(const std::vector<double> &weights, Rng &rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    u -= weights[i];
    if (u < 0.0) return i;
  }
  return weights.size() - 1;
}

// Piecewise-linear drop fraction in download rate with knots at 1.0 and 1.5.
double drop_curve(const ClientProfile &profile, double rate) {
  if (rate >= 1.5) return profile.drop_base;
  if (rate <= 1.0) return profile.drop_at_rate1;
  const double t = (rate - 1.0) / 0.5;
  return profile.drop_at_rate1 + t * (profile.drop_at_rate15 - profile.drop_at_rate1);
}

} // namespace

CdnServeResult cdn_serve(const ChunkKey &key, TwoLevelCache &cache, const SimConfig &config,
                         Rng &rng) {
  const CdnLatencyConfig &cdn = config.cdn;
  CdnServeResult r;
  r.status = cache.access(key);
  r.d_wait = ms_us(rng.uniform(0.0, cdn.wait_max_ms));
  r.d_open = ms_us(rng.uniform(0.0, cdn.open_max_ms));

  // Memory read: bimodal below the async-read timer (hot path vs slow pass).
  const double fast_read_cap = std::max(0.1, cdn.async_read_timer_ms - 0.5);
  auto fast_read = [&] {
    const bool hot = rng.bernoulli(cdn.read_fast_fraction);
    const double ms = hot ? rng.lognormal_med(cdn.read_fast_median_ms, cdn.read_fast_sigma)
                          : rng.lognormal_med(cdn.read_median_ms, cdn.read_sigma);
    return ms_us(std::clamp(ms, 0.05, fast_read_cap));
  };

  switch (r.status) {
  case CacheStatus::hit_memory:
    r.d_read = fast_read();
    break;
  case CacheStatus::hit_disk:
    // The open retry comes back on the timer, then the disk read completes
    // within a short window.
    r.d_read = ms_us(cdn.async_read_timer_ms + rng.uniform(0.0, cdn.disk_window_ms));
    break;
  case CacheStatus::miss:
    r.d_read = fast_read();
    r.d_be = ms_us(config.backend.shift_ms +
                   rng.lognormal_med(config.backend.base_ms, config.backend.sigma));
    break;
  }
  return r;
}

double abr_select(const std::vector<double> &recent_rates_kbps,
                  const std::vector<double> &ladder_kbps, bool panic, double current_kbps) {
  if (recent_rates_kbps.empty()) return ladder_kbps.front();

  if (panic) {
    auto it = std::lower_bound(ladder_kbps.begin(), ladder_kbps.end(), current_kbps);
    if (it != ladder_kbps.begin()) --it;
    return *it;
  }

  const std::size_t n = std::min<std::size_t>(3, recent_rates_kbps.size());
  double sum = 0.0;
  for (std::size_t i = recent_rates_kbps.size() - n; i < recent_rates_kbps.size(); ++i) {
    sum += recent_rates_kbps[i];
  }
  const double target = 0.8 * (sum / static_cast<double>(n));

  double chosen = ladder_kbps.front();
  for (double rate : ladder_kbps) {
    if (rate <= target) chosen = rate;
  }
  return chosen;
}

micros_t PlayoutTracker::played_at(micros_t t) const {
  if (!started_) return 0;
  const micros_t advanced = anchor_played_ + std::max<micros_t>(0, t - anchor_t_);
  return std::min(available(), advanced);
}

PlayoutTracker::Step PlayoutTracker::on_completion(micros_t completion, micros_t request) {
  Step step;
  if (started_) {
    step.buffer_before = available() - played_at(request);
    const micros_t runway_end = anchor_t_ + (available() - anchor_played_);
    if (completion > runway_end) {
      step.stalled = true;
      step.stall_duration = completion - runway_end;
      step.stalled_chunk = completed_;
      anchor_played_ = available();
    } else {
      anchor_played_ = played_at(completion);
    }
    anchor_t_ = completion;
  } else {
    step.buffer_before = available();
  }

  ++completed_;
  if (!started_ && available() >= startup_) {
    started_ = true;
    play_start_ = completion;
    anchor_t_ = completion;
    anchor_played_ = 0;
  }
  step.buffer_after = available() - played_at(completion);
  step.playing_throughout = started_ && play_start_ <= request && !step.stalled;
  return step;
}

SessionOutput simulate_session(const SimConfig &config, const Catalog &catalog,
                               TwoLevelCache &cache, std::int64_t session_index) {
  Rng rng_session = Rng::stream(config.seed, static_cast<std::uint64_t>(session_index), kStreamSession);
  Rng rng_cdn = Rng::stream(config.seed, static_cast<std::uint64_t>(session_index), kStreamCdn);
  Rng rng_net = Rng::stream(config.seed, static_cast<std::uint64_t>(session_index), kStreamNet);
  Rng rng_client = Rng::stream(config.seed, static_cast<std::uint64_t>(session_index), kStreamClient);

  SessionOutput out;

  // Session identity draws, in a fixed order.
  const int video_id = catalog.sample_video(rng_session);
  const Catalog::Video &video = catalog.video(video_id);

  std::vector<double> path_weights;
  for (const auto &p : config.paths) path_weights.push_back(p.weight);
  const PathProfile &path = config.paths[weighted_pick(path_weights, rng_session)];

  std::vector<double> client_weights;
  for (const auto &p : config.clients) client_weights.push_back(p.weight);
  const ClientProfile &client = config.clients[weighted_pick(client_weights, rng_session)];

  const std::uint32_t prefix_base = parse_ipv4(path.prefix_base).value_or(0x0a000000u);
  const std::uint32_t prefix =
      prefix24(prefix_base) +
      static_cast<std::uint32_t>(rng_session.uniform_int(0, path.n_prefixes - 1)) * 256u;
  const std::uint32_t client_ip = prefix + static_cast<std::uint32_t>(rng_session.uniform_int(1, 254));

  char session_id[16];
  std::snprintf(session_id, sizeof(session_id), "s%08lld",
                static_cast<long long>(session_index));

  SessionMeta &meta = out.meta;
  meta.session_id = session_id;
  meta.client_ip = format_ipv4(client_ip);
  meta.user_agent = client.label;
  meta.cdn_client_ip = meta.client_ip;
  meta.cdn_user_agent = client.label;
  meta.video_length_s = static_cast<double>(video.n_chunks) * config.chunk_duration_s;
  meta.chunk_duration_s = config.chunk_duration_s;
  meta.pop_id = "pop-" + std::to_string(rng_session.uniform_int(0, config.n_pops - 1));
  meta.server_id = "srv-" + std::to_string(rng_session.uniform_int(0, config.n_servers - 1));
  meta.org_label = path.org_label;
  meta.distance_km = path.distance_km;
  meta.day = static_cast<int>(rng_session.uniform_int(0, config.n_days - 1));
  meta.video_id = video_id;
  meta.video_rank = video_id;

  PathParams params;
  params.base_rtt = ms_us(path.base_rtt_ms);
  params.jitter = ms_us(path.jitter_ms);
  params.spike_prob = path.spike_prob;
  params.spike_min = ms_us(path.spike_min_ms);
  params.spike_max = ms_us(path.spike_max_ms);
  params.loss_rate = path.loss_rate;
  params.rto_timeout_prob = path.rto_timeout_prob;
  params.bandwidth_bytes_per_s = path.bandwidth_bytes_per_s;
  params.mss = config.mss;
  params.iw_segments = config.iw_segments;

  PathState state;
  state.cwnd = config.iw_segments;

  PlayoutTracker playout(sec_to_us(config.startup_buffer_s), sec_to_us(config.chunk_duration_s));

  const micros_t tau_us = sec_to_us(config.chunk_duration_s);
  std::vector<double> rate_history_kbps;
  std::vector<PlayoutTracker::Step> steps;
  double current_bitrate = config.bitrate_ladder_kbps.front();
  bool panic = false;
  micros_t clock = 0;

  for (int chunk_id = 1; chunk_id <= video.n_chunks; ++chunk_id) {
    const bool first = chunk_id == 1;
    const double bitrate =
        first ? config.bitrate_ladder_kbps.front()
              : abr_select(rate_history_kbps, config.bitrate_ladder_kbps, panic, current_bitrate);
    current_bitrate = bitrate;
    const std::int64_t chunk_size =
        static_cast<std::int64_t>(std::llround(bitrate * 125.0 * config.chunk_duration_s));

    const ChunkKey key{video_id, chunk_id, static_cast<std::int32_t>(std::llround(bitrate))};
    const CdnServeResult served = cdn_serve(key, cache, config, rng_cdn);

    TransferOptions topts;
    topts.snapshot_interval = ms_us(config.snapshot_interval_ms);
    topts.final_ss_round_loss_multiplier = config.first_chunk_loss_multiplier;
    topts.is_first_chunk = first;
    const TransferResult transfer = transfer_chunk(chunk_size, state, params, rng_net, topts);

    ChunkDebug debug;
    debug.rtt0 = transfer.first_byte_rtt;
    debug.transfer_duration = transfer.duration;
    debug.lost_segments = transfer.lost_segments;
    debug.segments = transfer.segments;

    // Client download-stack faults: a buffered chunk reaches the player late
    // and all at once (d_fb inflated, d_lb collapsed to a drain window).
    micros_t injected_ds = 0;
    const bool buffered = rng_client.bernoulli(client.ds_fault_rate);
    if (buffered) {
      const micros_t hold =
          ms_us(rng_client.lognormal_med(client.ds_delay_median_ms, client.ds_delay_sigma));
      injected_ds += hold;
      out.truth.push_back(GroundTruth{meta.session_id, chunk_id, LabelKind::download_stack_buffered,
                                      {{"injected_ds_delay_ms", us_to_ms(hold)}}});
    }
    if (first && config.first_chunk_ds_enabled) {
      const micros_t extra = ms_us(
          rng_client.lognormal_med(config.first_chunk_ds_median_ms, config.first_chunk_ds_sigma));
      injected_ds += extra;
      out.truth.push_back(GroundTruth{meta.session_id, chunk_id,
                                      LabelKind::persistent_download_stack,
                                      {{"injected_ds_delay_ms", us_to_ms(extra)}}});
    }
    if (transfer.lost_segments > 0) {
      out.truth.push_back(
          GroundTruth{meta.session_id, chunk_id, LabelKind::network_loss,
                      {{"injected_loss_segments", static_cast<double>(transfer.lost_segments)}}});
    }

    debug.ds_buffered = buffered;
    debug.injected_ds = injected_ds;

    const micros_t d_fb = served.server_latency() + transfer.first_byte_rtt + injected_ds;
    const micros_t d_lb =
        buffered ? ms_us(rng_client.uniform(10.0, 30.0)) : transfer.duration;
    const micros_t window = d_fb + d_lb;

    CdnChunkRecord cdn_rec;
    cdn_rec.session_id = meta.session_id;
    cdn_rec.chunk_id = chunk_id;
    cdn_rec.d_wait = served.d_wait;
    cdn_rec.d_open = served.d_open;
    cdn_rec.d_read = served.d_read;
    cdn_rec.d_be = served.d_be;
    cdn_rec.cache_status = served.status;
    cdn_rec.chunk_size = chunk_size;
    out.cdn.push_back(cdn_rec);

    for (const RawSnapshot &raw : transfer.snapshots) {
      TcpSnapshot snap;
      snap.session_id = meta.session_id;
      snap.chunk_id = chunk_id;
      snap.t_offset = raw.t_offset;
      snap.cwnd = static_cast<int>(raw.cwnd);
      snap.srtt = raw.srtt;
      snap.srttvar = raw.srttvar;
      snap.retx = raw.retx;
      snap.mss = static_cast<int>(config.mss);
      out.snapshots.push_back(snap);
    }

    const micros_t request = clock;
    clock += window;
    steps.push_back(playout.on_completion(clock, request));

    debug.buffer_before = steps.back().buffer_before;
    debug.buffer_after = steps.back().buffer_after;
    debug.playing_throughout = steps.back().playing_throughout;

    const double rate = static_cast<double>(tau_us) / static_cast<double>(window);
    debug.download_rate = rate;

    // Rendering path: visibility, CPU-overload events, and the rate curve.
    const bool vis = rng_client.bernoulli(client.vis_rate);
    const bool overload = rng_client.bernoulli(client.cpu_overload_prob);
    double drop_fraction;
    if (!vis) {
      // Hidden players shed frames deliberately.
      drop_fraction = rng_client.uniform(0.5, 0.9);
    } else if (overload) {
      drop_fraction = rng_client.uniform(client.overload_drop_min, client.overload_drop_max);
      out.truth.push_back(GroundTruth{meta.session_id, chunk_id, LabelKind::rendering_drop,
                                      {{"injected_drop_fraction", drop_fraction}}});
    } else {
      drop_fraction = drop_curve(client, rate) +
                      rng_client.uniform(-client.drop_noise, client.drop_noise);
      drop_fraction = std::clamp(drop_fraction, 0.0, 0.95);
    }

    const double total_frames = client.fps * config.chunk_duration_s;
    PlayerChunkRecord player_rec;
    player_rec.session_id = meta.session_id;
    player_rec.chunk_id = chunk_id;
    player_rec.d_fb = d_fb;
    player_rec.d_lb = d_lb;
    player_rec.bitrate_kbps = bitrate;
    player_rec.vis = vis;
    player_rec.drop_fr = static_cast<int>(std::lround(drop_fraction * total_frames));
    player_rec.avg_fr = (1.0 - drop_fraction) * client.fps;
    out.player.push_back(player_rec);
    out.debug.push_back(debug);

    const double rate_kbps =
        static_cast<double>(chunk_size) * 8.0 / us_to_sec(window) / 1000.0;
    rate_history_kbps.push_back(rate_kbps);
    panic = steps.back().stalled;
  }

  // Rebuffering attribution: a stall that opened while chunk X was playing is
  // reported on chunk X's player record.
  for (size_t i = 0; i < steps.size(); ++i) {
    if (!steps[i].stalled) continue;
    PlayerChunkRecord &rec = out.player[static_cast<size_t>(steps[i].stalled_chunk - 1)];
    rec.buf_count += 1;
    rec.buf_dur += steps[i].stall_duration;
  }

  out.startup_delay = playout.started() ? playout.play_start() : clock;
  return out;
}

void prewarm_cache(TwoLevelCache &cache, const Catalog &catalog,
                   const std::vector<double> &ladder_kbps) {
  for (int video_id = static_cast<int>(catalog.size()); video_id >= 1; --video_id) {
    const Catalog::Video &video = catalog.video(video_id);
    for (int chunk_id = 1; chunk_id <= video.n_chunks; ++chunk_id) {
      for (double bitrate : ladder_kbps) {
        cache.access(ChunkKey{video_id, chunk_id, static_cast<std::int32_t>(std::llround(bitrate))});
      }
    }
  }
}

void run_simulation(const SimConfig &config,
                    const std::function<void(SessionOutput &&)> &sink) {
  Catalog catalog(config.n_videos, config.zipf_exponent, config.chunks_min, config.chunks_max,
                  config.seed);
  TwoLevelCache cache(static_cast<std::size_t>(config.cache.memory_entries),
                      static_cast<std::size_t>(config.cache.disk_entries));
  if (config.prewarm_cache) prewarm_cache(cache, catalog, config.bitrate_ladder_kbps);
  for (std::int64_t i = 0; i < config.n_sessions; ++i) {
    sink(simulate_session(config, catalog, cache, i));
  }
}

} // namespace chunkscope
