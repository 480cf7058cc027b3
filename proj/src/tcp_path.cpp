#include "chunkscope/tcp_path.hpp"

#include <algorithm>

namespace chunkscope {

namespace {

micros_t sample_rtt(const PathParams &p, Rng &rng) {
  micros_t rtt = p.base_rtt;
  if (p.jitter > 0) {
    // Baseline delay noise is tight; heavy tails come from the spike process
    // and from self-loading, not from per-packet jitter.
    const double median = static_cast<double>(p.jitter) / 4.0;
    const double draw = rng.lognormal_med(median, 0.35);
    rtt += static_cast<micros_t>(std::min(draw, median * 8.0));
  }
  if (p.spike_prob > 0 && rng.bernoulli(p.spike_prob)) {
    rtt += rng.uniform_int(p.spike_min, p.spike_max);
  }
  return rtt;
}

// Pipe capacity per round from the base RTT: jitter and spikes are queueing
// delay, which lengthens the round but does not widen the pipe.
std::int64_t bandwidth_cap_segments(const PathParams &p) {
  const double bytes_per_rtt = p.bandwidth_bytes_per_s * us_to_sec(p.base_rtt);
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(bytes_per_rtt) / p.mss);
}

} // namespace

TransferResult transfer_chunk(std::int64_t bytes, PathState &state, const PathParams &params,
                              Rng &rng, const TransferOptions &options) {
  TransferResult result;
  result.segments = (bytes + params.mss - 1) / params.mss;

  // The request round trip; it is also the connection's first RTT sample when
  // the session opens, which seeds the estimators before the t=0 snapshot.
  result.first_byte_rtt = sample_rtt(params, rng);
  state.observe_rtt(result.first_byte_rtt);

  auto push_snapshot = [&](micros_t t_offset) {
    result.snapshots.push_back(
        RawSnapshot{t_offset, state.cwnd, state.srtt, state.srttvar, state.retx});
  };
  push_snapshot(0);

  std::int64_t remaining = result.segments;
  micros_t elapsed = 0;
  micros_t next_sample = options.snapshot_interval;
  const std::int64_t cap = bandwidth_cap_segments(params);
  // The window can overshoot the pipe by a small standing queue before the
  // bottleneck buffer stops it; the queued excess inflates every delivery
  // round's RTT (self-loading), which is what the smoothed estimator sees.
  const std::int64_t plateau =
      cap + std::min<std::int64_t>(10, std::max<std::int64_t>(1, cap / 8));

  while (remaining > 0) {
    const micros_t rtt = sample_rtt(params, rng);
    const std::int64_t inflight = std::min(state.cwnd, remaining);
    const std::int64_t sent = std::min(inflight, cap);
    const micros_t queue_delay =
        inflight > cap ? static_cast<micros_t>(static_cast<double>((inflight - cap) * params.mss) /
                                               params.bandwidth_bytes_per_s * 1e6)
                       : 0;
    const micros_t round_time = rtt + queue_delay;

    const bool in_slow_start = state.cwnd < state.ssthresh;
    // Heuristic for "this is the last round slow start gets to run": the
    // transfer ends here, or the next doubling would overrun the bandwidth
    // ceiling or ssthresh. The first-chunk burst-loss elevation applies here.
    const bool final_ss_round =
        in_slow_start && (sent >= remaining || state.cwnd * 2 > cap || state.cwnd * 2 >= state.ssthresh);

    // Capped below 1 so a pathological configured rate cannot stall the
    // retransmission loop forever.
    double p_loss = params.loss_rate;
    if (options.is_first_chunk && final_ss_round) {
      p_loss *= options.final_ss_round_loss_multiplier;
    }
    p_loss = std::min(0.9, p_loss);
    const std::int64_t lost = rng.binomial(sent, p_loss);

    ++result.rounds;
    elapsed += round_time;
    result.duration += round_time;
    state.observe_rtt(round_time);

    if (lost > 0) {
      state.retx += lost;
      result.lost_segments += lost;
      remaining -= sent - lost; // lost segments go out again next round
      // Halve the window; ssthresh keeps the pre-loss operating point, so
      // slow start reprobes straight back up (production stacks recover in a
      // couple of rounds, not one segment per rtt from half the window).
      state.ssthresh = std::max<std::int64_t>(state.cwnd, 4);
      state.cwnd = std::max<std::int64_t>(state.cwnd / 2, 2);
      // A share of loss events is recovered by timeout, not fast retransmit;
      // the connection sits idle for the RTO. The stall is dead time, not an
      // RTT sample.
      if (rng.bernoulli(params.rto_timeout_prob)) {
        const micros_t stall = rto_us(state.srtt, state.srttvar);
        elapsed += stall;
        result.duration += stall;
        ++result.rto_events;
      }
    } else {
      remaining -= sent;
      if (inflight == state.cwnd && sent == inflight) {
        // Window fully used: grow, but never beyond the standing-queue
        // plateau the bottleneck buffer allows.
        state.cwnd = in_slow_start ? std::min(state.cwnd * 2, state.ssthresh) : state.cwnd + 1;
        state.cwnd = std::min(state.cwnd, plateau);
      }
    }

    while (next_sample <= elapsed) {
      push_snapshot(next_sample);
      next_sample += options.snapshot_interval;
    }
  }

  if (result.snapshots.back().t_offset != elapsed) push_snapshot(elapsed);
  return result;
}

} // namespace chunkscope
