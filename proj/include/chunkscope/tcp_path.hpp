#pragma once

#include <cstdint>
#include <vector>

#include "chunkscope/rng.hpp"
#include "chunkscope/time.hpp"

namespace chunkscope {

// Kernel retransmission timeout: 200 ms + srtt + 4*srttvar.
inline micros_t rto_us(micros_t srtt, micros_t srttvar) {
  return 200 * kMicrosPerMilli + srtt + 4 * srttvar;
}

// Round-trip-time generator parameters for one network path.
struct PathParams {
  micros_t base_rtt = 0;
  micros_t jitter = 0; // heavy-tailed queueing delay scale (median jitter/4)
  double spike_prob = 0.0;
  micros_t spike_min = 0;
  micros_t spike_max = 0;
  double loss_rate = 0.0; // per segment, per round
  // Share of lossy rounds recovered by a retransmission timeout rather than
  // a fast retransmit; those rounds stall for a full RTO.
  double rto_timeout_prob = 0.3;
  double bandwidth_bytes_per_s = 0.0;
  std::int64_t mss = 1460;
  std::int64_t iw_segments = 10;
};

// Sender-side connection state carried across the chunks of a session.
// SRTT/SRTTVAR follow the standard smoothed estimators (gains 1/8 and 1/4,
// first sample initializes srtt=rtt, srttvar=rtt/2); they update only from
// simulated RTT samples.
struct PathState {
  std::int64_t cwnd = 10; // segments
  std::int64_t ssthresh = 1 << 30;
  micros_t srtt = 0;
  micros_t srttvar = 0;
  std::int64_t retx = 0; // cumulative for the connection
  bool srtt_valid = false;

  void observe_rtt(micros_t sample) {
    if (!srtt_valid) {
      srtt = sample;
      srttvar = sample / 2;
      srtt_valid = true;
      return;
    }
    const micros_t err = sample > srtt ? sample - srtt : srtt - sample;
    srttvar = (3 * srttvar + err) / 4;
    srtt = (7 * srtt + sample) / 8;
  }
};

// TCP state snapshot taken during a transfer, before session/chunk tagging.
struct RawSnapshot {
  micros_t t_offset = 0;
  std::int64_t cwnd = 0;
  micros_t srtt = 0;
  micros_t srttvar = 0;
  std::int64_t retx = 0;
};

struct TransferResult {
  micros_t first_byte_rtt = 0; // rtt0: the request round trip
  micros_t duration = 0;       // sum of delivery-round RTTs (the D_LB window)
  int rounds = 0;
  std::int64_t lost_segments = 0;
  std::int64_t rto_events = 0;
  std::int64_t segments = 0;
  std::vector<RawSnapshot> snapshots; // t=0, every interval, and end of transfer
};

struct TransferOptions {
  micros_t snapshot_interval = 500 * kMicrosPerMilli;
  // Loss multiplier applied to the final slow-start round (first chunk of a
  // session models the slow-start burst); 1.0 means uniform per-chunk loss.
  double final_ss_round_loss_multiplier = 1.0;
  bool is_first_chunk = false;
};

// Delivers `bytes` over the path: congestion window doubles per RTT in slow
// start up to ssthresh, then grows by one segment per fully-used round; each
// round delivers at most the bandwidth ceiling for its sampled RTT; a lossy
// round halves the window and requeues the lost segments.
TransferResult transfer_chunk(std::int64_t bytes, PathState &state, const PathParams &params,
                              Rng &rng, const TransferOptions &options);

} // namespace chunkscope
