#pragma once

#include <cstdint>
#include <vector>

#include "chunkscope/rng.hpp"

namespace chunkscope {

// Video catalog with Zipf-distributed popularity weights. Rank r (1-based)
// carries weight r^(-s); video id equals rank, so id 1 is the most popular.
class Catalog {
public:
  struct Video {
    int video_id = 0; // == rank
    int n_chunks = 0;
  };

  Catalog(std::int64_t n_videos, double zipf_exponent, std::int64_t chunks_min,
          std::int64_t chunks_max, std::uint64_t seed);

  // Weighted draw by popularity; returns a video id in [1, n].
  int sample_video(Rng &rng) const;

  const Video &video(int video_id) const { return videos_[video_id - 1]; }
  std::int64_t size() const { return static_cast<std::int64_t>(videos_.size()); }

  // Probability mass of the most popular `top_fraction` of the catalog.
  double top_share(double top_fraction) const;

private:
  std::vector<Video> videos_;
  std::vector<double> cumulative_; // normalized cumulative weights
};

// Solves for the Zipf exponent whose top-`top_fraction` share equals
// `target_share` over an n-video catalog (bisection on the partial-sum ratio).
double fit_zipf_exponent(std::int64_t n_videos, double top_fraction, double target_share);

} // namespace chunkscope
