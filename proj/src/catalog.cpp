#include "chunkscope/catalog.hpp"

#include <algorithm>
#include <cmath>

namespace chunkscope {

namespace {

double top_share_for(std::int64_t n, double s, double top_fraction) {
  const std::int64_t top = static_cast<std::int64_t>(static_cast<double>(n) * top_fraction);
  double num = 0.0;
  double den = 0.0;
  for (std::int64_t r = 1; r <= n; ++r) {
    const double w = std::pow(static_cast<double>(r), -s);
    den += w;
    if (r <= top) num += w;
  }
  return num / den;
}

} // namespace

Catalog::Catalog(std::int64_t n_videos, double zipf_exponent, std::int64_t chunks_min,
                 std::int64_t chunks_max, std::uint64_t seed) {
  videos_.reserve(static_cast<std::size_t>(n_videos));
  cumulative_.reserve(static_cast<std::size_t>(n_videos));

  // Video lengths are a property of the catalog, not the session, so all
  // sessions of one video request the same chunk ids.
  Rng rng = Rng::stream(seed, 0, 0x6c656e67 /* "leng" */);
  double total = 0.0;
  for (std::int64_t r = 1; r <= n_videos; ++r) {
    Video v;
    v.video_id = static_cast<int>(r);
    v.n_chunks = static_cast<int>(rng.uniform_int(chunks_min, chunks_max));
    videos_.push_back(v);
    total += std::pow(static_cast<double>(r), -zipf_exponent);
    cumulative_.push_back(total);
  }
  for (double &c : cumulative_) c /= total;
  cumulative_.back() = 1.0;
}

int Catalog::sample_video(Rng &rng) const {
  const double u = rng.uniform();
  auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  return static_cast<int>(it - cumulative_.begin()) + 1;
}

double Catalog::top_share(double top_fraction) const {
  const auto top = static_cast<std::size_t>(static_cast<double>(videos_.size()) * top_fraction);
  if (top == 0) return 0.0;
  return cumulative_[top - 1];
}

double fit_zipf_exponent(std::int64_t n_videos, double top_fraction, double target_share) {
  double lo = 0.0;
  double hi = 4.0;
  for (int iter = 0; iter < 80; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (top_share_for(n_videos, mid, top_fraction) < target_share) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

} // namespace chunkscope
