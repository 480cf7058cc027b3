#pragma once

#include <cmath>
#include <cstdint>

namespace chunkscope {

// xoshiro256++ seeded through splitmix64, with hand-rolled samplers.
// <random> distributions are implementation-defined, which would break the
// byte-identical output contract across standard libraries; every draw here
// is pinned to an explicit algorithm.
class Rng {
public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto &word : state_) {
      word = splitmix64(x);
    }
  }

  // Independent stream for (master seed, stream id, purpose tag). Streams for
  // different purposes within one session stay decoupled, so toggling one
  // feature does not shift unrelated draws.
  static Rng stream(std::uint64_t master_seed, std::uint64_t stream_id, std::uint64_t purpose) {
    std::uint64_t x = master_seed;
    std::uint64_t a = splitmix64(x);
    x ^= stream_id * 0x9e3779b97f4a7c15ULL;
    std::uint64_t b = splitmix64(x);
    x ^= purpose * 0xbf58476d1ce4e5b9ULL;
    std::uint64_t c = splitmix64(x);
    return Rng(a ^ rotl(b, 17) ^ rotl(c, 31));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }

  bool bernoulli(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return uniform() < p;
  }

  // Standard normal via Box-Muller; one draw per call (no cached spare, so
  // the draw count per event is fixed).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) {
      u1 = uniform();
    }
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // Lognormal parameterized by its median: median * exp(sigma * N(0,1)).
  double lognormal_med(double median, double sigma) { return median * std::exp(sigma * normal()); }

  // Exact binomial by repeated bernoulli; n here is a congestion window's
  // worth of segments, small enough that the loop is cheap.
  std::int64_t binomial(std::int64_t n, double p) {
    if (p <= 0.0 || n <= 0) return 0;
    std::int64_t hits = 0;
    for (std::int64_t i = 0; i < n; ++i) {
      if (uniform() < p) ++hits;
    }
    return hits;
  }

private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  static std::uint64_t splitmix64(std::uint64_t &x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_[4];
};

} // namespace chunkscope
