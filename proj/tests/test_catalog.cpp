#include <doctest.h>

#include <vector>

#include "chunkscope/catalog.hpp"

using namespace chunkscope;

TEST_CASE("zipf top-10% share: harmonic-sum oracle values") {
  // Partial harmonic sums H_s(100)/H_s(1000), computed independently.
  Catalog uniform(1000, 0.0, 8, 30, 1);
  CHECK(uniform.top_share(0.10) == doctest::Approx(0.10).epsilon(1e-9));

  Catalog unit(1000, 1.0, 8, 30, 1);
  CHECK(unit.top_share(0.10) == doctest::Approx(0.6929928142500626).epsilon(1e-9));
}

TEST_CASE("fitted exponent lands the 0.66 share") {
  const double fitted = fit_zipf_exponent(1000, 0.10, 0.66);
  CHECK(fitted == doctest::Approx(0.9591132699631257).epsilon(1e-6));
  Catalog catalog(1000, fitted, 8, 30, 1);
  CHECK(catalog.top_share(0.10) == doctest::Approx(0.66).epsilon(1e-4));
}

TEST_CASE("sampling follows the configured weights") {
  Catalog catalog(1000, 0.959, 8, 30, 42);
  Rng rng(7);
  const int draws = 100'000;
  int top_decile = 0;
  for (int i = 0; i < draws; ++i) {
    if (catalog.sample_video(rng) <= 100) ++top_decile;
  }
  const double share = static_cast<double>(top_decile) / draws;
  CHECK(share > 0.64);
  CHECK(share < 0.68);
}

TEST_CASE("video lengths are stable per video id") {
  Catalog a(100, 1.0, 8, 30, 5);
  Catalog b(100, 1.0, 8, 30, 5);
  for (int v = 1; v <= 100; ++v) {
    CHECK(a.video(v).n_chunks == b.video(v).n_chunks);
    CHECK(a.video(v).n_chunks >= 8);
    CHECK(a.video(v).n_chunks <= 30);
  }
}
