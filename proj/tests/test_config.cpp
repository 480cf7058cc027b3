#include <doctest.h>

#include "chunkscope/sim_config.hpp"

using namespace chunkscope;

TEST_CASE("default config validates") {
  const SimConfig config = default_sim_config();
  CHECK_FALSE(validate_sim_config(config).has_value());
  double weight = 0;
  for (const auto &p : config.paths) weight += p.weight;
  CHECK(weight == doctest::Approx(1.0));
}

TEST_CASE("config text parsing: scalars, tables, arrays of tables") {
  const std::string text = R"(
# workload
seed = 99
n_sessions = 12
bitrate_ladder_kbps = [400, 1000, 2500.5]
first_chunk_ds_enabled = true

[cache]
memory_entries = 64
disk_entries = 256

[backend]
base_ms = 50.0

[[path]]
name = "only-path"
org_label = "Org-X"
weight = 1.0
n_prefixes = 2
prefix_base = "192.0.2.0"
base_rtt_ms = 30.0
bandwidth_bytes_per_s = 1000000.0

[[client]]
label = "Windows/Chrome"
weight = 1.0
ds_fault_rate = 0.01
)";
  auto parsed = parse_sim_config(text);
  REQUIRE(std::holds_alternative<SimConfig>(parsed));
  const SimConfig &config = std::get<SimConfig>(parsed);
  CHECK(config.seed == 99);
  CHECK(config.n_sessions == 12);
  CHECK(config.bitrate_ladder_kbps == std::vector<double>{400.0, 1000.0, 2500.5});
  CHECK(config.first_chunk_ds_enabled);
  CHECK(config.cache.memory_entries == 64);
  CHECK(config.backend.base_ms == 50.0);
  REQUIRE(config.paths.size() == 1);
  CHECK(config.paths[0].name == "only-path");
  CHECK(config.paths[0].n_prefixes == 2);
  REQUIRE(config.clients.size() == 1);
  CHECK(config.clients[0].ds_fault_rate == 0.01);
}

TEST_CASE("config errors carry lines and reject unknown keys") {
  auto unknown = parse_sim_config("definitely_not_a_key = 1\n");
  REQUIRE(std::holds_alternative<ConfigError>(unknown));
  CHECK(std::get<ConfigError>(unknown).line == 1);

  auto bad_value = parse_sim_config("seed = \"nope\"\n");
  REQUIRE(std::holds_alternative<ConfigError>(bad_value));

  auto dup = parse_sim_config("seed = 1\nseed = 2\n");
  REQUIRE(std::holds_alternative<ConfigError>(dup));
  CHECK(std::get<ConfigError>(dup).line == 2);

  auto bad_table = parse_sim_config("[nope]\nx = 1\n");
  REQUIRE(std::holds_alternative<ConfigError>(bad_table));

  auto unterminated = parse_sim_config("[cache\n");
  REQUIRE(std::holds_alternative<ConfigError>(unterminated));
}

TEST_CASE("semantic validation: ladder order, rates, ranges") {
  SimConfig config = default_sim_config();
  config.bitrate_ladder_kbps = {1000, 400};
  CHECK(validate_sim_config(config).has_value());

  config = default_sim_config();
  config.paths[0].loss_rate = 1.5;
  CHECK(validate_sim_config(config).has_value());

  config = default_sim_config();
  config.n_videos = 5; // catalog requires at least 10
  CHECK(validate_sim_config(config).has_value());

  config = default_sim_config();
  config.chunks_min = 10;
  config.chunks_max = 5;
  CHECK(validate_sim_config(config).has_value());
}

TEST_CASE("config fingerprint is stable and content-sensitive") {
  CHECK(config_fingerprint("a=1") == config_fingerprint("a=1"));
  CHECK(config_fingerprint("a=1") != config_fingerprint("a=2"));
  CHECK(config_fingerprint("").size() == 16);
}
