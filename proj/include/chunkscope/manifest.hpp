#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace chunkscope {

inline constexpr const char *kToolVersion = "0.1.0";

// One manifest per output directory. Stage entries are upserted by name, so a
// pipeline run and its constituent commands share a single document. Stage
// durations are wall-clock and excluded from determinism guarantees; the data
// files are the deterministic artifacts.
struct StageInfo {
  std::string name;
  double duration_ms = 0;
  std::map<std::string, std::int64_t> counters;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};

struct RunManifest {
  std::string tool_version = kToolVersion;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<StageInfo> stages;

  void upsert_stage(StageInfo stage);
  std::string to_json() const;
};

// Loads an existing manifest (empty manifest if absent), merges, saves.
RunManifest load_manifest(const std::string &path);
bool save_manifest(const std::string &path, const RunManifest &manifest);

} // namespace chunkscope
