#include "chunkscope/manifest.hpp"

#include <fstream>

#include <json.hpp>

namespace chunkscope {

void RunManifest::upsert_stage(StageInfo stage) {
  for (auto &existing : stages) {
    if (existing.name == stage.name) {
      existing = std::move(stage);
      return;
    }
  }
  stages.push_back(std::move(stage));
}

std::string RunManifest::to_json() const {
  nlohmann::json stage_list = nlohmann::json::array();
  for (const auto &stage : stages) {
    nlohmann::json counters = nlohmann::json::object();
    for (const auto &[k, v] : stage.counters) counters[k] = v;
    stage_list.push_back({{"name", stage.name},
                          {"duration_ms", stage.duration_ms},
                          {"counters", counters},
                          {"inputs", stage.inputs},
                          {"outputs", stage.outputs}});
  }
  nlohmann::json j{{"tool_version", tool_version},
                   {"config_hash", config_hash},
                   {"seed", seed},
                   {"stages", stage_list}};
  return j.dump(2);
}

RunManifest load_manifest(const std::string &path) {
  RunManifest manifest;
  std::ifstream in(path);
  if (!in.is_open()) return manifest;
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return manifest;
  try {
    manifest.tool_version = j.value("tool_version", std::string(kToolVersion));
    manifest.config_hash = j.value("config_hash", std::string());
    manifest.seed = j.value("seed", std::uint64_t{0});
    for (const auto &stage_json : j.value("stages", nlohmann::json::array())) {
      StageInfo stage;
      stage.name = stage_json.value("name", std::string());
      stage.duration_ms = stage_json.value("duration_ms", 0.0);
      for (const auto &[k, v] : stage_json.value("counters", nlohmann::json::object()).items()) {
        stage.counters[k] = v.get<std::int64_t>();
      }
      for (const auto &input : stage_json.value("inputs", nlohmann::json::array())) {
        stage.inputs.push_back(input.get<std::string>());
      }
      for (const auto &output : stage_json.value("outputs", nlohmann::json::array())) {
        stage.outputs.push_back(output.get<std::string>());
      }
      manifest.stages.push_back(std::move(stage));
    }
  } catch (...) {
    return RunManifest{};
  }
  return manifest;
}

bool save_manifest(const std::string &path, const RunManifest &manifest) {
  std::ofstream out(path);
  if (!out.is_open()) return false;
  out << manifest.to_json() << "\n";
  return true;
}

} // namespace chunkscope
