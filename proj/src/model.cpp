#include "chunkscope/model.hpp"

namespace chunkscope {

const char *to_string(CacheStatus status) {
  switch (status) {
  case CacheStatus::hit_memory: return "hit_memory";
  case CacheStatus::hit_disk: return "hit_disk";
  case CacheStatus::miss: return "miss";
  }
  return "miss";
}

std::optional<CacheStatus> parse_cache_status(const std::string &text) {
  if (text == "hit_memory" || text == "hit") return CacheStatus::hit_memory;
  if (text == "hit_disk") return CacheStatus::hit_disk;
  if (text == "miss") return CacheStatus::miss;
  return std::nullopt;
}

const char *to_string(LabelKind kind) {
  switch (kind) {
  case LabelKind::cache_miss_latency: return "cache_miss_latency";
  case LabelKind::disk_timer_latency: return "disk_timer_latency";
  case LabelKind::network_baseline_latency: return "network_baseline_latency";
  case LabelKind::network_latency_variation: return "network_latency_variation";
  case LabelKind::network_loss: return "network_loss";
  case LabelKind::throughput_limited: return "throughput_limited";
  case LabelKind::download_stack_buffered: return "download_stack_buffered";
  case LabelKind::persistent_download_stack: return "persistent_download_stack";
  case LabelKind::rendering_drop: return "rendering_drop";
  case LabelKind::none: return "none";
  }
  return "none";
}

std::optional<LabelKind> parse_label_kind(const std::string &text) {
  static const std::pair<const char *, LabelKind> kTable[] = {
      {"cache_miss_latency", LabelKind::cache_miss_latency},
      {"disk_timer_latency", LabelKind::disk_timer_latency},
      {"network_baseline_latency", LabelKind::network_baseline_latency},
      {"network_latency_variation", LabelKind::network_latency_variation},
      {"network_loss", LabelKind::network_loss},
      {"throughput_limited", LabelKind::throughput_limited},
      {"download_stack_buffered", LabelKind::download_stack_buffered},
      {"persistent_download_stack", LabelKind::persistent_download_stack},
      {"rendering_drop", LabelKind::rendering_drop},
      {"none", LabelKind::none},
  };
  for (const auto &[name, kind] : kTable) {
    if (text == name) return kind;
  }
  return std::nullopt;
}

std::optional<JoinedChunk> derive(const PlayerChunkRecord &player, const CdnChunkRecord &cdn,
                                  std::vector<TcpSnapshot> snapshots, double tau_s) {
  if (player.d_lb <= 0 || tau_s <= 0.0) return std::nullopt;

  JoinedChunk joined;
  joined.player = player;
  joined.cdn = cdn;
  joined.snapshots = std::move(snapshots);
  joined.server_latency = cdn.d_cdn() + cdn.d_be;
  joined.rtt0_ub = player.d_fb - joined.server_latency;
  joined.inconsistent_timing = joined.rtt0_ub < 0;
  joined.tp_inst = static_cast<double>(cdn.chunk_size) / us_to_sec(player.d_lb);
  joined.perf_score = tau_s / us_to_sec(player.d_fb + player.d_lb);
  return joined;
}

} // namespace chunkscope
