#pragma once

#include <optional>
#include <string>

#include "chunkscope/model.hpp"

namespace chunkscope {

// JSON-Lines encoding of the domain records. Durations are written as decimal
// milliseconds (shortest round-trip double); parsing converts back to integer
// microseconds exactly.

std::string to_jsonl(const PlayerChunkRecord &rec);
std::string to_jsonl(const CdnChunkRecord &rec);
std::string to_jsonl(const TcpSnapshot &rec);
std::string to_jsonl(const SessionMeta &rec);
std::string to_jsonl(const GroundTruth &rec);
std::string to_jsonl(const DiagnosisLabel &rec);
std::string to_jsonl(const JoinedChunk &rec);

std::optional<PlayerChunkRecord> player_from_jsonl(const std::string &line);
std::optional<CdnChunkRecord> cdn_from_jsonl(const std::string &line);
std::optional<TcpSnapshot> snapshot_from_jsonl(const std::string &line);
std::optional<SessionMeta> meta_from_jsonl(const std::string &line);
std::optional<GroundTruth> truth_from_jsonl(const std::string &line);
std::optional<DiagnosisLabel> label_from_jsonl(const std::string &line);
std::optional<JoinedChunk> joined_from_jsonl(const std::string &line);

} // namespace chunkscope
