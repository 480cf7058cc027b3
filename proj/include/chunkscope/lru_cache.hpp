#pragma once

#include <cstdint>
#include <list>
#include <unordered_map>
#include <vector>

#include "chunkscope/model.hpp"

namespace chunkscope {

// Cache key for one stored object: a chunk at a specific bitrate.
struct ChunkKey {
  std::int32_t video_id = 0;
  std::int32_t chunk_id = 0;
  std::int32_t bitrate_kbps = 0;

  bool operator==(const ChunkKey &) const = default;
};

struct ChunkKeyHash {
  std::size_t operator()(const ChunkKey &k) const {
    std::uint64_t h = static_cast<std::uint32_t>(k.video_id);
    h = h * 0x9e3779b97f4a7c15ULL + static_cast<std::uint32_t>(k.chunk_id);
    h = h * 0x9e3779b97f4a7c15ULL + static_cast<std::uint32_t>(k.bitrate_kbps);
    return static_cast<std::size_t>(h ^ (h >> 32));
  }
};

// Strict-LRU set of keys with a fixed capacity.
class LruCache {
public:
  explicit LruCache(std::size_t capacity) : capacity_(capacity) {}

  bool contains(const ChunkKey &key) const { return index_.count(key) != 0; }

  // Moves the key to most-recently-used position; false if absent.
  bool touch(const ChunkKey &key);

  // Inserts (or refreshes) the key, evicting the LRU entry when full.
  void insert(const ChunkKey &key);

  std::size_t size() const { return order_.size(); }
  std::size_t capacity() const { return capacity_; }

  // MRU-first key order, for equivalence checks against a reference LRU.
  std::vector<ChunkKey> keys_mru_first() const {
    return std::vector<ChunkKey>(order_.begin(), order_.end());
  }

private:
  std::size_t capacity_;
  std::list<ChunkKey> order_; // front = MRU
  std::unordered_map<ChunkKey, std::list<ChunkKey>::iterator, ChunkKeyHash> index_;
};

// Memory-over-disk cache as served by the CDN model: memory first, then disk
// (promoting to memory), then miss (inserting into both levels).
class TwoLevelCache {
public:
  TwoLevelCache(std::size_t memory_entries, std::size_t disk_entries)
      : memory_(memory_entries), disk_(disk_entries) {}

  CacheStatus access(const ChunkKey &key);

  const LruCache &memory() const { return memory_; }
  const LruCache &disk() const { return disk_; }

private:
  LruCache memory_;
  LruCache disk_;
};

} // namespace chunkscope
