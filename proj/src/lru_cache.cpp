#include "chunkscope/lru_cache.hpp"

namespace chunkscope {

bool LruCache::touch(const ChunkKey &key) {
  auto it = index_.find(key);
  if (it == index_.end()) return false;
  order_.splice(order_.begin(), order_, it->second);
  return true;
}

void LruCache::insert(const ChunkKey &key) {
  if (touch(key)) return;
  if (order_.size() == capacity_) {
    index_.erase(order_.back());
    order_.pop_back();
  }
  order_.push_front(key);
  index_[key] = order_.begin();
}

CacheStatus TwoLevelCache::access(const ChunkKey &key) {
  if (memory_.touch(key)) return CacheStatus::hit_memory;
  if (disk_.touch(key)) {
    memory_.insert(key);
    return CacheStatus::hit_disk;
  }
  memory_.insert(key);
  disk_.insert(key);
  return CacheStatus::miss;
}

} // namespace chunkscope
