#include <doctest.h>

#include <algorithm>
#include <vector>

#include "chunkscope/lru_cache.hpp"
#include "chunkscope/rng.hpp"

using namespace chunkscope;

namespace {

// Reference LRU: a plain MRU-first vector, O(n) per op.
class NaiveLru {
public:
  explicit NaiveLru(std::size_t capacity) : capacity_(capacity) {}

  bool touch(const ChunkKey &key) {
    auto it = std::find(order_.begin(), order_.end(), key);
    if (it == order_.end()) return false;
    ChunkKey k = *it;
    order_.erase(it);
    order_.insert(order_.begin(), k);
    return true;
  }

  void insert(const ChunkKey &key) {
    if (touch(key)) return;
    if (order_.size() == capacity_) order_.pop_back();
    order_.insert(order_.begin(), key);
  }

  const std::vector<ChunkKey> &keys() const { return order_; }

private:
  std::size_t capacity_;
  std::vector<ChunkKey> order_;
};

ChunkKey key_of(int v, int c = 1, int b = 400) { return ChunkKey{v, c, b}; }

} // namespace

TEST_CASE("LRU basics: eviction order and promotion") {
  LruCache cache(2);
  cache.insert(key_of(1));
  cache.insert(key_of(2));
  CHECK(cache.contains(key_of(1)));
  cache.touch(key_of(1)); // 1 becomes MRU
  cache.insert(key_of(3)); // evicts 2
  CHECK(cache.contains(key_of(1)));
  CHECK_FALSE(cache.contains(key_of(2)));
  CHECK(cache.contains(key_of(3)));
  CHECK(cache.size() == 2);
}

TEST_CASE("two-level cache: memory, disk promotion, miss insertion") {
  TwoLevelCache cache(2, 4);
  const ChunkKey a = key_of(1), b = key_of(2), c = key_of(3);

  CHECK(cache.access(a) == CacheStatus::miss);
  CHECK(cache.access(a) == CacheStatus::hit_memory);
  CHECK(cache.access(b) == CacheStatus::miss);
  CHECK(cache.access(c) == CacheStatus::miss); // memory now {c,b}, a only on disk
  CHECK(cache.access(a) == CacheStatus::hit_disk);
  CHECK(cache.access(a) == CacheStatus::hit_memory); // promoted back
}

TEST_CASE("LRU matches brute-force re-simulation on random request sequences") {
  Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t capacity = static_cast<std::size_t>(rng.uniform_int(1, 24));
    LruCache cache(capacity);
    NaiveLru oracle(capacity);
    for (int i = 0; i < 1000; ++i) {
      const ChunkKey key = key_of(static_cast<int>(rng.uniform_int(1, 40)));
      cache.insert(key);
      oracle.insert(key);
    }
    CHECK(cache.keys_mru_first() == oracle.keys());
  }
}

TEST_CASE("two-level memory contents match a two-level brute force") {
  Rng rng(55);
  TwoLevelCache cache(8, 32);
  NaiveLru memory(8);
  NaiveLru disk(32);
  for (int i = 0; i < 1000; ++i) {
    const ChunkKey key = key_of(static_cast<int>(rng.uniform_int(1, 60)),
                                static_cast<int>(rng.uniform_int(1, 3)));
    const CacheStatus got = cache.access(key);
    CacheStatus expected;
    if (memory.touch(key)) {
      expected = CacheStatus::hit_memory;
    } else if (disk.touch(key)) {
      expected = CacheStatus::hit_disk;
      memory.insert(key);
    } else {
      expected = CacheStatus::miss;
      memory.insert(key);
      disk.insert(key);
    }
    CHECK(got == expected);
  }
  CHECK(cache.memory().keys_mru_first() == memory.keys());
  CHECK(cache.disk().keys_mru_first() == disk.keys());
}
