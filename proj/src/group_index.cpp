#include "aqe/group_index.hpp"

#include <algorithm>

#include "aqe/hash.hpp"

namespace aqe {

GroupIndexer::GroupIndexer(std::size_t width) : width_(width), slots_(64, kEmpty) {}

std::uint64_t GroupIndexer::hash(std::span<const std::int64_t> key) const {
  std::uint64_t h = 0x51ed2701a3f3c2b5ull;
  for (std::int64_t v : key) h = splitmix64(h ^ static_cast<std::uint64_t>(v));
  return h;
}

std::uint32_t GroupIndexer::insert(std::span<const std::int64_t> key) {
  if ((count_ + 1) * 2 > slots_.size()) grow();
  const std::size_t mask = slots_.size() - 1;
  std::size_t slot = hash(key) & mask;
  while (true) {
    const std::uint32_t id = slots_[slot];
    if (id == kEmpty) {
      slots_[slot] = static_cast<std::uint32_t>(count_);
      keys_.insert(keys_.end(), key.begin(), key.end());
      return static_cast<std::uint32_t>(count_++);
    }
    if (std::equal(key.begin(), key.end(), keys_.begin() + id * width_)) return id;
    slot = (slot + 1) & mask;
  }
}

void GroupIndexer::grow() {
  std::vector<std::uint32_t> slots(slots_.size() * 2, kEmpty);
  const std::size_t mask = slots.size() - 1;
  for (std::size_t id = 0; id < count_; ++id) {
    std::size_t slot = hash(key(static_cast<std::uint32_t>(id))) & mask;
    while (slots[slot] != kEmpty) slot = (slot + 1) & mask;
    slots[slot] = static_cast<std::uint32_t>(id);
  }
  slots_ = std::move(slots);
}

}  // namespace aqe
