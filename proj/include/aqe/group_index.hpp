#ifndef AQE_GROUP_INDEX_HPP
#define AQE_GROUP_INDEX_HPP

#include <cstdint>
#include <span>
#include <vector>

namespace aqe {

/// Open-addressing map from fixed-width int64 tuples to dense ids assigned
/// in insertion order.
class GroupIndexer {
 public:
  explicit GroupIndexer(std::size_t width);

  std::uint32_t insert(std::span<const std::int64_t> key);
  std::size_t size() const { return count_; }
  std::size_t width() const { return width_; }
  std::span<const std::int64_t> key(std::uint32_t id) const {
    return {keys_.data() + id * width_, width_};
  }

 private:
  static constexpr std::uint32_t kEmpty = 0xffffffffu;

  std::uint64_t hash(std::span<const std::int64_t> key) const;
  void grow();

  std::size_t width_;
  std::size_t count_ = 0;
  std::vector<std::int64_t> keys_;
  std::vector<std::uint32_t> slots_;
};

}  // namespace aqe

#endif  // AQE_GROUP_INDEX_HPP
