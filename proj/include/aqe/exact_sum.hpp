#ifndef AQE_EXACT_SUM_HPP
#define AQE_EXACT_SUM_HPP

#include <cstdint>
#include <vector>

namespace aqe {

/// Fixed-point superaccumulator over the finite double range, stored as a
/// window of 32-bit limbs that grows to cover the exponents actually seen.
/// Adding the same multiset of doubles in any order yields the same value(),
/// which rounds the exact sum once (round-to-nearest-even). Subnormal
/// results go through ldexp and may double-round.
class ExactSum {
 public:
  void add(double x);
  void merge(const ExactSum& other);
  double value() const;
  std::uint64_t hash() const;
  bool operator==(const ExactSum& other) const;

 private:
  struct Canonical {
    bool negative = false;
    int base = 0;
    std::vector<std::uint32_t> limbs;  // magnitude, least significant first, trimmed
  };

  static constexpr int kNormalizeEvery = 1 << 28;

  void cover(int lo, int hi);
  void normalize();
  Canonical canonical() const;

  std::vector<std::int64_t> limbs_;
  int base_ = 0;  // global index of limbs_[0]
  std::int32_t pending_ = 0;
};

}  // namespace aqe

#endif  // AQE_EXACT_SUM_HPP
