#include "aqe/exact_sum.hpp"

#include <bit>
#include <cmath>

#include "aqe/hash.hpp"

namespace aqe {

void ExactSum::cover(int lo, int hi) {
  if (limbs_.empty()) {
    base_ = lo;
    limbs_.assign(static_cast<std::size_t>(hi - lo + 1), 0);
    return;
  }
  if (lo < base_) {
    limbs_.insert(limbs_.begin(), static_cast<std::size_t>(base_ - lo), 0);
    base_ = lo;
  }
  const int top = base_ + static_cast<int>(limbs_.size()) - 1;
  if (hi > top) limbs_.resize(limbs_.size() + static_cast<std::size_t>(hi - top), 0);
}

void ExactSum::add(double x) {
  if (x == 0.0) return;
  const auto bits = std::bit_cast<std::uint64_t>(x);
  const bool negative = (bits >> 63) != 0;
  const auto biased = static_cast<int>((bits >> 52) & 0x7ff);
  std::uint64_t mantissa = bits & ((std::uint64_t{1} << 52) - 1);
  int exponent = -1074;
  if (biased != 0) {
    mantissa |= std::uint64_t{1} << 52;
    exponent = biased - 1075;
  }
  const int bitpos = exponent + 1074;
  const int limb = bitpos / 32;
  // One spare limb on top absorbs carries until the next normalize().
  cover(limb, limb + 3);
  const unsigned __int128 shifted = static_cast<unsigned __int128>(mantissa) << (bitpos % 32);
  const auto c0 = static_cast<std::int64_t>(shifted & 0xffffffffu);
  const auto c1 = static_cast<std::int64_t>((shifted >> 32) & 0xffffffffu);
  const auto c2 = static_cast<std::int64_t>(shifted >> 64);
  std::int64_t* l = limbs_.data() + (limb - base_);
  if (negative) {
    l[0] -= c0;
    l[1] -= c1;
    l[2] -= c2;
  } else {
    l[0] += c0;
    l[1] += c1;
    l[2] += c2;
  }
  if (++pending_ >= kNormalizeEvery) normalize();
}

void ExactSum::normalize() {
  for (std::size_t i = 0; i + 1 < limbs_.size(); ++i) {
    const std::int64_t carry = limbs_[i] >> 32;  // floor division
    limbs_[i] -= carry * (std::int64_t{1} << 32);
    limbs_[i + 1] += carry;
  }
  pending_ = 0;
}

void ExactSum::merge(const ExactSum& other) {
  if (other.limbs_.empty()) return;
  ExactSum rhs = other;
  rhs.normalize();
  cover(rhs.base_, rhs.base_ + static_cast<int>(rhs.limbs_.size()));
  normalize();
  for (std::size_t i = 0; i < rhs.limbs_.size(); ++i) {
    limbs_[static_cast<std::size_t>(rhs.base_ - base_) + i] += rhs.limbs_[i];
  }
  pending_ = 2;
}

ExactSum::Canonical ExactSum::canonical() const {
  Canonical out;
  if (limbs_.empty()) return out;
  std::vector<std::int64_t> v = limbs_;
  auto carry_up = [&v]() {
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
      const std::int64_t carry = v[i] >> 32;
      v[i] -= carry * (std::int64_t{1} << 32);
      v[i + 1] += carry;
    }
    // Lower limbs are now in [0, 2^32); spill a large non-negative top limb.
    while (v.back() >= (std::int64_t{1} << 32)) {
      const std::int64_t carry = v.back() >> 32;
      v.back() -= carry * (std::int64_t{1} << 32);
      v.push_back(carry);
    }
  };
  carry_up();
  if (v.back() < 0) {
    out.negative = true;
    for (auto& l : v) l = -l;
    carry_up();
  }
  std::size_t lo = 0;
  std::size_t hi = v.size();
  while (hi > 0 && v[hi - 1] == 0) --hi;
  while (lo < hi && v[lo] == 0) ++lo;
  if (lo == hi) return Canonical{};
  out.base = base_ + static_cast<int>(lo);
  for (std::size_t i = lo; i < hi; ++i) out.limbs.push_back(static_cast<std::uint32_t>(v[i]));
  return out;
}

bool ExactSum::operator==(const ExactSum& other) const {
  const Canonical a = canonical();
  const Canonical b = other.canonical();
  return a.negative == b.negative && a.base == b.base && a.limbs == b.limbs;
}

std::uint64_t ExactSum::hash() const {
  const Canonical c = canonical();
  std::uint64_t h = fnv1a_u64(c.negative ? 1 : 0);
  h = fnv1a_u64(static_cast<std::uint64_t>(c.base), h);
  for (std::uint32_t l : c.limbs) h = fnv1a_u64(l, h);
  return h;
}

double ExactSum::value() const {
  const Canonical c = canonical();
  if (c.limbs.empty()) return 0.0;
  const int top = static_cast<int>(c.limbs.size()) - 1;
  const int low = top >= 2 ? top - 2 : 0;
  unsigned __int128 t = 0;
  for (int i = top; i >= low; --i) t = (t << 32) | c.limbs[static_cast<std::size_t>(i)];
  bool sticky = false;
  for (int i = 0; i < low; ++i) sticky = sticky || c.limbs[static_cast<std::size_t>(i)] != 0;

  int nbits = 0;
  for (unsigned __int128 probe = t; probe != 0; probe >>= 1) ++nbits;
  int shift = 0;
  std::uint64_t mant = 0;
  if (nbits <= 53) {
    mant = static_cast<std::uint64_t>(t);
  } else {
    shift = nbits - 53;
    mant = static_cast<std::uint64_t>(t >> shift);
    const unsigned __int128 rem = t & ((static_cast<unsigned __int128>(1) << shift) - 1);
    const unsigned __int128 half = static_cast<unsigned __int128>(1) << (shift - 1);
    const bool up = rem > half || (rem == half && (sticky || (mant & 1u) != 0));
    if (up) {
      ++mant;
      if (mant == (std::uint64_t{1} << 53)) {
        mant >>= 1;
        ++shift;
      }
    }
  }
  const double magnitude =
      std::ldexp(static_cast<double>(mant), shift + 32 * (c.base + low) - 1074);
  return c.negative ? -magnitude : magnitude;
}

}  // namespace aqe
