// Unsigned big integers for exact sequence counting and index arithmetic in
// the matchers. Little-endian 64-bit limbs; only the operations the ranking
// algorithms need.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace shapinglab {

class BigUint {
 public:
  BigUint() = default;
  BigUint(std::uint64_t v) {  // NOLINT: implicit by design
    if (v) limbs_.push_back(v);
  }

  bool is_zero() const { return limbs_.empty(); }

  static int compare(const BigUint& a, const BigUint& b) {
    if (a.limbs_.size() != b.limbs_.size())
      return a.limbs_.size() < b.limbs_.size() ? -1 : 1;
    for (std::size_t i = a.limbs_.size(); i-- > 0;)
      if (a.limbs_[i] != b.limbs_[i]) return a.limbs_[i] < b.limbs_[i] ? -1 : 1;
    return 0;
  }
  friend bool operator<(const BigUint& a, const BigUint& b) { return compare(a, b) < 0; }
  friend bool operator<=(const BigUint& a, const BigUint& b) { return compare(a, b) <= 0; }
  friend bool operator==(const BigUint& a, const BigUint& b) { return compare(a, b) == 0; }
  friend bool operator!=(const BigUint& a, const BigUint& b) { return compare(a, b) != 0; }
  friend bool operator>(const BigUint& a, const BigUint& b) { return compare(a, b) > 0; }
  friend bool operator>=(const BigUint& a, const BigUint& b) { return compare(a, b) >= 0; }

  BigUint& operator+=(const BigUint& o) {
    if (limbs_.size() < o.limbs_.size()) limbs_.resize(o.limbs_.size(), 0);
    unsigned __int128 carry = 0;
    for (std::size_t i = 0; i < limbs_.size(); ++i) {
      unsigned __int128 s = carry + limbs_[i];
      if (i < o.limbs_.size()) s += o.limbs_[i];
      limbs_[i] = std::uint64_t(s);
      carry = s >> 64;
    }
    if (carry) limbs_.push_back(std::uint64_t(carry));
    return *this;
  }
  friend BigUint operator+(BigUint a, const BigUint& b) { return a += b; }

  // requires *this >= o
  BigUint& operator-=(const BigUint& o) {
    if (*this < o) throw std::underflow_error("BigUint subtraction underflow");
    std::uint64_t borrow = 0;
    for (std::size_t i = 0; i < limbs_.size(); ++i) {
      unsigned __int128 cur = (unsigned __int128)limbs_[i];
      unsigned __int128 sub = borrow;
      if (i < o.limbs_.size()) sub += o.limbs_[i];
      if (cur >= sub) {
        limbs_[i] = std::uint64_t(cur - sub);
        borrow = 0;
      } else {
        limbs_[i] = std::uint64_t((((unsigned __int128)1 << 64) + cur) - sub);
        borrow = 1;
      }
    }
    trim();
    return *this;
  }
  friend BigUint operator-(BigUint a, const BigUint& b) { return a -= b; }

  BigUint& mul_small(std::uint64_t m) {
    if (m == 0 || is_zero()) {
      limbs_.clear();
      return *this;
    }
    unsigned __int128 carry = 0;
    for (auto& l : limbs_) {
      unsigned __int128 p = (unsigned __int128)l * m + carry;
      l = std::uint64_t(p);
      carry = p >> 64;
    }
    if (carry) limbs_.push_back(std::uint64_t(carry));
    return *this;
  }

  // floor division by a small divisor; returns remainder
  std::uint64_t div_small(std::uint64_t d) {
    if (d == 0) throw std::invalid_argument("BigUint division by zero");
    unsigned __int128 rem = 0;
    for (std::size_t i = limbs_.size(); i-- > 0;) {
      unsigned __int128 cur = (rem << 64) | limbs_[i];
      limbs_[i] = std::uint64_t(cur / d);
      rem = cur % d;
    }
    trim();
    return std::uint64_t(rem);
  }

  BigUint& operator<<=(unsigned sh) {
    if (is_zero()) return *this;
    const unsigned limb_sh = sh / 64, bit_sh = sh % 64;
    limbs_.insert(limbs_.begin(), limb_sh, 0);
    if (bit_sh) {
      std::uint64_t carry = 0;
      for (std::size_t i = limb_sh; i < limbs_.size(); ++i) {
        const std::uint64_t nxt = limbs_[i] >> (64 - bit_sh);
        limbs_[i] = (limbs_[i] << bit_sh) | carry;
        carry = nxt;
      }
      if (carry) limbs_.push_back(carry);
    }
    return *this;
  }

  // number of bits; 0 for zero
  std::size_t bit_length() const {
    if (is_zero()) return 0;
    std::size_t bits = 64 * (limbs_.size() - 1);
    std::uint64_t top = limbs_.back();
    while (top) {
      ++bits;
      top >>= 1;
    }
    return bits;
  }

  bool bit(std::size_t i) const {
    const std::size_t limb = i / 64;
    if (limb >= limbs_.size()) return false;
    return (limbs_[limb] >> (i % 64)) & 1;
  }

  void set_bit(std::size_t i) {
    const std::size_t limb = i / 64;
    if (limb >= limbs_.size()) limbs_.resize(limb + 1, 0);
    limbs_[limb] |= std::uint64_t(1) << (i % 64);
  }

  std::uint64_t to_u64() const {
    if (limbs_.size() > 1) throw std::overflow_error("BigUint does not fit u64");
    return limbs_.empty() ? 0 : limbs_[0];
  }

  // log2 with ~15 significant digits, -inf convention not supported (throws)
  double log2() const {
    if (is_zero()) throw std::domain_error("log2 of zero");
    const std::size_t bits = bit_length();
    // assemble the top <=64 bits as a double mantissa
    double top = 0.0;
    std::size_t got = 0;
    for (std::size_t i = bits; i-- > 0 && got < 64; ++got)
      top = top * 2.0 + (bit(i) ? 1.0 : 0.0);
    return std::log2(top) + double(bits - got);
  }

  std::string to_string() const {  // decimal, for diagnostics
    if (is_zero()) return "0";
    BigUint tmp = *this;
    std::string out;
    while (!tmp.is_zero()) {
      out.push_back(char('0' + tmp.div_small(10)));
    }
    return {out.rbegin(), out.rend()};
  }

 private:
  void trim() {
    while (!limbs_.empty() && limbs_.back() == 0) limbs_.pop_back();
  }
  std::vector<std::uint64_t> limbs_;
};

// multinomial coefficient D! / prod(counts!) computed by incremental
// multiply/divide so every intermediate stays integral
inline BigUint multinomial(const std::vector<int>& counts) {
  BigUint r(1);
  std::uint64_t n = 0;
  for (int c : counts) {
    if (c < 0) throw std::invalid_argument("negative multinomial count");
    for (std::uint64_t k = 1; k <= std::uint64_t(c); ++k) {
      ++n;
      r.mul_small(n);
      const std::uint64_t rem = r.div_small(k);
      if (rem) throw std::logic_error("multinomial: non-exact division");
    }
  }
  return r;
}

}  // namespace shapinglab
