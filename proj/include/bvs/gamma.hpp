#pragma once

#include <cassert>
#include <cstdint>
#include <vector>

namespace bvs {

//! Inclusion indicator over p variables with a cached popcount.
class GammaVector {
 public:
  GammaVector() = default;
  explicit GammaVector(int p) : bits_(static_cast<std::size_t>(p), 0) {}

  int size() const { return static_cast<int>(bits_.size()); }
  int count() const { return count_; }
  bool empty_model() const { return count_ == 0; }

  bool test(int j) const { return bits_[static_cast<std::size_t>(j)] != 0; }

  void set(int j, bool value) {
    auto& b = bits_[static_cast<std::size_t>(j)];
    count_ += static_cast<int>(value) - static_cast<int>(b);
    b = value ? 1 : 0;
  }

  void flip(int j) { set(j, !test(j)); }

  std::vector<int> active() const {
    std::vector<int> idx;
    idx.reserve(static_cast<std::size_t>(count_));
    for (int j = 0; j < size(); ++j)
      if (bits_[static_cast<std::size_t>(j)]) idx.push_back(j);
    return idx;
  }

  friend bool operator==(const GammaVector& a, const GammaVector& b) {
    return a.bits_ == b.bits_;
  }

 private:
  std::vector<std::uint8_t> bits_;
  int count_ = 0;
};

inline int hamming_distance(const GammaVector& a, const GammaVector& b) {
  assert(a.size() == b.size());
  int d = 0;
  for (int j = 0; j < a.size(); ++j) d += (a.test(j) != b.test(j)) ? 1 : 0;
  return d;
}

}  // namespace bvs
