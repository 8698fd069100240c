#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

namespace dbnapprox {

// Streaming pairwise summation (binary-counter scheme). The reduction tree is a
// fixed function of the insertion order, so a sum over a node grid is bitwise
// reproducible and does not depend on how the grid was chunked across workers,
// as long as per-chunk results are combined in chunk order.
class PairwiseAccumulator {
 public:
  void add(double x) {
    std::uint64_t mask = count_;
    int level = 0;
    while (mask & 1u) {
      x += slots_[level];
      slots_[level] = 0.0;
      mask >>= 1;
      ++level;
    }
    slots_[level] = x;
    ++count_;
  }

  // Combines partial sums from the fewest-addend level upward.
  double total() const {
    double s = 0.0;
    for (int level = 0; level < 64; ++level) s += slots_[level];
    return s;
  }

  std::uint64_t count() const { return count_; }

 private:
  std::array<double, 64> slots_{};
  std::uint64_t count_ = 0;
};

}  // namespace dbnapprox
