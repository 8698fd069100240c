#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dbnapprox/errors.hpp"

namespace dbnapprox {

// Axis-aligned box in R^d. Used both as a density support hint and as a
// quadrature domain.
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  Box() = default;
  Box(std::vector<double> lo_, std::vector<double> hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
    if (lo.size() != hi.size()) throw PreconditionError("box bounds dimension mismatch");
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (!(lo[i] < hi[i])) throw PreconditionError("box has empty extent on some axis");
  }

  static Box cube(int dim, double lo, double hi) {
    return Box(std::vector<double>(static_cast<std::size_t>(dim), lo),
               std::vector<double>(static_cast<std::size_t>(dim), hi));
  }

  int dim() const { return static_cast<int>(lo.size()); }

  double volume() const {
    double v = 1.0;
    for (std::size_t i = 0; i < lo.size(); ++i) v *= hi[i] - lo[i];
    return v;
  }

  bool contains(std::span<const double> x) const {
    if (x.size() != lo.size()) return false;
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
  }

  Box padded(double amount) const {
    Box b = *this;
    for (std::size_t i = 0; i < lo.size(); ++i) {
      b.lo[i] -= amount;
      b.hi[i] += amount;
    }
    return b;
  }
};

inline Box union_box(const Box& a, const Box& b) {
  if (a.dim() != b.dim()) throw PreconditionError("box union dimension mismatch");
  Box u = a;
  for (int i = 0; i < a.dim(); ++i) {
    if (b.lo[i] < u.lo[i]) u.lo[i] = b.lo[i];
    if (b.hi[i] > u.hi[i]) u.hi[i] = b.hi[i];
  }
  return u;
}

}  // namespace dbnapprox
