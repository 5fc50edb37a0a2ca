#pragma once

#include <cstddef>
#include <vector>

namespace ddpgfd::replay {

// Binary sum tree over a power-of-two number of leaves. Node 1 is the root,
// node i has children 2i and 2i+1, leaves occupy [capacity, 2 * capacity).
class SumTree {
 public:
  explicit SumTree(std::size_t min_leaves);

  std::size_t capacity() const { return capacity_; }
  double total() const { return nodes_[1]; }
  double leaf(std::size_t index) const { return nodes_[capacity_ + index]; }
  void set(std::size_t index, double value);

  // Leaf whose cumulative range contains prefix, prefix in [0, total()).
  // Never returns a zero-valued leaf while total() > 0.
  std::size_t find(double prefix) const;

  // Raw node array (index 0 unused), for consistency checks.
  const std::vector<double>& nodes() const { return nodes_; }

 private:
  std::size_t capacity_;
  std::vector<double> nodes_;
};

}  // namespace ddpgfd::replay
