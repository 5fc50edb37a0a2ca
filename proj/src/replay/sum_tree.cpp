#include "ddpgfd/replay/sum_tree.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace ddpgfd::replay {

SumTree::SumTree(std::size_t min_leaves)
    : capacity_(std::bit_ceil(min_leaves < 1 ? std::size_t{1} : min_leaves)), nodes_(2 * capacity_, 0.0) {}

void SumTree::set(std::size_t index, double value) {
  if (index >= capacity_) throw std::out_of_range("sum tree leaf index out of range");
  if (!(value >= 0.0) || !std::isfinite(value)) throw std::invalid_argument("sum tree values must be finite and non-negative");
  std::size_t node = capacity_ + index;
  nodes_[node] = value;
  // Recompute rather than add deltas so every parent is exactly left + right.
  for (node /= 2; node >= 1; node /= 2) nodes_[node] = nodes_[2 * node] + nodes_[2 * node + 1];
}

std::size_t SumTree::find(double prefix) const {
  if (!(total() > 0.0)) throw std::logic_error("sum tree is empty");
  std::size_t node = 1;
  while (node < capacity_) {
    const std::size_t left = 2 * node;
    const double left_sum = nodes_[left];
    if ((prefix < left_sum && left_sum > 0.0) || nodes_[left + 1] <= 0.0) {
      node = left;
    } else {
      prefix -= left_sum;
      node = left + 1;
    }
  }
  return node - capacity_;
}

}  // namespace ddpgfd::replay
