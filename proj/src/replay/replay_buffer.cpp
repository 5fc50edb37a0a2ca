#include "ddpgfd/replay/replay_buffer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ddpgfd::replay {

void ReplayConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid replay config: ") + what);
  };
  require(capacity > 0, "capacity must be positive");
  require(per_alpha >= 0.0, "alpha must be non-negative");
  require(per_beta >= 0.0 && per_beta <= 1.0, "beta must lie in [0, 1]");
  require(eps_per > 0.0, "eps_per must be positive");
  require(eps_demo >= 0.0, "eps_demo must be non-negative");
  require(n >= 1, "n must be at least 1");
}

ReplayBuffer::ReplayBuffer(ReplayConfig config) : config_(config), tree_(config.capacity) {
  config_.validate();
}

void ReplayBuffer::set_priority(std::size_t slot, double p) {
  priorities_[slot] = p;
  tree_.set(slot, std::pow(p, config_.per_alpha));
}

void ReplayBuffer::preload_demos(const std::vector<Transition>& demos) {
  if (!slots_.empty()) throw std::logic_error("preload_demos requires an empty buffer");
  if (demos.size() >= config_.capacity) {
    throw std::invalid_argument("replay capacity " + std::to_string(config_.capacity) +
                                " must exceed the demonstration count " + std::to_string(demos.size()));
  }
  slots_.reserve(demos.size());
  priorities_.reserve(demos.size());
  for (const auto& d : demos) {
    slots_.push_back(d);
    slots_.back().is_demo = true;
    priorities_.push_back(0.0);
    set_priority(slots_.size() - 1, max_priority_);
  }
  demo_count_ = slots_.size();
}

std::size_t ReplayBuffer::insert(Transition t) {
  t.is_demo = false;
  const std::size_t agent_capacity = config_.capacity - demo_count_;
  std::size_t slot;
  if (slots_.size() < config_.capacity) {
    slot = slots_.size();
    slots_.push_back(std::move(t));
    priorities_.push_back(0.0);
  } else {
    slot = demo_count_ + next_agent_;
    slots_[slot] = std::move(t);
  }
  next_agent_ = (next_agent_ + 1) % agent_capacity;
  set_priority(slot, max_priority_);
  return slot;
}

double ReplayBuffer::probability(std::size_t slot) const {
  if (slot >= slots_.size()) throw std::out_of_range("replay slot out of range");
  return tree_.leaf(slot) / tree_.total();
}

SampledBatch ReplayBuffer::sample(std::size_t batch_size, std::mt19937_64& rng) const {
  if (slots_.empty()) throw std::logic_error("cannot sample from an empty replay buffer");
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  const double total = tree_.total();
  const double segment = total / static_cast<double>(batch_size);
  const double n = static_cast<double>(slots_.size());
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SampledBatch batch;
  batch.slots.reserve(batch_size);
  double max_w = 0.0;
  for (std::size_t k = 0; k < batch_size; ++k) {
    const double prefix = std::min((static_cast<double>(k) + unit(rng)) * segment, std::nextafter(total, 0.0));
    const std::size_t slot = tree_.find(prefix);
    const double p = tree_.leaf(slot) / total;
    const double w = std::pow(1.0 / (n * p), config_.per_beta);
    batch.slots.push_back(slot);
    batch.transitions.push_back(&slots_[slot]);
    batch.probabilities.push_back(p);
    batch.weights.push_back(w);
    max_w = std::max(max_w, w);
  }
  for (auto& w : batch.weights) w /= max_w;
  return batch;
}

void ReplayBuffer::update_priorities(const std::vector<std::size_t>& slots, const std::vector<double>& priorities) {
  if (slots.size() != priorities.size()) throw std::invalid_argument("slot/priority count mismatch");
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i] >= slots_.size()) throw std::out_of_range("replay slot out of range");
    if (!(priorities[i] >= 0.0) || !std::isfinite(priorities[i])) {
      throw std::invalid_argument("priorities must be finite and non-negative");
    }
  }
  for (std::size_t i = 0; i < slots.size(); ++i) {
    set_priority(slots[i], priorities[i]);
    max_priority_ = std::max(max_priority_, priorities[i]);
  }
}

}  // namespace ddpgfd::replay
