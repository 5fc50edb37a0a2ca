#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "ddpgfd/replay/sum_tree.hpp"
#include "ddpgfd/replay/transition.hpp"

namespace ddpgfd::replay {

struct ReplayConfig {
  std::size_t capacity = 1'000'000;
  double per_alpha = 0.3;
  double per_beta = 1.0;
  double eps_per = 1e-3;
  double eps_demo = 0.2;
  int n = 5;

  void validate() const;
};

struct SampledBatch {
  std::vector<std::size_t> slots;
  std::vector<const Transition*> transitions;  // valid until the next insert
  std::vector<double> weights;                 // importance weights, max = 1
  std::vector<double> probabilities;
};

// Prioritized buffer with a permanent demonstration region [0, demo_count)
// followed by a ring of agent transitions. Leaves store p^alpha, so the root
// is the sampling normaliser.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(ReplayConfig config);

  const ReplayConfig& config() const { return config_; }

  // Inserts demonstration transitions; only valid on an empty buffer.
  void preload_demos(const std::vector<Transition>& demos);
  // Inserts an agent transition, evicting the oldest agent transition when the
  // agent region is full. Returns the slot used.
  std::size_t insert(Transition t);

  // Stratified proportional sampling of batch_size slots.
  SampledBatch sample(std::size_t batch_size, std::mt19937_64& rng) const;
  void update_priorities(const std::vector<std::size_t>& slots, const std::vector<double>& priorities);

  std::size_t size() const { return slots_.size(); }
  std::size_t demo_count() const { return demo_count_; }
  std::size_t agent_count() const { return slots_.size() - demo_count_; }
  bool empty() const { return slots_.empty(); }
  const Transition& at(std::size_t slot) const { return slots_.at(slot); }
  double priority(std::size_t slot) const { return priorities_.at(slot); }
  double probability(std::size_t slot) const;
  double max_priority() const { return max_priority_; }
  const SumTree& tree() const { return tree_; }

 private:
  void set_priority(std::size_t slot, double p);

  ReplayConfig config_;
  SumTree tree_;
  std::vector<Transition> slots_;
  std::vector<double> priorities_;  // raw p_i, before the alpha exponent
  std::size_t demo_count_ = 0;
  std::size_t next_agent_ = 0;  // ring cursor, offset from demo_count_
  double max_priority_ = 1.0;
};

}  // namespace ddpgfd::replay
