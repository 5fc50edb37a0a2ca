#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

#include "ddpgfd/replay/nstep.hpp"
#include "ddpgfd/replay/replay_buffer.hpp"
#include "ddpgfd/replay/sum_tree.hpp"
#include "nstep_oracle.hpp"

using namespace ddpgfd::replay;

namespace {

Transition tagged(double tag, bool demo = false) {
  Transition t;
  t.state = {tag};
  t.action = {0.0};
  t.next_state = {tag};
  t.discount_pow = 0.99;
  t.is_demo = demo;
  return t;
}

ReplayConfig small_config(std::size_t capacity) {
  ReplayConfig c;
  c.capacity = capacity;
  return c;
}

std::vector<double> frequencies(const ReplayBuffer& buf, std::size_t draws, std::mt19937_64& rng,
                                std::size_t batch = 64) {
  std::vector<double> f(buf.size(), 0.0);
  std::size_t done = 0;
  while (done < draws) {
    const auto b = buf.sample(batch, rng);
    for (auto s : b.slots) f[s] += 1.0;
    done += batch;
  }
  for (auto& v : f) v /= static_cast<double>(done);
  return f;
}

}  // namespace

TEST_CASE("sum tree: root equals the brute-force leaf sum after random updates") {
  SumTree tree(16);
  CHECK(tree.capacity() == 16);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<double> leaves(16, 0.0);
  for (int i = 0; i < 10000; ++i) {
    const std::size_t k = rng() % 16;
    leaves[k] = u(rng);
    tree.set(k, leaves[k]);
    double sum = 0.0;
    for (double v : leaves) sum += v;
    REQUIRE(std::abs(tree.total() - sum) <= 1e-9 * sum);
  }
  const auto& nodes = tree.nodes();
  for (std::size_t i = 1; i < tree.capacity(); ++i) {
    CHECK(std::abs(nodes[i] - (nodes[2 * i] + nodes[2 * i + 1])) <= 1e-9 * std::max(1.0, nodes[i]));
  }
}

TEST_CASE("sum tree: zero leaves are never found, equal leaves are uniform") {
  SumTree tree(5);
  CHECK(tree.capacity() == 8);
  for (std::size_t i = 0; i < 5; ++i) tree.set(i, 1.0);
  tree.set(2, 0.0);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> counts(8, 0.0);
  const int draws = 1000000;
  for (int i = 0; i < draws; ++i) counts[tree.find(u(rng) * tree.total())] += 1;
  CHECK(counts[2] == 0.0);
  for (std::size_t i : {0, 1, 3, 4}) CHECK(std::abs(counts[i] / draws - 0.25) < 0.01);
  for (std::size_t i = 5; i < 8; ++i) CHECK(counts[i] == 0.0);
  // Boundary prefixes.
  CHECK(tree.find(0.0) == 0);
  CHECK(tree.find(std::nextafter(tree.total(), 0.0)) == 4);
}

TEST_CASE("sampling: single element always drawn with unit weight") {
  ReplayBuffer buf(small_config(8));
  buf.insert(tagged(1));
  std::mt19937_64 rng(3);
  const auto b = buf.sample(16, rng);
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(b.slots[i] == 0);
    CHECK(b.weights[i] == 1.0);
  }
}

TEST_CASE("sampling: equal priorities split evenly, (1,3) split by p^alpha") {
  std::mt19937_64 rng(4);
  {
    ReplayBuffer buf(small_config(4));
    buf.insert(tagged(0));
    buf.insert(tagged(1));
    const auto f = frequencies(buf, 1000000, rng);
    CHECK(std::abs(f[0] - 0.5) < 0.01);
  }
  {
    ReplayBuffer buf(small_config(4));
    buf.insert(tagged(0));
    buf.insert(tagged(1));
    buf.update_priorities({0, 1}, {1.0, 3.0});
    const double p0 = 1.0 / (1.0 + std::pow(3.0, 0.3));
    CHECK(p0 == doctest::Approx(0.4183).epsilon(1e-3));
    CHECK(buf.probability(0) == doctest::Approx(p0).epsilon(1e-12));
    const auto f = frequencies(buf, 1000000, rng);
    CHECK(std::abs(f[0] - p0) < 0.005);
    CHECK(std::abs(f[1] - (1 - p0)) < 0.005);
  }
}

TEST_CASE("importance weights: w * P * N is constant before normalisation") {
  ReplayBuffer buf(small_config(32));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  std::vector<std::size_t> slots;
  std::vector<double> pr;
  for (int i = 0; i < 20; ++i) {
    slots.push_back(buf.insert(tagged(i)));
    pr.push_back(u(rng));
  }
  buf.update_priorities(slots, pr);
  const auto b = buf.sample(64, rng);
  double max_raw = 0.0;
  for (std::size_t i = 0; i < b.slots.size(); ++i) {
    CHECK(b.probabilities[i] == doctest::Approx(buf.probability(b.slots[i])));
    max_raw = std::max(max_raw, 1.0 / (20.0 * b.probabilities[i]));
  }
  double max_w = 0.0;
  for (std::size_t i = 0; i < b.slots.size(); ++i) {
    // Normalised weight times P * N equals 1 / max raw weight for every row.
    CHECK(b.weights[i] * b.probabilities[i] * 20.0 == doctest::Approx(1.0 / max_raw).epsilon(1e-12));
    max_w = std::max(max_w, b.weights[i]);
  }
  CHECK(max_w == 1.0);
}

TEST_CASE("insert: first agent slot, max-priority initialisation, probability positive") {
  ReplayBuffer buf(small_config(16));
  buf.preload_demos({tagged(-1, true), tagged(-2, true)});
  const auto slot = buf.insert(tagged(7));
  CHECK(slot == 2);
  CHECK(buf.probability(slot) > 0.0);
  buf.update_priorities({0}, {5.0});
  const auto next = buf.insert(tagged(8));
  CHECK(buf.priority(next) == 5.0);
  CHECK_FALSE(buf.at(next).is_demo);
  CHECK(buf.at(0).is_demo);
}

TEST_CASE("demo permanence: ring eviction never touches demonstrations") {
  const std::size_t capacity = 64;
  ReplayBuffer buf(small_config(capacity));
  std::vector<Transition> demos;
  for (int i = 0; i < 10; ++i) demos.push_back(tagged(-1 - i, true));
  buf.preload_demos(demos);
  for (int i = 0; i < static_cast<int>(2 * capacity); ++i) buf.insert(tagged(i));
  CHECK(buf.size() == capacity);
  CHECK(buf.demo_count() == 10);
  for (int i = 0; i < 10; ++i) {
    CHECK(buf.at(i).state[0] == -1 - i);
    CHECK(buf.probability(i) > 0.0);
  }
  // Agent region holds exactly the newest capacity - 10 agent transitions.
  std::set<double> agent_tags;
  for (std::size_t s = 10; s < capacity; ++s) agent_tags.insert(buf.at(s).state[0]);
  CHECK(agent_tags.size() == capacity - 10);
  CHECK(*agent_tags.begin() == 2 * capacity - (capacity - 10));
}

TEST_CASE("preload and sampling errors") {
  ReplayBuffer empty(small_config(8));
  std::mt19937_64 rng(6);
  CHECK_THROWS_AS(empty.sample(4, rng), std::logic_error);
  empty.preload_demos({});
  CHECK(empty.size() == 0);
  CHECK_THROWS_AS(empty.sample(4, rng), std::logic_error);

  ReplayBuffer small(small_config(4));
  CHECK_THROWS_AS(small.preload_demos(std::vector<Transition>(4, tagged(0))), std::invalid_argument);

  ReplayBuffer used(small_config(8));
  used.insert(tagged(0));
  CHECK_THROWS_AS(used.preload_demos({tagged(1)}), std::logic_error);
  CHECK_THROWS_AS(used.update_priorities({0}, {-1.0}), std::invalid_argument);

  ReplayConfig bad;
  bad.per_beta = 1.5;
  CHECK_THROWS_AS(ReplayBuffer{bad}, std::invalid_argument);
}

TEST_CASE("n-step: worked examples") {
  auto step = [](double r, bool terminal) {
    EpisodeStep s;
    s.obs = {0.0};
    s.action = {0.0};
    s.reward = r;
    s.next_obs = {1.0};
    s.terminal = terminal;
    return s;
  };
  {
    const auto out = assemble_nstep({step(0, false), step(0, false), step(10, true)}, 3, 0.9);
    REQUIRE(out.size() == 3);
    CHECK(out[0].reward_sum == doctest::Approx(8.1).epsilon(1e-12));
    CHECK(out[0].discount_pow == 0.0);
  }
  {
    std::vector<EpisodeStep> ep(10, step(1.0, false));
    const auto out = assemble_nstep(ep, 5, 0.9);
    CHECK(out[0].reward_sum == doctest::Approx(4.0951).epsilon(1e-12));
    CHECK(out[0].discount_pow == doctest::Approx(0.59049).epsilon(1e-12));
    CHECK(out.size() == 10);
  }
  {
    std::vector<EpisodeStep> ep{step(1, false), step(2, false), step(3, true)};
    const auto out = assemble_nstep(ep, 1, 0.9);
    REQUIRE(out.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(out[i] == one_step_transition(ep[i], 0.9, false));
  }
}

TEST_CASE("n-step: matches the brute-force reference on random episodes") {
  std::mt19937_64 rng(7);
  for (int e = 0; e < 100; ++e) {
    const int len = 1 + static_cast<int>(rng() % 30);
    const int n = 1 + static_cast<int>(rng() % 7);
    const double gamma = std::uniform_real_distribution<double>(0.5, 0.999)(rng);
    const auto ep = testing_support::random_episode(rng, len);
    const auto got = assemble_nstep(ep, n, gamma);
    const auto want = testing_support::brute_force_nstep(ep, n, gamma);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].state == want[i].state);
      CHECK(got[i].next_state == want[i].next_state);
      CHECK(std::abs(got[i].reward_sum - want[i].reward_sum) <= 1e-12);
      CHECK(std::abs(got[i].discount_pow - want[i].discount_pow) <= 1e-12);
      CHECK(got[i].n_steps == n);
    }
  }
}

TEST_CASE("n-step assembler rejects mixed episodes and steps after a terminal") {
  std::mt19937_64 rng(8);
  const auto ep = testing_support::random_episode(rng, 3);
  NStepAssembler a(3, 0.9);
  a.push(ep[0], 1);
  CHECK_THROWS_AS(a.push(ep[1], 2), std::invalid_argument);

  NStepAssembler b(3, 0.9);
  auto term = ep[0];
  term.terminal = true;
  b.push(term, 1);
  CHECK_THROWS_AS(b.push(ep[1], 1), std::invalid_argument);
}
