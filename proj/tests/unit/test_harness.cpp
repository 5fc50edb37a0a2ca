#include <doctest.h>

#include <fstream>
#include <functional>

#include <nlohmann/json.hpp>

#include "ddpgfd/demo/scripted_expert.hpp"
#include "ddpgfd/harness/config.hpp"
#include "ddpgfd/harness/experiment.hpp"
#include "temp_dir.hpp"

using namespace ddpgfd;
using harness::ExperimentConfig;
using nlohmann::json;
using testing_support::read_file;
using testing_support::TempDir;
using testing_support::write_file;

namespace {

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

ExperimentConfig tiny_config(const std::filesystem::path& demos) {
  ExperimentConfig c;
  c.demos = demos.string();
  c.agent.actor_hidden = {16, 16};
  c.agent.critic_hidden = {16, 16};
  c.agent.updates_per_env_step = 1;
  c.agent.batch_size = 16;
  c.total_env_steps = 300;
  c.eval_every = 100;
  c.eval_episodes = 4;
  c.seed = 3;
  c.bc.epochs = 5;
  c.bc.hidden = {16, 16};
  return c;
}

// Every column except wall_seconds.
void check_same_rows(const std::vector<harness::MetricsRow>& a, const std::vector<harness::MetricsRow>& b) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].env_steps == b[i].env_steps);
    CHECK(a[i].train_return_mean == b[i].train_return_mean);
    CHECK(a[i].eval_return_mean == b[i].eval_return_mean);
    CHECK(a[i].eval_return_p10 == b[i].eval_return_p10);
    CHECK(a[i].eval_return_p90 == b[i].eval_return_p90);
    CHECK(a[i].eval_success_rate == b[i].eval_success_rate);
    CHECK(a[i].mean_episode_length == b[i].mean_episode_length);
    CHECK(a[i].critic_loss_mean == b[i].critic_loss_mean);
    CHECK(a[i].actor_loss_mean == b[i].actor_loss_mean);
    CHECK(a[i].demo_fraction == b[i].demo_fraction);
  }
}

struct Fixture {
  TempDir dir;
  std::filesystem::path demos = dir / "demos.jsonl";
  Fixture() {
    ExperimentConfig c;
    harness::record_expert_demos(c, 12, demos);
  }
};

}  // namespace

TEST_CASE("config: defaults, unknown keys and round trip") {
  const auto c = harness::config_from_json(json::object());
  CHECK(c.algorithm == harness::Algorithm::ddpgfd);
  CHECK(c.agent.gamma == 0.99);
  CHECK(c.agent.n == 5);
  CHECK(c.replay.per_alpha == 0.3);
  CHECK(c.total_env_steps == 150000);

  CHECK(error_of([] { harness::config_from_json(json{{"agnet", json::object()}}); }).find("agnet") !=
        std::string::npos);
  CHECK(error_of([] { harness::config_from_json(json{{"agent", {{"gama", 0.9}}}}); }).find("agent.gama") !=
        std::string::npos);
  CHECK_THROWS(harness::config_from_json(json{{"algorithm", "ppo"}}));
  CHECK_THROWS(harness::config_from_json(json{{"env", {{"goal_weight", {1.0}}}}}));

  auto d = harness::config_from_json(json{{"agent", {{"lambda1", 0.25}}}, {"reward_mode", "shaped"}, {"seed", 9}});
  CHECK(d.agent.lambda1 == 0.25);
  const auto back = harness::config_from_json(harness::config_to_json(d));
  CHECK(harness::config_to_json(back) == harness::config_to_json(d));
  CHECK(harness::config_hash(back) == harness::config_hash(d));
  CHECK(harness::config_hash(d).size() == 16);
  d.seed = 10;
  CHECK(harness::config_hash(back) != harness::config_hash(d));
}

TEST_CASE("config: resolution and validation") {
  ExperimentConfig c;
  c.resolve();
  CHECK(error_of([&] { c.require_demos(); }).find("demos file") != std::string::npos);
  c.algorithm = harness::Algorithm::bc;
  CHECK_THROWS(c.require_demos());
  TempDir dir;
  c.total_env_steps = 0;
  CHECK_THROWS(harness::run(c, dir / "run"));

  ExperimentConfig ddpg;
  ddpg.algorithm = harness::Algorithm::ddpg;
  ddpg.demos = "ignored.jsonl";
  ddpg.reward_mode = env::RewardMode::shaped;
  ddpg.resolve();
  CHECK(ddpg.replay.eps_demo == 0.0);
  CHECK_FALSE(ddpg.demos.has_value());
  CHECK(ddpg.env.reward_mode == env::RewardMode::shaped);
  CHECK(ddpg.agent.bootstrap_on_success);

  ExperimentConfig bad;
  bad.algorithm = harness::Algorithm::ddpg;
  bad.eval_every = 0;
  CHECK_THROWS(bad.resolve());
  bad.eval_every = 10;
  bad.seed = std::uint64_t{1} << 40;
  CHECK_THROWS(bad.resolve());
}

TEST_CASE("config: files resolve relative demo paths") {
  TempDir dir;
  std::filesystem::create_directories(dir / "sub");
  write_file(dir / "sub/cfg.json", R"({"demos": "d.jsonl", "algorithm": "ddpgfd"})");
  const auto c = harness::load_config(dir / "sub/cfg.json");
  CHECK(std::filesystem::path(*c.demos) == dir / "sub/d.jsonl");
  write_file(dir / "broken.json", "{");
  CHECK_THROWS(harness::load_config(dir / "broken.json"));
}

TEST_CASE("seed blocks never overlap") {
  CHECK(harness::training_episode_seed(0, 0) != harness::evaluation_seed(0));
  CHECK(harness::training_episode_seed(1, 0) != harness::training_episode_seed(0, 1));
  CHECK(harness::evaluation_seed(5) != harness::demonstration_seed(5));
  const std::uint64_t max_seed = (std::uint64_t{1} << 28) - 1;
  CHECK(harness::training_episode_seed(max_seed, 1'000'000) < harness::demonstration_seed(0));
}

TEST_CASE("evaluation: expert succeeds, a zero actor never does") {
  const env::InsertionTask task(env::EnvConfig{});
  demo::ExpertConfig ec;
  ec.jitter = 0.0;
  std::mt19937_64 rng(0);
  const auto expert = harness::evaluate(
      task, [&](const env::EnvState& s, const env::Observation&) { return demo::scripted_expert(task, s, ec, rng); },
      20);
  CHECK(expert.success_rate == 1.0);
  CHECK(expert.return_mean == 10.0);
  CHECK(expert.mean_success_length > 0.0);

  const auto zero = nn::make_mlp({task.observation_dim(), 4, task.action_dim()}, nn::Activation::relu,
                                 nn::Activation::tanh, rng, 0.0);
  const auto idle = harness::evaluate(task, zero, 10);
  CHECK(idle.success_rate == 0.0);
  CHECK(idle.mean_length == task.config().max_steps);
  CHECK(idle.mean_success_length == 0.0);
  CHECK(idle.returns.size() == 10);

  CHECK(harness::percentile({1, 2, 3, 4, 5}, 0.5) == 3.0);
  CHECK(harness::percentile({0, 10}, 0.1) == doctest::Approx(1.0));
}

TEST_CASE_FIXTURE(Fixture, "run: zero steps gives the initial evaluation only") {
  auto c = tiny_config(demos);
  c.total_env_steps = 0;
  const auto r = harness::run(c, dir / "zero");
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].env_steps == 0);
  const auto m = harness::read_metrics(dir / "zero/metrics.csv");
  REQUIRE(m.rows.size() == 1);
  CHECK(std::filesystem::exists(dir / "zero/checkpoint.json"));
}

TEST_CASE_FIXTURE(Fixture, "run: outputs, audit header and the resolved config echo") {
  auto c = tiny_config(demos);
  const auto r = harness::run(c, dir / "a");
  REQUIRE(r.rows.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(r.rows[i].env_steps == 100 * i);
  for (std::size_t i = 1; i < 4; ++i) {
    CHECK(r.rows[i].demo_fraction > 0.0);
    CHECK(r.rows[i].critic_loss_mean > 0.0);
  }

  const auto m = harness::read_metrics(r.metrics_path);
  REQUIRE(m.rows.size() == 4);
  check_same_rows(m.rows, r.rows);
  auto resolved = c;
  resolved.resolve();
  bool hash_line = false, audit_line = false;
  for (const auto& h : m.header) {
    if (h == "config_hash " + harness::config_hash(resolved)) hash_line = true;
    if (h.rfind("audit preload_transitions ", 0) == 0) {
      audit_line = true;
      CHECK(h.find("demo_episodes 12") != std::string::npos);
    }
  }
  CHECK(hash_line);
  CHECK(audit_line);

  const auto echo = json::parse(read_file(dir / "a/resolved_config.json"));
  CHECK(echo == harness::config_to_json(resolved));
  CHECK(harness::config_hash(harness::config_from_json(echo)) == harness::config_hash(resolved));

  const auto actor = harness::load_checkpoint_actor(r.checkpoint_path);
  CHECK(actor == r.actor);
}

TEST_CASE_FIXTURE(Fixture, "run: identical configs reproduce every metric except wall time") {
  auto c = tiny_config(demos);
  const auto a = harness::run(c, dir / "a");
  const auto b = harness::run(c, dir / "b");
  check_same_rows(a.rows, b.rows);
  CHECK(a.actor == b.actor);
  c.seed = 4;
  const auto other = harness::run(c, dir / "c");
  CHECK_FALSE(other.actor == a.actor);
}

TEST_CASE_FIXTURE(Fixture, "run: ddpg ignores demonstrations, bc trains once") {
  auto c = tiny_config(demos);
  c.algorithm = harness::Algorithm::ddpg;
  const auto r = harness::run(c, dir / "ddpg");
  for (const auto& row : r.rows) CHECK(row.demo_fraction == 0.0);
  const auto m = harness::read_metrics(r.metrics_path);
  bool audit = false;
  for (const auto& h : m.header) audit |= h.rfind("audit preload_transitions 0 demo_episodes 0", 0) == 0;
  CHECK(audit);

  c.algorithm = harness::Algorithm::bc;
  const auto bc = harness::run(c, dir / "bc");
  REQUIRE(bc.rows.size() == 1);
  CHECK(bc.rows[0].env_steps == 0);
  CHECK(harness::load_checkpoint_actor(bc.checkpoint_path) == bc.actor);
}

TEST_CASE_FIXTURE(Fixture, "run: a missing or mismatched demo file fails before training") {
  auto c = tiny_config(dir / "nope.jsonl");
  CHECK_THROWS(harness::run(c, dir / "x"));
  c = tiny_config(demos);
  c.env.variant = env::Variant::clip;
  CHECK(error_of([&] { harness::run(c, dir / "y"); }).find("peg") != std::string::npos);
}

TEST_CASE_FIXTURE(Fixture, "ablation: the full count matches a plain run; too few demos is an error") {
  auto c = tiny_config(demos);
  c.total_env_steps = 200;
  const auto plain = harness::run(c, dir / "plain");
  const auto entries = harness::ablation_demo_count(c, {2, 12}, dir / "abl");
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].count == 2);
  const auto full = harness::read_metrics(entries[1].metrics_path);
  check_same_rows(full.rows, plain.rows);
  CHECK(entries[1].final_success == plain.rows.back().eval_success_rate);
  const auto two = harness::read_metrics(entries[0].metrics_path);
  bool audit = false;
  for (const auto& h : two.header) audit |= h.find("demo_episodes 2 ") != std::string::npos;
  CHECK(audit);
  CHECK(std::filesystem::exists(dir / "abl/ablation.csv"));

  CHECK(error_of([&] { harness::ablation_demo_count(c, {13}, dir / "abl2"); }).find("13") != std::string::npos);
  CHECK_THROWS(harness::ablation_demo_count(c, {0}, dir / "abl3"));
}

TEST_CASE("metrics: rows round-trip and a truncated file still parses") {
  TempDir dir;
  harness::MetricsRow row;
  row.env_steps = 2500;
  row.wall_seconds = 1.25;
  row.eval_return_mean = 3.0 / 7.0;
  row.critic_loss_mean = 1e-7;
  const auto back = harness::parse_row(harness::format_row(row));
  CHECK(back.env_steps == 2500);
  CHECK(back.eval_return_mean == row.eval_return_mean);
  CHECK(back.critic_loss_mean == row.critic_loss_mean);
  CHECK_THROWS(harness::parse_row("1,2,3"));

  std::string text = "# ddpgfd metrics\n# " + std::string(harness::kMetricsColumns) + "\n";
  for (int i = 0; i < 3; ++i) {
    row.env_steps = 100 * i;
    text += harness::format_row(row) + "\n";
  }
  write_file(dir / "m.csv", text.substr(0, text.size() - 10));
  const auto m = harness::read_metrics(dir / "m.csv");
  CHECK(m.rows.size() == 2);
  CHECK(m.header.front() == "ddpgfd metrics");
}

TEST_CASE("export: statistics across runs and input checks") {
  TempDir dir;
  auto write = [&](const std::string& name, const std::vector<std::pair<double, double>>& vals) {
    std::string text = "# " + std::string(harness::kMetricsColumns) + "\n";
    std::uint64_t step = 0;
    for (const auto& [succ, ret] : vals) {
      harness::MetricsRow r;
      r.env_steps = step;
      r.eval_success_rate = succ;
      r.eval_return_mean = ret;
      text += harness::format_row(r) + "\n";
      step += 100;
    }
    write_file(dir / name, text);
    return dir / name;
  };
  const auto a = write("a.csv", {{0.0, 1.0}, {0.5, 4.0}});
  const auto single = harness::export_curves({a});
  REQUIRE(single.size() == 2);
  CHECK(single[1].success_mean == 0.5);
  CHECK(single[1].success_p10 == 0.5);
  CHECK(single[1].return_p90 == 4.0);

  const auto b = write("b.csv", {{0.0, 2.0}, {1.0, 8.0}});
  const auto c = write("c.csv", {{0.0, 3.0}, {0.0, 0.0}});
  const auto curves = harness::export_curves({a, b, c});
  REQUIRE(curves.size() == 2);
  CHECK(curves[1].env_steps == 100);
  CHECK(curves[1].success_mean == doctest::Approx(0.5));
  CHECK(curves[1].return_mean == doctest::Approx(4.0));
  for (const auto& r : curves) {
    CHECK(r.success_p10 <= r.success_mean);
    CHECK(r.success_mean <= r.success_p90);
    CHECK(r.return_p10 <= r.return_mean);
    CHECK(r.return_mean <= r.return_p90);
  }
  harness::write_curves(curves, dir / "curves.csv");
  CHECK(read_file(dir / "curves.csv").find("env_steps") != std::string::npos);

  CHECK_THROWS(harness::export_curves({}));
  const auto shorter = write("d.csv", {{0.0, 1.0}});
  CHECK_THROWS(harness::export_curves({a, shorter}));
  write_file(dir / "empty.csv", "# " + std::string(harness::kMetricsColumns) + "\n");
  CHECK_THROWS(harness::export_curves({dir / "empty.csv"}));
}
