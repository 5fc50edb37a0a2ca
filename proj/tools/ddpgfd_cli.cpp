#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ddpgfd/harness/experiment.hpp"
#include "ddpgfd/harness/teleop.hpp"

using namespace ddpgfd;

namespace {

std::vector<std::size_t> parse_counts(const std::string& text) {
  std::vector<std::size_t> counts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const long v = std::stol(item, &used);
    if (used != item.size() || v <= 0) throw std::invalid_argument("bad demo count '" + item + "'");
    counts.push_back(static_cast<std::size_t>(v));
  }
  return counts;
}

void print_eval(const harness::EvalResult& r) {
  std::cout << "success_rate " << r.success_rate << "\n"
            << "return_mean " << r.return_mean << "\n"
            << "return_p10 " << r.return_p10 << "\n"
            << "return_p90 " << r.return_p90 << "\n"
            << "mean_length " << r.mean_length << "\n"
            << "mean_success_length " << r.mean_success_length << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DDPG from demonstrations: training, evaluation, demonstrations and teleoperation"};
  app.require_subcommand(1);

  std::string config_path, checkpoint_path, out_path, out_dir = "runs/latest", counts_text = "1,2,3,5,10,100";
  std::size_t count = 100;
  double jitter = -1.0;
  int episodes = 0;
  unsigned short port = 8765;
  std::vector<std::string> metrics_files;
  bool quiet = false;

  auto* train = app.add_subcommand("train", "Run one experiment");
  train->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  train->add_option("--out-dir", out_dir, "Directory for metrics and checkpoints");
  train->add_flag("--quiet", quiet, "No progress lines");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint's actor without exploration noise");
  eval->add_option("checkpoint", checkpoint_path)->required()->check(CLI::ExistingFile);
  eval->add_option("config", config_path)->required()->check(CLI::ExistingFile);
  eval->add_option("--episodes", episodes, "Evaluation episodes (default: config eval_episodes)");

  auto* record = app.add_subcommand("demo-record", "Record scripted-expert demonstrations");
  record->add_option("config", config_path)->required()->check(CLI::ExistingFile);
  record->add_option("--count", count, "Episodes to record");
  record->add_option("--jitter", jitter, "Expert action noise as a fraction of the bounds");
  record->add_option("--out", out_path)->required();

  auto* ablate = app.add_subcommand("demo-ablate", "Train with the first k demonstrations for each k");
  ablate->add_option("config", config_path)->required()->check(CLI::ExistingFile);
  ablate->add_option("--counts", counts_text, "Comma-separated demonstration counts");
  ablate->add_option("--out-dir", out_dir);
  ablate->add_flag("--quiet", quiet);

  auto* exp = app.add_subcommand("export", "Merge metrics files into cross-seed curves");
  exp->add_option("metrics", metrics_files)->required()->check(CLI::ExistingFile);
  exp->add_option("--out", out_path)->required();

  auto* teleop = app.add_subcommand("teleop", "Serve the teleoperation websocket");
  teleop->add_option("config", config_path)->required()->check(CLI::ExistingFile);
  teleop->add_option("--port", port);
  teleop->add_option("--out", out_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      const auto cfg = harness::load_config(config_path);
      const auto r = harness::run(cfg, out_dir, quiet ? nullptr : &std::cerr);
      std::cout << "metrics " << r.metrics_path.string() << "\n";
      print_eval(r.final_eval);
    } else if (*eval) {
      const auto cfg = harness::load_config(config_path);
      const env::InsertionTask task(cfg.env);
      const auto actor = harness::load_checkpoint_actor(checkpoint_path);
      print_eval(harness::evaluate(task, actor, episodes > 0 ? episodes : cfg.eval_episodes));
    } else if (*record) {
      auto cfg = harness::load_config(config_path);
      if (jitter >= 0.0) cfg.expert.jitter = jitter;
      const auto eps = harness::record_expert_demos(cfg, count, out_path);
      std::size_t steps = 0, ok = 0;
      for (const auto& e : eps) {
        steps += e.steps.size();
        ok += e.succeeded() ? 1 : 0;
      }
      std::cout << "recorded " << eps.size() << " episodes, " << steps << " steps, " << ok << " successful\n";
    } else if (*ablate) {
      const auto cfg = harness::load_config(config_path);
      const auto entries = harness::ablation_demo_count(cfg, parse_counts(counts_text), out_dir,
                                                        quiet ? nullptr : &std::cerr);
      std::cout << "demo_count,final_success,final_return_mean\n";
      for (const auto& e : entries) std::cout << e.count << "," << e.final_success << "," << e.final_return_mean << "\n";
    } else if (*exp) {
      std::vector<std::filesystem::path> paths(metrics_files.begin(), metrics_files.end());
      const auto rows = harness::export_curves(paths);
      harness::write_curves(rows, out_path);
      std::cout << "wrote " << rows.size() << " rows to " << out_path << "\n";
    } else if (*teleop) {
      const auto cfg = harness::load_config(config_path);
      harness::TeleopOptions opts;
      opts.port = port;
      opts.out = out_path;
      opts.base_seed = harness::demonstration_seed(0);
      opts.log = [](const std::string& m) { std::cerr << m << "\n"; };
      harness::TeleopServer server(cfg.env, opts);
      std::cerr << "teleop listening on ws://127.0.0.1:" << server.port() << "\n";
      server.run();
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
