#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "mongegap/cli_runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Transport-map training harness: fits neural maps between sampled "
               "measures with optimality and conservativity regularization"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int workers = 1;
  auto* config_opt = app.add_option("--config", config_path, "JSON config file");
  auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides the config)");
  auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides the config)");
  app.add_option("--workers", workers, "parallel jobs for sweep/bench")
      ->check(CLI::PositiveNumber);

  auto* train = app.add_subcommand("train", "train one map and write its metrics");
  auto* sweep = app.add_subcommand("sweep", "grid of regularization weights -> heatmap.csv");
  auto* bench = app.add_subcommand("bench", "dimension sweep over estimators -> bench.csv");
  auto* print_config =
      app.add_subcommand("print-config", "print the default configuration as JSON");
  for (auto* sub : {train, sweep, bench, print_config}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (print_config->parsed()) {
      std::cout << mongegap::run_config_to_json(mongegap::RunConfig{});
      return 0;
    }
    mongegap::RunConfig cfg;
    if (config_opt->count() > 0) cfg = mongegap::load_run_config(config_path);
    if (seed_opt->count() > 0) mongegap::set_seed(cfg, seed);
    if (out_opt->count() > 0) cfg.out_dir = out_dir;
    if (train->parsed()) return mongegap::cmd_train(cfg);
    if (sweep->parsed()) return mongegap::cmd_sweep(cfg, workers);
    return mongegap::cmd_bench(cfg, workers);
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 1;
  }
}
