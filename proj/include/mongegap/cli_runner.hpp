#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mongegap/datasets.hpp"
#include "mongegap/training.hpp"

namespace mongegap {

// Where the reference samples of the gap and conservativity terms come
// from: the source batch itself, or a CSV pool sampled alongside it.
enum class ReferenceMeasure { Source, External };

ReferenceMeasure parse_reference_measure(const std::string& text);
std::string to_string(ReferenceMeasure reference);

// Flat experiment description: dataset, trainer, outputs, and the grids the
// sweep/bench subcommands iterate over. One master seed drives everything.
struct RunConfig {
  DatasetSpec dataset;
  TrainConfig train;
  std::optional<double> lambda_mg;    // unset = dimension default
  std::optional<double> lambda_cons;  // unset = dimension default
  ReferenceMeasure reference = ReferenceMeasure::Source;
  std::string reference_path;
  int snapshot_cadence = 0;  // steps between map snapshots; 0 disables
  std::string out_dir = "out";
  std::vector<double> sweep_lambda_mg{0.0, 1.0};
  std::vector<double> sweep_lambda_cons{0.0, 0.01};
  int reps = 3;
  std::vector<int> bench_dims{2, 4, 8};
  std::vector<std::string> bench_estimators{"regularized", "unregularized", "entropic_map",
                                            "constant"};
};

// One "seed" key feeds both the dataset and the trainer.
void set_seed(RunConfig& cfg, std::uint64_t seed);

// JSON round trip with sorted keys and explicit defaults; unknown keys are
// rejected so typos cannot silently fall back to defaults.
std::string run_config_to_json(const RunConfig& cfg);
RunConfig parse_run_config_json(const std::string& text);
RunConfig load_run_config(const std::string& path);

// The trainer config with the regularization weights resolved against the
// dataset dimension.
TrainConfig resolved_train_config(const RunConfig& cfg);

struct RunOutput {
  SampledData data;
  TrainState state;
  std::vector<LossBreakdown> log;
  EvalMetrics metrics;
};

// Samples the dataset, trains for cfg.train.iterations steps, and scores the
// final map on the held-out split. The hook, when given, observes the model
// before the first step and after every snapshot_cadence-th step.
RunOutput run_one(const RunConfig& cfg,
                  const std::function<void(int step, const MapModel& model,
                                           const SampledData& data)>& snapshot_hook = {});

// train_log.jsonl + metrics.json + checkpoint.json (+ snapshots/step_<k>.csv
// when the cadence is on) under out_dir.
int cmd_train(const RunConfig& cfg);

// One run per (rep, lambda_mg, lambda_cons) grid cell; rep k derives its
// seed from the master seed under stream 100 + k and each cell becomes one
// heatmap.csv row. Failed cells keep their row (NaN metrics) and flip the
// exit status.
int cmd_sweep(const RunConfig& cfg, int workers);

// Gaussian-pair dimension sweep over bench_dims x bench_estimators with
// reps repetitions (seed stream 200 + k), written to bench.csv.
int cmd_bench(const RunConfig& cfg, int workers);

}  // namespace mongegap
