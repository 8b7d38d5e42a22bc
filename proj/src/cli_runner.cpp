#include "mongegap/cli_runner.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "mongegap/checkpoint.hpp"
#include "mongegap/io.hpp"
#include "mongegap/rng.hpp"
#include "mongegap/sinkhorn.hpp"

namespace mongegap {

namespace {

using nlohmann::json;

const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys = {
      "dataset",        "dataset_dim",
      "dataset_components", "dataset_variant",
      "n_train",        "n_test",
      "seed",           "cost",
      "parameterization", "init",
      "activation",     "fitting_loss",
      "hidden_dims",    "lambda_mg",
      "lambda_cons",    "batch_size",
      "iterations",     "lr_init",
      "lr_end",         "schedule_power",
      "train_sinkhorn_tol", "train_sinkhorn_max_iter",
      "eval_sinkhorn_tol",  "eval_sinkhorn_max_iter",
      "eval_epsilon",   "eval_divergence_samples",
      "fitting_epsilon", "gap_epsilon",
      "reference_measure", "reference_path",
      "snapshot_cadence", "out_dir",
      "sweep_lambda_mg", "sweep_lambda_cons",
      "reps",           "bench_dims",
      "bench_estimators"};
  return keys;
}

json optional_to_json(const std::optional<double>& value) {
  return value ? json(*value) : json(nullptr);
}

json breakdown_to_json(const LossBreakdown& b) {
  json j;
  j["step"] = b.step;
  j["fitting"] = b.fitting;
  j["monge_gap"] = b.monge_gap;
  j["conservativity"] = b.conservativity;
  j["total"] = b.total;
  j["epsilon_used"] = b.epsilon_used;
  return j;
}

// Fixed probe points for map snapshots: a padded line in 1-D, a padded
// 17x17 grid in 2-D, the leading test rows otherwise.
Matrix snapshot_grid(const Matrix& x_test) {
  const Index d = x_test.cols();
  if (d == 1) {
    Matrix grid(129, 1);
    grid.col(0) =
        Vector::LinSpaced(129, x_test.minCoeff() - 0.5, x_test.maxCoeff() + 0.5);
    return grid;
  }
  if (d == 2) {
    const int side = 17;
    Matrix grid(side * side, 2);
    for (int axis = 0; axis < 2; ++axis) {
      const double lo = x_test.col(axis).minCoeff();
      const double hi = x_test.col(axis).maxCoeff();
      const double pad = std::max(0.05 * (hi - lo), 0.1);
      const Vector line = Vector::LinSpaced(side, lo - pad, hi + pad);
      for (int i = 0; i < side; ++i)
        for (int j = 0; j < side; ++j)
          grid(i * side + j, axis) = axis == 0 ? line(i) : line(j);
    }
    return grid;
  }
  return x_test.topRows(std::min<Index>(256, x_test.rows()));
}

void write_snapshot(const std::string& path, const MapModel& model, const Matrix& grid) {
  const Matrix mapped = apply_map(model, grid);
  Matrix rows(grid.rows(), grid.cols() + mapped.cols());
  rows << grid, mapped;
  std::vector<std::string> header;
  for (Index j = 0; j < grid.cols(); ++j) header.push_back("x" + std::to_string(j));
  for (Index j = 0; j < mapped.cols(); ++j) header.push_back("t" + std::to_string(j));
  write_matrix_csv(path, rows, header);
}

void run_jobs(int workers, int count, const std::function<void(int)>& job) {
  if (count <= 0) return;
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  const int threads = std::min(workers, count);
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) job(i);
    });
  for (auto& thread : pool) thread.join();
}

std::string metric_field(const EvalMetrics& metrics, bool ok) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double div = ok ? metrics.sinkhorn_div : nan;
  const double l2 = (ok && metrics.l2_uv) ? *metrics.l2_uv : nan;
  return format_double(div) + "," + format_double(l2);
}

}  // namespace

ReferenceMeasure parse_reference_measure(const std::string& text) {
  if (text == "source") return ReferenceMeasure::Source;
  if (text == "external") return ReferenceMeasure::External;
  throw std::invalid_argument("parse_reference_measure: unknown value '" + text + "'");
}

std::string to_string(ReferenceMeasure reference) {
  switch (reference) {
    case ReferenceMeasure::Source: return "source";
    case ReferenceMeasure::External: return "external";
  }
  throw std::logic_error("to_string: bad ReferenceMeasure");
}

void set_seed(RunConfig& cfg, std::uint64_t seed) {
  cfg.dataset.seed = seed;
  cfg.train.seed = seed;
}

std::string run_config_to_json(const RunConfig& cfg) {
  json j;
  j["dataset"] = to_string(cfg.dataset.kind);
  j["dataset_dim"] = cfg.dataset.dim;
  j["dataset_components"] = cfg.dataset.components;
  j["dataset_variant"] = cfg.dataset.variant;
  j["n_train"] = cfg.dataset.n_train;
  j["n_test"] = cfg.dataset.n_test;
  j["seed"] = cfg.train.seed;
  j["cost"] = cfg.train.cost.to_string();
  j["parameterization"] = to_string(cfg.train.parameterization);
  j["init"] = to_string(cfg.train.init);
  j["activation"] = to_string(cfg.train.activation);
  j["fitting_loss"] = to_string(cfg.train.fitting_loss);
  j["hidden_dims"] = cfg.train.hidden_dims;
  j["lambda_mg"] = optional_to_json(cfg.lambda_mg);
  j["lambda_cons"] = optional_to_json(cfg.lambda_cons);
  j["batch_size"] = cfg.train.batch_size;
  j["iterations"] = cfg.train.iterations;
  j["lr_init"] = cfg.train.lr_init;
  j["lr_end"] = cfg.train.lr_end;
  j["schedule_power"] = cfg.train.schedule_power;
  j["train_sinkhorn_tol"] = cfg.train.train_sinkhorn.tol;
  j["train_sinkhorn_max_iter"] = cfg.train.train_sinkhorn.max_iter;
  j["eval_sinkhorn_tol"] = cfg.train.eval_sinkhorn.tol;
  j["eval_sinkhorn_max_iter"] = cfg.train.eval_sinkhorn.max_iter;
  j["eval_epsilon"] = cfg.train.eval_epsilon;
  j["eval_divergence_samples"] = cfg.train.eval_divergence_samples;
  j["fitting_epsilon"] = optional_to_json(cfg.train.fitting_epsilon);
  j["gap_epsilon"] = optional_to_json(cfg.train.gap_epsilon);
  j["reference_measure"] = to_string(cfg.reference);
  j["reference_path"] = cfg.reference_path;
  j["snapshot_cadence"] = cfg.snapshot_cadence;
  j["out_dir"] = cfg.out_dir;
  j["sweep_lambda_mg"] = cfg.sweep_lambda_mg;
  j["sweep_lambda_cons"] = cfg.sweep_lambda_cons;
  j["reps"] = cfg.reps;
  j["bench_dims"] = cfg.bench_dims;
  j["bench_estimators"] = cfg.bench_estimators;
  return j.dump(2) + "\n";
}

RunConfig parse_run_config_json(const std::string& text) {
  const json j = json::parse(text);
  if (!j.is_object())
    throw std::invalid_argument("parse_run_config_json: top level must be an object");
  for (const auto& item : j.items())
    if (!known_config_keys().count(item.key()))
      throw std::invalid_argument("parse_run_config_json: unknown key '" + item.key() + "'");

  const auto has = [&](const char* key) { return j.contains(key) && !j.at(key).is_null(); };

  RunConfig cfg;
  if (has("dataset")) cfg.dataset.kind = parse_dataset_kind(j.at("dataset").get<std::string>());
  if (has("dataset_dim")) cfg.dataset.dim = j.at("dataset_dim").get<int>();
  if (has("dataset_components"))
    cfg.dataset.components = j.at("dataset_components").get<int>();
  if (has("dataset_variant")) cfg.dataset.variant = j.at("dataset_variant").get<std::string>();
  if (has("n_train")) cfg.dataset.n_train = j.at("n_train").get<Index>();
  if (has("n_test")) cfg.dataset.n_test = j.at("n_test").get<Index>();
  if (has("seed")) set_seed(cfg, j.at("seed").get<std::uint64_t>());
  if (has("cost")) cfg.train.cost = CostSpec::parse(j.at("cost").get<std::string>());
  if (has("parameterization"))
    cfg.train.parameterization =
        parse_parameterization(j.at("parameterization").get<std::string>());
  if (has("init")) cfg.train.init = parse_init_scheme(j.at("init").get<std::string>());
  if (has("activation"))
    cfg.train.activation = parse_activation(j.at("activation").get<std::string>());
  if (has("fitting_loss"))
    cfg.train.fitting_loss = parse_fitting_loss(j.at("fitting_loss").get<std::string>());
  if (has("hidden_dims")) cfg.train.hidden_dims = j.at("hidden_dims").get<std::vector<int>>();
  if (has("lambda_mg")) cfg.lambda_mg = j.at("lambda_mg").get<double>();
  if (has("lambda_cons")) cfg.lambda_cons = j.at("lambda_cons").get<double>();
  if (has("batch_size")) cfg.train.batch_size = j.at("batch_size").get<Index>();
  if (has("iterations")) cfg.train.iterations = j.at("iterations").get<int>();
  if (has("lr_init")) cfg.train.lr_init = j.at("lr_init").get<double>();
  if (has("lr_end")) cfg.train.lr_end = j.at("lr_end").get<double>();
  if (has("schedule_power")) cfg.train.schedule_power = j.at("schedule_power").get<double>();
  if (has("train_sinkhorn_tol"))
    cfg.train.train_sinkhorn.tol = j.at("train_sinkhorn_tol").get<double>();
  if (has("train_sinkhorn_max_iter"))
    cfg.train.train_sinkhorn.max_iter = j.at("train_sinkhorn_max_iter").get<int>();
  if (has("eval_sinkhorn_tol"))
    cfg.train.eval_sinkhorn.tol = j.at("eval_sinkhorn_tol").get<double>();
  if (has("eval_sinkhorn_max_iter"))
    cfg.train.eval_sinkhorn.max_iter = j.at("eval_sinkhorn_max_iter").get<int>();
  if (has("eval_epsilon")) cfg.train.eval_epsilon = j.at("eval_epsilon").get<double>();
  if (has("eval_divergence_samples"))
    cfg.train.eval_divergence_samples = j.at("eval_divergence_samples").get<Index>();
  if (has("fitting_epsilon")) cfg.train.fitting_epsilon = j.at("fitting_epsilon").get<double>();
  if (has("gap_epsilon")) cfg.train.gap_epsilon = j.at("gap_epsilon").get<double>();
  if (has("reference_measure"))
    cfg.reference = parse_reference_measure(j.at("reference_measure").get<std::string>());
  if (has("reference_path")) cfg.reference_path = j.at("reference_path").get<std::string>();
  if (has("snapshot_cadence")) cfg.snapshot_cadence = j.at("snapshot_cadence").get<int>();
  if (has("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
  if (has("sweep_lambda_mg"))
    cfg.sweep_lambda_mg = j.at("sweep_lambda_mg").get<std::vector<double>>();
  if (has("sweep_lambda_cons"))
    cfg.sweep_lambda_cons = j.at("sweep_lambda_cons").get<std::vector<double>>();
  if (has("reps")) cfg.reps = j.at("reps").get<int>();
  if (has("bench_dims")) cfg.bench_dims = j.at("bench_dims").get<std::vector<int>>();
  if (has("bench_estimators"))
    cfg.bench_estimators = j.at("bench_estimators").get<std::vector<std::string>>();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_run_config: cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config_json(buffer.str());
}

TrainConfig resolved_train_config(const RunConfig& cfg) {
  TrainConfig train = cfg.train;
  apply_dimension_defaults(train, dataset_dimension(cfg.dataset));
  if (cfg.lambda_mg) train.lambda_mg = *cfg.lambda_mg;
  if (cfg.lambda_cons) train.lambda_cons = *cfg.lambda_cons;
  return train;
}

RunOutput run_one(const RunConfig& cfg,
                  const std::function<void(int step, const MapModel& model,
                                           const SampledData& data)>& snapshot_hook) {
  RunOutput out;
  out.data = sample(cfg.dataset);
  const TrainConfig train_cfg = resolved_train_config(cfg);

  Matrix external_pool;
  const Matrix* ref_pool = nullptr;
  if (cfg.reference == ReferenceMeasure::External) {
    if (cfg.reference_path.empty())
      throw std::invalid_argument("run_one: external reference without reference_path");
    external_pool = read_matrix_csv(cfg.reference_path);
    ref_pool = &external_pool;
  }

  out.state = make_train_state(train_cfg, out.data.x_train, out.data.y_train);
  const bool snapshots = snapshot_hook && cfg.snapshot_cadence > 0;
  if (snapshots) snapshot_hook(0, out.state.model, out.data);
  out.log.reserve(static_cast<std::size_t>(train_cfg.iterations));
  for (int step = 0; step < train_cfg.iterations; ++step) {
    out.log.push_back(
        train_step(out.state, out.data.x_train, out.data.y_train, ref_pool, train_cfg));
    if (snapshots && out.state.step % cfg.snapshot_cadence == 0)
      snapshot_hook(out.state.step, out.state.model, out.data);
  }
  out.metrics = evaluate(out.state.model, out.data.x_test, out.data.y_test,
                         out.data.ground_truth, train_cfg);
  return out;
}

int cmd_train(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);

  Matrix grid;
  std::function<void(int, const MapModel&, const SampledData&)> hook;
  if (cfg.snapshot_cadence > 0)
    hook = [&](int step, const MapModel& model, const SampledData& data) {
      if (grid.rows() == 0) grid = snapshot_grid(data.x_test);
      write_snapshot((out / "snapshots" / ("step_" + std::to_string(step) + ".csv")).string(),
                     model, grid);
    };
  const RunOutput result = run_one(cfg, hook);

  std::string log_text;
  for (const auto& breakdown : result.log) log_text += breakdown_to_json(breakdown).dump() + "\n";
  atomic_write_text((out / "train_log.jsonl").string(), log_text);

  json metrics;
  metrics["sinkhorn_div"] = result.metrics.sinkhorn_div;
  metrics["l2_uv"] = optional_to_json(result.metrics.l2_uv);
  metrics["steps"] = result.state.step;
  metrics["final_total"] = result.log.empty() ? json(nullptr) : json(result.log.back().total);
  atomic_write_text((out / "metrics.json").string(), metrics.dump(2) + "\n");

  save_checkpoint((out / "checkpoint.json").string(), result.state.model);
  return 0;
}

int cmd_sweep(const RunConfig& cfg, int workers) {
  if (cfg.reps < 1) throw std::invalid_argument("cmd_sweep: reps must be >= 1");
  if (cfg.sweep_lambda_mg.empty() || cfg.sweep_lambda_cons.empty())
    throw std::invalid_argument("cmd_sweep: empty regularization grid");

  struct Cell {
    double lambda_mg = 0.0;
    double lambda_cons = 0.0;
    std::uint64_t seed = 0;
    EvalMetrics metrics;
    bool ok = false;
    std::string error;
  };
  std::vector<Cell> cells;
  for (int rep = 0; rep < cfg.reps; ++rep) {
    const std::uint64_t rep_seed = derive_seed(cfg.train.seed, 100 + rep);
    for (double mg : cfg.sweep_lambda_mg)
      for (double cons : cfg.sweep_lambda_cons) cells.push_back({mg, cons, rep_seed});
  }

  run_jobs(workers, static_cast<int>(cells.size()), [&](int i) {
    Cell& cell = cells[static_cast<std::size_t>(i)];
    try {
      RunConfig cell_cfg = cfg;
      set_seed(cell_cfg, cell.seed);
      cell_cfg.lambda_mg = cell.lambda_mg;
      cell_cfg.lambda_cons = cell.lambda_cons;
      cell.metrics = run_one(cell_cfg).metrics;
      cell.ok = true;
    } catch (const std::exception& error) {
      cell.error = error.what();
    }
  });

  std::string csv = "lambda_mg,lambda_cons,sinkhorn_div,l2_uv,seed\n";
  bool all_ok = true;
  for (const auto& cell : cells) {
    csv += format_double(cell.lambda_mg) + "," + format_double(cell.lambda_cons) + "," +
           metric_field(cell.metrics, cell.ok) + "," + std::to_string(cell.seed) + "\n";
    if (!cell.ok) {
      all_ok = false;
      std::cerr << "sweep cell (" << cell.lambda_mg << ", " << cell.lambda_cons << ", seed "
                << cell.seed << ") failed: " << cell.error << "\n";
    }
  }
  atomic_write_text((std::filesystem::path(cfg.out_dir) / "heatmap.csv").string(), csv);
  return all_ok ? 0 : 1;
}

int cmd_bench(const RunConfig& cfg, int workers) {
  if (cfg.reps < 1) throw std::invalid_argument("cmd_bench: reps must be >= 1");
  if (cfg.bench_dims.empty() || cfg.bench_estimators.empty())
    throw std::invalid_argument("cmd_bench: empty dimension or estimator list");
  static const std::set<std::string> kEstimators = {"regularized", "unregularized",
                                                    "entropic_map", "constant"};
  for (const auto& estimator : cfg.bench_estimators)
    if (!kEstimators.count(estimator))
      throw std::invalid_argument("cmd_bench: unknown estimator '" + estimator + "'");
  for (int d : cfg.bench_dims)
    if (d < 1) throw std::invalid_argument("cmd_bench: dimensions must be positive");

  struct Job {
    int d = 0;
    std::string estimator;
    std::uint64_t seed = 0;
    EvalMetrics metrics;
    bool ok = false;
    std::string error;
  };
  std::vector<Job> jobs;
  for (int d : cfg.bench_dims)
    for (const auto& estimator : cfg.bench_estimators)
      for (int rep = 0; rep < cfg.reps; ++rep)
        jobs.push_back({d, estimator, derive_seed(cfg.train.seed, 200 + rep)});

  run_jobs(workers, static_cast<int>(jobs.size()), [&](int i) {
    Job& job = jobs[static_cast<std::size_t>(i)];
    try {
      RunConfig job_cfg = cfg;
      job_cfg.dataset.kind = DatasetKind::GaussianPair;
      job_cfg.dataset.dim = job.d;
      set_seed(job_cfg, job.seed);
      if (job.estimator == "regularized" || job.estimator == "unregularized") {
        if (job.estimator == "unregularized") {
          job_cfg.lambda_mg = 0.0;
          job_cfg.lambda_cons = 0.0;
        } else {
          job_cfg.lambda_mg.reset();
          job_cfg.lambda_cons.reset();
        }
        job.metrics = run_one(job_cfg).metrics;
      } else {
        const SampledData data = sample(job_cfg.dataset);
        const TrainConfig train_cfg = resolved_train_config(job_cfg);
        Matrix mapped;
        if (job.estimator == "entropic_map") {
          const Matrix C =
              cost_matrix(CostSpec::sq_euclidean(), data.x_test, data.y_train);
          mapped = entropic_barycentric_map(data.x_test, data.y_train, epsilon_rule(C),
                                            train_cfg.eval_sinkhorn);
        } else {
          mapped = constant_baseline(data.y_train)(data.x_test);
        }
        const Matrix reference = data.ground_truth(data.x_test);
        job.metrics = evaluate_map_values(mapped, data.y_test, &reference, train_cfg);
      }
      job.ok = true;
    } catch (const std::exception& error) {
      job.error = error.what();
    }
  });

  std::string csv = "d,estimator,seed,sinkhorn_div,l2_uv\n";
  bool all_ok = true;
  for (const auto& job : jobs) {
    const bool has_l2 = job.ok && job.metrics.l2_uv.has_value();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    csv += std::to_string(job.d) + "," + job.estimator + "," + std::to_string(job.seed) + "," +
           format_double(job.ok ? job.metrics.sinkhorn_div : nan) + "," +
           format_double(has_l2 ? *job.metrics.l2_uv : nan) + "\n";
    if (!job.ok) {
      all_ok = false;
      std::cerr << "bench job (d=" << job.d << ", " << job.estimator << ", seed " << job.seed
                << ") failed: " << job.error << "\n";
    }
  }
  atomic_write_text((std::filesystem::path(cfg.out_dir) / "bench.csv").string(), csv);
  return all_ok ? 0 : 1;
}

}  // namespace mongegap
