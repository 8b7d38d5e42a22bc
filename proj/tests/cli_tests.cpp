#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "mongegap/checkpoint.hpp"
#include "mongegap/cli_runner.hpp"
#include "mongegap/io.hpp"
#include "mongegap/rng.hpp"

namespace mongegap {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::string line;
  std::istringstream stream(text);
  while (std::getline(stream, line))
    if (!line.empty()) lines.push_back(line);
  return lines;
}

RunConfig small_run(const fs::path& out_dir) {
  RunConfig cfg;
  cfg.dataset.kind = DatasetKind::GaussianPair;
  cfg.dataset.dim = 2;
  cfg.dataset.n_train = 64;
  cfg.dataset.n_test = 32;
  cfg.train.hidden_dims = {8};
  cfg.train.batch_size = 16;
  cfg.train.iterations = 5;
  cfg.out_dir = out_dir.string();
  set_seed(cfg, 2024);
  return cfg;
}

TEST_CASE("config json round trips including null weights") {
  const std::string first = run_config_to_json(RunConfig{});
  const RunConfig parsed = parse_run_config_json(first);
  CHECK(run_config_to_json(parsed) == first);
  CHECK(!parsed.lambda_mg.has_value());
  CHECK(!parsed.lambda_cons.has_value());

  RunConfig custom;
  custom.lambda_mg = 2.5;
  custom.dataset.kind = DatasetKind::Toy2D;
  custom.dataset.variant = "moons";
  custom.train.cost = CostSpec::power_norm(1.5);
  custom.train.fitting_epsilon = 0.05;
  custom.reps = 7;
  const RunConfig reparsed = parse_run_config_json(run_config_to_json(custom));
  CHECK(reparsed.lambda_mg.has_value());
  CHECK(*reparsed.lambda_mg == 2.5);
  CHECK(!reparsed.lambda_cons.has_value());
  CHECK(reparsed.dataset.kind == DatasetKind::Toy2D);
  CHECK(reparsed.train.cost.to_string() == "powernorm:p=1.5");
  CHECK(*reparsed.train.fitting_epsilon == 0.05);
  CHECK(reparsed.reps == 7);
}

TEST_CASE("unknown and partial configs") {
  CHECK_THROWS_AS(parse_run_config_json("{\"lambda_gm\": 1.0}"), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config_json("[1, 2]"), std::invalid_argument);

  const RunConfig partial = parse_run_config_json("{\"seed\": 9, \"iterations\": 3}");
  CHECK(partial.dataset.seed == 9);
  CHECK(partial.train.seed == 9);
  CHECK(partial.train.iterations == 3);
  CHECK(partial.train.batch_size == 128);
}

TEST_CASE("weight resolution follows the dataset dimension") {
  RunConfig cfg;
  cfg.dataset.dim = 2;
  TrainConfig resolved = resolved_train_config(cfg);
  CHECK(resolved.lambda_mg == 1.0);
  CHECK(resolved.lambda_cons == 0.01);

  cfg.dataset.dim = 128;
  resolved = resolved_train_config(cfg);
  CHECK(resolved.lambda_mg == 10.0);
  CHECK(resolved.lambda_cons == 0.1);

  cfg.lambda_mg = 4.0;
  resolved = resolved_train_config(cfg);
  CHECK(resolved.lambda_mg == 4.0);
  CHECK(resolved.lambda_cons == 0.1);
}

TEST_CASE("train command writes the full artifact set") {
  TempDir dir("mongegap_cli_train");
  const RunConfig cfg = small_run(dir.path);
  CHECK(cmd_train(cfg) == 0);

  const auto log_lines = lines_of(slurp(dir.path / "train_log.jsonl"));
  REQUIRE(log_lines.size() == 5);
  for (std::size_t i = 0; i < log_lines.size(); ++i) {
    const json entry = json::parse(log_lines[i]);
    CHECK(entry.at("step").get<int>() == static_cast<int>(i) + 1);
    CHECK(entry.at("epsilon_used").get<double>() > 0.0);
    CHECK(entry.count("fitting") == 1);
    CHECK(entry.count("monge_gap") == 1);
    CHECK(entry.count("conservativity") == 1);
    CHECK(entry.count("total") == 1);
  }

  const json metrics = json::parse(slurp(dir.path / "metrics.json"));
  CHECK(metrics.at("steps").get<int>() == 5);
  CHECK(!metrics.at("l2_uv").is_null());
  CHECK(metrics.at("final_total").get<double>() ==
        json::parse(log_lines.back()).at("total").get<double>());
  CHECK(std::isfinite(metrics.at("sinkhorn_div").get<double>()));

  const MapModel restored = load_checkpoint((dir.path / "checkpoint.json").string());
  CHECK(restored.net.layer_dims == std::vector<int>{2, 8, 2});

  CHECK(!fs::exists(dir.path / "snapshots"));
}

TEST_CASE("snapshot cadence controls the snapshot files") {
  TempDir dir("mongegap_cli_snapshots");
  RunConfig cfg = small_run(dir.path);
  cfg.train.iterations = 6;
  cfg.snapshot_cadence = 3;
  CHECK(cmd_train(cfg) == 0);
  CHECK(fs::exists(dir.path / "snapshots" / "step_0.csv"));
  CHECK(fs::exists(dir.path / "snapshots" / "step_3.csv"));
  CHECK(fs::exists(dir.path / "snapshots" / "step_6.csv"));
  CHECK(!fs::exists(dir.path / "snapshots" / "step_1.csv"));

  // 17 x 17 probe grid in two dimensions, source columns then mapped columns.
  const auto rows = lines_of(slurp(dir.path / "snapshots" / "step_0.csv"));
  REQUIRE(rows.size() == 17 * 17 + 1);
  CHECK(rows.front() == "x0,x1,t0,t1");
}

TEST_CASE("repeated train commands are byte identical") {
  TempDir first_dir("mongegap_cli_repeat_a");
  TempDir second_dir("mongegap_cli_repeat_b");
  RunConfig first = small_run(first_dir.path);
  RunConfig second = small_run(second_dir.path);
  CHECK(cmd_train(first) == 0);
  CHECK(cmd_train(second) == 0);
  CHECK(slurp(first_dir.path / "metrics.json") == slurp(second_dir.path / "metrics.json"));
  CHECK(slurp(first_dir.path / "train_log.jsonl") ==
        slurp(second_dir.path / "train_log.jsonl"));
  CHECK(slurp(first_dir.path / "checkpoint.json") ==
        slurp(second_dir.path / "checkpoint.json"));
}

TEST_CASE("sweep enumerates the weight grid with derived seeds") {
  TempDir dir("mongegap_cli_sweep");
  RunConfig cfg = small_run(dir.path);
  cfg.sweep_lambda_mg = {0.0, 0.5};
  cfg.sweep_lambda_cons = {0.0};
  cfg.reps = 1;
  CHECK(cmd_sweep(cfg, 1) == 0);

  const auto rows = lines_of(slurp(dir.path / "heatmap.csv"));
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == "lambda_mg,lambda_cons,sinkhorn_div,l2_uv,seed");
  const std::uint64_t rep_seed = derive_seed(cfg.train.seed, 100);
  CHECK(rows[1].rfind("0,0,", 0) == 0);
  CHECK(rows[1].find(std::to_string(rep_seed)) != std::string::npos);
  CHECK(rows[2].rfind("0.5,0,", 0) == 0);

  // The first cell reproduces a direct run at the derived seed and weights.
  RunConfig direct = cfg;
  set_seed(direct, rep_seed);
  direct.lambda_mg = 0.0;
  direct.lambda_cons = 0.0;
  const RunOutput out = run_one(direct);
  std::istringstream row(rows[1]);
  std::string field;
  std::getline(row, field, ',');
  std::getline(row, field, ',');
  std::getline(row, field, ',');
  CHECK(std::stod(field) == out.metrics.sinkhorn_div);
  std::getline(row, field, ',');
  REQUIRE(out.metrics.l2_uv.has_value());
  CHECK(std::stod(field) == *out.metrics.l2_uv);
}

TEST_CASE("sweep reports failed cells without dropping rows") {
  TempDir dir("mongegap_cli_sweep_fail");
  RunConfig cfg = small_run(dir.path);
  cfg.sweep_lambda_mg = {-1.0};
  cfg.sweep_lambda_cons = {0.0};
  cfg.reps = 1;
  CHECK(cmd_sweep(cfg, 1) == 1);
  const auto rows = lines_of(slurp(dir.path / "heatmap.csv"));
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].find("nan") != std::string::npos);
}

TEST_CASE("bench covers every dimension estimator and rep") {
  TempDir dir("mongegap_cli_bench");
  RunConfig cfg = small_run(dir.path);
  cfg.dataset.n_train = 256;
  cfg.dataset.n_test = 128;
  cfg.bench_dims = {2};
  cfg.bench_estimators = {"regularized", "unregularized", "entropic_map", "constant"};
  cfg.reps = 1;
  CHECK(cmd_bench(cfg, 1) == 0);

  const auto rows = lines_of(slurp(dir.path / "bench.csv"));
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == "d,estimator,seed,sinkhorn_div,l2_uv");

  double entropic_l2 = 0.0, constant_l2 = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::istringstream row(rows[i]);
    std::string d, estimator, seed, div, l2;
    std::getline(row, d, ',');
    std::getline(row, estimator, ',');
    std::getline(row, seed, ',');
    std::getline(row, div, ',');
    std::getline(row, l2, ',');
    CHECK(d == "2");
    CHECK(std::isfinite(std::stod(div)));
    if (estimator == "entropic_map") entropic_l2 = std::stod(l2);
    if (estimator == "constant") constant_l2 = std::stod(l2);
  }
  CHECK(entropic_l2 > 0.0);
  CHECK(entropic_l2 < constant_l2);

  RunConfig bad = cfg;
  bad.bench_estimators = {"oracle"};
  CHECK_THROWS(cmd_bench(bad, 1));
}

TEST_CASE("external reference pools feed the regularizer") {
  TempDir dir("mongegap_cli_ref");
  RunConfig cfg = small_run(dir.path);
  const SampledData data = sample(cfg.dataset);
  const fs::path pool_path = dir.path / "pool.csv";
  write_matrix_csv(pool_path.string(), data.x_train);
  cfg.reference = ReferenceMeasure::External;
  cfg.reference_path = pool_path.string();
  const RunOutput out = run_one(cfg);
  CHECK(out.log.size() == 5);
  CHECK(std::isfinite(out.metrics.sinkhorn_div));

  cfg.reference_path.clear();
  CHECK_THROWS(run_one(cfg));
}

TEST_CASE("reference measure tags parse back") {
  CHECK(parse_reference_measure(to_string(ReferenceMeasure::Source)) ==
        ReferenceMeasure::Source);
  CHECK(parse_reference_measure(to_string(ReferenceMeasure::External)) ==
        ReferenceMeasure::External);
  CHECK_THROWS(parse_reference_measure("target"));
}

}  // namespace
}  // namespace mongegap
