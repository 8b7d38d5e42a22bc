#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mongegap/costs.hpp"
#include "mongegap/neural_map.hpp"
#include "mongegap/sinkhorn.hpp"
#include "mongegap/types.hpp"

namespace mongegap {

// Objective fitted between the mapped source batch and the target batch,
// always under the squared-Euclidean ground cost.
enum class FittingLoss {
  EntropicWasserstein,  // regularized transport cost
  SinkhornDivergence,   // debiased: subtracts half of each self term
};

FittingLoss parse_fitting_loss(const std::string& text);
std::string to_string(FittingLoss loss);

enum class InitScheme { Identity, Gaussian };

InitScheme parse_init_scheme(const std::string& text);
std::string to_string(InitScheme scheme);

struct TrainConfig {
  CostSpec cost = CostSpec::sq_euclidean();  // ground cost for the gap term
  Parameterization parameterization = Parameterization::Direct;
  InitScheme init = InitScheme::Identity;
  std::vector<int> hidden_dims{64, 64};
  Activation activation = Activation::GeLU;
  FittingLoss fitting_loss = FittingLoss::EntropicWasserstein;
  double lambda_mg = 1.0;
  double lambda_cons = 0.01;
  Index batch_size = 128;
  int iterations = 1000;
  double lr_init = 1e-2;
  double lr_end = 1e-5;
  double schedule_power = 1.5;
  std::uint64_t seed = 0;
  SinkhornOptions train_sinkhorn{1e-3, 300};
  SinkhornOptions eval_sinkhorn{1e-6, 2000};
  double eval_epsilon = 0.1;               // entropic scale of the held-out divergence
  Index eval_divergence_samples = 1024;    // divergence is scored on this many test rows
  std::optional<double> fitting_epsilon;   // freeze the fitting solver scale
  std::optional<double> gap_epsilon;       // freeze the gap solver scale
};

// Throws std::invalid_argument on out-of-range fields or an inconsistent
// parameterization/cost/init combination.
void validate(const TrainConfig& cfg);

// The regularization weights the experiments use per input dimension:
// (1, 0.01) up to d = 64, (10, 0.1) from d = 128 on.
void apply_dimension_defaults(TrainConfig& cfg, int dim);

// Raw (unweighted) loss terms at one step. Terms whose weight is zero, and
// the conservativity term outside the structured parameterization, are
// skipped and reported as zero.
struct LossBreakdown {
  int step = 0;
  double fitting = 0.0;
  double monge_gap = 0.0;
  double conservativity = 0.0;
  double total = 0.0;         // fitting + lambda_mg * gap + lambda_cons * cons
  double epsilon_used = 0.0;  // entropic scale of the fitting solve
};

struct AdamState {
  Vector m;
  Vector v;
  int step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam_state(Index parameter_count);

// One bias-corrected update in place; a zero learning rate leaves params
// bit-identical while still advancing the moment estimates.
void adam_step(AdamState& state, Vector& params, const Vector& grad, double lr);

// (lr_init - lr_end) * (1 - t/T)^power + lr_end, clamped at t = T.
double lr_schedule(int step, const TrainConfig& cfg);

// Full objective on explicit batches. Xref carries the reference samples of
// the gap and conservativity terms (pass Xb for the default source-measure
// choice); probes may be null when the conservativity term is off. Pure in
// its inputs, so finite differences over the parameters are meaningful when
// fitting_epsilon/gap_epsilon pin the solver scales.
LossBreakdown total_loss(const MapModel& model, const Matrix& Xb, const Matrix& Yb,
                         const Matrix& Xref, const Matrix* probes, const TrainConfig& cfg);

// Gradient of total_loss over the flat parameters, with every transport
// plan frozen at its optimum and the solver scales treated as constants.
Vector total_loss_gradient(const MapModel& model, const Matrix& Xb, const Matrix& Yb,
                           const Matrix& Xref, const Matrix* probes, const TrainConfig& cfg,
                           LossBreakdown* breakdown = nullptr);

struct TrainState {
  MapModel model;
  AdamState adam;
  std::mt19937_64 rng;  // batch indices and probe draws
  int step = 0;
};

// Builds the model (dimensions from the pools), its initializer, and the
// optimizer. The Gaussian init requires the structured parameterization
// with the squared-Euclidean cost.
TrainState make_train_state(const TrainConfig& cfg, const Matrix& x_pool, const Matrix& y_pool);

// Draws batches with replacement, applies one Adam update, and returns the
// step's loss terms. ref_pool, when given, supplies the reference samples;
// otherwise the source batch is reused. Throws std::runtime_error with a
// diagnostic when the loss or gradient turns non-finite.
LossBreakdown train_step(TrainState& state, const Matrix& x_pool, const Matrix& y_pool,
                         const Matrix* ref_pool, const TrainConfig& cfg);

struct EvalMetrics {
  double sinkhorn_div = 0.0;
  std::optional<double> l2_uv;  // set when ground-truth map values are known
};

// Held-out scores for precomputed map values: the debiased divergence
// between mapped sources and targets (on the first eval_divergence_samples
// rows, squared-Euclidean cost, eval_epsilon), and, when ground-truth values
// are given, 100 * mean squared error / total variance of y_test.
EvalMetrics evaluate_map_values(const Matrix& t_test, const Matrix& y_test,
                                const Matrix* ground_truth_values, const TrainConfig& cfg);

EvalMetrics evaluate(const MapModel& model, const Matrix& x_test, const Matrix& y_test,
                     const std::function<Matrix(const Matrix&)>& ground_truth,
                     const TrainConfig& cfg);

// Maps every input to the mean of the training targets.
struct ConstantMap {
  Vector value;
  Matrix operator()(const Matrix& X) const;
};

ConstantMap constant_baseline(const Matrix& y_train);

}  // namespace mongegap
