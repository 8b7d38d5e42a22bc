#include "mongegap/training.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "mongegap/initializers.hpp"
#include "mongegap/monge_gap.hpp"
#include "mongegap/regularizers.hpp"
#include "mongegap/rng.hpp"

namespace mongegap {

namespace {

struct FittingTerm {
  double value = 0.0;
  double epsilon = 0.0;
  Matrix cotangent;  // gradient of the value in the mapped points
};

// Entropic fit between the mapped batch T and the target batch, with the
// optimal plans frozen for the gradient. The self term of the divergence
// depends on T through both slots, hence the symmetrized coupling.
FittingTerm fitting_term(const Matrix& T, const Matrix& Yb, const TrainConfig& cfg,
                         bool with_gradient) {
  const CostSpec sq = CostSpec::sq_euclidean();
  const Matrix Cxy = cost_matrix(sq, T, Yb);
  FittingTerm out;
  out.epsilon = cfg.fitting_epsilon ? *cfg.fitting_epsilon : epsilon_rule(Cxy);
  const SinkhornSolution xy = sinkhorn(Cxy, out.epsilon, cfg.train_sinkhorn);
  out.value = xy.regularized_cost;
  if (with_gradient) {
    const Vector row_sums = xy.plan.coupling.rowwise().sum();
    out.cotangent = row_sums.asDiagonal() * T - xy.plan.coupling * Yb;
  }
  if (cfg.fitting_loss == FittingLoss::SinkhornDivergence) {
    const SinkhornSolution xx = sinkhorn(cost_matrix(sq, T, T), out.epsilon, cfg.train_sinkhorn);
    const SinkhornSolution yy =
        sinkhorn(cost_matrix(sq, Yb, Yb), out.epsilon, cfg.train_sinkhorn);
    out.value -= 0.5 * (xx.regularized_cost + yy.regularized_cost);
    if (with_gradient) {
      const Matrix S = xx.plan.coupling + xx.plan.coupling.transpose();
      const Vector s_sums = S.rowwise().sum();
      out.cotangent -= 0.5 * (s_sums.asDiagonal() * T - S * T);
    }
  }
  return out;
}

double gap_scale(const MapModel& model, const Matrix& Xref, const TrainConfig& cfg) {
  if (cfg.gap_epsilon) return *cfg.gap_epsilon;
  return epsilon_rule(cost_matrix(cfg.cost, Xref, apply_map(model, Xref)));
}

bool conservativity_active(const TrainConfig& cfg, const Matrix* probes) {
  return cfg.parameterization == Parameterization::StructuredConjugate &&
         cfg.lambda_cons > 0.0 && probes != nullptr && probes->rows() > 0;
}

Matrix draw_batch(const Matrix& pool, Index count, std::mt19937_64& rng) {
  std::uniform_int_distribution<Index> pick(0, pool.rows() - 1);
  Matrix batch(count, pool.cols());
  for (Index i = 0; i < count; ++i) batch.row(i) = pool.row(pick(rng));
  return batch;
}

Matrix draw_probes(int count, Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix V(count, d);
  for (Index i = 0; i < V.rows(); ++i)
    for (Index j = 0; j < d; ++j) V(i, j) = normal(rng);
  return V;
}

}  // namespace

FittingLoss parse_fitting_loss(const std::string& text) {
  if (text == "entropic-wasserstein") return FittingLoss::EntropicWasserstein;
  if (text == "sinkhorn-divergence") return FittingLoss::SinkhornDivergence;
  throw std::invalid_argument("parse_fitting_loss: unknown loss '" + text + "'");
}

std::string to_string(FittingLoss loss) {
  switch (loss) {
    case FittingLoss::EntropicWasserstein: return "entropic-wasserstein";
    case FittingLoss::SinkhornDivergence: return "sinkhorn-divergence";
  }
  throw std::logic_error("to_string: bad FittingLoss");
}

InitScheme parse_init_scheme(const std::string& text) {
  if (text == "identity") return InitScheme::Identity;
  if (text == "gaussian") return InitScheme::Gaussian;
  throw std::invalid_argument("parse_init_scheme: unknown scheme '" + text + "'");
}

std::string to_string(InitScheme scheme) {
  switch (scheme) {
    case InitScheme::Identity: return "identity";
    case InitScheme::Gaussian: return "gaussian";
  }
  throw std::logic_error("to_string: bad InitScheme");
}

void validate(const TrainConfig& cfg) {
  if (cfg.lambda_mg < 0.0 || cfg.lambda_cons < 0.0)
    throw std::invalid_argument("TrainConfig: regularization weights must be nonnegative");
  if (cfg.batch_size < 2) throw std::invalid_argument("TrainConfig: batch_size must be >= 2");
  if (cfg.iterations < 0) throw std::invalid_argument("TrainConfig: iterations must be >= 0");
  if (!(cfg.lr_init >= cfg.lr_end && cfg.lr_end > 0.0))
    throw std::invalid_argument("TrainConfig: need lr_init >= lr_end > 0");
  if (cfg.schedule_power <= 0.0)
    throw std::invalid_argument("TrainConfig: schedule_power must be positive");
  for (int h : cfg.hidden_dims)
    if (h < 1) throw std::invalid_argument("TrainConfig: hidden widths must be positive");
  if (cfg.train_sinkhorn.tol <= 0.0 || cfg.eval_sinkhorn.tol <= 0.0 ||
      cfg.train_sinkhorn.max_iter < 1 || cfg.eval_sinkhorn.max_iter < 1)
    throw std::invalid_argument("TrainConfig: solver tolerances must be positive");
  if (cfg.eval_epsilon <= 0.0)
    throw std::invalid_argument("TrainConfig: eval_epsilon must be positive");
  if (cfg.eval_divergence_samples < 2)
    throw std::invalid_argument("TrainConfig: eval_divergence_samples must be >= 2");
  if (cfg.fitting_epsilon && *cfg.fitting_epsilon <= 0.0)
    throw std::invalid_argument("TrainConfig: fitting_epsilon must be positive when set");
  if (cfg.gap_epsilon && *cfg.gap_epsilon <= 0.0)
    throw std::invalid_argument("TrainConfig: gap_epsilon must be positive when set");
  if (cfg.parameterization == Parameterization::StructuredConjugate && !cfg.cost.has_conjugate())
    throw std::invalid_argument(
        "TrainConfig: the structured parameterization needs a cost with a conjugate gradient");
  if (cfg.init == InitScheme::Gaussian &&
      (cfg.parameterization != Parameterization::StructuredConjugate ||
       cfg.cost.family() != CostFamily::SqEuclidean))
    throw std::invalid_argument(
        "TrainConfig: the Gaussian init needs the structured parameterization with the "
        "squared-Euclidean cost");
}

void apply_dimension_defaults(TrainConfig& cfg, int dim) {
  if (dim >= 128) {
    cfg.lambda_mg = 10.0;
    cfg.lambda_cons = 0.1;
  } else {
    cfg.lambda_mg = 1.0;
    cfg.lambda_cons = 0.01;
  }
}

AdamState make_adam_state(Index parameter_count) {
  AdamState state;
  state.m = Vector::Zero(parameter_count);
  state.v = Vector::Zero(parameter_count);
  return state;
}

void adam_step(AdamState& state, Vector& params, const Vector& grad, double lr) {
  if (params.size() != state.m.size() || grad.size() != state.m.size())
    throw std::invalid_argument("adam_step: parameter size mismatch");
  state.step += 1;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseProduct(grad);
  const double m_correction = 1.0 - std::pow(state.beta1, state.step);
  const double v_correction = 1.0 - std::pow(state.beta2, state.step);
  const Vector denom =
      ((state.v / v_correction).cwiseSqrt().array() + state.eps).matrix();
  params -= (lr / m_correction) * state.m.cwiseQuotient(denom);
}

double lr_schedule(int step, const TrainConfig& cfg) {
  if (cfg.iterations <= 0) return cfg.lr_end;
  const double frac =
      std::clamp(static_cast<double>(step) / static_cast<double>(cfg.iterations), 0.0, 1.0);
  return (cfg.lr_init - cfg.lr_end) * std::pow(1.0 - frac, cfg.schedule_power) + cfg.lr_end;
}

LossBreakdown total_loss(const MapModel& model, const Matrix& Xb, const Matrix& Yb,
                         const Matrix& Xref, const Matrix* probes, const TrainConfig& cfg) {
  if (Xb.rows() == 0 || Yb.rows() == 0 || Xref.rows() == 0)
    throw std::invalid_argument("total_loss: empty batch");
  LossBreakdown breakdown;
  const FittingTerm fit = fitting_term(apply_map(model, Xb), Yb, cfg, false);
  breakdown.fitting = fit.value;
  breakdown.epsilon_used = fit.epsilon;
  if (cfg.lambda_mg > 0.0) {
    const double eps = gap_scale(model, Xref, cfg);
    breakdown.monge_gap =
        monge_gap(Xref, apply_map(model, Xref), cfg.cost, eps, cfg.train_sinkhorn).gap;
  }
  if (conservativity_active(cfg, probes))
    breakdown.conservativity = conservativity_hutchinson(model.net, Xref, *probes).value;
  breakdown.total = breakdown.fitting + cfg.lambda_mg * breakdown.monge_gap +
                    cfg.lambda_cons * breakdown.conservativity;
  return breakdown;
}

Vector total_loss_gradient(const MapModel& model, const Matrix& Xb, const Matrix& Yb,
                           const Matrix& Xref, const Matrix* probes, const TrainConfig& cfg,
                           LossBreakdown* breakdown) {
  if (Xb.rows() == 0 || Yb.rows() == 0 || Xref.rows() == 0)
    throw std::invalid_argument("total_loss_gradient: empty batch");
  LossBreakdown terms;
  const FittingTerm fit = fitting_term(apply_map(model, Xb), Yb, cfg, true);
  terms.fitting = fit.value;
  terms.epsilon_used = fit.epsilon;
  Vector grad = param_gradient(model, Xb, fit.cotangent);
  if (cfg.lambda_mg > 0.0) {
    MongeGapValue gap_value;
    const Vector gap_grad = monge_gap_gradient(Xref, model, cfg.cost, gap_scale(model, Xref, cfg),
                                               cfg.train_sinkhorn, &gap_value);
    terms.monge_gap = gap_value.gap;
    grad += cfg.lambda_mg * gap_grad;
  }
  if (conservativity_active(cfg, probes)) {
    terms.conservativity = conservativity_hutchinson(model.net, Xref, *probes).value;
    const double scale =
        cfg.lambda_cons / (static_cast<double>(Xref.rows()) * static_cast<double>(probes->rows()));
    grad += scale * second_order_param_gradient(model.net, Xref, *probes);
  }
  terms.total = terms.fitting + cfg.lambda_mg * terms.monge_gap +
                cfg.lambda_cons * terms.conservativity;
  if (breakdown) *breakdown = terms;
  return grad;
}

TrainState make_train_state(const TrainConfig& cfg, const Matrix& x_pool, const Matrix& y_pool) {
  validate(cfg);
  if (x_pool.rows() < 2 || y_pool.rows() < 2)
    throw std::invalid_argument("make_train_state: pools need at least 2 samples");
  if (x_pool.cols() != y_pool.cols())
    throw std::invalid_argument("make_train_state: pools disagree on dimension");
  const int d = static_cast<int>(x_pool.cols());
  std::vector<int> layer_dims;
  layer_dims.reserve(cfg.hidden_dims.size() + 2);
  layer_dims.push_back(d);
  layer_dims.insert(layer_dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
  layer_dims.push_back(d);

  TrainState state;
  state.model.parameterization = cfg.parameterization;
  state.model.cost = cfg.cost;
  const std::uint64_t init_seed = derive_seed(cfg.seed, 10);
  if (cfg.init == InitScheme::Gaussian)
    state.model.net = gaussian_init(x_pool, y_pool, layer_dims, cfg.activation, init_seed);
  else
    state.model.net = identity_init(layer_dims, cfg.parameterization, cfg.activation, init_seed);
  state.adam = make_adam_state(state.model.net.parameter_count());
  state.rng.seed(derive_seed(cfg.seed, 11));
  return state;
}

LossBreakdown train_step(TrainState& state, const Matrix& x_pool, const Matrix& y_pool,
                         const Matrix* ref_pool, const TrainConfig& cfg) {
  if (x_pool.rows() < cfg.batch_size || y_pool.rows() < cfg.batch_size)
    throw std::invalid_argument("train_step: pools smaller than the batch size");
  if (ref_pool && ref_pool->rows() < cfg.batch_size)
    throw std::invalid_argument("train_step: reference pool smaller than the batch size");

  const Matrix Xb = draw_batch(x_pool, cfg.batch_size, state.rng);
  const Matrix Yb = draw_batch(y_pool, cfg.batch_size, state.rng);
  Matrix external_ref;
  const Matrix* ref = &Xb;
  if (ref_pool) {
    external_ref = draw_batch(*ref_pool, cfg.batch_size, state.rng);
    ref = &external_ref;
  }
  Matrix probes;
  const Matrix* probes_ptr = nullptr;
  if (cfg.parameterization == Parameterization::StructuredConjugate && cfg.lambda_cons > 0.0) {
    probes = draw_probes(probe_count(static_cast<int>(x_pool.cols())), x_pool.cols(), state.rng);
    probes_ptr = &probes;
  }

  LossBreakdown breakdown;
  const Vector grad =
      total_loss_gradient(state.model, Xb, Yb, *ref, probes_ptr, cfg, &breakdown);
  if (!grad.allFinite() || !std::isfinite(breakdown.total)) {
    std::ostringstream message;
    message << "train_step: non-finite loss or gradient at step " << state.step
            << " (fitting " << breakdown.fitting << ", gap " << breakdown.monge_gap
            << ", conservativity " << breakdown.conservativity << ", epsilon "
            << breakdown.epsilon_used << ")";
    throw std::runtime_error(message.str());
  }

  Vector params = state.model.net.flatten();
  adam_step(state.adam, params, grad, lr_schedule(state.step, cfg));
  state.model.net.unflatten(params);
  state.step += 1;
  breakdown.step = state.step;
  return breakdown;
}

EvalMetrics evaluate_map_values(const Matrix& t_test, const Matrix& y_test,
                                const Matrix* ground_truth_values, const TrainConfig& cfg) {
  if (t_test.rows() < 2 || y_test.rows() < 2)
    throw std::invalid_argument("evaluate_map_values: needs at least 2 test rows");
  if (t_test.cols() != y_test.cols())
    throw std::invalid_argument("evaluate_map_values: mapped and target dims differ");
  EvalMetrics out;
  const Index k = std::min({cfg.eval_divergence_samples, t_test.rows(), y_test.rows()});
  out.sinkhorn_div = sinkhorn_divergence(t_test.topRows(k), y_test.topRows(k),
                                         CostSpec::sq_euclidean(), cfg.eval_epsilon,
                                         cfg.eval_sinkhorn);
  if (ground_truth_values) {
    if (ground_truth_values->rows() != t_test.rows() ||
        ground_truth_values->cols() != t_test.cols())
      throw std::invalid_argument("evaluate_map_values: ground-truth shape mismatch");
    const double mse = (t_test - *ground_truth_values).rowwise().squaredNorm().mean();
    const Vector mean = y_test.colwise().mean().transpose();
    const double total_variance = (y_test.rowwise() - mean.transpose()).squaredNorm() /
                                  static_cast<double>(y_test.rows() - 1);
    out.l2_uv = 100.0 * mse / total_variance;
  }
  return out;
}

EvalMetrics evaluate(const MapModel& model, const Matrix& x_test, const Matrix& y_test,
                     const std::function<Matrix(const Matrix&)>& ground_truth,
                     const TrainConfig& cfg) {
  const Matrix t_test = apply_map(model, x_test);
  if (ground_truth) {
    const Matrix reference = ground_truth(x_test);
    return evaluate_map_values(t_test, y_test, &reference, cfg);
  }
  return evaluate_map_values(t_test, y_test, nullptr, cfg);
}

Matrix ConstantMap::operator()(const Matrix& X) const {
  return value.transpose().replicate(X.rows(), 1);
}

ConstantMap constant_baseline(const Matrix& y_train) {
  if (y_train.rows() == 0) throw std::invalid_argument("constant_baseline: empty target pool");
  return ConstantMap{y_train.colwise().mean().transpose()};
}

}  // namespace mongegap
