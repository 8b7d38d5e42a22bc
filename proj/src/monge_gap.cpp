#include "mongegap/monge_gap.hpp"

#include <stdexcept>

#include "mongegap/assignment.hpp"

namespace mongegap {

namespace {

double mean_displacement(const Matrix& X, const Matrix& T, const CostSpec& cost) {
  if (X.rows() != T.rows() || X.cols() != T.cols())
    throw std::invalid_argument("monge_gap: X and T must have identical shapes");
  if (X.rows() == 0) throw std::invalid_argument("monge_gap: empty sample set");
  double total = 0.0;
  for (Index i = 0; i < X.rows(); ++i)
    total += eval_cost(cost, X.row(i).transpose(), T.row(i).transpose());
  return total / static_cast<double>(X.rows());
}

}  // namespace

MongeGapValue monge_gap(const Matrix& X, const Matrix& T, const CostSpec& cost, double epsilon,
                        const SinkhornOptions& options) {
  if (epsilon < 0.0) throw std::invalid_argument("monge_gap: epsilon must be >= 0");
  MongeGapValue value;
  value.epsilon = epsilon;
  value.displacement = mean_displacement(X, T, cost);
  const Matrix C = cost_matrix(cost, X, T);
  if (epsilon == 0.0) {
    value.ot_cost = exact_assignment(C).cost;
    value.converged = true;
  } else {
    const SinkhornSolution sol = sinkhorn(C, epsilon, options);
    value.ot_cost = sol.regularized_cost;
    value.converged = sol.converged;
  }
  value.gap = value.displacement - value.ot_cost;
  return value;
}

MongeGapValue monge_gap_permutation(const Matrix& X, const Matrix& T, const CostSpec& cost) {
  MongeGapValue value;
  value.epsilon = 0.0;
  value.displacement = mean_displacement(X, T, cost);
  value.ot_cost = brute_force_assignment(cost_matrix(cost, X, T)).cost;
  value.gap = value.displacement - value.ot_cost;
  return value;
}

Matrix danskin_coefficients(const TransportPlan& plan) {
  const Matrix& P = plan.coupling;
  if (P.rows() != P.cols())
    throw std::invalid_argument("danskin_coefficients: plan must be square");
  const double inv_n = 1.0 / static_cast<double>(P.rows());
  Matrix D = -P;
  D.diagonal().array() += inv_n;
  return D;
}

Vector monge_gap_gradient(const Matrix& X, const MapModel& model, const CostSpec& cost,
                          double epsilon, const SinkhornOptions& options,
                          MongeGapValue* value_out) {
  if (!(epsilon > 0.0))
    throw std::invalid_argument("monge_gap_gradient: epsilon must be positive");
  const Matrix T = apply_map(model, X);
  const Matrix C = cost_matrix(cost, X, T);
  const SinkhornSolution sol = sinkhorn(C, epsilon, options);
  const Matrix D = danskin_coefficients(sol.plan);

  if (value_out) {
    value_out->epsilon = epsilon;
    value_out->displacement = mean_displacement(X, T, cost);
    value_out->ot_cost = sol.regularized_cost;
    value_out->gap = value_out->displacement - value_out->ot_cost;
    value_out->converged = sol.converged;
  }

  // Cotangent on t_j: sum_i D_ij grad_y c(x_i, t_j), with the plan frozen.
  const Index n = X.rows();
  Matrix U(n, T.cols());
  if (cost.family() == CostFamily::SqEuclidean) {
    // grad_y c(x, t) = t - x, so the contraction collapses to matrix algebra.
    const Vector col_sums = D.colwise().sum().transpose();
    U = col_sums.asDiagonal() * T - D.transpose() * X;
  } else {
    U.setZero();
    for (Index j = 0; j < n; ++j) {
      const Vector tj = T.row(j).transpose();
      Vector uj = Vector::Zero(T.cols());
      for (Index i = 0; i < n; ++i) {
        const double dij = D(i, j);
        if (dij == 0.0) continue;
        uj += dij * grad_y_cost_robust(cost, X.row(i).transpose(), tj);
      }
      U.row(j) = uj.transpose();
    }
  }
  return param_gradient(model, X, U);
}

}  // namespace mongegap
