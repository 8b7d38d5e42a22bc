#include "mongegap/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mongegap {

namespace {

using Array = Eigen::ArrayXd;
using ArrayXX = Eigen::ArrayXXd;

// logsumexp over rows (result has one entry per row), max-shifted.
Array lse_rows(const ArrayXX& E) {
  const Array shift = E.rowwise().maxCoeff();
  return shift + (E.colwise() - shift).exp().rowwise().sum().log();
}

// logsumexp over columns (one entry per column).
Array lse_cols(const ArrayXX& E) {
  const Array shift = E.colwise().maxCoeff().transpose();
  return shift + (E.rowwise() - shift.transpose()).exp().colwise().sum().transpose().log();
}

}  // namespace

SinkhornSolution sinkhorn(const Matrix& C, double epsilon, const SinkhornOptions& options) {
  if (C.rows() == 0 || C.cols() == 0) throw std::invalid_argument("sinkhorn: empty cost matrix");
  if (!C.allFinite()) throw std::invalid_argument("sinkhorn: cost matrix must be finite");
  if (!(epsilon > 0.0)) throw std::invalid_argument("sinkhorn: epsilon must be positive");
  if (!(options.tol > 0.0) || options.max_iter < 1)
    throw std::invalid_argument("sinkhorn: bad options");

  const Index n = C.rows(), m = C.cols();
  const double a = 1.0 / static_cast<double>(n);
  const double b = 1.0 / static_cast<double>(m);
  const double log_a = std::log(a), log_b = std::log(b);
  const ArrayXX Ca = C.array();

  SinkhornSolution sol;
  sol.epsilon = epsilon;
  Array f = Array::Zero(n), g = Array::Zero(m);
  ArrayXX E(n, m);  // exponent (f_i + g_j - C_ij) / epsilon
  double row_violation = 0.0;

  for (int iter = 1; iter <= options.max_iter; ++iter) {
    // f_i = eps * log a - eps * lse_j((g_j - C_ij) / eps)
    E = ((-Ca).rowwise() + g.transpose()) / epsilon;
    f = epsilon * (log_a - lse_rows(E));
    // g_j = eps * log b - eps * lse_i((f_i - C_ij) / eps)
    E = ((-Ca).colwise() + f) / epsilon;
    g = epsilon * (log_b - lse_cols(E));

    // After the g update the column sums are exact up to rounding, so
    // convergence is measured on the row sums of the implied plan.
    E.rowwise() += (g / epsilon).transpose();
    row_violation = (E.exp().rowwise().sum() - a).abs().maxCoeff();
    sol.iterations = iter;
    if (row_violation <= options.tol) {
      sol.converged = true;
      break;
    }
  }

  const ArrayXX P = E.exp();
  const double col_violation = (P.colwise().sum() - b).abs().maxCoeff();
  sol.marginal_violation = std::max(row_violation, col_violation);
  sol.f = f.matrix();
  sol.g = g.matrix();
  sol.transport_cost = (P * Ca).sum();
  const double entropy = -(P * E).sum();  // log P == E entrywise
  sol.regularized_cost = sol.transport_cost - epsilon * entropy;
  sol.plan.coupling = P.matrix();
  sol.plan.row_marginal = Vector::Constant(n, a);
  sol.plan.col_marginal = Vector::Constant(m, b);
  return sol;
}

double epsilon_rule(const Matrix& C) {
  if (C.size() == 0) throw std::invalid_argument("epsilon_rule: empty cost matrix");
  return std::max(0.01 * C.mean(), 1e-12);
}

double sinkhorn_divergence(const Matrix& X, const Matrix& Y, const CostSpec& cost,
                           double epsilon, const SinkhornOptions& options) {
  const double w_xy = sinkhorn(cost_matrix(cost, X, Y), epsilon, options).regularized_cost;
  const double w_xx = sinkhorn(cost_matrix(cost, X, X), epsilon, options).regularized_cost;
  const double w_yy = sinkhorn(cost_matrix(cost, Y, Y), epsilon, options).regularized_cost;
  return w_xy - 0.5 * (w_xx + w_yy);
}

Matrix entropic_barycentric_map(const Matrix& X, const Matrix& Y, double epsilon,
                                const SinkhornOptions& options) {
  const Matrix C = cost_matrix(CostSpec::sq_euclidean(), X, Y);
  const SinkhornSolution sol = sinkhorn(C, epsilon, options);
  return static_cast<double>(X.rows()) * sol.plan.coupling * Y;
}

}  // namespace mongegap
