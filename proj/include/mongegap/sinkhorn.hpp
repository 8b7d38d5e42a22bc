#pragma once

#include "mongegap/costs.hpp"
#include "mongegap/types.hpp"

namespace mongegap {

// Entropic coupling between uniform weights over n source atoms and m
// target atoms. Marginals hold up to the solver tolerance.
struct TransportPlan {
  Matrix coupling;      // n x m, entries in [0, min(1/n, 1/m)] up to tolerance
  Vector row_marginal;  // uniform 1/n
  Vector col_marginal;  // uniform 1/m
};

struct SinkhornOptions {
  double tol = 1e-6;  // stop when the L-inf marginal violation drops below
  int max_iter = 2000;
};

struct SinkhornSolution {
  TransportPlan plan;
  Vector f;  // source potentials
  Vector g;  // target potentials
  double epsilon = 0.0;
  double transport_cost = 0.0;    // <P, C>
  double regularized_cost = 0.0;  // <P, C> - epsilon * H(P), H the entropy
  double marginal_violation = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Log-domain Sinkhorn on a finite cost matrix with uniform marginals and
// epsilon > 0. Holding C fixed, transport_cost is non-decreasing and
// regularized_cost non-increasing in epsilon.
SinkhornSolution sinkhorn(const Matrix& C, double epsilon, const SinkhornOptions& options = {});

// 0.01 * mean(C), floored at 1e-12.
double epsilon_rule(const Matrix& C);

// W(X, Y) - (W(X, X) + W(Y, Y)) / 2 with every term the regularized
// objective at the same epsilon. Zero when X and Y coincide.
double sinkhorn_divergence(const Matrix& X, const Matrix& Y, const CostSpec& cost,
                           double epsilon, const SinkhornOptions& options = {});

// Rowwise barycentric projection of the entropic plan between X and Y under
// the squared-Euclidean cost: x_i -> n * sum_j P_ij y_j.
Matrix entropic_barycentric_map(const Matrix& X, const Matrix& Y, double epsilon,
                                const SinkhornOptions& options = {});

}  // namespace mongegap
