#pragma once

#include "mongegap/costs.hpp"
#include "mongegap/neural_map.hpp"
#include "mongegap/sinkhorn.hpp"
#include "mongegap/types.hpp"

namespace mongegap {

// How far a set of map values T sits from being an optimal rearrangement of
// the reference samples X: mean displacement cost minus the optimal
// coupling cost between the two point clouds. Rows align, t_i = T(x_i).
struct MongeGapValue {
  double displacement = 0.0;  // (1/n) sum_i c(x_i, t_i)
  double ot_cost = 0.0;       // coupling objective between X and T
  double gap = 0.0;           // displacement - ot_cost, >= 0 at epsilon == 0
  double epsilon = 0.0;
  bool converged = true;  // Sinkhorn status; always true on the exact path
};

// epsilon == 0 solves the exact assignment; epsilon > 0 the entropic
// objective (whose gap exceeds the exact one by the entropy bonus).
MongeGapValue monge_gap(const Matrix& X, const Matrix& T, const CostSpec& cost, double epsilon,
                        const SinkhornOptions& options = {});

// Exact value by enumerating permutations; n <= 9, epsilon == 0.
MongeGapValue monge_gap_permutation(const Matrix& X, const Matrix& T, const CostSpec& cost);

// D = (1/n) I - P for a square plan. Rows and columns sum to zero;
// contracting D against cost gradients gives the gap gradient with the plan
// held fixed.
Matrix danskin_coefficients(const TransportPlan& plan);

// Parameter gradient of monge_gap(X, apply_map(model, X), cost, epsilon)
// with the optimal entropic plan frozen (epsilon > 0). value_out, when
// given, receives the gap value from the same solve.
Vector monge_gap_gradient(const Matrix& X, const MapModel& model, const CostSpec& cost,
                          double epsilon, const SinkhornOptions& options = {},
                          MongeGapValue* value_out = nullptr);

}  // namespace mongegap
