#pragma once

#include "mongegap/neural_map.hpp"
#include "mongegap/types.hpp"

namespace mongegap {

enum class ConservativityEstimator { Exact, Hutchinson };

// Asymmetry of the network Jacobian, zero exactly when the field is the
// gradient of a potential on each sample.
struct ConservativityValue {
  double value = 0.0;  // always >= 0
  int probes_used = 0;
  ConservativityEstimator estimator = ConservativityEstimator::Exact;
};

// Mean over rows of X of |J(x) - J(x)^T|_F^2, with J assembled from d jvp
// passes and J^T from d vjp passes. Requires input_dim == output_dim.
ConservativityValue conservativity_exact(const MlpParams& net, const Matrix& X);

// (1/(n m)) sum_i sum_j |jvp(x_i, v_j) - vjp(x_i, v_j)|^2 over the probe
// rows of V. Standard normal probes make this an unbiased estimate of the
// exact value; the scaled canonical basis (e_k * sqrt(d)) recovers it
// exactly.
ConservativityValue conservativity_hutchinson(const MlpParams& net, const Matrix& X,
                                              const Matrix& V);

// Number of probes drawn per step: ceil(0.2 * d), at least 1.
int probe_count(int d);

}  // namespace mongegap
