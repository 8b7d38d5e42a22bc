#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mongegap/costs.hpp"
#include "mongegap/types.hpp"

namespace mongegap {

enum class Activation { GeLU, Identity };

Activation parse_activation(const std::string& text);
std::string to_string(Activation activation);

// Exact GeLU x * Phi(x) (standard normal CDF) and its first two derivatives.
double gelu(double x);
double gelu_prime(double x);
double gelu_second(double x);

// Optional input -> output skip connection, added as A x + b on top of the
// layer stack.
struct ResidualLayer {
  Matrix A;
  Vector b;
};

// Fully connected stack. weights[l] maps layer_dims[l] to layer_dims[l + 1];
// hidden layers apply the activation, the final layer is affine. The flat
// parameter vector is W_0, b_0, ..., W_{L-1}, b_{L-1} (column-major within
// each weight matrix), then the residual A (column-major) and b if present.
struct MlpParams {
  std::vector<int> layer_dims;
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  Activation activation = Activation::GeLU;
  std::optional<ResidualLayer> residual;

  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
  Index parameter_count() const;
  Vector flatten() const;
  void unflatten(const Vector& theta);
};

// All weights, biases and (when requested) the residual start at zero.
MlpParams make_mlp(const std::vector<int>& layer_dims, Activation activation,
                   bool with_residual);

enum class Parameterization { Direct, StructuredConjugate, SphereNormalized };

Parameterization parse_parameterization(const std::string& text);
std::string to_string(Parameterization parameterization);

// Transport map built from the network F:
//   Direct:              T(x) = F(x)
//   StructuredConjugate: T(x) = x - conjugate_gradient(cost, F(x))
//   SphereNormalized:    T(x) = F(x) / |F(x)|
// The cost is consulted only by StructuredConjugate and must then have an
// implemented conjugate.
struct MapModel {
  Parameterization parameterization = Parameterization::Direct;
  CostSpec cost = CostSpec::sq_euclidean();
  MlpParams net;
};

// Rows of X are inputs; one output row per input row.
Matrix forward(const MlpParams& net, const Matrix& X);
Matrix apply_map(const MapModel& model, const Matrix& X);

// Gradient of sum_i <cotangents.row(i), T(x_i)> over the flat parameters,
// chaining through the parameterization.
Vector param_gradient(const MapModel& model, const Matrix& X, const Matrix& cotangents);

// Directional derivative of F at x along v, and its adjoint u -> J(x)^T u.
Vector jvp(const MlpParams& net, const Vector& x, const Vector& v);
Vector vjp(const MlpParams& net, const Vector& x, const Vector& u);

// Gradient over the flat parameters of
//   sum_i sum_j |jvp(x_i, V.row(j)) - vjp(x_i, V.row(j))|^2,
// the unnormalized asymmetry objective; requires input_dim == output_dim.
Vector second_order_param_gradient(const MlpParams& net, const Matrix& X, const Matrix& V);

}  // namespace mongegap
