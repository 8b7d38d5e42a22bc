#pragma once

#include <cstdint>
#include <vector>

#include "mongegap/neural_map.hpp"
#include "mongegap/types.hpp"

namespace mongegap {

// First two moments of a distribution. The covariance is symmetrized on
// construction and must be PSD up to a -1e-10 eigenvalue tolerance
// (negative eigenvalues inside the tolerance are treated as zero).
struct GaussianMoments {
  GaussianMoments(Vector mean_in, Matrix covariance_in);
  Vector mean;
  Matrix covariance;
};

// Sample moments with the unbiased (n - 1) covariance; requires n >= 2.
GaussianMoments estimate_moments(const Matrix& X);

// Symmetric PSD square root via eigendecomposition; psd_inv_sqrt adds
// 1e-12 I before inverting so nearly singular inputs stay finite.
Matrix psd_sqrt(const Matrix& A);
Matrix psd_inv_sqrt(const Matrix& A);

// x -> A x + b applied to every row.
struct AffineMap {
  Matrix A;
  Vector b;
  Matrix operator()(const Matrix& X) const;
};

// Transport map between Gaussian distributions under the squared-Euclidean
// cost: A = S^{-1/2} (S^{1/2} Cov_tgt S^{1/2})^{1/2} S^{-1/2} with
// S = Cov_src, and b = mean_tgt - A mean_src. Pushes src exactly onto tgt.
AffineMap gaussian_ot_map(const GaussianMoments& src, const GaussianMoments& tgt);

// Near-identity start: inner weights Glorot-uniform scaled by 1e-2, zero
// biases. Direct and SphereNormalized get the residual (I, 0);
// StructuredConjugate gets no residual, since T(x) = x - grad h*(F(x)) is
// already near the identity when F is small.
MlpParams identity_init(const std::vector<int>& layer_dims, Parameterization parameterization,
                        Activation activation, std::uint64_t seed);

// Starts the structured squared-Euclidean map at the Gaussian
// transport estimate between the moments of X and Y by writing the
// residual (I - A, -b) into F, so that T(x) = x - F(x) ~= A x + b.
MlpParams gaussian_init(const Matrix& X, const Matrix& Y, const std::vector<int>& layer_dims,
                        Activation activation, std::uint64_t seed);

}  // namespace mongegap
