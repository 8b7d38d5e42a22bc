#include "mongegap/initializers.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>

namespace mongegap {

namespace {

constexpr double kPsdEigTol = -1e-10;
constexpr double kInvRegularization = 1e-12;
constexpr double kInitScale = 1e-2;

Eigen::SelfAdjointEigenSolver<Matrix> decompose_psd(const Matrix& A, const char* who) {
  if (A.rows() != A.cols()) throw std::invalid_argument(std::string(who) + ": matrix not square");
  if (A.rows() == 0) throw std::invalid_argument(std::string(who) + ": empty matrix");
  const Matrix sym = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error(std::string(who) + ": eigendecomposition failed");
  if (eig.eigenvalues().minCoeff() < kPsdEigTol)
    throw std::domain_error(std::string(who) + ": matrix is not PSD");
  return eig;
}

// Glorot-uniform entries scaled down so the stack starts as a small
// perturbation; draw order is fixed (layers in order, column-major within
// each weight matrix) so a seed pins the result.
void fill_small_glorot(MlpParams& net, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    Matrix& W = net.weights[l];
    const double limit = std::sqrt(6.0 / static_cast<double>(W.rows() + W.cols()));
    std::uniform_real_distribution<double> uniform(-limit, limit);
    for (Index j = 0; j < W.cols(); ++j)
      for (Index i = 0; i < W.rows(); ++i) W(i, j) = kInitScale * uniform(rng);
    net.biases[l].setZero();
  }
}

}  // namespace

GaussianMoments::GaussianMoments(Vector mean_in, Matrix covariance_in)
    : mean(std::move(mean_in)), covariance(std::move(covariance_in)) {
  if (covariance.rows() != covariance.cols() || covariance.rows() != mean.size())
    throw std::invalid_argument("GaussianMoments: mean/covariance shape mismatch");
  covariance = 0.5 * (covariance + covariance.transpose()).eval();
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(covariance);
  if (eig.eigenvalues().minCoeff() < kPsdEigTol)
    throw std::domain_error("GaussianMoments: covariance is not PSD");
}

GaussianMoments estimate_moments(const Matrix& X) {
  if (X.rows() < 2) throw std::invalid_argument("estimate_moments: needs at least 2 samples");
  const Vector mean = X.colwise().mean().transpose();
  const Matrix centered = X.rowwise() - mean.transpose();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(X.rows() - 1);
  return GaussianMoments(mean, cov);
}

Matrix psd_sqrt(const Matrix& A) {
  const auto eig = decompose_psd(A, "psd_sqrt");
  const Vector roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

Matrix psd_inv_sqrt(const Matrix& A) {
  const auto eig = decompose_psd(A, "psd_inv_sqrt");
  const Vector inv_roots =
      (eig.eigenvalues().cwiseMax(0.0).array() + kInvRegularization).rsqrt().matrix();
  return eig.eigenvectors() * inv_roots.asDiagonal() * eig.eigenvectors().transpose();
}

Matrix AffineMap::operator()(const Matrix& X) const {
  if (X.cols() != A.cols()) throw std::invalid_argument("AffineMap: input width mismatch");
  Matrix Y = X * A.transpose();
  Y.rowwise() += b.transpose();
  return Y;
}

AffineMap gaussian_ot_map(const GaussianMoments& src, const GaussianMoments& tgt) {
  if (src.mean.size() != tgt.mean.size())
    throw std::invalid_argument("gaussian_ot_map: dimension mismatch");
  const Matrix src_sqrt = psd_sqrt(src.covariance);
  const Matrix src_inv_sqrt = psd_inv_sqrt(src.covariance);
  const Matrix inner = psd_sqrt(src_sqrt * tgt.covariance * src_sqrt);
  AffineMap map;
  map.A = src_inv_sqrt * inner * src_inv_sqrt;
  map.b = tgt.mean - map.A * src.mean;
  return map;
}

MlpParams identity_init(const std::vector<int>& layer_dims, Parameterization parameterization,
                        Activation activation, std::uint64_t seed) {
  if (layer_dims.size() < 2)
    throw std::invalid_argument("identity_init: layer_dims must list input and output");
  const bool with_residual = parameterization != Parameterization::StructuredConjugate;
  if (with_residual && layer_dims.front() != layer_dims.back())
    throw std::invalid_argument("identity_init: identity residual needs input_dim == output_dim");
  MlpParams net = make_mlp(layer_dims, activation, with_residual);
  fill_small_glorot(net, seed);
  if (with_residual) {
    net.residual->A = Matrix::Identity(layer_dims.back(), layer_dims.front());
    net.residual->b.setZero();
  }
  return net;
}

MlpParams gaussian_init(const Matrix& X, const Matrix& Y, const std::vector<int>& layer_dims,
                        Activation activation, std::uint64_t seed) {
  if (layer_dims.size() < 2)
    throw std::invalid_argument("gaussian_init: layer_dims must list input and output");
  if (layer_dims.front() != layer_dims.back() ||
      layer_dims.front() != static_cast<int>(X.cols()) || X.cols() != Y.cols())
    throw std::invalid_argument("gaussian_init: dimensions must match the sample sets");
  const AffineMap estimate = gaussian_ot_map(estimate_moments(X), estimate_moments(Y));
  MlpParams net = make_mlp(layer_dims, activation, true);
  fill_small_glorot(net, seed);
  net.residual->A = Matrix::Identity(X.cols(), X.cols()) - estimate.A;
  net.residual->b = -estimate.b;
  return net;
}

}  // namespace mongegap
