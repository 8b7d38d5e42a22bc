#include "mongegap/regularizers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mongegap {

namespace {

void check_field(const MlpParams& net, const Matrix& X) {
  if (net.input_dim() != net.output_dim())
    throw std::invalid_argument("conservativity: requires input_dim == output_dim");
  if (X.cols() != net.input_dim())
    throw std::invalid_argument("conservativity: input width does not match the network");
  if (X.rows() == 0) throw std::invalid_argument("conservativity: empty sample set");
}

}  // namespace

ConservativityValue conservativity_exact(const MlpParams& net, const Matrix& X) {
  check_field(net, X);
  const Index d = X.cols();
  double total = 0.0;
  Matrix J(d, d), Jt(d, d);
  for (Index i = 0; i < X.rows(); ++i) {
    const Vector x = X.row(i).transpose();
    for (Index k = 0; k < d; ++k) {
      const Vector e = Vector::Unit(d, k);
      J.col(k) = jvp(net, x, e);
      Jt.col(k) = vjp(net, x, e);
    }
    total += (J - Jt).squaredNorm();
  }
  ConservativityValue value;
  value.value = total / static_cast<double>(X.rows());
  value.probes_used = static_cast<int>(d);
  value.estimator = ConservativityEstimator::Exact;
  return value;
}

ConservativityValue conservativity_hutchinson(const MlpParams& net, const Matrix& X,
                                              const Matrix& V) {
  check_field(net, X);
  if (V.cols() != X.cols() || V.rows() == 0)
    throw std::invalid_argument("conservativity: probe shape mismatch");
  double total = 0.0;
  for (Index i = 0; i < X.rows(); ++i) {
    const Vector x = X.row(i).transpose();
    for (Index j = 0; j < V.rows(); ++j) {
      const Vector v = V.row(j).transpose();
      total += (jvp(net, x, v) - vjp(net, x, v)).squaredNorm();
    }
  }
  ConservativityValue value;
  value.value = total / (static_cast<double>(X.rows()) * static_cast<double>(V.rows()));
  value.probes_used = static_cast<int>(V.rows());
  value.estimator = ConservativityEstimator::Hutchinson;
  return value;
}

int probe_count(int d) {
  if (d < 1) throw std::invalid_argument("probe_count: dimension must be positive");
  return std::max(1, static_cast<int>(std::ceil(0.2 * static_cast<double>(d))));
}

}  // namespace mongegap
