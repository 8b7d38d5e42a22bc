#include "mongegap/costs.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace mongegap {

namespace {

constexpr double kUnitNormTol = 1e-8;

void check_same_dim(const Vector& x, const Vector& y) {
  if (x.size() != y.size())
    throw std::invalid_argument("cost: dimension mismatch between x and y");
  if (x.size() == 0) throw std::invalid_argument("cost: empty input");
}

void check_unit(const Vector& v) {
  if (std::abs(v.norm() - 1.0) > kUnitNormTol)
    throw std::domain_error("sphere cost: input is not a unit vector");
}

double clamped_inner(const Vector& x, const Vector& y) {
  double s = x.dot(y);
  if (s > 1.0) s = 1.0;
  if (s < -1.0) s = -1.0;
  return s;
}

std::string format_exponent(double p) {
  char buffer[64];
  auto result = std::to_chars(buffer, buffer + sizeof(buffer), p);
  return std::string(buffer, result.ptr);
}

}  // namespace

CostSpec CostSpec::sq_euclidean() { return CostSpec(CostFamily::SqEuclidean, 2.0); }

CostSpec CostSpec::power_norm(double p) {
  if (!(p > 1.0)) throw std::invalid_argument("power_norm: requires p > 1");
  return CostSpec(CostFamily::PowerNorm, p);
}

CostSpec CostSpec::euclidean() { return CostSpec(CostFamily::EuclideanDistance, 1.0); }

CostSpec CostSpec::sphere_geodesic() { return CostSpec(CostFamily::SphereGeodesic, 0.0); }

CostSpec CostSpec::sphere_neglog() { return CostSpec(CostFamily::SphereNegLog, 0.0); }

CostSpec CostSpec::parse(const std::string& text) {
  if (text == "sqeuclidean") return sq_euclidean();
  if (text == "euclidean") return euclidean();
  if (text == "sphere-geodesic") return sphere_geodesic();
  if (text == "sphere-neglog") return sphere_neglog();
  const std::string prefix = "powernorm:p=";
  if (text.rfind(prefix, 0) == 0) {
    std::size_t used = 0;
    double p = 0;
    try {
      p = std::stod(text.substr(prefix.size()), &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("cost parse: bad exponent in '" + text + "'");
    }
    if (used != text.size() - prefix.size())
      throw std::invalid_argument("cost parse: bad exponent in '" + text + "'");
    return power_norm(p);
  }
  throw std::invalid_argument("cost parse: unknown cost '" + text + "'");
}

std::string CostSpec::to_string() const {
  switch (family_) {
    case CostFamily::SqEuclidean: return "sqeuclidean";
    case CostFamily::PowerNorm: return "powernorm:p=" + format_exponent(p_);
    case CostFamily::EuclideanDistance: return "euclidean";
    case CostFamily::SphereGeodesic: return "sphere-geodesic";
    case CostFamily::SphereNegLog: return "sphere-neglog";
  }
  throw std::logic_error("cost: unreachable family");
}

double CostSpec::exponent() const {
  if (family_ != CostFamily::PowerNorm && family_ != CostFamily::SqEuclidean)
    throw std::invalid_argument("cost: exponent only defined for power-norm costs");
  return p_;
}

double CostSpec::conjugate_exponent() const {
  const double p = exponent();
  return p / (p - 1.0);
}

bool CostSpec::has_conjugate() const {
  return family_ == CostFamily::SqEuclidean || family_ == CostFamily::PowerNorm;
}

bool CostSpec::on_sphere() const {
  return family_ == CostFamily::SphereGeodesic || family_ == CostFamily::SphereNegLog;
}

double eval_cost(const CostSpec& cost, const Vector& x, const Vector& y) {
  check_same_dim(x, y);
  switch (cost.family()) {
    case CostFamily::SqEuclidean:
      return 0.5 * (x - y).squaredNorm();
    case CostFamily::PowerNorm: {
      const double p = cost.exponent();
      return (x - y).array().abs().pow(p).sum() / p;
    }
    case CostFamily::EuclideanDistance:
      return (x - y).norm();
    case CostFamily::SphereGeodesic: {
      check_unit(x);
      check_unit(y);
      return std::acos(clamped_inner(x, y));
    }
    case CostFamily::SphereNegLog: {
      check_unit(x);
      check_unit(y);
      const double s = x.dot(y);
      if (!(s > 0.0)) throw std::domain_error("sphere-neglog: <x, y> must be positive");
      return -std::log(s);
    }
  }
  throw std::logic_error("cost: unreachable family");
}

Matrix cost_matrix(const CostSpec& cost, const Matrix& X, const Matrix& Y) {
  if (X.cols() != Y.cols())
    throw std::invalid_argument("cost_matrix: dimension mismatch between X and Y");
  if (X.rows() == 0 || Y.rows() == 0)
    throw std::invalid_argument("cost_matrix: empty sample set");
  Matrix C(X.rows(), Y.rows());
  for (Index j = 0; j < Y.rows(); ++j) {
    const Vector yj = Y.row(j);
    for (Index i = 0; i < X.rows(); ++i) C(i, j) = eval_cost(cost, X.row(i), yj);
  }
  return C;
}

Vector grad_x_cost(const CostSpec& cost, const Vector& x, const Vector& y) {
  check_same_dim(x, y);
  switch (cost.family()) {
    case CostFamily::SqEuclidean:
      return x - y;
    case CostFamily::PowerNorm: {
      const double p = cost.exponent();
      const Vector z = x - y;
      if (p < 2.0 && (z.array() == 0.0).any())
        throw SingularityError("powernorm gradient: zero coordinate with p < 2");
      return (z.array().sign() * z.array().abs().pow(p - 1.0)).matrix();
    }
    case CostFamily::EuclideanDistance: {
      const Vector z = x - y;
      const double norm = z.norm();
      if (norm == 0.0) throw SingularityError("euclidean gradient: x == y");
      return z / norm;
    }
    case CostFamily::SphereGeodesic: {
      check_unit(x);
      check_unit(y);
      const double s = clamped_inner(x, y);
      if (std::abs(s) >= 1.0)
        throw SingularityError("sphere-geodesic gradient: |<x, y>| == 1");
      return -y / std::sqrt(1.0 - s * s);
    }
    case CostFamily::SphereNegLog: {
      check_unit(x);
      check_unit(y);
      const double s = x.dot(y);
      if (!(s > 0.0)) throw std::domain_error("sphere-neglog: <x, y> must be positive");
      return -y / s;
    }
  }
  throw std::logic_error("cost: unreachable family");
}

Vector grad_y_cost(const CostSpec& cost, const Vector& x, const Vector& y) {
  return grad_x_cost(cost, y, x);
}

Vector grad_y_cost_robust(const CostSpec& cost, const Vector& x, const Vector& y) {
  try {
    return grad_y_cost(cost, x, y);
  } catch (const SingularityError&) {
    const double delta = 1e-9 * (1.0 + y.array().abs().maxCoeff());
    Vector shifted = (y.array() + delta).matrix();
    if (cost.on_sphere()) shifted /= shifted.norm();
    return grad_y_cost(cost, x, shifted);
  }
}

Vector conjugate_gradient(const CostSpec& cost, const Vector& z) {
  if (!cost.has_conjugate())
    throw std::invalid_argument("conjugate_gradient: cost family has no implemented conjugate");
  const double q = cost.conjugate_exponent();
  if (q == 2.0) return z;
  return (z.array().sign() * z.array().abs().pow(q - 1.0)).matrix();
}

Vector conjugate_gradient_jacobian(const CostSpec& cost, const Vector& z) {
  if (!cost.has_conjugate())
    throw std::invalid_argument(
        "conjugate_gradient_jacobian: cost family has no implemented conjugate");
  const double q = cost.conjugate_exponent();
  if (q == 2.0) return Vector::Ones(z.size());
  if (q < 2.0 && (z.array() == 0.0).any())
    throw SingularityError("conjugate_gradient_jacobian: zero coordinate with q < 2");
  return ((q - 1.0) * z.array().abs().pow(q - 2.0)).matrix();
}

}  // namespace mongegap
