#pragma once

#include <string>

#include "mongegap/errors.hpp"
#include "mongegap/types.hpp"

namespace mongegap {

enum class CostFamily { SqEuclidean, PowerNorm, EuclideanDistance, SphereGeodesic, SphereNegLog };

// Ground cost c(x, y) on R^d, or on the unit sphere for the two sphere
// families (inputs there must be unit vectors up to 1e-8).
// SqEuclidean is 0.5 * |x - y|_2^2 and coincides with PowerNorm at p = 2.
class CostSpec {
 public:
  static CostSpec sq_euclidean();
  static CostSpec power_norm(double p);  // (1/p) * sum_k |x_k - y_k|^p, p > 1
  static CostSpec euclidean();           // |x - y|_2
  static CostSpec sphere_geodesic();     // arccos(<x, y>)
  static CostSpec sphere_neglog();       // -log(<x, y>), requires <x, y> > 0

  // Accepts "sqeuclidean", "powernorm:p=<value>", "euclidean",
  // "sphere-geodesic", "sphere-neglog". Inverse of to_string.
  static CostSpec parse(const std::string& text);
  std::string to_string() const;

  CostFamily family() const { return family_; }
  double exponent() const;            // p; PowerNorm only
  double conjugate_exponent() const;  // q with 1/p + 1/q = 1
  bool has_conjugate() const;         // SqEuclidean and PowerNorm
  bool on_sphere() const;

 private:
  CostSpec(CostFamily family, double p) : family_(family), p_(p) {}
  CostFamily family_;
  double p_;
};

double eval_cost(const CostSpec& cost, const Vector& x, const Vector& y);

// Pairwise costs: C(i, j) = c(X.row(i), Y.row(j)). Rows are points.
Matrix cost_matrix(const CostSpec& cost, const Matrix& X, const Matrix& Y);

// Gradient of c in its first argument. Raises SingularityError at kinks:
// EuclideanDistance at x == y, PowerNorm with p < 2 at a zero coordinate of
// x - y, SphereGeodesic at |<x, y>| == 1.
Vector grad_x_cost(const CostSpec& cost, const Vector& x, const Vector& y);

// Gradient in the second argument; every family is symmetric in (x, y)
// except SphereNegLog, whose -log(<x, y>) is symmetric too, so this equals
// grad_x_cost with the arguments swapped.
Vector grad_y_cost(const CostSpec& cost, const Vector& x, const Vector& y);

// grad_y_cost with one deterministic retry: on SingularityError the second
// argument is shifted by 1e-9 * (1 + |y|_inf) on every coordinate
// (re-normalized for sphere families) and the gradient is re-evaluated.
// Intended for optimization loops that must not die on exact kinks.
Vector grad_y_cost_robust(const CostSpec& cost, const Vector& x, const Vector& y);

// Gradient of the convex conjugate of h(z) = (1/p) |z|_p^p, applied
// coordinatewise: sign(z) * |z|^(q - 1). The identity map for SqEuclidean.
Vector conjugate_gradient(const CostSpec& cost, const Vector& z);

// Diagonal of the Jacobian of conjugate_gradient: (q - 1) * |z|^(q - 2).
// Raises SingularityError at zero coordinates when q < 2.
Vector conjugate_gradient_jacobian(const CostSpec& cost, const Vector& z);

}  // namespace mongegap
