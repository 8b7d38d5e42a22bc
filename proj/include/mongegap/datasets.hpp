#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "mongegap/initializers.hpp"
#include "mongegap/types.hpp"

namespace mongegap {

// Seeded synthetic measure pairs. Generators with a closed-form transport map
// (Gaussian pairs, the 1-D shift) expose it so evaluation can score against it.
enum class DatasetKind {
  GaussianPair,         // random moment pair in dimension `dim`, affine ground truth
  GaussianMixturePair,  // `components` equal-weight blobs per side, no ground truth
  Toy2D,                // variants: moons, annulus, crossing
  SpherePair,           // variant: caps (unit vectors in R^3)
  Line1D,               // variants: shift (ground truth x+3), bimodal
};

DatasetKind parse_dataset_kind(const std::string& text);
std::string to_string(DatasetKind kind);

struct DatasetSpec {
  DatasetKind kind = DatasetKind::GaussianPair;
  int dim = 2;         // GaussianPair / GaussianMixturePair only; other kinds are fixed
  int components = 3;  // GaussianMixturePair only
  std::string variant;
  std::uint64_t seed = 0;
  Index n_train = 1024;
  Index n_test = 1024;
};

// Effective point dimension: `dim` for the Gaussian kinds, intrinsic otherwise.
int dataset_dimension(const DatasetSpec& spec);

struct SampledData {
  Matrix x_train;
  Matrix y_train;
  Matrix x_test;
  Matrix y_test;
  // Maps source rows to target rows; empty when the pair has no closed form.
  std::function<Matrix(const Matrix&)> ground_truth;

  bool has_ground_truth() const { return static_cast<bool>(ground_truth); }
};

// Draws the four sample sets from disjoint seed streams so train/test and
// source/target are independent, and two calls with the same spec coincide.
SampledData sample(const DatasetSpec& spec);

// A Gaussian pair with its exact affine transport map.
struct GaussianPairSpec {
  GaussianMoments src;
  GaussianMoments tgt;
  AffineMap ground_truth;
};

GaussianPairSpec make_gaussian_pair(GaussianMoments src, GaussianMoments tgt);
GaussianPairSpec random_gaussian_pair(int dim, std::uint64_t seed);

Matrix sample_gaussian(const GaussianMoments& moments, Index n, std::uint64_t seed);

// Pairs equal ranks of two 1-D samples; the result aligns with the rows of x,
// so entry i is the target point coupled to x[i]. This is the exact empirical
// transport map for costs |x-y|^p with p > 1.
Vector monotone_rearrangement_1d(const Vector& x, const Vector& y);

}  // namespace mongegap
