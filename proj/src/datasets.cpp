#include "mongegap/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mongegap/rng.hpp"

namespace mongegap {

namespace {

Matrix standard_normal(Index n, Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix Z(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) Z(i, j) = normal(rng);
  return Z;
}

GaussianMoments random_moments(int dim, double mean_shift, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector mean(dim);
  for (Index i = 0; i < mean.size(); ++i) mean(i) = normal(rng) + mean_shift;
  Matrix B(dim, dim);
  for (Index j = 0; j < B.cols(); ++j)
    for (Index i = 0; i < B.rows(); ++i) B(i, j) = normal(rng);
  const Matrix cov =
      B * B.transpose() / static_cast<double>(dim) + 0.1 * Matrix::Identity(dim, dim);
  return GaussianMoments(mean, cov);
}

struct MixtureComponent {
  Vector mean;
  Matrix factor;  // psd_sqrt of the covariance
};

std::vector<MixtureComponent> random_mixture(int dim, int k, double mean_shift,
                                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<MixtureComponent> components(k);
  for (auto& component : components) {
    component.mean.resize(dim);
    for (Index i = 0; i < component.mean.size(); ++i)
      component.mean(i) = 2.0 * normal(rng) + mean_shift;
    Matrix B(dim, dim);
    for (Index j = 0; j < B.cols(); ++j)
      for (Index i = 0; i < B.rows(); ++i) B(i, j) = normal(rng) / std::sqrt(double(dim));
    component.factor =
        psd_sqrt(B.transpose() * B + 0.1 * Matrix::Identity(dim, dim));
  }
  return components;
}

Matrix sample_mixture(const std::vector<MixtureComponent>& components, Index n,
                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(components.size()) - 1);
  const Index d = components.front().mean.size();
  Matrix X(n, d);
  for (Index i = 0; i < n; ++i) {
    const auto& component = components[pick(rng)];
    Vector z(d);
    for (Index j = 0; j < d; ++j) z(j) = normal(rng);
    X.row(i) = (component.mean + component.factor * z).transpose();
  }
  return X;
}

// One noisy half-circle; `flipped` selects the second, offset moon.
Matrix sample_moon(Index n, bool flipped, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, M_PI);
  std::normal_distribution<double> noise(0.0, 0.05);
  Matrix X(n, 2);
  for (Index i = 0; i < n; ++i) {
    const double t = angle(rng);
    double px = std::cos(t);
    double py = std::sin(t);
    if (flipped) {
      px = 1.0 - px;
      py = 0.5 - py;
    }
    X(i, 0) = px + noise(rng);
    X(i, 1) = py + noise(rng);
  }
  return X;
}

// Angular bump on an annulus, centered at `angle0`.
Matrix sample_annulus(Index n, double angle0, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> radius(1.0, 1.5);
  std::normal_distribution<double> angle(angle0, 0.4);
  Matrix X(n, 2);
  for (Index i = 0; i < n; ++i) {
    const double r = radius(rng);
    const double t = angle(rng);
    X(i, 0) = r * std::cos(t);
    X(i, 1) = r * std::sin(t);
  }
  return X;
}

// Two tight clusters at (cx, +1) and (cx, -1).
Matrix sample_cluster_pair(Index n, double cx, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.2);
  std::bernoulli_distribution top(0.5);
  Matrix X(n, 2);
  for (Index i = 0; i < n; ++i) {
    X(i, 0) = cx + noise(rng);
    X(i, 1) = (top(rng) ? 1.0 : -1.0) + noise(rng);
  }
  return X;
}

Matrix sample_sphere_caps(Index n, const std::vector<Vector>& centers, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(centers.size()) - 1);
  Matrix X(n, 3);
  for (Index i = 0; i < n; ++i) {
    Vector p = centers[pick(rng)];
    for (Index j = 0; j < 3; ++j) p(j) += 0.3 * normal(rng);
    X.row(i) = (p / p.norm()).transpose();
  }
  return X;
}

Matrix sample_line_gaussian(Index n, double mean, double stddev, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(mean, stddev);
  Matrix X(n, 1);
  for (Index i = 0; i < n; ++i) X(i, 0) = normal(rng);
  return X;
}

Matrix sample_line_bimodal(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.5);
  std::bernoulli_distribution right(0.5);
  Matrix X(n, 1);
  for (Index i = 0; i < n; ++i) X(i, 0) = (right(rng) ? 3.0 : -3.0) + normal(rng);
  return X;
}

void check_variant(const DatasetSpec& spec, std::initializer_list<const char*> allowed) {
  for (const char* name : allowed)
    if (spec.variant == name) return;
  throw std::invalid_argument("sample: unknown variant '" + spec.variant + "' for " +
                              to_string(spec.kind));
}

}  // namespace

DatasetKind parse_dataset_kind(const std::string& text) {
  if (text == "gaussian") return DatasetKind::GaussianPair;
  if (text == "gaussian-mixture") return DatasetKind::GaussianMixturePair;
  if (text == "toy2d") return DatasetKind::Toy2D;
  if (text == "sphere") return DatasetKind::SpherePair;
  if (text == "line1d") return DatasetKind::Line1D;
  throw std::invalid_argument("parse_dataset_kind: unknown kind '" + text + "'");
}

std::string to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::GaussianPair: return "gaussian";
    case DatasetKind::GaussianMixturePair: return "gaussian-mixture";
    case DatasetKind::Toy2D: return "toy2d";
    case DatasetKind::SpherePair: return "sphere";
    case DatasetKind::Line1D: return "line1d";
  }
  throw std::logic_error("to_string: bad DatasetKind");
}

int dataset_dimension(const DatasetSpec& spec) {
  switch (spec.kind) {
    case DatasetKind::GaussianPair:
    case DatasetKind::GaussianMixturePair: return spec.dim;
    case DatasetKind::Toy2D: return 2;
    case DatasetKind::SpherePair: return 3;
    case DatasetKind::Line1D: return 1;
  }
  throw std::logic_error("dataset_dimension: bad DatasetKind");
}

GaussianPairSpec make_gaussian_pair(GaussianMoments src, GaussianMoments tgt) {
  GaussianPairSpec pair{std::move(src), std::move(tgt), {}};
  pair.ground_truth = gaussian_ot_map(pair.src, pair.tgt);
  return pair;
}

GaussianPairSpec random_gaussian_pair(int dim, std::uint64_t seed) {
  if (dim < 1) throw std::invalid_argument("random_gaussian_pair: dim must be positive");
  std::mt19937_64 rng(seed);
  GaussianMoments src = random_moments(dim, 0.0, rng);
  GaussianMoments tgt = random_moments(dim, 2.0, rng);
  return make_gaussian_pair(std::move(src), std::move(tgt));
}

Matrix sample_gaussian(const GaussianMoments& moments, Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Matrix factor = psd_sqrt(moments.covariance);
  Matrix X = standard_normal(n, moments.mean.size(), rng) * factor.transpose();
  X.rowwise() += moments.mean.transpose();
  return X;
}

SampledData sample(const DatasetSpec& spec) {
  if (spec.n_train < 2 || spec.n_test < 2)
    throw std::invalid_argument("sample: n_train and n_test must be at least 2");

  const std::uint64_t train_src = derive_seed(spec.seed, 0);
  const std::uint64_t train_tgt = derive_seed(spec.seed, 1);
  const std::uint64_t test_src = derive_seed(spec.seed, 2);
  const std::uint64_t test_tgt = derive_seed(spec.seed, 3);
  const std::uint64_t structure = derive_seed(spec.seed, 4);

  SampledData data;
  switch (spec.kind) {
    case DatasetKind::GaussianPair: {
      const GaussianPairSpec pair = random_gaussian_pair(spec.dim, structure);
      data.x_train = sample_gaussian(pair.src, spec.n_train, train_src);
      data.y_train = sample_gaussian(pair.tgt, spec.n_train, train_tgt);
      data.x_test = sample_gaussian(pair.src, spec.n_test, test_src);
      data.y_test = sample_gaussian(pair.tgt, spec.n_test, test_tgt);
      const AffineMap map = pair.ground_truth;
      data.ground_truth = [map](const Matrix& X) { return map(X); };
      break;
    }
    case DatasetKind::GaussianMixturePair: {
      if (spec.dim < 1 || spec.components < 1)
        throw std::invalid_argument("sample: mixture needs dim >= 1 and components >= 1");
      const auto src = random_mixture(spec.dim, spec.components, 0.0, derive_seed(structure, 0));
      const auto tgt = random_mixture(spec.dim, spec.components, 2.0, derive_seed(structure, 1));
      data.x_train = sample_mixture(src, spec.n_train, train_src);
      data.y_train = sample_mixture(tgt, spec.n_train, train_tgt);
      data.x_test = sample_mixture(src, spec.n_test, test_src);
      data.y_test = sample_mixture(tgt, spec.n_test, test_tgt);
      break;
    }
    case DatasetKind::Toy2D: {
      check_variant(spec, {"moons", "annulus", "crossing"});
      if (spec.variant == "moons") {
        data.x_train = sample_moon(spec.n_train, false, train_src);
        data.y_train = sample_moon(spec.n_train, true, train_tgt);
        data.x_test = sample_moon(spec.n_test, false, test_src);
        data.y_test = sample_moon(spec.n_test, true, test_tgt);
      } else if (spec.variant == "annulus") {
        data.x_train = sample_annulus(spec.n_train, 0.0, train_src);
        data.y_train = sample_annulus(spec.n_train, M_PI / 2, train_tgt);
        data.x_test = sample_annulus(spec.n_test, 0.0, test_src);
        data.y_test = sample_annulus(spec.n_test, M_PI / 2, test_tgt);
      } else {
        data.x_train = sample_cluster_pair(spec.n_train, -2.0, train_src);
        data.y_train = sample_cluster_pair(spec.n_train, 2.0, train_tgt);
        data.x_test = sample_cluster_pair(spec.n_test, -2.0, test_src);
        data.y_test = sample_cluster_pair(spec.n_test, 2.0, test_tgt);
      }
      break;
    }
    case DatasetKind::SpherePair: {
      check_variant(spec, {"caps"});
      const std::vector<Vector> src_centers{Vector{{0.0, 0.0, 1.0}}};
      const std::vector<Vector> tgt_centers{Vector{{std::sin(0.9), 0.0, std::cos(0.9)}},
                                            Vector{{-std::sin(0.9), 0.0, std::cos(0.9)}}};
      data.x_train = sample_sphere_caps(spec.n_train, src_centers, train_src);
      data.y_train = sample_sphere_caps(spec.n_train, tgt_centers, train_tgt);
      data.x_test = sample_sphere_caps(spec.n_test, src_centers, test_src);
      data.y_test = sample_sphere_caps(spec.n_test, tgt_centers, test_tgt);
      break;
    }
    case DatasetKind::Line1D: {
      check_variant(spec, {"shift", "bimodal"});
      data.x_train = sample_line_gaussian(spec.n_train, 0.0, 1.0, train_src);
      data.x_test = sample_line_gaussian(spec.n_test, 0.0, 1.0, test_src);
      if (spec.variant == "shift") {
        data.y_train = sample_line_gaussian(spec.n_train, 3.0, 1.0, train_tgt);
        data.y_test = sample_line_gaussian(spec.n_test, 3.0, 1.0, test_tgt);
        AffineMap map;
        map.A = Matrix::Identity(1, 1);
        map.b = Vector::Constant(1, 3.0);
        data.ground_truth = [map](const Matrix& X) { return map(X); };
      } else {
        data.y_train = sample_line_bimodal(spec.n_train, train_tgt);
        data.y_test = sample_line_bimodal(spec.n_test, test_tgt);
      }
      break;
    }
  }
  return data;
}

Vector monotone_rearrangement_1d(const Vector& x, const Vector& y) {
  if (x.size() != y.size())
    throw std::invalid_argument("monotone_rearrangement_1d: sample counts differ");
  if (x.size() == 0) throw std::invalid_argument("monotone_rearrangement_1d: empty samples");
  const Index n = x.size();
  std::vector<Index> x_order(n), y_order(n);
  std::iota(x_order.begin(), x_order.end(), Index{0});
  std::iota(y_order.begin(), y_order.end(), Index{0});
  std::sort(x_order.begin(), x_order.end(), [&](Index a, Index b) { return x(a) < x(b); });
  std::sort(y_order.begin(), y_order.end(), [&](Index a, Index b) { return y(a) < y(b); });
  Vector out(n);
  for (Index rank = 0; rank < n; ++rank) out(x_order[rank]) = y(y_order[rank]);
  return out;
}

}  // namespace mongegap
