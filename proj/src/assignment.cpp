#include "mongegap/assignment.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mongegap {

namespace {

void check_square(const Matrix& C) {
  if (C.rows() == 0) throw std::invalid_argument("assignment: empty cost matrix");
  if (C.rows() != C.cols()) throw std::invalid_argument("assignment: cost matrix must be square");
  if (!C.allFinite()) throw std::invalid_argument("assignment: cost matrix must be finite");
}

}  // namespace

double assignment_cost(const Matrix& C, const std::vector<int>& permutation) {
  if (static_cast<Index>(permutation.size()) != C.rows())
    throw std::invalid_argument("assignment_cost: permutation length mismatch");
  double total = 0.0;
  for (Index i = 0; i < C.rows(); ++i) total += C(i, permutation[i]);
  return total / static_cast<double>(C.rows());
}

Assignment exact_assignment(const Matrix& C) {
  check_square(C);
  const int n = static_cast<int>(C.rows());
  const double inf = std::numeric_limits<double>::infinity();

  // Dual-potential shortest augmenting path method, 1-indexed with a
  // virtual column 0 holding the row currently being inserted.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0);  // column -> row
  std::vector<int> way(n + 1, 0);

  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> min_slack(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = -1;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double slack = C(i0 - 1, j - 1) - u[i0] - v[j];
        if (slack < min_slack[j]) {
          min_slack[j] = slack;
          way[j] = j0;
        }
        if (min_slack[j] < delta) {
          delta = min_slack[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          min_slack[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Assignment result;
  result.permutation.assign(n, -1);
  for (int j = 1; j <= n; ++j) result.permutation[match[j] - 1] = j - 1;
  result.cost = assignment_cost(C, result.permutation);
  return result;
}

Assignment brute_force_assignment(const Matrix& C) {
  check_square(C);
  const int n = static_cast<int>(C.rows());
  if (n > 9) throw std::invalid_argument("brute_force_assignment: n must be <= 9");

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_total = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += C(i, perm[i]);
    if (total < best_total) {
      best_total = total;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  Assignment result;
  result.permutation = best;
  result.cost = assignment_cost(C, best);
  return result;
}

}  // namespace mongegap
