#pragma once

#include <vector>

#include "mongegap/types.hpp"

namespace mongegap {

struct Assignment {
  std::vector<int> permutation;  // permutation[i] = column matched to row i
  double cost = 0.0;             // mean of C(i, permutation[i]) over rows
};

// Exact minimum-mean-cost assignment on a square matrix, O(n^3) via dual
// potentials.
Assignment exact_assignment(const Matrix& C);

// Reference implementation enumerating all permutations; requires n <= 9.
Assignment brute_force_assignment(const Matrix& C);

// Mean of the entries selected by the permutation, summed in row order so
// both solvers report bit-identical costs for identical permutations.
double assignment_cost(const Matrix& C, const std::vector<int>& permutation);

}  // namespace mongegap
