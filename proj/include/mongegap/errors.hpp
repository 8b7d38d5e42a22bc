#pragma once

#include <stdexcept>

namespace mongegap {

// Thrown when a derivative is requested at a point where the cost family is
// not differentiable (kinks, boundary of the domain). Callers that need
// robustness may retry with slightly perturbed inputs; the training-side
// helpers do so with a deterministic 1e-9 shift.
struct SingularityError : std::domain_error {
  using std::domain_error::domain_error;
};

}  // namespace mongegap
