#pragma once

#include <Eigen/Dense>

namespace mongegap {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

}  // namespace mongegap
