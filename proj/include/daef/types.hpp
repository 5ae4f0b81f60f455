#pragma once

#include <Eigen/Dense>

#include <string_view>

namespace daef {

// Samples are stored column-wise: a data matrix is features x samples.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Throws NonFiniteInput if any entry is NaN or Inf.
void require_finite(const Eigen::Ref<const Matrix>& m, std::string_view what);

}  // namespace daef
