#include "daef/linalg.hpp"

#include "daef/error.hpp"

#include <cmath>
#include <string>

namespace daef {

SvdThin svd_thin(const Eigen::Ref<const Matrix>& x) {
  if (x.rows() == 0 || x.cols() == 0) {
    throw Error(ErrorCode::EmptyInput, "svd_thin on an empty matrix");
  }
  require_finite(x, "svd_thin input");

  // Only U is requested; Jacobi SVD never accumulates V in that mode.
  Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeThinU);
  SvdThin out{svd.matrixU(), svd.singularValues()};
  canonicalize_columns(out.u);
  return out;
}

SvdThin truncate(const SvdThin& svd, Eigen::Index rank) {
  if (rank < 1 || rank > svd.rank()) {
    throw Error(ErrorCode::RankOutOfRange,
                "requested rank " + std::to_string(rank) + " of " + std::to_string(svd.rank()));
  }
  return SvdThin{svd.u.leftCols(rank), svd.s.head(rank)};
}

SvdThin merge_products(std::span<const Matrix> products) {
  if (products.empty()) {
    throw Error(ErrorCode::EmptyInput, "merge of zero parts");
  }
  const Eigen::Index rows = products.front().rows();
  Eigen::Index cols = 0;
  for (std::size_t p = 0; p < products.size(); ++p) {
    if (products[p].rows() != rows) {
      throw Error(ErrorCode::ShapeMismatch, "part " + std::to_string(p) + " has " +
                                                std::to_string(products[p].rows()) + " rows, expected " +
                                                std::to_string(rows));
    }
    cols += products[p].cols();
  }
  if (cols == 0) {
    throw Error(ErrorCode::EmptyInput, "all parts are empty");
  }

  Matrix stacked(rows, cols);
  Eigen::Index at = 0;
  for (const auto& block : products) {
    stacked.middleCols(at, block.cols()) = block;
    at += block.cols();
  }
  return svd_thin(stacked);
}

SvdThin dsvd_merge(std::span<const SvdThin> parts) {
  if (parts.empty()) {
    throw Error(ErrorCode::EmptyInput, "merge of zero parts");
  }
  std::vector<Matrix> products;
  products.reserve(parts.size());
  for (const auto& part : parts) products.push_back(part.scaled_u());
  return merge_products(products);
}

void canonicalize_columns(Matrix& u) {
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    Eigen::Index pivot = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      const double mag = std::abs(u(i, j));
      if (mag > best) {
        best = mag;
        pivot = i;
      }
    }
    if (u(pivot, j) < 0.0) u.col(j) = -u.col(j);
  }
}

SvdThin canonical_sign(SvdThin svd) {
  canonicalize_columns(svd.u);
  return svd;
}

}  // namespace daef
