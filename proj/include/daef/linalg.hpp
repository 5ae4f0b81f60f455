#pragma once

#include "daef/types.hpp"

#include <cstddef>
#include <span>

namespace daef {

/// Left singular vectors and singular values of a matrix. There is
/// deliberately no field for right singular vectors: they are never formed.
/// Columns of `u` are orthonormal, `s` is non-increasing and non-negative,
/// and u.cols() == s.size(). Singular values far below s(0) are kept as-is;
/// rank is chosen by the caller, never by a tolerance.
struct SvdThin {
  Matrix u;
  Vector s;

  Eigen::Index rows() const { return u.rows(); }
  Eigen::Index rank() const { return s.size(); }

  /// U * diag(s), the only quantity another site ever needs.
  Matrix scaled_u() const { return u * s.asDiagonal(); }
};

/// Thin SVD keeping r = min(rows, cols) components. Sign-canonicalised.
/// Throws NonFiniteInput, EmptyInput.
SvdThin svd_thin(const Eigen::Ref<const Matrix>& x);

/// First `rank` columns of U and values of s. Throws RankOutOfRange.
SvdThin truncate(const SvdThin& svd, Eigen::Index rank);

/// SVD of the horizontal concatenation [U1*S1 | ... | UP*SP]. Equals the
/// thin SVD of the concatenated raw blocks up to rounding. Parts may have
/// different ranks but must share a row count.
/// Throws EmptyInput, ShapeMismatch.
SvdThin dsvd_merge(std::span<const SvdThin> parts);

/// Same merge, starting from already-formed U*S products (the form in which
/// remote sites publish them).
SvdThin merge_products(std::span<const Matrix> products);

/// Flips each column of U so its largest-magnitude entry is positive; on
/// exact ties the lowest row index decides. Idempotent.
SvdThin canonical_sign(SvdThin svd);
void canonicalize_columns(Matrix& u);

}  // namespace daef
