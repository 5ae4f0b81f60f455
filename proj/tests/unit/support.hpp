#pragma once

// Test-side generators and oracles. They use only <random> and Eigen, never
// the library's own SeedStream or SVD path, so they stay independent of the
// code under test.

#include "daef/types.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace daef::test {

inline Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = nd(gen);
  }
  return m;
}

inline Matrix uniform(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double lo, double hi) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> ud(lo, hi);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = ud(gen);
  }
  return m;
}

inline std::size_t pick(std::mt19937_64& gen, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(gen);
}

/// Strictly increasing cut points 0 < c_1 < ... < n splitting n columns in k
/// non-empty blocks of random sizes.
inline std::vector<Matrix> random_split(const Matrix& x, std::size_t k, std::mt19937_64& gen) {
  const auto n = static_cast<std::size_t>(x.cols());
  std::vector<std::size_t> cuts;
  std::vector<std::size_t> pool(n - 1);
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i + 1;
  std::shuffle(pool.begin(), pool.end(), gen);
  cuts.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k - 1));
  std::sort(cuts.begin(), cuts.end());
  cuts.push_back(n);
  std::vector<Matrix> out;
  std::size_t at = 0;
  for (auto c : cuts) {
    out.push_back(x.middleCols(static_cast<Eigen::Index>(at), static_cast<Eigen::Index>(c - at)));
    at = c;
  }
  return out;
}

inline Matrix hconcat(const std::vector<Matrix>& blocks) {
  Eigen::Index cols = 0;
  for (const auto& b : blocks) cols += b.cols();
  Matrix out(blocks.front().rows(), cols);
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    out.middleCols(at, b.cols()) = b;
    at += b.cols();
  }
  return out;
}

/// Reference singular values from the divide-and-conquer solver, which is a
/// different algorithm from the one the library uses.
inline Vector reference_singular_values(const Matrix& x) { return Eigen::BDCSVD<Matrix>(x).singularValues(); }

inline Matrix reference_left_vectors(const Matrix& x) {
  return Eigen::BDCSVD<Matrix>(x, Eigen::ComputeThinU).matrixU();
}

/// sin of the largest principal angle between span(a) and span(b), both
/// with orthonormal columns. Computed as ||(I - a a^T) b||_2, which stays
/// accurate for tiny angles where acos would not.
inline double subspace_sin(const Matrix& a, const Matrix& b) {
  const Matrix residual = b - a * (a.transpose() * b);
  return Eigen::JacobiSVD<Matrix>(residual).singularValues()(0);
}

/// Ridge solution from the normal equations, with the bias row appended
/// inside: (X F^2 X^T + lambda I)^{-1} X F^2 d.
inline Vector normal_equations(const Matrix& inputs, const Vector& f_prime, const Vector& d_bar, double lambda) {
  Matrix x_aug(inputs.rows() + 1, inputs.cols());
  x_aug.topRows(inputs.rows()) = inputs;
  x_aug.row(inputs.rows()).setOnes();
  const Vector f2 = f_prime.array().square();
  Matrix a = x_aug * f2.asDiagonal() * x_aug.transpose();
  a.diagonal().array() += lambda;
  const Vector rhs = x_aug * (f2.array() * d_bar.array()).matrix();
  return a.fullPivLu().solve(rhs);
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return INFINITY;
  if (a.size() == 0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace daef::test
