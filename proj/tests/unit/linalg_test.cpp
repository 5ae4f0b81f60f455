#include "daef/error.hpp"
#include "daef/linalg.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

using namespace daef;

TEST_SUITE("linalg") {
  TEST_CASE("identity decomposes into itself") {
    const auto svd = svd_thin(Matrix::Identity(3, 3));
    CHECK(svd.s.isApprox(Vector::Ones(3)));
    CHECK(test::max_abs_diff(svd.u.cwiseAbs(), Matrix::Identity(3, 3)) < 1e-15);
    // Canonical sign makes each column's dominant entry positive.
    CHECK(test::max_abs_diff(svd.u, Matrix::Identity(3, 3)) < 1e-15);
  }

  TEST_CASE("zero matrix has zero singular values") {
    const auto svd = svd_thin(Matrix::Zero(2, 4));
    REQUIRE(svd.rank() == 2);
    CHECK(svd.s.cwiseAbs().maxCoeff() == 0.0);
    CHECK(test::max_abs_diff(svd.u.transpose() * svd.u, Matrix::Identity(2, 2)) < 1e-14);
  }

  TEST_CASE("U S^2 U^T reproduces the Gram matrix") {
    const Matrix x = test::gaussian(5, 8, 11);
    const auto svd = svd_thin(x);
    const Matrix gram = x * x.transpose();
    CHECK(test::max_abs_diff(svd.u * svd.s.array().square().matrix().asDiagonal() * svd.u.transpose(), gram) < 1e-8);
  }

  TEST_CASE("thin shape, ordering and orthonormality on random shapes") {
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 40; ++trial) {
      const auto rows = static_cast<Eigen::Index>(test::pick(gen, 1, 12));
      const auto cols = static_cast<Eigen::Index>(test::pick(gen, 1, 12));
      const auto svd = svd_thin(test::gaussian(rows, cols, gen()));
      const auto r = std::min(rows, cols);
      REQUIRE(svd.u.rows() == rows);
      REQUIRE(svd.u.cols() == r);
      REQUIRE(svd.s.size() == r);
      for (Eigen::Index i = 0; i < r; ++i) {
        CHECK(svd.s(i) >= 0.0);
        if (i > 0) CHECK(svd.s(i) <= svd.s(i - 1));
      }
      CHECK(test::max_abs_diff(svd.u.transpose() * svd.u, Matrix::Identity(r, r)) < 1e-12);
    }
  }

  TEST_CASE("errors") {
    CHECK_THROWS_AS(svd_thin(Matrix(0, 3)), Error);
    Matrix bad = Matrix::Ones(2, 2);
    bad(1, 0) = std::numeric_limits<double>::quiet_NaN();
    try {
      svd_thin(bad);
      FAIL("expected NonFiniteInput");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NonFiniteInput);
    }
    const auto svd = svd_thin(test::gaussian(4, 4, 1));
    for (Eigen::Index bad_rank : {Eigen::Index{0}, Eigen::Index{5}}) {
      try {
        truncate(svd, bad_rank);
        FAIL("expected RankOutOfRange");
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::RankOutOfRange);
      }
    }
  }

  TEST_CASE("truncate") {
    const auto full = svd_thin(test::gaussian(4, 6, 2));
    const auto same = truncate(full, full.rank());
    CHECK(same.u == full.u);
    CHECK(same.s == full.s);

    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 3.0;
    d(1, 1) = 1.0;
    const auto r1 = truncate(svd_thin(d), 1);
    CHECK(r1.s.size() == 1);
    CHECK(r1.s(0) == doctest::Approx(3.0));
    CHECK(test::max_abs_diff(r1.u, Matrix::Identity(2, 1)) < 1e-15);
  }

  TEST_CASE("Eckart-Young: rank-k residual equals the discarded spectrum") {
    const Matrix x = test::gaussian(6, 20, 5);
    const auto svd = svd_thin(x);
    for (Eigen::Index k = 1; k <= 6; ++k) {
      const auto t = truncate(svd, k);
      const Matrix residual = x - t.u * (t.u.transpose() * x);
      const double expected = std::sqrt(svd.s.tail(6 - k).squaredNorm());
      CHECK(residual.norm() == doctest::Approx(expected).epsilon(1e-9));
    }
  }

  TEST_CASE("merge of one part is the part itself") {
    const auto svd = svd_thin(test::gaussian(5, 9, 4));
    const SvdThin parts[] = {svd};
    const auto merged = dsvd_merge(parts);
    CHECK(test::max_abs_diff(merged.s, svd.s) < 1e-12);
    CHECK(test::max_abs_diff(merged.u, svd.u) < 1e-12);
  }

  TEST_CASE("merge of zero blocks is zero") {
    const SvdThin parts[] = {svd_thin(Matrix::Zero(3, 2)), svd_thin(Matrix::Zero(3, 5))};
    const auto merged = dsvd_merge(parts);
    CHECK(merged.s.cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("merge of uneven splits matches the direct decomposition") {
    std::mt19937_64 gen(17);
    for (int trial = 0; trial < 25; ++trial) {
      const auto rows = static_cast<Eigen::Index>(test::pick(gen, 2, 10));
      const auto cols = static_cast<Eigen::Index>(test::pick(gen, 6, 60));
      const Matrix x = test::gaussian(rows, cols, gen());
      const auto k = test::pick(gen, 2, 5);
      std::vector<SvdThin> parts;
      for (const auto& b : test::random_split(x, k, gen)) parts.push_back(svd_thin(b));
      const auto merged = dsvd_merge(parts);
      const Vector ref = test::reference_singular_values(x);
      REQUIRE(merged.s.size() == ref.size());
      CHECK(((merged.s - ref).cwiseAbs().maxCoeff() / ref(0)) < 1e-10);
      // Every direction is non-degenerate for Gaussian data, so the leading
      // vectors must agree up to sign, and canonical sign fixes that sign.
      const Matrix ref_u = canonical_sign(SvdThin{test::reference_left_vectors(x), ref}).u;
      CHECK(test::max_abs_diff(merged.u, ref_u) < 1e-7);
    }
  }

  TEST_CASE("merge rejects mismatched row counts") {
    const SvdThin parts[] = {svd_thin(test::gaussian(3, 4, 1)), svd_thin(test::gaussian(4, 4, 2))};
    try {
      dsvd_merge(parts);
      FAIL("expected ShapeMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ShapeMismatch);
    }
    CHECK_THROWS_AS(dsvd_merge(std::span<const SvdThin>{}), Error);
  }

  TEST_CASE("canonical sign") {
    Matrix a(2, 1);
    a << -2.0, 1.0;
    canonicalize_columns(a);
    CHECK(a(0, 0) == 2.0);
    CHECK(a(1, 0) == -1.0);

    Matrix tie(2, 1);
    tie << 0.5, -0.5;
    canonicalize_columns(tie);
    CHECK(tie(0, 0) == 0.5);
    CHECK(tie(1, 0) == -0.5);

    Matrix neg_tie(2, 1);
    neg_tie << -0.5, 0.5;
    canonicalize_columns(neg_tie);
    CHECK(neg_tie(0, 0) == 0.5);
    CHECK(neg_tie(1, 0) == -0.5);

    Matrix m = test::gaussian(6, 4, 9);
    canonicalize_columns(m);
    const Matrix once = m;
    canonicalize_columns(m);
    CHECK(m == once);
  }
}
