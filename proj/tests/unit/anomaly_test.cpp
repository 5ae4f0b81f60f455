#include "daef/anomaly.hpp"
#include "daef/error.hpp"
#include "support.hpp"

#include <doctest.h>

#include <random>
#include <vector>

using namespace daef;

namespace {

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::ConfigError;
}

// Tight Gaussian normals around the origin, anomalies on a far shell.
LabeledDataset separable(std::size_t normals, std::size_t anomalies, std::uint64_t seed) {
  const Eigen::Index dim = 6;
  const auto n = static_cast<Eigen::Index>(normals + anomalies);
  LabeledDataset d;
  d.features = test::gaussian(dim, n, seed, 0.05);
  d.labels.assign(static_cast<std::size_t>(n), false);
  std::mt19937_64 gen(seed + 1);
  std::normal_distribution<double> nd;
  for (std::size_t k = 0; k < anomalies; ++k) {
    const auto col = static_cast<Eigen::Index>(normals + k);
    Vector dir(dim);
    for (Eigen::Index i = 0; i < dim; ++i) dir(i) = nd(gen);
    d.features.col(col) = 20.0 * dir.normalized();
    d.labels[static_cast<std::size_t>(col)] = true;
  }
  d.name = "separable";
  return d;
}

}  // namespace

TEST_SUITE("anomaly") {
  TEST_CASE("reconstruction error per sample") {
    Matrix x(1, 1), r(1, 1);
    x << 2.0;
    r << 5.0;
    CHECK(reconstruction_errors(x, r)(0) == 9.0);
    const Matrix y = test::gaussian(4, 7, 1);
    CHECK(reconstruction_errors(y, y).cwiseAbs().maxCoeff() == 0.0);
    Matrix two(2, 1), rec(2, 1);
    two << 1.0, 3.0;
    rec << 0.0, 0.0;
    CHECK(reconstruction_errors(two, rec)(0) == 5.0);
    CHECK(code_of([&] { reconstruction_errors(two, x); }) == ErrorCode::ShapeMismatch);
  }

  TEST_CASE("IQR rules on a hand-computed fixture") {
    const Vector e = vec({1, 2, 3, 4, 100});
    CHECK(fit_threshold(e, ThresholdSpec::unusual_iqr()) == doctest::Approx(7.0));
    CHECK(fit_threshold(e, ThresholdSpec::extreme_iqr()) == doctest::Approx(10.0));
    // Order of the training errors is irrelevant.
    CHECK(fit_threshold(vec({100, 3, 1, 4, 2}), ThresholdSpec::extreme_iqr()) == doctest::Approx(10.0));
  }

  TEST_CASE("zero spread puts the cut-off on the constant") {
    const Vector e = Vector::Constant(4, 0.25);
    CHECK(fit_threshold(e, ThresholdSpec::unusual_iqr()) == 0.25);
    CHECK(fit_threshold(e, ThresholdSpec::extreme_iqr()) == 0.25);
    // Equal to the cut-off is normal, so training data is all normal.
    for (bool flag : classify(e, fit_threshold(e, ThresholdSpec::extreme_iqr()))) CHECK_FALSE(flag);
  }

  TEST_CASE("percentile and contamination interpolate linearly") {
    Vector e(100);
    for (int i = 0; i < 100; ++i) e(i) = i;
    CHECK(fit_threshold(e, ThresholdSpec::percentile(0.9)) == doctest::Approx(89.1));
    CHECK(fit_threshold(e, ThresholdSpec::contamination(0.1)) == doctest::Approx(89.1));
    CHECK(fit_threshold(e, ThresholdSpec::percentile(0.5)) == doctest::Approx(49.5));
  }

  TEST_CASE("quantile hits order statistics and is monotone in q") {
    std::mt19937_64 gen(4);
    for (int trial = 0; trial < 30; ++trial) {
      const auto n = test::pick(gen, 2, 40);
      std::vector<double> v(n);
      std::uniform_real_distribution<double> ud(0, 10);
      for (auto& x : v) x = ud(gen);
      std::vector<double> sorted = v;
      std::sort(sorted.begin(), sorted.end());
      for (std::size_t k = 0; k < n; ++k) {
        const double q = static_cast<double>(k) / static_cast<double>(n - 1);
        CHECK(quantile(v, q) == doctest::Approx(sorted[k]).epsilon(1e-12));
      }
      double previous = -1;
      for (int step = 0; step <= 50; ++step) {
        const double value = quantile(v, step / 50.0);
        CHECK(value >= previous);
        CHECK(value >= sorted.front());
        CHECK(value <= sorted.back());
        previous = value;
      }
    }
  }

  TEST_CASE("threshold errors") {
    CHECK(code_of([] { fit_threshold(vec({1, 2, 3}), ThresholdSpec::extreme_iqr()); }) == ErrorCode::TooFewSamples);
    CHECK(code_of([] { fit_threshold(vec({1, 2, 3, NAN}), ThresholdSpec::extreme_iqr()); }) ==
          ErrorCode::NonFiniteInput);
    CHECK(code_of([] { fit_threshold(vec({1, 2, 3, -1}), ThresholdSpec::extreme_iqr()); }) == ErrorCode::DomainError);
    CHECK(code_of([] { fit_threshold(vec({1, 2, 3, 4}), ThresholdSpec::percentile(1.5)); }) ==
          ErrorCode::ConfigError);
  }

  TEST_CASE("classification is strict") {
    const auto labels = classify(vec({0.5, 1.0, 1.5}), 1.0);
    CHECK_FALSE(labels[0]);
    CHECK_FALSE(labels[1]);
    CHECK(labels[2]);
    for (bool flag : classify(vec({0.1, 0.2}), 5.0)) CHECK_FALSE(flag);

    std::mt19937_64 gen(5);
    const Vector e = test::uniform(200, 1, 6, 0, 2);
    const auto vectorised = classify(e, 1.0);
    for (Eigen::Index i = 0; i < e.size(); ++i) CHECK(vectorised[static_cast<std::size_t>(i)] == (e(i) > 1.0));
  }

  TEST_CASE("F1") {
    const std::vector<bool> truth = {true, false, true, false, true};
    CHECK(f1_score(truth, truth) == 1.0);
    CHECK(f1_score(std::vector<bool>(5, false), truth) == 0.0);

    // TP=3, FP=1, FN=2.
    const std::vector<bool> t = {true, true, true, true, true, false, false};
    const std::vector<bool> p = {true, true, true, false, false, true, false};
    const auto c = confusion(p, t);
    CHECK(c.tp == 3);
    CHECK(c.fp == 1);
    CHECK(c.fn == 2);
    CHECK(c.tn == 1);
    CHECK(f1_score(p, t) == doctest::Approx(6.0 / 9.0));

    CHECK(code_of([] { f1_score({true}, {false}); }) == ErrorCode::NoPositives);
    CHECK(code_of([] { f1_score({true}, {true, false}); }) == ErrorCode::LengthMismatch);
  }

  TEST_CASE("separable data is detected perfectly") {
    const auto data = separable(400, 40, 9);
    EvalConfig config;
    config.arch.layer_sizes = {6, 3, 6};
    config.arch.lambda_hidden = 0.1;
    config.arch.lambda_last = 0.1;
    config.threshold = ThresholdSpec::extreme_iqr();
    config.folds = 10;
    const auto report = evaluate_cv(data, config);
    CHECK(report.folds.size() == 10);
    CHECK(report.mean_f1 == 1.0);
    CHECK(report.std_f1 == 0.0);
    for (const auto& f : report.folds) {
      CHECK(f.n_test == 8);
      CHECK(f.counts.tp == 4);
    }
  }

  TEST_CASE("evaluation is reproducible and worker independent") {
    const auto data = separable(300, 30, 10);
    EvalConfig config;
    config.arch.layer_sizes = {6, 2, 4, 6};
    config.threshold = ThresholdSpec::percentile(0.9);
    config.folds = 5;
    config.seed = 3;
    const auto a = evaluate_cv(data, config).to_json().dump();
    config.workers = 4;
    CHECK(evaluate_cv(data, config).to_json().dump() == a);
    config.seed = 4;
    CHECK(evaluate_cv(data, config).to_json().dump() != a);
  }

  TEST_CASE("more folds than anomalies") {
    EvalConfig config;
    config.arch.layer_sizes = {6, 2, 6};
    config.folds = 10;
    CHECK(code_of([&] { evaluate_cv(separable(100, 5, 1), config); }) == ErrorCode::InsufficientAnomalies);
  }
}
