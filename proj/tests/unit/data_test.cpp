#include "daef/data.hpp"
#include "daef/error.hpp"
#include "daef/random.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

using namespace daef;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::ConfigError;
}

const std::filesystem::path kDataDir = DAEF_DATA_DIR;

}  // namespace

TEST_SUITE("data") {
  TEST_CASE("small CSV") {
    const std::string text = "a,b,class\n1,2,0\n3,4.5,1\n-1,\"6\",0\n";
    const auto ds = parse_csv(text, CsvSchema{});
    CHECK(ds.size() == 3);
    CHECK(ds.features.rows() == 2);
    CHECK(ds.labels == std::vector<bool>{false, true, false});
    CHECK(ds.features(1, 1) == 4.5);
    CHECK(ds.features(1, 2) == 6.0);
    CHECK(ds.feature_names == std::vector<std::string>{"a", "b"});
    CHECK(ds.anomaly_count() == 1);
  }

  TEST_CASE("label by index, excluded columns, unlabelled data") {
    const std::string text = "id,x,y,lab\n1,0.5,2,b\n2,1.5,3,g\n";
    CsvSchema by_index;
    by_index.label_column = std::size_t{3};
    by_index.anomaly_value = "b";
    by_index.exclude_columns = {"id"};
    const auto ds = parse_csv(text, by_index);
    CHECK(ds.features.rows() == 2);
    CHECK(ds.labels == std::vector<bool>{true, false});

    const auto plain = parse_csv("x,lab\n1,q\n2,q\n", CsvSchema{std::string(), "1", {"lab"}});
    CHECK(plain.anomaly_count() == 0);
    CHECK(plain.features.rows() == 1);
  }

  TEST_CASE("numeric label matching") {
    const auto ds = parse_csv("x,class\n1,1.0\n2,1\n3,0\n", CsvSchema{});
    CHECK(ds.labels == std::vector<bool>{true, true, false});
  }

  TEST_CASE("CSV errors name the row and column") {
    try {
      parse_csv("a,b,class\n1,2,0\n3,oops,1\n", CsvSchema{});
      FAIL("expected NonNumericFeature");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NonNumericFeature);
      CHECK(std::string(e.what()).find("row 3, column 2") != std::string::npos);
    }
    CHECK(code_of([] { parse_csv("a,b\n1,2\n", CsvSchema{}); }) == ErrorCode::MissingLabelColumn);
    CHECK(code_of([] { parse_csv("a,class\n1,2,3\n", CsvSchema{}); }) == ErrorCode::ParseError);
    CHECK(code_of([] { parse_csv("a,class\n\"1,0\n", CsvSchema{}); }) == ErrorCode::ParseError);
    CHECK(code_of([] { load_csv("/nonexistent/file.csv", CsvSchema{}); }) == ErrorCode::IoError);
  }

  TEST_CASE("bundled Ionosphere manifest") {
    std::vector<std::string> warnings;
    const auto ds = load_dataset(load_manifest(kDataDir / "manifests" / "ionosphere.json"), &warnings);
    CHECK(warnings.empty());
    CHECK(ds.size() == 351);
    CHECK(ds.features.rows() == 33);
    CHECK(ds.anomaly_count() == 126);
  }

  TEST_CASE("manifest count mismatches become warnings") {
    auto manifest = load_manifest(kDataDir / "manifests" / "ionosphere.json");
    manifest.expected->anomalies = 64;
    std::vector<std::string> warnings;
    load_dataset(manifest, &warnings);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("anomaly count") != std::string::npos);
  }

  TEST_CASE("scaler") {
    Matrix x = test::gaussian(4, 50, 3, 3.0);
    x.row(0).array() += 7.0;
    x.row(3).setConstant(2.5);
    const auto s = scaler_fit(x);
    const Matrix z = scaler_apply(s, x);
    for (Eigen::Index i = 0; i < 3; ++i) {
      CHECK(std::abs(z.row(i).mean()) < 1e-12);
      CHECK(z.row(i).array().square().mean() == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(z.row(3).cwiseAbs().maxCoeff() == 0.0);

    const Matrix shifted = test::gaussian(4, 5, 4).array() + 1.0;
    const Matrix applied = scaler_apply(s, shifted);
    for (Eigen::Index i = 0; i < 4; ++i) {
      for (Eigen::Index j = 0; j < 5; ++j) {
        CHECK(applied(i, j) == doctest::Approx((shifted(i, j) - s.means(i)) / s.stds(i)).epsilon(1e-15));
      }
    }
    CHECK(code_of([&] { scaler_apply(s, Matrix::Zero(3, 2)); }) == ErrorCode::ShapeMismatch);
    CHECK(code_of([] { scaler_fit(Matrix::Zero(3, 1)); }) == ErrorCode::TooFewSamples);
  }

  TEST_CASE("stratified folds") {
    std::vector<bool> labels(100, false);
    std::fill(labels.begin(), labels.begin() + 20, true);
    const auto folds = split_folds(labels, 10, 1);
    std::map<std::size_t, int> sizes;
    for (auto f : folds) ++sizes[f];
    for (const auto& [f, count] : sizes) CHECK(count == 10);

    // 156 anomalies among 6714 samples, as in Pendigits.
    std::vector<bool> pen(6714, false);
    std::fill(pen.begin(), pen.begin() + 156, true);
    const auto assign = split_folds(pen, 10, 7);
    std::vector<int> anomalies(10, 0), total(10, 0);
    for (std::size_t i = 0; i < pen.size(); ++i) {
      ++total[assign[i]];
      if (pen[i]) ++anomalies[assign[i]];
    }
    for (int k = 0; k < 10; ++k) {
      CHECK((anomalies[k] == 15 || anomalies[k] == 16));
      CHECK((total[k] == 671 || total[k] == 672));
    }
    CHECK(split_folds(pen, 10, 7) == assign);
    CHECK(split_folds(pen, 10, 8) != assign);
    CHECK(code_of([&] { split_folds(std::vector<bool>(50, false), 5, 1); }) == ErrorCode::InsufficientAnomalies);
  }

  TEST_CASE("column partitions cover every sample once") {
    const Matrix x = test::gaussian(3, 10, 5);
    const auto whole = partition_columns(x, 1, 2);
    CHECK(whole.blocks.front() == x);

    const auto part = partition_columns(x, 4, 2);
    std::vector<Eigen::Index> sizes;
    std::set<std::size_t> seen;
    for (std::size_t p = 0; p < 4; ++p) {
      sizes.push_back(part.blocks[p].cols());
      CHECK(std::is_sorted(part.indices[p].begin(), part.indices[p].end()));
      for (std::size_t c = 0; c < part.indices[p].size(); ++c) {
        CHECK(seen.insert(part.indices[p][c]).second);
        CHECK(part.blocks[p].col(static_cast<Eigen::Index>(c)) == x.col(static_cast<Eigen::Index>(part.indices[p][c])));
      }
    }
    CHECK(sizes == std::vector<Eigen::Index>{3, 3, 2, 2});
    CHECK(seen.size() == 10);
    CHECK(code_of([&] { partition_columns(x, 11, 1); }) == ErrorCode::TooManyPartitions);
  }

  TEST_CASE("seed stream") {
    SeedStream a(5), b(5);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    SeedStream s(1);
    double sum = 0, sq = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      const double u = s.uniform01();
      CHECK((u >= 0.0 && u < 1.0));
      const double z = s.normal();
      sum += z;
      sq += z * z;
    }
    CHECK(std::abs(sum / n) < 0.05);
    CHECK(sq / n == doctest::Approx(1.0).epsilon(0.05));
    for (int i = 0; i < 1000; ++i) CHECK(s.below(7) < 7);
    CHECK(mix_seed(1, 2) != mix_seed(2, 1));
    CHECK(mix_seed(1, 2) == mix_seed(1, 2));
  }
}
