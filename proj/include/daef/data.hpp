#pragma once

#include "daef/scaler.hpp"
#include "daef/types.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace daef {

/// How to read a labelled CSV: which column holds the label, which literal
/// marks an anomaly, and which columns to drop (e.g. constant exports).
/// An empty label column name reads unlabelled data as all-normal.
struct CsvSchema {
  std::variant<std::string, std::size_t> label_column = std::string("class");
  std::string anomaly_value = "1";
  std::vector<std::string> exclude_columns;
};

struct ExpectedCounts {
  std::size_t n = 0;
  std::size_t dim = 0;
  std::size_t anomalies = 0;
};

/// Checked-in description of a benchmark dataset.
struct DatasetManifest {
  std::string name;
  std::string csv;  // relative to the manifest file unless absolute
  std::string url;
  std::string notes;
  CsvSchema schema;
  std::optional<ExpectedCounts> expected;
  std::filesystem::path base_dir;

  std::filesystem::path csv_path() const;
};

struct LabeledDataset {
  Matrix features;           // m0 x n
  std::vector<bool> labels;  // true = anomaly
  std::string name;
  std::vector<std::string> feature_names;

  std::size_t size() const { return labels.size(); }
  std::size_t anomaly_count() const;
};

/// RFC-4180 CSV with a header row. Row numbers in errors count file records
/// from 1 (the header); columns count from 1.
/// Throws IoError, ParseError, MissingLabelColumn, NonNumericFeature.
LabeledDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);
LabeledDataset parse_csv(const std::string& text, const CsvSchema& schema, const std::string& name = "");

/// Throws IoError, SchemaError.
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Loads the manifest's CSV; count mismatches against the manifest are
/// appended to `warnings` rather than thrown.
LabeledDataset load_dataset(const DatasetManifest& manifest, std::vector<std::string>* warnings = nullptr);

/// Throws TooFewSamples when n < 2.
StandardScaler scaler_fit(const Matrix& features);
Matrix scaler_apply(const StandardScaler& scaler, const Matrix& features);

/// Stratified fold index per sample; anomalies and normals are shuffled
/// separately and dealt round-robin so fold sizes differ by at most one.
/// Throws InsufficientAnomalies (anomalies < folds), TooManyPartitions.
std::vector<std::size_t> split_folds(const std::vector<bool>& labels, std::size_t folds, std::uint64_t seed);

struct ColumnPartition {
  std::vector<Matrix> blocks;
  std::vector<std::vector<std::size_t>> indices;  // original column of each block column, ascending
};

/// Random disjoint cover of the columns in `parts` near-equal blocks.
/// Throws TooManyPartitions.
ColumnPartition partition_columns(const Matrix& x, std::size_t parts, std::uint64_t seed);

Matrix select_columns(const Matrix& x, const std::vector<std::size_t>& columns);

}  // namespace daef
