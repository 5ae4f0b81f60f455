#include "daef/data.hpp"

#include "daef/error.hpp"
#include "daef/json_util.hpp"
#include "daef/model_io.hpp"
#include "daef/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

namespace daef {

namespace {

using Record = std::vector<std::string>;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<double> parse_number(std::string_view text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = t.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

Error parse_error(std::size_t row, std::size_t col, const std::string& why) {
  return Error(ErrorCode::ParseError, "row " + std::to_string(row) + ", column " + std::to_string(col) + ": " + why);
}

std::vector<Record> parse_records(const std::string& text) {
  std::vector<Record> records;
  Record current;
  std::string field;
  bool in_quotes = false;
  bool field_quoted = false;
  bool record_open = false;

  auto end_field = [&] {
    current.push_back(std::move(field));
    field.clear();
    field_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    // Blank lines carry no data.
    if (!(current.size() == 1 && current[0].empty())) records.push_back(std::move(current));
    current.clear();
    record_open = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    record_open = true;
    switch (c) {
      case '"':
        if (!trim(field).empty() || field_quoted) {
          throw parse_error(records.size() + 1, current.size() + 1, "stray quote inside unquoted field");
        }
        field.clear();
        in_quotes = true;
        field_quoted = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(c);
    }
  }
  if (in_quotes) throw parse_error(records.size() + 1, current.size() + 1, "unterminated quoted field");
  if (record_open) end_record();
  return records;
}

bool label_matches(const std::string& cell, const std::string& anomaly_value) {
  const std::string a = trim(cell);
  const std::string b = trim(anomaly_value);
  if (a == b) return true;
  const auto x = parse_number(a);
  const auto y = parse_number(b);
  return x && y && *x == *y;
}

}  // namespace

std::size_t LabeledDataset::anomaly_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
}

LabeledDataset parse_csv(const std::string& text, const CsvSchema& schema, const std::string& name) {
  const auto records = parse_records(text);
  if (records.empty()) throw Error(ErrorCode::ParseError, "row 1, column 1: missing header");
  const Record& header = records.front();

  std::size_t label_col = header.size();
  if (const auto* by_name = std::get_if<std::string>(&schema.label_column); by_name && by_name->empty()) {
    // Unlabelled data: every sample counts as normal.
  } else if (by_name) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (trim(header[c]) == *by_name) label_col = c;
    }
    if (label_col == header.size()) throw Error(ErrorCode::MissingLabelColumn, "no column named '" + *by_name + "'");
  } else {
    label_col = std::get<std::size_t>(schema.label_column);
    if (label_col >= header.size()) {
      throw Error(ErrorCode::MissingLabelColumn, "label column index " + std::to_string(label_col) + " out of range");
    }
  }

  std::vector<std::size_t> feature_cols;
  LabeledDataset ds;
  ds.name = name;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == label_col) continue;
    const std::string col_name = trim(header[c]);
    if (std::find(schema.exclude_columns.begin(), schema.exclude_columns.end(), col_name) !=
        schema.exclude_columns.end()) {
      continue;
    }
    feature_cols.push_back(c);
    ds.feature_names.push_back(col_name);
  }

  const std::size_t n = records.size() - 1;
  ds.features.resize(static_cast<Eigen::Index>(feature_cols.size()), static_cast<Eigen::Index>(n));
  ds.labels.resize(n);
  for (std::size_t r = 1; r < records.size(); ++r) {
    const Record& rec = records[r];
    if (rec.size() != header.size()) {
      throw parse_error(r + 1, std::min(rec.size(), header.size()) + 1,
                        "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(rec.size()));
    }
    ds.labels[r - 1] = label_col < header.size() && label_matches(rec[label_col], schema.anomaly_value);
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      const auto v = parse_number(rec[feature_cols[f]]);
      if (!v) {
        throw Error(ErrorCode::NonNumericFeature, "row " + std::to_string(r + 1) + ", column " +
                                                      std::to_string(feature_cols[f] + 1) + ": '" +
                                                      rec[feature_cols[f]] + "' is not a number");
      }
      ds.features(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(r - 1)) = *v;
    }
  }
  return ds;
}

LabeledDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  return parse_csv(read_file(path), schema, path.stem().string());
}

std::filesystem::path DatasetManifest::csv_path() const {
  std::filesystem::path p(csv);
  return p.is_absolute() ? p : base_dir / p;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
  }
  DatasetManifest m;
  m.base_dir = path.parent_path();
  try {
    m.name = require_field(j, "name").get<std::string>();
    m.csv = j.value("csv", m.name + ".csv");
    m.url = j.value("url", "");
    m.notes = j.value("notes", "");
    const Json& label = require_field(j, "label_column");
    if (label.is_number_unsigned()) {
      m.schema.label_column = label.get<std::size_t>();
    } else {
      m.schema.label_column = label.get<std::string>();
    }
    const Json& anomaly = require_field(j, "anomaly_value");
    m.schema.anomaly_value = anomaly.is_string() ? anomaly.get<std::string>() : anomaly.dump();
    if (j.contains("exclude_columns")) m.schema.exclude_columns = j["exclude_columns"].get<std::vector<std::string>>();
    if (j.contains("expected")) {
      const Json& e = j["expected"];
      m.expected = ExpectedCounts{require_field(e, "n").get<std::size_t>(), require_field(e, "dim").get<std::size_t>(),
                                  require_field(e, "anomalies").get<std::size_t>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
  }
  return m;
}

LabeledDataset load_dataset(const DatasetManifest& manifest, std::vector<std::string>* warnings) {
  LabeledDataset ds = load_csv(manifest.csv_path(), manifest.schema);
  ds.name = manifest.name;
  if (manifest.expected && warnings) {
    const auto& e = *manifest.expected;
    auto check = [&](const char* what, std::size_t got, std::size_t want) {
      if (got != want) {
        warnings->push_back(manifest.name + ": " + what + " is " + std::to_string(got) + ", manifest expects " +
                            std::to_string(want));
      }
    };
    check("sample count", ds.size(), e.n);
    check("dimension", static_cast<std::size_t>(ds.features.rows()), e.dim);
    check("anomaly count", ds.anomaly_count(), e.anomalies);
  }
  return ds;
}

StandardScaler scaler_fit(const Matrix& features) {
  if (features.cols() < 2) {
    throw Error(ErrorCode::TooFewSamples, "scaler needs at least 2 samples");
  }
  require_finite(features, "scaler input");
  StandardScaler s;
  const double n = static_cast<double>(features.cols());
  s.means = features.rowwise().mean();
  s.stds = ((features.colwise() - s.means).array().square().rowwise().sum() / n).sqrt().matrix();
  for (Eigen::Index i = 0; i < s.stds.size(); ++i) {
    if (s.stds(i) < 1e-12) s.stds(i) = 1.0;
  }
  return s;
}

Matrix scaler_apply(const StandardScaler& scaler, const Matrix& features) {
  if (features.rows() != scaler.means.size()) {
    throw Error(ErrorCode::ShapeMismatch, "scaler fitted on " + std::to_string(scaler.means.size()) +
                                              " features, got " + std::to_string(features.rows()));
  }
  return (features.colwise() - scaler.means).array().colwise() / scaler.stds.array();
}

std::vector<std::size_t> split_folds(const std::vector<bool>& labels, std::size_t folds, std::uint64_t seed) {
  if (folds < 1 || folds > labels.size()) {
    throw Error(ErrorCode::TooManyPartitions,
                std::to_string(folds) + " folds for " + std::to_string(labels.size()) + " samples");
  }
  std::vector<std::size_t> anomalies;
  std::vector<std::size_t> normals;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? anomalies : normals).push_back(i);
  if (anomalies.size() < folds) {
    throw Error(ErrorCode::InsufficientAnomalies,
                std::to_string(anomalies.size()) + " anomalies cannot cover " + std::to_string(folds) + " folds");
  }
  SeedStream rng(seed);
  rng.shuffle(std::span<std::size_t>(anomalies));
  rng.shuffle(std::span<std::size_t>(normals));

  std::vector<std::size_t> assignment(labels.size());
  std::size_t next = 0;
  for (auto i : anomalies) assignment[i] = next++ % folds;
  for (auto i : normals) assignment[i] = next++ % folds;
  return assignment;
}

Matrix select_columns(const Matrix& x, const std::vector<std::size_t>& columns) {
  Matrix out(x.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    out.col(static_cast<Eigen::Index>(c)) = x.col(static_cast<Eigen::Index>(columns[c]));
  }
  return out;
}

ColumnPartition partition_columns(const Matrix& x, std::size_t parts, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(x.cols());
  if (parts < 1 || parts > n) {
    throw Error(ErrorCode::TooManyPartitions, std::to_string(parts) + " partitions for " + std::to_string(n) +
                                                  " samples");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  SeedStream rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  ColumnPartition out;
  const std::size_t base = n / parts;
  const std::size_t extra = n % parts;
  std::size_t at = 0;
  for (std::size_t p = 0; p < parts; ++p) {
    const std::size_t width = base + (p < extra ? 1 : 0);
    std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(at),
                                 order.begin() + static_cast<std::ptrdiff_t>(at + width));
    std::sort(idx.begin(), idx.end());
    out.blocks.push_back(select_columns(x, idx));
    out.indices.push_back(std::move(idx));
    at += width;
  }
  return out;
}

}  // namespace daef
