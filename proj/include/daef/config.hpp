#pragma once

#include "daef/data.hpp"
#include "daef/federation.hpp"
#include "daef/json_util.hpp"
#include "daef/model.hpp"
#include "daef/threshold.hpp"

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace daef {

/// Everything one CLI run needs. `seed` drives the auxiliary weights, the
/// fold split and the node partition alike.
struct RunConfig {
  std::filesystem::path dataset;  // manifest (.json) or CSV
  CsvSchema csv;                  // used when `dataset` is a CSV
  Architecture arch;
  ThresholdSpec threshold = ThresholdSpec::extreme_iqr();
  std::size_t folds = 10;
  std::size_t partitions = 1;
  std::size_t workers = 1;
  std::uint64_t seed = 0;

  FedMode mode = FedMode::LayerSync;
  std::size_t nodes = 2;
  std::chrono::milliseconds timeout{30000};
  Transport transport = Transport::InProcess;

  std::filesystem::path model_out;
  std::filesystem::path report_out;
  std::filesystem::path scores_out;

  /// Throws InvalidArchitecture or ConfigError.
  void validate() const;
};

/// Every key with its default value; layer_sizes is empty.
Json default_config_json();

/// Applies `a.b.c=value`. The value is parsed as JSON when possible and
/// taken as a string otherwise. Throws ConfigError.
void apply_override(Json& doc, std::string_view assignment);

/// Relative paths in the document are resolved against `base_dir`.
/// Unknown keys and wrong types throw ConfigError.
RunConfig config_from_json(const Json& doc, const std::filesystem::path& base_dir);
Json config_to_json(const RunConfig& config);

/// Reads the optional file, layers the overrides on top, parses and
/// validates.
RunConfig load_run_config(const std::optional<std::filesystem::path>& file, std::span<const std::string> overrides);

/// Manifest or bare CSV, depending on the extension.
LabeledDataset load_run_dataset(const RunConfig& config, std::vector<std::string>* warnings = nullptr);

}  // namespace daef
