#pragma once

#include "daef/data.hpp"
#include "daef/json_util.hpp"
#include "daef/model.hpp"
#include "daef/threshold.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace daef {

/// Per-sample mean squared error over the m0 features.
Vector reconstruction_errors(const DaefModel& model, const Matrix& x);
Vector reconstruction_errors(const Matrix& x, const Matrix& reconstruction);

/// Errors for raw features: standardises with the model's input scaler
/// first when it has one.
Vector score_raw(const DaefModel& model, const Matrix& raw);

/// Linear interpolation between order statistics at h = (n - 1) q.
double quantile(std::vector<double> values, double q);

/// Throws TooFewSamples (< 4 values), NonFiniteInput, DomainError (negative).
double fit_threshold(const Vector& train_errors, const ThresholdSpec& spec);

/// true = anomaly; strictly greater than mu.
std::vector<bool> classify(const Vector& errors, double mu);

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
};

/// Throws LengthMismatch.
Confusion confusion(const std::vector<bool>& predicted, const std::vector<bool>& truth);

/// 2TP / (2TP + FP + FN), anomaly = positive class. Throws LengthMismatch,
/// NoPositives.
double f1_score(const std::vector<bool>& predicted, const std::vector<bool>& truth);

struct EvalConfig {
  Architecture arch;
  ThresholdSpec threshold;
  std::size_t folds = 10;
  std::uint64_t seed = 0;
  std::size_t partitions = 1;
  std::size_t workers = 1;  // folds evaluated concurrently
};

struct FoldResult {
  double f1 = 0.0;
  double threshold = 0.0;
  Confusion counts;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::string model_fingerprint;
};

struct EvalReport {
  std::vector<FoldResult> folds;
  double mean_f1 = 0.0;
  double std_f1 = 0.0;  // population standard deviation over folds
  std::string config_fingerprint;

  Json to_json() const;
};

std::string config_fingerprint(const EvalConfig& config, const std::string& dataset_name);

/// Cross-validated evaluation trained on normal samples only. Each fold's
/// test set holds that fold's anomalies and as many of its normals, drawn
/// with the seed. Scaler, model and threshold see training normals only.
/// Throws InsufficientAnomalies and anything train() throws.
EvalReport evaluate_cv(const LabeledDataset& dataset, const EvalConfig& config);

}  // namespace daef
