#include "daef/anomaly.hpp"

#include "daef/error.hpp"
#include "daef/model_io.hpp"
#include "daef/parallel.hpp"
#include "daef/random.hpp"

#include <algorithm>
#include <cmath>

namespace daef {

void ThresholdSpec::validate() const {
  if (has_param() && !(param > 0.0 && param < 1.0)) {
    throw Error(ErrorCode::ConfigError, kind_name() + " parameter must lie in (0, 1)");
  }
}

std::string ThresholdSpec::kind_name() const {
  switch (kind) {
    case Kind::UnusualIqr: return "unusual_iqr";
    case Kind::ExtremeIqr: return "extreme_iqr";
    case Kind::Percentile: return "percentile";
    case Kind::Contamination: return "contamination";
  }
  return "extreme_iqr";
}

std::optional<ThresholdSpec::Kind> ThresholdSpec::parse_kind(const std::string& name) {
  if (name == "unusual_iqr") return Kind::UnusualIqr;
  if (name == "extreme_iqr") return Kind::ExtremeIqr;
  if (name == "percentile") return Kind::Percentile;
  if (name == "contamination") return Kind::Contamination;
  return std::nullopt;
}

Vector reconstruction_errors(const Matrix& x, const Matrix& reconstruction) {
  if (x.rows() != reconstruction.rows() || x.cols() != reconstruction.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "reconstruction shape differs from input");
  }
  return (x - reconstruction).array().square().colwise().mean().transpose();
}

Vector reconstruction_errors(const DaefModel& model, const Matrix& x) {
  return reconstruction_errors(x, predict(model, x));
}

Vector score_raw(const DaefModel& model, const Matrix& raw) {
  if (!model.input_scaler) return reconstruction_errors(model, raw);
  return reconstruction_errors(model, scaler_apply(*model.input_scaler, raw));
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::TooFewSamples, "quantile of an empty set");
  std::sort(values.begin(), values.end());
  const double h = static_cast<double>(values.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

double fit_threshold(const Vector& train_errors, const ThresholdSpec& spec) {
  if (train_errors.size() < 4) {
    throw Error(ErrorCode::TooFewSamples, "threshold needs at least 4 errors, got " +
                                              std::to_string(train_errors.size()));
  }
  require_finite(train_errors, "reconstruction errors");
  if (train_errors.minCoeff() < 0.0) throw Error(ErrorCode::DomainError, "negative reconstruction error");
  spec.validate();

  std::vector<double> v(train_errors.data(), train_errors.data() + train_errors.size());
  switch (spec.kind) {
    case ThresholdSpec::Kind::UnusualIqr:
    case ThresholdSpec::Kind::ExtremeIqr: {
      const double q1 = quantile(v, 0.25);
      const double q3 = quantile(v, 0.75);
      const double k = spec.kind == ThresholdSpec::Kind::UnusualIqr ? 1.5 : 3.0;
      return q3 + k * (q3 - q1);
    }
    case ThresholdSpec::Kind::Percentile:
      return quantile(std::move(v), spec.param);
    case ThresholdSpec::Kind::Contamination:
      return quantile(std::move(v), 1.0 - spec.param);
  }
  return 0.0;
}

std::vector<bool> classify(const Vector& errors, double mu) {
  std::vector<bool> out(static_cast<std::size_t>(errors.size()));
  for (Eigen::Index i = 0; i < errors.size(); ++i) out[static_cast<std::size_t>(i)] = errors(i) > mu;
  return out;
}

Confusion confusion(const std::vector<bool>& predicted, const std::vector<bool>& truth) {
  if (predicted.size() != truth.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(predicted.size()) + " predictions for " +
                                               std::to_string(truth.size()) + " labels");
  }
  Confusion c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] && truth[i]) ++c.tp;
    else if (predicted[i]) ++c.fp;
    else if (truth[i]) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double f1_score(const std::vector<bool>& predicted, const std::vector<bool>& truth) {
  const Confusion c = confusion(predicted, truth);
  if (c.tp + c.fn == 0) throw Error(ErrorCode::NoPositives, "ground truth has no anomalies");
  if (c.tp == 0) return 0.0;
  return 2.0 * static_cast<double>(c.tp) / static_cast<double>(2 * c.tp + c.fp + c.fn);
}

Json EvalReport::to_json() const {
  Json fold_list = Json::array();
  Json thresholds = Json::array();
  for (std::size_t k = 0; k < folds.size(); ++k) {
    const auto& f = folds[k];
    fold_list.push_back(Json{{"fold", k},
                             {"f1", f.f1},
                             {"threshold", f.threshold},
                             {"tp", f.counts.tp},
                             {"fp", f.counts.fp},
                             {"fn", f.counts.fn},
                             {"tn", f.counts.tn},
                             {"n_train", f.n_train},
                             {"n_test", f.n_test},
                             {"model_fingerprint", f.model_fingerprint}});
    thresholds.push_back(f.threshold);
  }
  return Json{{"folds", std::move(fold_list)},
              {"mean_f1", mean_f1},
              {"std_f1", std_f1},
              {"thresholds", std::move(thresholds)},
              {"config_fingerprint", config_fingerprint}};
}

std::string config_fingerprint(const EvalConfig& config, const std::string& dataset_name) {
  Json spec{{"kind", config.threshold.kind_name()}};
  if (config.threshold.has_param()) spec["param"] = config.threshold.param;
  const Json doc{{"dataset", dataset_name},
                 {"architecture", architecture_to_json(config.arch)},
                 {"threshold", spec},
                 {"folds", config.folds},
                 {"seed", config.seed},
                 {"partitions", config.partitions}};
  return fnv1a_hex(doc.dump());
}

EvalReport evaluate_cv(const LabeledDataset& dataset, const EvalConfig& config) {
  if (config.folds < 2) throw Error(ErrorCode::ConfigError, "need at least 2 folds");
  config.threshold.validate();
  const auto assignment = split_folds(dataset.labels, config.folds, config.seed);

  EvalReport report;
  report.folds.resize(config.folds);
  parallel_for(config.folds, config.workers, [&](std::size_t k) {
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> test_anomalies;
    std::vector<std::size_t> held_out_normals;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (dataset.labels[i]) {
        if (assignment[i] == k) test_anomalies.push_back(i);
      } else if (assignment[i] == k) {
        held_out_normals.push_back(i);
      } else {
        train_idx.push_back(i);
      }
    }
    if (test_anomalies.empty()) {
      throw Error(ErrorCode::InsufficientAnomalies, "fold " + std::to_string(k) + " received no anomalies");
    }

    // Balance the test set: equal numbers of each class, drawn per fold.
    SeedStream rng(mix_seed(config.seed, k + 1));
    rng.shuffle(std::span<std::size_t>(held_out_normals));
    rng.shuffle(std::span<std::size_t>(test_anomalies));
    const std::size_t per_class = std::min(held_out_normals.size(), test_anomalies.size());
    std::vector<std::size_t> test_idx(test_anomalies.begin(),
                                      test_anomalies.begin() + static_cast<std::ptrdiff_t>(per_class));
    test_idx.insert(test_idx.end(), held_out_normals.begin(),
                    held_out_normals.begin() + static_cast<std::ptrdiff_t>(per_class));
    std::sort(test_idx.begin(), test_idx.end());

    const Matrix train_raw = select_columns(dataset.features, train_idx);
    const StandardScaler scaler = scaler_fit(train_raw);
    const Matrix train_x = scaler_apply(scaler, train_raw);
    DaefModel model = train(train_x, config.arch, config.partitions, 1);

    const double mu = fit_threshold(reconstruction_errors(model, train_x), config.threshold);
    model.threshold = FittedThreshold{config.threshold, mu};
    model.input_scaler = scaler;

    const Matrix test_x = scaler_apply(scaler, select_columns(dataset.features, test_idx));
    std::vector<bool> truth(test_idx.size());
    for (std::size_t t = 0; t < test_idx.size(); ++t) truth[t] = dataset.labels[test_idx[t]];
    const auto predicted = classify(reconstruction_errors(model, test_x), mu);

    FoldResult& out = report.folds[k];
    out.counts = confusion(predicted, truth);
    out.f1 = f1_score(predicted, truth);
    out.threshold = mu;
    out.n_train = train_idx.size();
    out.n_test = test_idx.size();
    out.model_fingerprint = model_fingerprint(model);
  });

  double sum = 0.0;
  for (const auto& f : report.folds) sum += f.f1;
  report.mean_f1 = sum / static_cast<double>(config.folds);
  double sq = 0.0;
  for (const auto& f : report.folds) sq += (f.f1 - report.mean_f1) * (f.f1 - report.mean_f1);
  report.std_f1 = std::sqrt(sq / static_cast<double>(config.folds));
  report.config_fingerprint = config_fingerprint(config, dataset.name);
  return report;
}

}  // namespace daef
