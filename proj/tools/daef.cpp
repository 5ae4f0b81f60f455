// daef: train, evaluate, simulate federation, score and inspect thresholds.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration error,
// 3 data error, 4 numeric failure, 5 federated session aborted.

#include "daef/anomaly.hpp"
#include "daef/config.hpp"
#include "daef/data.hpp"
#include "daef/error.hpp"
#include "daef/federation.hpp"
#include "daef/model.hpp"
#include "daef/model_io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace daef;

namespace {

enum Exit { kOk = 0, kUnexpected = 1, kConfig = 2, kData = 3, kNumeric = 4, kAborted = 5 };

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidArchitecture:
    case ErrorCode::ArchitectureMismatch:
    case ErrorCode::SeedMismatch:
      return kConfig;
    case ErrorCode::NonFiniteInput:
    case ErrorCode::RankOutOfRange:
    case ErrorCode::DomainError:
    case ErrorCode::SingularSystem:
    case ErrorCode::LengthMismatch:
      return kNumeric;
    case ErrorCode::SessionAborted:
    case ErrorCode::NodeTimeout:
      return kAborted;
    default:
      return kData;
  }
}

struct Flags {
  std::optional<std::string> config;
  std::optional<std::string> data;
  std::optional<std::string> out;
  std::optional<std::string> model;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::size_t> partitions;
  std::optional<std::size_t> nodes;
  std::optional<std::string> mode;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration");
  cmd->add_option("--data", f.data, "dataset manifest (.json) or CSV");
  cmd->add_option("--seed", f.seed, "seed for auxiliary weights, folds and partitions");
  cmd->add_option("--workers", f.workers, "worker threads");
  cmd->add_option("--set", f.sets, "override a config key, e.g. architecture.lambda_last=0.9");
}

RunConfig resolve_config(const Flags& f) {
  std::vector<std::string> sets = f.sets;
  auto quoted = [](const std::string& s) { return Json(s).dump(); };
  if (f.data) sets.push_back("dataset=" + quoted(fs::absolute(*f.data).string()));
  if (f.seed) sets.push_back("seed=" + std::to_string(*f.seed));
  if (f.workers) sets.push_back("workers=" + std::to_string(*f.workers));
  if (f.partitions) sets.push_back("partitions=" + std::to_string(*f.partitions));
  if (f.nodes) sets.push_back("federation.nodes=" + std::to_string(*f.nodes));
  if (f.mode) sets.push_back("federation.mode=" + quoted(*f.mode));
  std::optional<fs::path> file;
  if (f.config) file = fs::path(*f.config);
  return load_run_config(file, sets);
}

LabeledDataset load_data(const RunConfig& config) {
  std::vector<std::string> warnings;
  LabeledDataset ds = load_run_dataset(config, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  return ds;
}

Matrix normal_columns(const LabeledDataset& ds) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!ds.labels[i]) idx.push_back(i);
  }
  return select_columns(ds.features, idx);
}

fs::path output_path(const std::optional<std::string>& flag, const fs::path& configured) {
  if (flag) return fs::path(*flag);
  return configured;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string shape(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

void print_layers(const DaefModel& model) {
  std::cout << std::left << std::setw(8) << "layer" << std::setw(12) << "weights" << std::setw(8) << "bias"
            << "activation\n";
  std::cout << std::setw(8) << 1 << std::setw(12) << shape(model.encoder_weights) << std::setw(8) << "-"
            << model.arch.hidden_activation.name() << '\n';
  for (std::size_t l = 0; l < model.decoder.size(); ++l) {
    const bool last = l + 1 == model.decoder.size();
    std::cout << std::setw(8) << l + 2 << std::setw(12) << shape(model.decoder[l].weights) << std::setw(8)
              << model.decoder[l].bias.size() << (last ? "linear" : model.arch.hidden_activation.name()) << '\n';
  }
}

// ---------------------------------------------------------------------------

int cmd_train(const Flags& f) {
  const RunConfig config = resolve_config(f);
  const fs::path out = output_path(f.out, config.model_out);
  if (out.empty()) throw Error(ErrorCode::ConfigError, "no model output path (use --out or output.model)");
  const LabeledDataset ds = load_data(config);
  const Matrix raw = normal_columns(ds);

  const auto t0 = std::chrono::steady_clock::now();
  const StandardScaler scaler = scaler_fit(raw);
  const Matrix x = scaler_apply(scaler, raw);
  DaefModel model = train(x, config.arch, config.partitions, config.workers);
  const Vector errors = reconstruction_errors(model, x);
  model.threshold = FittedThreshold{config.threshold, fit_threshold(errors, config.threshold)};
  model.input_scaler = scaler;
  const double wall = seconds_since(t0);

  save_model(model, out);
  Json layers = Json::array();
  layers.push_back(Json{{"layer", 1}, {"rows", model.encoder_weights.rows()}, {"cols", model.encoder_weights.cols()}});
  for (std::size_t l = 0; l < model.decoder.size(); ++l) {
    layers.push_back(Json{{"layer", l + 2},
                          {"rows", model.decoder[l].weights.rows()},
                          {"cols", model.decoder[l].weights.cols()}});
  }
  const Json summary{{"dataset", ds.name},
                     {"n_train", x.cols()},
                     {"input_dim", x.rows()},
                     {"wall_time_s", wall},
                     {"layers", std::move(layers)},
                     {"threshold", threshold_to_json(*model.threshold)},
                     {"mean_train_error", errors.mean()},
                     {"model_fingerprint", model_fingerprint(model)}};
  fs::path sidecar = out;
  sidecar += ".summary.json";
  write_file_atomic(sidecar, summary.dump(2) + "\n");

  std::cout << "trained " << ds.name << " on " << x.cols() << " normal samples in " << std::fixed
            << std::setprecision(3) << wall << " s\n";
  print_layers(model);
  std::cout << "threshold " << model.threshold->spec.kind_name() << " mu=" << std::setprecision(6)
            << model.threshold->mu << "\nmodel " << out.string() << "\nsummary " << sidecar.string() << '\n';
  return kOk;
}

int cmd_eval(const Flags& f) {
  const RunConfig config = resolve_config(f);
  const LabeledDataset ds = load_data(config);
  EvalConfig ec;
  ec.arch = config.arch;
  ec.threshold = config.threshold;
  ec.folds = config.folds;
  ec.seed = config.seed;
  ec.partitions = config.partitions;
  ec.workers = config.workers;

  const auto t0 = std::chrono::steady_clock::now();
  const EvalReport report = evaluate_cv(ds, ec);
  const double wall = seconds_since(t0);

  const fs::path out = output_path(f.out, config.report_out);
  if (!out.empty()) {
    Json doc = report.to_json();
    doc["dataset"] = ds.name;
    write_file_atomic(out, doc.dump(2) + "\n");
  }
  std::cout << std::left << std::setw(6) << "fold" << std::setw(10) << "f1" << std::setw(14) << "threshold"
            << "tp/fp/fn/tn\n";
  for (std::size_t k = 0; k < report.folds.size(); ++k) {
    const auto& r = report.folds[k];
    std::cout << std::setw(6) << k << std::setw(10) << std::fixed << std::setprecision(4) << r.f1 << std::setw(14)
              << std::setprecision(6) << r.threshold << r.counts.tp << '/' << r.counts.fp << '/' << r.counts.fn << '/'
              << r.counts.tn << '\n';
  }
  std::cout << std::left << std::setw(14) << "Dataset" << "DAEF\n"
            << std::setw(14) << ds.name << std::setprecision(1) << 100.0 * report.mean_f1 << "±"
            << 100.0 * report.std_f1 << '\n';
  std::cerr << "wall time " << std::setprecision(2) << wall << " s\n";
  return kOk;
}

int cmd_fedsim(const Flags& f) {
  const RunConfig config = resolve_config(f);
  const LabeledDataset ds = load_data(config);
  const Matrix raw = normal_columns(ds);
  // The simulation standardises with global statistics; they are aggregate
  // moments, not samples, so sharing them fits the privacy model.
  const Matrix x = scaler_apply(scaler_fit(raw), raw);
  const ColumnPartition split = partition_columns(x, config.nodes, config.seed);

  FedSession session = FedSession::make("sim-" + std::to_string(config.seed), config.arch, config.nodes, config.mode);
  session.timeout = config.timeout;
  FedOptions options;
  options.workers = config.workers;
  options.transport = config.transport;

  const auto t0 = std::chrono::steady_clock::now();
  const FedResult result = config.mode == FedMode::LayerSync ? run_layer_sync(session, split.blocks, options)
                                                             : run_post_hoc(session, split.blocks, options);
  const double wall = seconds_since(t0);

  // Centralised reference on the concatenation of the node blocks.
  Matrix joined(x.rows(), x.cols());
  Eigen::Index at = 0;
  for (const auto& b : split.blocks) {
    joined.middleCols(at, b.cols()) = b;
    at += b.cols();
  }
  const DaefModel central = train(joined, config.arch, 1, config.workers);
  const double delta = max_weight_delta(result.global, central);

  Json nodes = Json::array();
  std::cout << std::left << std::setw(10) << "node" << std::setw(10) << "samples" << std::setw(14) << "local_mse"
            << "global_mse\n";
  for (std::size_t i = 0; i < session.roster.size(); ++i) {
    const Matrix& xi = split.blocks[i];
    const double local = xi.cols() ? reconstruction_errors(result.node_models[i], xi).mean() : 0.0;
    const double global = reconstruction_errors(result.node_models[i], x).mean();
    nodes.push_back(Json{{"node", session.roster[i]}, {"samples", xi.cols()}, {"local_mse", local}, {"global_mse", global}});
    std::cout << std::setw(10) << session.roster[i] << std::setw(10) << xi.cols() << std::setw(14) << std::scientific
              << std::setprecision(4) << local << global << '\n';
  }
  const double global_mse = reconstruction_errors(result.global, x).mean();
  const double central_mse = reconstruction_errors(central, x).mean();
  std::cout << "mode " << to_string(config.mode) << ", " << result.packets << " packets, " << result.bytes
            << " bytes\nglobal_mse " << global_mse << "\ncentral_mse " << central_mse
            << "\nequivalence_delta " << delta
            << (config.mode == FedMode::PostHoc ? " (approximate mode, not asserted)" : "") << '\n';
  std::cerr << "wall time " << std::fixed << std::setprecision(2) << wall << " s\n";

  const fs::path out = output_path(f.out, config.report_out);
  if (!out.empty()) {
    const Json doc{{"dataset", ds.name},
                   {"mode", to_string(config.mode)},
                   {"nodes", std::move(nodes)},
                   {"packets", result.packets},
                   {"bytes", result.bytes},
                   {"global_mse", global_mse},
                   {"central_mse", central_mse},
                   {"equivalence_delta", delta},
                   {"model_fingerprint", model_fingerprint(result.global)}};
    write_file_atomic(out, doc.dump(2) + "\n");
  }
  return kOk;
}

LabeledDataset load_scoring_data(RunConfig config) {
  try {
    return load_data(config);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::MissingLabelColumn || config.dataset.extension() == ".json") throw;
    config.csv.label_column = std::string();
    return load_data(config);
  }
}

DaefModel require_model(const Flags& f) {
  if (!f.model) throw Error(ErrorCode::ConfigError, "--model is required");
  return load_model(*f.model);
}

void require_dim(const DaefModel& model, const LabeledDataset& ds) {
  if (ds.features.rows() != model.input_dim()) {
    throw Error(ErrorCode::ShapeMismatch, "data has " + std::to_string(ds.features.rows()) +
                                              " features, model expects " + std::to_string(model.input_dim()));
  }
}

int cmd_predict(const Flags& f) {
  const RunConfig config = resolve_config(f);
  const DaefModel model = require_model(f);
  const LabeledDataset ds = load_scoring_data(config);
  require_dim(model, ds);
  const Vector errors = score_raw(model, ds.features);

  std::ostringstream csv;
  csv << std::setprecision(17);
  if (model.threshold) {
    const auto flags = classify(errors, model.threshold->mu);
    csv << "index,error,anomaly\n";
    for (Eigen::Index i = 0; i < errors.size(); ++i) {
      csv << i << ',' << errors(i) << ',' << (flags[static_cast<std::size_t>(i)] ? 1 : 0) << '\n';
    }
  } else {
    std::cerr << "warning: model has no fitted threshold; the anomaly column is omitted\n";
    csv << "index,error\n";
    for (Eigen::Index i = 0; i < errors.size(); ++i) csv << i << ',' << errors(i) << '\n';
  }
  const fs::path out = output_path(f.out, config.scores_out);
  if (out.empty()) {
    std::cout << csv.str();
  } else {
    write_file_atomic(out, csv.str());
    std::cout << "scored " << errors.size() << " samples -> " << out.string() << '\n';
  }
  return kOk;
}

int cmd_threshold(const Flags& f) {
  const RunConfig config = resolve_config(f);
  DaefModel model = require_model(f);
  const LabeledDataset ds = load_scoring_data(config);
  require_dim(model, ds);
  const Vector errors = score_raw(model, ds.features);
  std::vector<double> normal_errors;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!ds.labels[i]) normal_errors.push_back(errors(static_cast<Eigen::Index>(i)));
  }
  const Vector reference = Eigen::Map<const Vector>(normal_errors.data(), static_cast<Eigen::Index>(normal_errors.size()));
  const bool labelled = ds.anomaly_count() > 0;

  const std::vector<std::pair<std::string, ThresholdSpec>> rules{
      {"unusual_iqr", ThresholdSpec::unusual_iqr()},   {"extreme_iqr", ThresholdSpec::extreme_iqr()},
      {"Q80", ThresholdSpec::percentile(0.8)},         {"Q90", ThresholdSpec::percentile(0.9)},
      {"Q95", ThresholdSpec::percentile(0.95)},        {"Q99", ThresholdSpec::percentile(0.99)},
      {"configured", config.threshold}};
  std::cout << std::left << std::setw(14) << "rule" << std::setw(16) << "mu" << std::setw(10) << "flagged"
            << (labelled ? "f1" : "") << '\n';
  if (model.threshold) {
    std::cout << std::setw(14) << "stored" << std::setw(16) << std::setprecision(6) << model.threshold->mu << '\n';
  }
  for (const auto& [name, spec] : rules) {
    const double mu = fit_threshold(reference, spec);
    const auto flags = classify(errors, mu);
    const auto flagged = std::count(flags.begin(), flags.end(), true);
    std::cout << std::setw(14) << name << std::setw(16) << std::setprecision(6) << mu << std::setw(10) << flagged;
    if (labelled) std::cout << std::fixed << std::setprecision(4) << f1_score(flags, ds.labels) << std::defaultfloat;
    std::cout << '\n';
  }
  if (f.out) {
    model.threshold = FittedThreshold{config.threshold, fit_threshold(reference, config.threshold)};
    save_model(model, *f.out);
    std::cout << "refitted " << config.threshold.kind_name() << " threshold written to " << *f.out << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-iterative deep autoencoder for federated anomaly detection"};
  app.require_subcommand(1);
  Flags f;

  auto* train_cmd = app.add_subcommand("train", "train on the normal samples and write a model");
  auto* eval_cmd = app.add_subcommand("eval", "cross-validated F1 evaluation");
  auto* fed_cmd = app.add_subcommand("fedsim", "simulate federated training across nodes");
  auto* predict_cmd = app.add_subcommand("predict", "write per-sample reconstruction errors");
  auto* thr_cmd = app.add_subcommand("threshold", "compare threshold rules on a model's errors");
  for (auto* cmd : {train_cmd, eval_cmd, fed_cmd, predict_cmd, thr_cmd}) {
    add_common(cmd, f);
    cmd->add_option("--out", f.out, "output path");
  }
  for (auto* cmd : {train_cmd, eval_cmd}) cmd->add_option("--partitions", f.partitions, "training data blocks");
  fed_cmd->add_option("--nodes", f.nodes, "number of simulated nodes");
  fed_cmd->add_option("--mode", f.mode, "layer_sync or post_hoc");
  for (auto* cmd : {predict_cmd, thr_cmd}) cmd->add_option("--model", f.model, "model file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(f);
    if (eval_cmd->parsed()) return cmd_eval(f);
    if (fed_cmd->parsed()) return cmd_fedsim(f);
    if (predict_cmd->parsed()) return cmd_predict(f);
    if (thr_cmd->parsed()) return cmd_threshold(f);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUnexpected;
  }
  return kUnexpected;
}
