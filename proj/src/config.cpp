#include "daef/config.hpp"

#include "daef/error.hpp"
#include "daef/model_io.hpp"

#include <set>

namespace daef {

namespace {

Error config_error(const std::string& why) { return Error(ErrorCode::ConfigError, why); }

void reject_unknown(const Json& j, const std::string& where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw config_error(where.empty() ? "config must be an object" : where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw config_error("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

template <typename T>
T field(const Json& j, const std::string& where, const std::string& key) {
  const std::string path = where.empty() ? key : where + "." + key;
  if (!j.contains(key)) throw config_error("missing key '" + path + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw config_error("key '" + path + "' has the wrong type (" + j.at(key).dump() + ")");
  }
}

std::size_t count_field(const Json& j, const std::string& where, const std::string& key) {
  const Json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw config_error("key '" + (where.empty() ? key : where + "." + key) + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

void RunConfig::validate() const {
  arch.validate();
  threshold.validate();
  if (folds < 2) throw config_error("folds must be at least 2");
  if (partitions < 1) throw config_error("partitions must be at least 1");
  if (workers < 1) throw config_error("workers must be at least 1");
  if (nodes < 1) throw config_error("nodes must be at least 1");
  if (timeout.count() <= 0) throw config_error("federation.timeout_ms must be positive");
}

Json default_config_json() {
  const RunConfig d;
  return Json{{"dataset", ""},
              {"csv", {{"label_column", "class"}, {"anomaly_value", "1"}, {"exclude_columns", Json::array()}}},
              {"architecture",
               {{"layer_sizes", Json::array()},
                {"hidden_activation", d.arch.hidden_activation.name()},
                {"lambda_hidden", d.arch.lambda_hidden},
                {"lambda_last", d.arch.lambda_last},
                {"clamp_eps", d.arch.clamp_eps}}},
              {"threshold", {{"kind", d.threshold.kind_name()}}},
              {"folds", d.folds},
              {"partitions", d.partitions},
              {"workers", d.workers},
              {"seed", d.seed},
              {"federation",
               {{"mode", to_string(d.mode)}, {"nodes", d.nodes}, {"timeout_ms", d.timeout.count()}, {"transport", "in_process"}}},
              {"output", {{"model", ""}, {"report", ""}, {"scores", ""}}}};
}

void apply_override(Json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw config_error("override '" + std::string(assignment) + "' is not of the form key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  Json value;
  try {
    value = Json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    value = text;
  }
  Json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw config_error("override key '" + key + "' has an empty component");
    if (!node->is_object()) throw config_error("override key '" + key + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = std::move(value);
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = Json::object();
    start = dot + 1;
  }
}

RunConfig config_from_json(const Json& input, const std::filesystem::path& base_dir) {
  Json doc = default_config_json();
  doc.merge_patch(input);
  reject_unknown(doc, "", {"dataset", "csv", "architecture", "threshold", "folds", "partitions", "workers", "seed",
                           "federation", "output"});
  RunConfig c;
  c.dataset = resolve(base_dir, field<std::string>(doc, "", "dataset"));

  const Json& csv = doc["csv"];
  reject_unknown(csv, "csv", {"label_column", "anomaly_value", "exclude_columns"});
  if (csv["label_column"].is_number_unsigned()) {
    c.csv.label_column = csv["label_column"].get<std::size_t>();
  } else {
    c.csv.label_column = field<std::string>(csv, "csv", "label_column");
  }
  c.csv.anomaly_value = csv["anomaly_value"].is_string() ? csv["anomaly_value"].get<std::string>()
                                                          : csv["anomaly_value"].dump();
  c.csv.exclude_columns = field<std::vector<std::string>>(csv, "csv", "exclude_columns");

  const Json& a = doc["architecture"];
  reject_unknown(a, "architecture", {"layer_sizes", "hidden_activation", "lambda_hidden", "lambda_last", "clamp_eps"});
  for (const auto& m : a["layer_sizes"]) {
    if (!m.is_number_integer()) throw config_error("architecture.layer_sizes must hold integers");
    c.arch.layer_sizes.push_back(m.get<Eigen::Index>());
  }
  const auto act_name = field<std::string>(a, "architecture", "hidden_activation");
  const auto act = Activation::parse(act_name);
  if (!act) throw config_error("unknown hidden_activation '" + act_name + "'");
  c.arch.hidden_activation = *act;
  c.arch.lambda_hidden = field<double>(a, "architecture", "lambda_hidden");
  c.arch.lambda_last = field<double>(a, "architecture", "lambda_last");
  c.arch.clamp_eps = field<double>(a, "architecture", "clamp_eps");

  const Json& t = doc["threshold"];
  reject_unknown(t, "threshold", {"kind", "param"});
  const auto kind_name = field<std::string>(t, "threshold", "kind");
  const auto kind = ThresholdSpec::parse_kind(kind_name);
  if (!kind) throw config_error("unknown threshold kind '" + kind_name + "'");
  c.threshold.kind = *kind;
  if (c.threshold.has_param()) c.threshold.param = field<double>(t, "threshold", "param");

  c.folds = count_field(doc, "", "folds");
  c.partitions = count_field(doc, "", "partitions");
  c.workers = count_field(doc, "", "workers");
  const Json& seed = doc["seed"];
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
    throw config_error("seed must be a non-negative integer");
  }
  c.seed = doc["seed"].get<std::uint64_t>();
  c.arch.init_seed = c.seed;

  const Json& f = doc["federation"];
  reject_unknown(f, "federation", {"mode", "nodes", "timeout_ms", "transport"});
  const auto mode_name = field<std::string>(f, "federation", "mode");
  const auto mode = parse_fed_mode(mode_name);
  if (!mode) throw config_error("unknown federation mode '" + mode_name + "'");
  c.mode = *mode;
  c.nodes = count_field(f, "federation", "nodes");
  c.timeout = std::chrono::milliseconds(field<long long>(f, "federation", "timeout_ms"));
  const auto transport = field<std::string>(f, "federation", "transport");
  if (transport == "in_process") {
    c.transport = Transport::InProcess;
  } else if (transport == "tcp") {
    c.transport = Transport::Tcp;
  } else {
    throw config_error("unknown transport '" + transport + "'");
  }

  const Json& o = doc["output"];
  reject_unknown(o, "output", {"model", "report", "scores"});
  c.model_out = resolve(base_dir, field<std::string>(o, "output", "model"));
  c.report_out = resolve(base_dir, field<std::string>(o, "output", "report"));
  c.scores_out = resolve(base_dir, field<std::string>(o, "output", "scores"));
  return c;
}

Json config_to_json(const RunConfig& c) {
  Json doc = default_config_json();
  doc["dataset"] = c.dataset.string();
  if (const auto* idx = std::get_if<std::size_t>(&c.csv.label_column)) {
    doc["csv"]["label_column"] = *idx;
  } else {
    doc["csv"]["label_column"] = std::get<std::string>(c.csv.label_column);
  }
  doc["csv"]["anomaly_value"] = c.csv.anomaly_value;
  doc["csv"]["exclude_columns"] = c.csv.exclude_columns;
  Json arch = architecture_to_json(c.arch);
  arch.erase("init_seed");
  doc["architecture"] = std::move(arch);
  doc["threshold"] = Json{{"kind", c.threshold.kind_name()}};
  if (c.threshold.has_param()) doc["threshold"]["param"] = c.threshold.param;
  doc["folds"] = c.folds;
  doc["partitions"] = c.partitions;
  doc["workers"] = c.workers;
  doc["seed"] = c.seed;
  doc["federation"] = Json{{"mode", to_string(c.mode)},
                           {"nodes", c.nodes},
                           {"timeout_ms", c.timeout.count()},
                           {"transport", c.transport == Transport::Tcp ? "tcp" : "in_process"}};
  doc["output"] = Json{{"model", c.model_out.string()}, {"report", c.report_out.string()}, {"scores", c.scores_out.string()}};
  return doc;
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& file, std::span<const std::string> overrides) {
  Json doc = Json::object();
  std::filesystem::path base;
  if (file) {
    std::string text;
    try {
      text = read_file(*file);
    } catch (const Error& e) {
      throw config_error(e.detail());
    }
    try {
      doc = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw config_error(file->string() + ": " + e.what());
    }
    base = file->parent_path();
  }
  // Overrides come from the command line, so their paths are relative to
  // the working directory rather than the config file.
  Json patch = Json::object();
  for (const auto& o : overrides) apply_override(patch, o);
  RunConfig config = config_from_json(doc, base);
  if (!patch.empty()) {
    Json merged = config_to_json(config);
    merged.merge_patch(patch);
    config = config_from_json(merged, {});
  }
  config.validate();
  return config;
}

LabeledDataset load_run_dataset(const RunConfig& config, std::vector<std::string>* warnings) {
  if (config.dataset.empty()) throw Error(ErrorCode::IoError, "no dataset given (use --data or set \"dataset\")");
  if (config.dataset.extension() == ".json") return load_dataset(load_manifest(config.dataset), warnings);
  return load_csv(config.dataset, config.csv);
}

}  // namespace daef
