#include "daef/model_io.hpp"

#include "daef/error.hpp"

#include <fstream>
#include <sstream>
#include <system_error>

namespace daef {

namespace {

void check_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw Error(ErrorCode::SchemaError, what + " is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                            ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

template <typename T>
T get_as(const Json& j, std::string_view key) {
  const Json& v = require_field(j, key);
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::SchemaError, "field '" + std::string(key) + "' has the wrong type");
  }
}

}  // namespace

Json architecture_to_json(const Architecture& arch) {
  Json sizes = Json::array();
  for (auto m : arch.layer_sizes) sizes.push_back(m);
  return Json{{"layer_sizes", sizes},
              {"hidden_activation", arch.hidden_activation.name()},
              {"lambda_hidden", arch.lambda_hidden},
              {"lambda_last", arch.lambda_last},
              {"clamp_eps", arch.clamp_eps},
              {"init_seed", arch.init_seed}};
}

Architecture architecture_from_json(const Json& j) {
  Architecture arch;
  for (const auto& m : require_field(j, "layer_sizes")) {
    if (!m.is_number_integer()) throw Error(ErrorCode::SchemaError, "layer_sizes must be integers");
    arch.layer_sizes.push_back(m.get<Eigen::Index>());
  }
  const auto act = Activation::parse(get_as<std::string>(j, "hidden_activation"));
  if (!act) throw Error(ErrorCode::SchemaError, "unknown hidden_activation");
  arch.hidden_activation = *act;
  arch.lambda_hidden = get_as<double>(j, "lambda_hidden");
  arch.lambda_last = get_as<double>(j, "lambda_last");
  arch.clamp_eps = get_as<double>(j, "clamp_eps");
  arch.init_seed = get_as<std::uint64_t>(j, "init_seed");
  return arch;
}

Json threshold_to_json(const FittedThreshold& t) {
  Json out{{"kind", t.spec.kind_name()}, {"mu", t.mu}};
  if (t.spec.has_param()) out["param"] = t.spec.param;
  return out;
}

FittedThreshold threshold_from_json(const Json& j) {
  FittedThreshold t;
  const auto kind = ThresholdSpec::parse_kind(get_as<std::string>(j, "kind"));
  if (!kind) throw Error(ErrorCode::SchemaError, "unknown threshold kind");
  t.spec.kind = *kind;
  if (t.spec.has_param()) t.spec.param = get_as<double>(j, "param");
  t.mu = get_as<double>(j, "mu");
  return t;
}

Json partial_to_json(const RolannPartial& p) {
  return Json{{"m", vector_to_json(p.m)}, {"u", matrix_to_json(p.u)}, {"s", vector_to_json(p.s)}, {"count", p.count}};
}

RolannPartial partial_from_json(const Json& j) {
  RolannPartial p;
  p.m = vector_from_json(require_field(j, "m"), "m");
  p.u = matrix_from_json(require_field(j, "u"), "u");
  p.s = vector_from_json(require_field(j, "s"), "s");
  p.count = get_as<std::uint64_t>(j, "count");
  if (p.u.rows() != p.m.size() || p.u.cols() != p.s.size()) {
    throw Error(ErrorCode::SchemaError, "partial has inconsistent m/u/s shapes");
  }
  return p;
}

Json model_to_json(const DaefModel& model) {
  Json decoder = Json::array();
  for (const auto& layer : model.decoder) {
    Json knowledge = Json::array();
    for (const auto& p : layer.knowledge) knowledge.push_back(partial_to_json(p));
    decoder.push_back(Json{{"weights", matrix_to_json(layer.weights)},
                           {"bias", vector_to_json(layer.bias)},
                           {"knowledge", std::move(knowledge)}});
  }
  return Json{{"format_version", kModelFormatVersion},
              {"architecture", architecture_to_json(model.arch)},
              {"encoder",
               {{"weights", matrix_to_json(model.encoder_weights)},
                {"u", matrix_to_json(model.encoder_knowledge.u)},
                {"s", vector_to_json(model.encoder_knowledge.s)}}},
              {"decoder", std::move(decoder)},
              {"threshold", model.threshold ? threshold_to_json(*model.threshold) : Json(nullptr)},
              {"input_scaler", model.input_scaler ? Json{{"means", vector_to_json(model.input_scaler->means)},
                                                         {"stds", vector_to_json(model.input_scaler->stds)}}
                                                  : Json(nullptr)}};
}

DaefModel model_from_json(const Json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::SchemaError, "model document must be an object");
  const int version = get_as<int>(doc, "format_version");
  if (version != kModelFormatVersion) {
    throw Error(ErrorCode::VersionMismatch, "model format " + std::to_string(version) + ", this build reads " +
                                                std::to_string(kModelFormatVersion));
  }
  DaefModel model;
  model.arch = architecture_from_json(require_field(doc, "architecture"));
  try {
    model.arch.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::SchemaError, e.detail());
  }
  const auto& sizes = model.arch.layer_sizes;

  const Json& enc = require_field(doc, "encoder");
  model.encoder_weights = matrix_from_json(require_field(enc, "weights"), "encoder.weights");
  check_shape(model.encoder_weights, sizes[0], sizes[1], "encoder.weights");
  model.encoder_knowledge.u = matrix_from_json(require_field(enc, "u"), "encoder.u");
  model.encoder_knowledge.s = vector_from_json(require_field(enc, "s"), "encoder.s");
  check_shape(model.encoder_knowledge.u, sizes[0], model.encoder_knowledge.s.size(), "encoder.u");

  const Json& dec = require_field(doc, "decoder");
  if (!dec.is_array() || dec.size() != model.arch.decoder_depth()) {
    throw Error(ErrorCode::SchemaError, "decoder must list " + std::to_string(model.arch.decoder_depth()) + " layers");
  }
  const std::size_t last = dec.size() - 1;
  for (std::size_t l = 0; l < dec.size(); ++l) {
    const std::string where = "decoder[" + std::to_string(l) + "]";
    const Eigen::Index m_in = sizes[l + 1];
    const Eigen::Index m_out = sizes[l + 2];
    DecoderLayer layer;
    layer.weights = matrix_from_json(require_field(dec[l], "weights"), where + ".weights");
    check_shape(layer.weights, m_in, m_out, where + ".weights");
    layer.bias = vector_from_json(require_field(dec[l], "bias"), where + ".bias");
    if (layer.bias.size() != m_out) throw Error(ErrorCode::SchemaError, where + ".bias has the wrong length");

    // Hidden layers keep the auxiliary problem (m_out inputs -> m_in outputs),
    // the output layer its own problem (m_in inputs -> m_out outputs).
    const Eigen::Index neurons = l == last ? m_out : m_in;
    const Eigen::Index dim = (l == last ? m_in : m_out) + 1;
    const Json& know = require_field(dec[l], "knowledge");
    if (!know.is_array() || static_cast<Eigen::Index>(know.size()) != neurons) {
      throw Error(ErrorCode::SchemaError, where + ".knowledge must hold one partial per neuron");
    }
    for (const auto& pj : know) {
      RolannPartial p = partial_from_json(pj);
      if (p.dim() != dim) throw Error(ErrorCode::SchemaError, where + ".knowledge has the wrong dimension");
      layer.knowledge.push_back(std::move(p));
    }
    model.decoder.push_back(std::move(layer));
  }

  const Json& thr = require_field(doc, "threshold");
  if (!thr.is_null()) model.threshold = threshold_from_json(thr);
  if (doc.contains("input_scaler") && !doc["input_scaler"].is_null()) {
    const Json& sc = doc["input_scaler"];
    StandardScaler scaler{vector_from_json(require_field(sc, "means"), "input_scaler.means"),
                          vector_from_json(require_field(sc, "stds"), "input_scaler.stds")};
    if (scaler.means.size() != sizes[0] || scaler.stds.size() != sizes[0]) {
      throw Error(ErrorCode::SchemaError, "input_scaler has the wrong length");
    }
    if ((scaler.stds.array() <= 0.0).any()) throw Error(ErrorCode::SchemaError, "input_scaler.stds must be positive");
    model.input_scaler = std::move(scaler);
  }
  return model;
}

std::string save_model_string(const DaefModel& model) { return model_to_json(model).dump(); }

DaefModel load_model_string(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::CorruptPayload, std::string("model file is not valid JSON: ") + e.what());
  }
  return model_from_json(doc);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw Error(ErrorCode::IoError, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot move " + tmp.string() + " into place: " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void save_model(const DaefModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, save_model_string(model));
}

DaefModel load_model(const std::filesystem::path& path) { return load_model_string(read_file(path)); }

std::string model_fingerprint(const DaefModel& model) { return fnv1a_hex(save_model_string(model)); }

}  // namespace daef
