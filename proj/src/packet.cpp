#include "daef/packet.hpp"

#include "daef/error.hpp"
#include "daef/model_io.hpp"

namespace daef {

namespace {

constexpr std::string_view kKindNames[] = {"init", "encoder_stats", "layer_partials", "model_broadcast"};

bool same(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

bool same(const Vector& a, const Vector& b) { return a.size() == b.size() && (a.size() == 0 || a == b); }

bool same(const RolannPartial& a, const RolannPartial& b) {
  return same(a.m, b.m) && same(a.u, b.u) && same(a.s, b.s) && a.count == b.count;
}

Json payload_to_json(const PacketPayload& payload) {
  return std::visit(
      [](const auto& p) -> Json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, InitPayload>) {
          return Json{{"architecture", architecture_to_json(p.arch)},
                      {"roster", p.roster},
                      {"aggregator", p.aggregator},
                      {"mode", to_string(p.mode)}};
        } else if constexpr (std::is_same_v<T, EncoderStats>) {
          return Json{{"us_product", matrix_to_json(p.us_product)},
                      {"rows", p.us_product.rows()},
                      {"sample_count", p.sample_count}};
        } else if constexpr (std::is_same_v<T, LayerPartialsPayload>) {
          Json list = Json::array();
          for (const auto& part : p.partials) list.push_back(partial_to_json(part));
          return Json{{"partials", std::move(list)}};
        } else {
          return Json{{"weights", matrix_to_json(p.weights)},
                      {"rows", p.weights.rows()},
                      {"bias", vector_to_json(p.bias)},
                      {"aborted", p.aborted},
                      {"reason", p.reason}};
        }
      },
      payload);
}

// Nested arrays cannot carry the row count of a matrix with no columns.
Matrix matrix_with_rows(const Json& body, std::string_view field) {
  Matrix m = matrix_from_json(require_field(body, field), field);
  const auto rows = require_field(body, "rows").get<Eigen::Index>();
  if (m.size() == 0) return Matrix(rows, 0);
  if (m.rows() != rows) throw Error(ErrorCode::SchemaError, std::string(field) + ": row count disagrees");
  return m;
}

PacketPayload payload_from_json(PacketKind kind, const Json& body) {
  switch (kind) {
    case PacketKind::Init: {
      InitPayload p;
      p.arch = architecture_from_json(require_field(body, "architecture"));
      p.roster = require_field(body, "roster").get<std::vector<std::string>>();
      p.aggregator = require_field(body, "aggregator").get<std::string>();
      const auto mode = parse_fed_mode(require_field(body, "mode").get<std::string>());
      if (!mode) throw Error(ErrorCode::SchemaError, "unknown federation mode");
      p.mode = *mode;
      return p;
    }
    case PacketKind::EncoderStats: {
      EncoderStats p;
      p.us_product = matrix_with_rows(body, "us_product");
      p.sample_count = require_field(body, "sample_count").get<std::uint64_t>();
      return p;
    }
    case PacketKind::LayerPartials: {
      LayerPartialsPayload p;
      const Json& list = require_field(body, "partials");
      if (!list.is_array()) throw Error(ErrorCode::SchemaError, "partials must be an array");
      for (const auto& item : list) p.partials.push_back(partial_from_json(item));
      return p;
    }
    case PacketKind::ModelBroadcast: {
      ModelBroadcast p;
      p.weights = matrix_with_rows(body, "weights");
      p.bias = vector_from_json(require_field(body, "bias"), "bias");
      p.aborted = require_field(body, "aborted").get<bool>();
      p.reason = require_field(body, "reason").get<std::string>();
      return p;
    }
  }
  throw Error(ErrorCode::SchemaError, "unknown packet kind");
}

}  // namespace

std::string_view to_string(FedMode mode) { return mode == FedMode::LayerSync ? "layer_sync" : "post_hoc"; }

std::optional<FedMode> parse_fed_mode(std::string_view name) {
  if (name == "layer_sync") return FedMode::LayerSync;
  if (name == "post_hoc") return FedMode::PostHoc;
  return std::nullopt;
}

std::string_view to_string(PacketKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

std::string encode_packet(const KnowledgePacket& packet) {
  const Json doc{{"format_version", kPacketFormatVersion},
                 {"session_id", packet.session_id},
                 {"node_id", packet.node_id},
                 {"sequence", packet.sequence},
                 {"kind", to_string(packet.kind())},
                 {"layer_index", packet.layer_index},
                 {"payload", payload_to_json(packet.payload)}};
  return doc.dump();
}

void validate_packet_shapes(const KnowledgePacket& packet) {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::SchemaError, why); };
  if (const auto* stats = std::get_if<EncoderStats>(&packet.payload)) {
    if (stats->us_product.cols() > stats->us_product.rows()) {
      fail("us_product is wider than the feature dimension");
    }
  } else if (const auto* layer = std::get_if<LayerPartialsPayload>(&packet.payload)) {
    for (const auto& p : layer->partials) {
      if (p.u.rows() != p.m.size() || p.u.cols() != p.s.size()) fail("partial has inconsistent m/u/s shapes");
      if (p.u.cols() > p.u.rows()) fail("partial basis is wider than the input dimension");
    }
  } else if (const auto* model = std::get_if<ModelBroadcast>(&packet.payload)) {
    if (model->bias.size() != 0 && model->bias.size() != model->weights.cols()) {
      fail("broadcast bias does not match the weight columns");
    }
  }
}

KnowledgePacket decode_packet(const std::string& body) {
  Json doc;
  try {
    doc = Json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::CorruptPayload, e.what());
  }
  KnowledgePacket packet;
  try {
    if (!doc.is_object()) throw Error(ErrorCode::SchemaError, "packet must be an object");
    const int version = require_field(doc, "format_version").get<int>();
    if (version != kPacketFormatVersion) {
      throw Error(ErrorCode::VersionMismatch, "packet format " + std::to_string(version));
    }
    packet.session_id = require_field(doc, "session_id").get<std::string>();
    packet.node_id = require_field(doc, "node_id").get<std::string>();
    packet.sequence = require_field(doc, "sequence").get<std::uint64_t>();
    packet.layer_index = require_field(doc, "layer_index").get<int>();
    const auto kind_name = require_field(doc, "kind").get<std::string>();
    std::optional<PacketKind> kind;
    for (std::size_t k = 0; k < std::size(kKindNames); ++k) {
      if (kKindNames[k] == kind_name) kind = static_cast<PacketKind>(k);
    }
    if (!kind) throw Error(ErrorCode::SchemaError, "unknown packet kind '" + kind_name + "'");
    packet.payload = payload_from_json(*kind, require_field(doc, "payload"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, e.what());
  }
  validate_packet_shapes(packet);
  return packet;
}

bool operator==(const KnowledgePacket& a, const KnowledgePacket& b) {
  if (a.session_id != b.session_id || a.node_id != b.node_id || a.sequence != b.sequence ||
      a.layer_index != b.layer_index || a.payload.index() != b.payload.index()) {
    return false;
  }
  return std::visit(
      [&](const auto& pa) {
        using T = std::decay_t<decltype(pa)>;
        const auto& pb = std::get<T>(b.payload);
        if constexpr (std::is_same_v<T, InitPayload>) {
          return pa.arch == pb.arch && pa.roster == pb.roster && pa.aggregator == pb.aggregator && pa.mode == pb.mode;
        } else if constexpr (std::is_same_v<T, EncoderStats>) {
          return same(pa.us_product, pb.us_product) && pa.sample_count == pb.sample_count;
        } else if constexpr (std::is_same_v<T, LayerPartialsPayload>) {
          if (pa.partials.size() != pb.partials.size()) return false;
          for (std::size_t i = 0; i < pa.partials.size(); ++i) {
            if (!same(pa.partials[i], pb.partials[i])) return false;
          }
          return true;
        } else {
          return same(pa.weights, pb.weights) && same(pa.bias, pb.bias) && pa.aborted == pb.aborted &&
                 pa.reason == pb.reason;
        }
      },
      a.payload);
}

}  // namespace daef
