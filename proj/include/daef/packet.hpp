#pragma once

#include "daef/json_util.hpp"
#include "daef/model.hpp"
#include "daef/rolann.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace daef {

inline constexpr int kPacketFormatVersion = 1;

enum class FedMode { LayerSync, PostHoc };

std::string_view to_string(FedMode mode);
std::optional<FedMode> parse_fed_mode(std::string_view name);

/// Session parameters broadcast by the initiator. Every node adopts this
/// architecture and seed, so auxiliary weights agree everywhere.
struct InitPayload {
  Architecture arch;
  std::vector<std::string> roster;
  std::string aggregator;
  FedMode mode = FedMode::LayerSync;
};

/// What a site shares about its encoder input: U * diag(S) of its local block.
struct EncoderStats {
  Matrix us_product;  // m0 x r, r <= m0
  std::uint64_t sample_count = 0;
};

/// One knowledge partial per neuron of the problem solved at `layer`.
struct LayerPartialsPayload {
  LayerPartials partials;
};

/// Solved weights of one stage (stage 1 is the encoder, stage s >= 2 the
/// decoder layer producing layer_sizes[s]). An aborted broadcast ends the
/// session for every node.
struct ModelBroadcast {
  Matrix weights;
  Vector bias;
  bool aborted = false;
  std::string reason;
};

using PacketPayload = std::variant<InitPayload, EncoderStats, LayerPartialsPayload, ModelBroadcast>;

enum class PacketKind { Init, EncoderStats, LayerPartials, ModelBroadcast };

std::string_view to_string(PacketKind kind);

struct KnowledgePacket {
  std::string session_id;
  std::string node_id;
  std::uint64_t sequence = 0;
  int layer_index = 0;  // stage for layer_partials and model_broadcast
  PacketPayload payload;

  PacketKind kind() const { return static_cast<PacketKind>(payload.index()); }
};

/// UTF-8 JSON body. Floats use shortest round-trip form.
std::string encode_packet(const KnowledgePacket& packet);

/// Throws CorruptPayload on malformed JSON, VersionMismatch, and SchemaError
/// when a field is missing or a shape could depend on the local sample
/// count: shared U*S products and partial bases must be no wider than they
/// are tall, so their size is fixed by the feature dimension.
KnowledgePacket decode_packet(const std::string& body);

/// The structural privacy rule on its own; decode_packet applies it too.
void validate_packet_shapes(const KnowledgePacket& packet);

bool operator==(const KnowledgePacket& a, const KnowledgePacket& b);

}  // namespace daef
