#pragma once

#include "daef/broker.hpp"
#include "daef/model.hpp"
#include "daef/packet.hpp"

#include <chrono>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace daef {

/// What the initiator fixes for everybody: architecture (including the
/// seed), mode, roster and the node that aggregates.
struct FedSession {
  std::string session_id = "session";
  Architecture arch;
  FedMode mode = FedMode::LayerSync;
  std::vector<std::string> roster;
  std::string aggregator;  // defaults to roster[0]
  std::chrono::milliseconds timeout{30000};  // per round

  /// Roster node-0 .. node-(n-1), aggregated by node-0.
  static FedSession make(std::string session_id, Architecture arch, std::size_t nodes,
                         FedMode mode = FedMode::LayerSync);
};

enum class Transport { InProcess, Tcp };

struct FedOptions {
  std::size_t workers = 1;  // per-node ROLANN parallelism
  Transport transport = Transport::InProcess;
  BrokerOptions broker;
  /// Fault injection: this node stops publishing from `silent_from_stage` on.
  std::optional<std::string> silent_node;
  int silent_from_stage = 1;
  /// Keep a copy of every message published in the session.
  bool record_transcript = false;
};

struct FedResult {
  DaefModel global;  // as assembled by the aggregator, with merged knowledge
  std::vector<DaefModel> node_models;  // weights as each node received them; no knowledge
  std::size_t packets = 0;
  std::size_t bytes = 0;
  std::vector<Message> transcript;  // only with FedOptions::record_transcript
};

/// U * diag(S) of the local block; the right singular vectors are never formed.
EncoderStats local_encoder_stats(const Matrix& x_local);

struct EncoderAggregate {
  Matrix weights;  // m0 x m1
  SvdThin merged;  // untruncated
};

/// Nodes with no samples are skipped. Throws EmptyInput, ShapeMismatch,
/// RankOutOfRange.
EncoderAggregate aggregate_encoder(std::span<const EncoderStats> stats, Eigen::Index m1);

/// Round-based exact federation: one round for the encoder and one per
/// decoder layer; the aggregator merges the published statistics in roster
/// order and broadcasts the solved weights. Equals train_blocks() over the
/// same blocks. A missing contribution aborts the session for everybody.
/// Throws SessionAborted, NodeTimeout and whatever the aggregator's solve
/// throws.
FedResult run_layer_sync(const FedSession& session, std::span<const Matrix> local_data, const FedOptions& options = {});

/// Knowledge a trained node can hand to another: its encoder U*S and the
/// per-neuron partials of every decoder layer.
struct ForeignKnowledge {
  Architecture arch;
  EncoderStats encoder;
  std::vector<LayerPartials> layers;
};

ForeignKnowledge export_knowledge(const DaefModel& model);

/// Adds foreign knowledge to a trained model and re-solves every weight.
/// Hidden biases stay those of the shared seed. The fitted threshold is
/// dropped because the errors it summarised no longer apply.
/// Throws ArchitectureMismatch, SeedMismatch.
DaefModel post_hoc_merge(const DaefModel& local, const ForeignKnowledge& foreign, std::size_t workers = 1);

/// One-shot exchange: every node trains locally, publishes its knowledge,
/// and merges everybody else's in roster order. Not equivalent to
/// centralised training.
FedResult run_post_hoc(const FedSession& session, std::span<const Matrix> local_data, const FedOptions& options = {});

/// Largest absolute difference over every weight and bias of two models.
double max_weight_delta(const DaefModel& a, const DaefModel& b);

}  // namespace daef
