#include "daef/federation.hpp"

#include "daef/error.hpp"
#include "daef/tcp_transport.hpp"

#include <algorithm>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <thread>

namespace daef {

namespace {

constexpr Activation kLinear{ActivationKind::Linear};
using Clock = std::chrono::steady_clock;

/// Non-owning PubSub view of the in-process broker.
class BrokerHandle : public PubSub {
 public:
  explicit BrokerHandle(Broker& broker) : broker_(broker) {}
  void publish(const std::string& topic, const KnowledgePacket& packet) override { broker_.publish(topic, packet); }
  std::shared_ptr<Subscription> subscribe(const std::string& pattern) override { return broker_.subscribe(pattern); }

 private:
  Broker& broker_;
};

/// One actor's view of the session: its connection and per-topic counters.
class Endpoint {
 public:
  Endpoint(std::unique_ptr<PubSub> link, std::string session, std::string node)
      : link_(std::move(link)), session_(std::move(session)), node_(std::move(node)) {}

  PubSub& link() { return *link_; }
  const std::string& session() const { return session_; }
  const std::string& node() const { return node_; }

  void send(const std::string& topic, int stage, PacketPayload payload) {
    KnowledgePacket p{session_, node_, ++sequence_[topic], stage, std::move(payload)};
    link_->publish(topic, p);
  }

  void abort(int stage, const std::string& reason) {
    try {
      send(topic_model(session_), stage, ModelBroadcast{Matrix(), Vector(), true, reason});
    } catch (const Error&) {
      // The session is already failing; the original error is reported.
    }
  }

 private:
  std::unique_ptr<PubSub> link_;
  std::string session_;
  std::string node_;
  std::map<std::string, std::uint64_t> sequence_;
};

/// Pops decoded, deduplicated packets until `done` returns true or the
/// deadline passes. Returns false on timeout.
bool drain_until(Subscription& sub, SequenceFilter& filter, Clock::time_point deadline,
                 const std::function<bool(const std::string&, const KnowledgePacket&)>& on_packet) {
  while (true) {
    const auto now = Clock::now();
    if (now >= deadline) return false;
    auto message = sub.pop(std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now) +
                           std::chrono::milliseconds(1));
    if (!message) continue;
    KnowledgePacket packet = decode_packet(message->body);
    if (!filter.accept(message->topic, packet)) continue;
    if (on_packet(message->topic, packet)) return true;
  }
}

std::unique_ptr<PubSub> connect(Broker& broker, const TcpBrokerServer* server, const FedOptions& options) {
  if (server) return std::make_unique<TcpBrokerClient>(server->port(), options.broker.max_payload_bytes + 4096);
  return std::make_unique<BrokerHandle>(broker);
}

bool stops_publishing(const FedOptions& options, const std::string& node, int stage) {
  return options.silent_node && *options.silent_node == node && stage >= options.silent_from_stage;
}

void check_architecture(const Architecture& a, const Architecture& b) {
  if (a.layer_sizes != b.layer_sizes || a.hidden_activation != b.hidden_activation ||
      a.lambda_hidden != b.lambda_hidden || a.lambda_last != b.lambda_last || a.clamp_eps != b.clamp_eps) {
    throw Error(ErrorCode::ArchitectureMismatch, "foreign knowledge comes from a different architecture");
  }
  if (a.init_seed != b.init_seed) {
    throw Error(ErrorCode::SeedMismatch, "initialisation seeds differ (" + std::to_string(a.init_seed) + " vs " +
                                             std::to_string(b.init_seed) + ")");
  }
}

template <typename Fn>
auto at_stage(int stage, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), "layer " + std::to_string(stage) + ": " + e.detail());
  }
}

/// Rethrows the most informative failure: a root cause beats the aborts
/// and timeouts it triggered elsewhere.
void rethrow_first(const std::vector<std::exception_ptr>& errors) {
  std::exception_ptr fallback;
  for (const auto& e : errors) {
    if (!e) continue;
    if (!fallback) fallback = e;
    try {
      std::rethrow_exception(e);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::SessionAborted && err.code() != ErrorCode::NodeTimeout) throw;
    } catch (...) {
      throw;
    }
  }
  if (fallback) std::rethrow_exception(fallback);
}

struct Deployment {
  Broker broker;
  std::unique_ptr<TcpBrokerServer> server;
  std::shared_ptr<Subscription> recorder;

  Deployment(const FedSession& session, const FedOptions& options) : broker(options.broker) {
    broker.register_session(session.session_id);
    if (options.record_transcript) recorder = broker.subscribe("daef/" + session.session_id + "/#");
    if (options.transport == Transport::Tcp) server = std::make_unique<TcpBrokerServer>(broker);
  }

  void finish(FedResult& result) {
    result.packets = broker.published_count();
    result.bytes = broker.published_bytes();
    if (!recorder) return;
    while (auto m = recorder->try_pop()) result.transcript.push_back(std::move(*m));
  }
};

FedSession checked(const FedSession& session, std::size_t blocks, FedMode mode) {
  FedSession s = session;
  if (s.mode != mode) throw Error(ErrorCode::ConfigError, "session mode is " + std::string(to_string(s.mode)));
  if (s.roster.empty()) throw Error(ErrorCode::ConfigError, "empty roster");
  if (s.roster.size() != blocks) {
    throw Error(ErrorCode::ShapeMismatch, std::to_string(blocks) + " data blocks for a roster of " +
                                              std::to_string(s.roster.size()));
  }
  if (s.aggregator.empty()) s.aggregator = s.roster.front();
  if (std::find(s.roster.begin(), s.roster.end(), s.aggregator) == s.roster.end()) {
    throw Error(ErrorCode::ConfigError, "aggregator '" + s.aggregator + "' is not on the roster");
  }
  s.arch.validate();
  return s;
}

// ---------------------------------------------------------------------------
// layer_sync actors

class Aggregator {
 public:
  Aggregator(const FedSession& session, const FedOptions& options, Endpoint& ep)
      : session_(session), options_(options), ep_(ep) {}

  DaefModel run(const std::shared_ptr<Subscription>& inbox) {
    inbox_ = inbox;
    ep_.send(topic_init(session_.session_id), 0,
             InitPayload{session_.arch, session_.roster, session_.aggregator, FedMode::LayerSync});
    const Architecture& arch = session_.arch;
    DaefModel model;
    model.arch = arch;

    int stage = 1;
    try {
      auto stats_by_node = collect<EncoderStats>(stage);
      std::vector<EncoderStats> stats;
      std::uint64_t total = 0;
      for (const auto& node : session_.roster) {
        total += stats_by_node[node].sample_count;
        stats.push_back(std::move(stats_by_node[node]));
      }
      at_stage(stage, [&] {
        if (total < static_cast<std::uint64_t>(arch.latent_dim())) {
          throw Error(ErrorCode::InsufficientSamples, std::to_string(total) + " samples for a latent width of " +
                                                          std::to_string(arch.latent_dim()));
        }
        auto agg = aggregate_encoder(stats, arch.latent_dim());
        model.encoder_weights = std::move(agg.weights);
        model.encoder_knowledge = std::move(agg.merged);
        return 0;
      });
      broadcast(stage, model.encoder_weights, Vector());

      SeedStream stream(arch.init_seed);
      const int last = static_cast<int>(arch.decoder_depth()) + 1;
      for (stage = 2; stage <= last; ++stage) {
        const auto m_in = arch.layer_sizes[static_cast<std::size_t>(stage) - 1];
        const auto m_out = arch.layer_sizes[static_cast<std::size_t>(stage)];
        std::optional<AuxiliaryInit> aux;
        if (stage < last) aux = init_auxiliary(stream, m_in, m_out);

        auto by_node = collect<LayerPartialsPayload>(stage);
        DecoderLayer layer;
        at_stage(stage, [&] {
          std::vector<LayerPartials> blocks;
          for (const auto& node : session_.roster) {
            auto& partials = by_node[node].partials;
            if (!partials.empty()) blocks.push_back(std::move(partials));
          }
          if (blocks.empty()) throw Error(ErrorCode::EmptyInput, "no node contributed samples");
          layer.knowledge = merge_layer_partials(blocks);
          if (aux) {
            layer.weights = solve_layer(layer.knowledge, arch.lambda_hidden, options_.workers).weights.transpose();
            layer.bias = aux->bias;
          } else {
            LayerFit fit = solve_layer(layer.knowledge, arch.lambda_last, options_.workers);
            layer.weights = std::move(fit.weights);
            layer.bias = std::move(fit.bias);
          }
          return 0;
        });
        broadcast(stage, layer.weights, layer.bias);
        model.decoder.push_back(std::move(layer));
      }
    } catch (const Error& e) {
      ep_.abort(stage, e.what());
      throw;
    }
    return model;
  }

 private:
  template <typename Payload>
  std::map<std::string, Payload> collect(int stage) {
    auto& pending = buffer_[stage];
    auto complete = [&] {
      return std::all_of(session_.roster.begin(), session_.roster.end(),
                         [&](const std::string& n) { return pending.count(n) > 0; });
    };
    const auto deadline = Clock::now() + session_.timeout;
    bool ok = complete() || drain_until(*inbox_, filter_, deadline, [&](const std::string&, const KnowledgePacket& p) {
      if (const auto* b = std::get_if<ModelBroadcast>(&p.payload); b && b->aborted) {
        throw Error(ErrorCode::SessionAborted, "node " + p.node_id + " aborted: " + b->reason);
      }
      const bool contribution =
          std::holds_alternative<EncoderStats>(p.payload) || std::holds_alternative<LayerPartialsPayload>(p.payload);
      if (contribution && std::find(session_.roster.begin(), session_.roster.end(), p.node_id) != session_.roster.end()) {
        buffer_[p.layer_index].emplace(p.node_id, p.payload);
      }
      return complete();
    });
    if (!ok) {
      std::string missing;
      for (const auto& n : session_.roster) {
        if (!pending.count(n)) missing += (missing.empty() ? "" : ", ") + n;
      }
      throw Error(ErrorCode::SessionAborted, "round " + std::to_string(stage) + " timed out waiting for " + missing);
    }
    std::map<std::string, Payload> out;
    for (auto& [node, payload] : pending) {
      auto* typed = std::get_if<Payload>(&payload);
      if (!typed) throw Error(ErrorCode::SchemaError, "node " + node + " sent the wrong packet kind");
      out.emplace(node, std::move(*typed));
    }
    return out;
  }

  void broadcast(int stage, const Matrix& weights, const Vector& bias) {
    ep_.send(topic_model(session_.session_id), stage, ModelBroadcast{weights, bias, false, ""});
  }

  const FedSession& session_;
  const FedOptions& options_;
  Endpoint& ep_;
  std::shared_ptr<Subscription> inbox_;
  SequenceFilter filter_;
  std::map<int, std::map<std::string, PacketPayload>> buffer_;
};

class NodeActor {
 public:
  NodeActor(const FedSession& session, const FedOptions& options, Endpoint& ep, const Matrix& x)
      : session_(session), options_(options), ep_(ep), x_(x) {}

  DaefModel run(const std::shared_ptr<Subscription>& init_sub, const std::shared_ptr<Subscription>& model_sub) {
    // Nodes never read the session's architecture directly: they adopt the
    // initiator's broadcast.
    InitPayload init;
    const bool got = drain_until(*init_sub, filter_, Clock::now() + wait_limit(), [&](const std::string&,
                                                                                       const KnowledgePacket& p) {
      if (const auto* i = std::get_if<InitPayload>(&p.payload)) {
        init = *i;
        return true;
      }
      return false;
    });
    if (!got) throw Error(ErrorCode::NodeTimeout, ep_.node() + " never received the session init");
    model_sub_ = model_sub;
    aggregator_ = init.aggregator;
    const Architecture& arch = init.arch;
    arch.validate();
    const Activation act = arch.hidden_activation;
    const bool has_data = x_.cols() > 0;

    DaefModel model;
    model.arch = arch;

    int stage = 1;
    try {
      EncoderStats stats = has_data ? local_encoder_stats(x_) : EncoderStats{Matrix(arch.input_dim(), 0), 0};
      publish(topic_encoder(ep_.session()), stage, std::move(stats));
      model.encoder_weights = await(stage).weights;
      Matrix h = act.apply(model.encoder_weights.transpose() * x_);

      SeedStream stream(arch.init_seed);
      const int last = static_cast<int>(arch.decoder_depth()) + 1;
      for (stage = 2; stage <= last; ++stage) {
        const auto m_in = arch.layer_sizes[static_cast<std::size_t>(stage) - 1];
        const auto m_out = arch.layer_sizes[static_cast<std::size_t>(stage)];
        const bool hidden = stage < last;
        LayerPartialsPayload payload;
        at_stage(stage, [&] {
          if (hidden) {
            const AuxiliaryInit aux = init_auxiliary(stream, m_in, m_out);
            if (has_data) {
              payload.partials = compute_layer_partials(layer_forward(aux.weights, aux.bias, h, act), h, act,
                                                        arch.clamp_eps, options_.workers);
            }
          } else if (has_data) {
            payload.partials = compute_layer_partials(h, x_, kLinear, arch.clamp_eps, options_.workers);
          }
          return 0;
        });
        publish(topic_layer(ep_.session(), stage), stage, std::move(payload));
        ModelBroadcast solved = await(stage);
        h = layer_forward(solved.weights, solved.bias, h, hidden ? act : kLinear);
        model.decoder.push_back({std::move(solved.weights), std::move(solved.bias), {}});
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SessionAborted) ep_.abort(stage, ep_.node() + ": " + e.what());
      throw;
    }
    return model;
  }

 private:
  // Longer than the aggregator's round timeout so that its abort, not a
  // node timeout, is what ends a stalled round.
  std::chrono::milliseconds wait_limit() const { return session_.timeout * 2 + std::chrono::milliseconds(100); }

  template <typename Payload>
  void publish(const std::string& topic, int stage, Payload payload) {
    if (stops_publishing(options_, ep_.node(), stage)) return;
    ep_.send(topic, stage, std::move(payload));
  }

  ModelBroadcast await(int stage) {
    std::optional<ModelBroadcast> result;
    const bool got = drain_until(*model_sub_, filter_, Clock::now() + wait_limit(), [&](const std::string&,
                                                                                         const KnowledgePacket& p) {
      const auto* b = std::get_if<ModelBroadcast>(&p.payload);
      if (!b) return false;
      if (b->aborted) throw Error(ErrorCode::SessionAborted, "aborted by " + p.node_id + ": " + b->reason);
      if (p.node_id != aggregator_ || p.layer_index != stage) return false;
      result = *b;
      return true;
    });
    if (!got) {
      throw Error(ErrorCode::NodeTimeout, ep_.node() + " got no weights for round " + std::to_string(stage));
    }
    return std::move(*result);
  }

  const FedSession& session_;
  const FedOptions& options_;
  Endpoint& ep_;
  const Matrix& x_;
  std::shared_ptr<Subscription> model_sub_;
  std::string aggregator_;
  SequenceFilter filter_;
};

}  // namespace

FedSession FedSession::make(std::string session_id, Architecture arch, std::size_t nodes, FedMode mode) {
  FedSession s;
  s.session_id = std::move(session_id);
  s.arch = std::move(arch);
  s.mode = mode;
  for (std::size_t i = 0; i < nodes; ++i) s.roster.push_back("node-" + std::to_string(i));
  if (!s.roster.empty()) s.aggregator = s.roster.front();
  return s;
}

EncoderStats local_encoder_stats(const Matrix& x_local) {
  return EncoderStats{svd_thin(x_local).scaled_u(), static_cast<std::uint64_t>(x_local.cols())};
}

EncoderAggregate aggregate_encoder(std::span<const EncoderStats> stats, Eigen::Index m1) {
  std::vector<Matrix> products;
  for (const auto& s : stats) {
    if (!products.empty() && s.us_product.rows() != products.front().rows()) {
      throw Error(ErrorCode::ShapeMismatch, "encoder statistics disagree on the input dimension (" +
                                                std::to_string(products.front().rows()) + " vs " +
                                                std::to_string(s.us_product.rows()) + ")");
    }
    if (s.us_product.cols() > 0) products.push_back(s.us_product);
  }
  EncoderAggregate out;
  out.merged = merge_products(products);
  out.weights = truncate(out.merged, m1).u;
  return out;
}

FedResult run_layer_sync(const FedSession& input, std::span<const Matrix> local_data, const FedOptions& options) {
  const FedSession session = checked(input, local_data.size(), FedMode::LayerSync);
  for (const auto& x : local_data) {
    if (x.rows() != session.arch.input_dim()) {
      throw Error(ErrorCode::ShapeMismatch, "local block has " + std::to_string(x.rows()) + " rows, architecture expects " +
                                                std::to_string(session.arch.input_dim()));
    }
  }
  Deployment net(session, options);
  const std::size_t n = session.roster.size();

  // All endpoints subscribe before anyone publishes.
  Endpoint agg_ep(connect(net.broker, net.server.get(), options), session.session_id, session.aggregator);
  auto agg_inbox = agg_ep.link().subscribe("daef/" + session.session_id + "/#");
  std::vector<std::unique_ptr<Endpoint>> node_eps;
  std::vector<std::shared_ptr<Subscription>> init_subs, model_subs;
  for (std::size_t i = 0; i < n; ++i) {
    node_eps.push_back(std::make_unique<Endpoint>(connect(net.broker, net.server.get(), options), session.session_id,
                                                  session.roster[i]));
    init_subs.push_back(node_eps.back()->link().subscribe(topic_init(session.session_id)));
    model_subs.push_back(node_eps.back()->link().subscribe(topic_model(session.session_id)));
  }

  FedResult result;
  result.node_models.resize(n);
  std::vector<std::exception_ptr> errors(n + 1);
  {
    std::vector<std::jthread> actors;
    actors.emplace_back([&] {
      try {
        result.global = Aggregator(session, options, agg_ep).run(agg_inbox);
      } catch (...) {
        errors[0] = std::current_exception();
      }
    });
    for (std::size_t i = 0; i < n; ++i) {
      actors.emplace_back([&, i] {
        try {
          result.node_models[i] = NodeActor(session, options, *node_eps[i], local_data[i]).run(init_subs[i], model_subs[i]);
        } catch (...) {
          errors[i + 1] = std::current_exception();
        }
      });
    }
  }
  rethrow_first(errors);
  net.finish(result);
  return result;
}

// ---------------------------------------------------------------------------
// post-hoc

ForeignKnowledge export_knowledge(const DaefModel& model) {
  ForeignKnowledge k;
  k.arch = model.arch;
  std::uint64_t count = 0;
  if (!model.decoder.empty() && !model.decoder.back().knowledge.empty()) count = model.decoder.back().knowledge[0].count;
  k.encoder = EncoderStats{model.encoder_knowledge.scaled_u(), count};
  for (const auto& layer : model.decoder) k.layers.push_back(layer.knowledge);
  return k;
}

DaefModel post_hoc_merge(const DaefModel& local, const ForeignKnowledge& foreign, std::size_t workers) {
  check_architecture(local.arch, foreign.arch);
  if (foreign.encoder.us_product.rows() != local.input_dim() || foreign.layers.size() != local.decoder.size()) {
    throw Error(ErrorCode::ArchitectureMismatch, "foreign knowledge has the wrong shape");
  }
  DaefModel out = local;
  out.threshold.reset();
  if (foreign.encoder.us_product.cols() > 0) {
    const std::vector<Matrix> products{local.encoder_knowledge.scaled_u(), foreign.encoder.us_product};
    out.encoder_knowledge = merge_products(products);
  }
  for (std::size_t l = 0; l < out.decoder.size(); ++l) {
    auto& mine = out.decoder[l].knowledge;
    const auto& theirs = foreign.layers[l];
    if (theirs.size() != mine.size()) {
      throw Error(ErrorCode::ArchitectureMismatch, "layer " + std::to_string(l + 2) + " has " +
                                                       std::to_string(theirs.size()) + " foreign partials, expected " +
                                                       std::to_string(mine.size()));
    }
    for (std::size_t j = 0; j < mine.size(); ++j) {
      at_stage(static_cast<int>(l) + 2, [&] {
        mine[j] = merge_partials(mine[j], theirs[j]);
        return 0;
      });
    }
  }
  return resolve_from_knowledge(out, workers);
}

FedResult run_post_hoc(const FedSession& input, std::span<const Matrix> local_data, const FedOptions& options) {
  const FedSession session = checked(input, local_data.size(), FedMode::PostHoc);
  Deployment net(session, options);
  const std::size_t n = session.roster.size();
  const int stages = static_cast<int>(session.arch.decoder_depth()) + 1;

  std::vector<std::unique_ptr<Endpoint>> eps;
  std::vector<std::shared_ptr<Subscription>> inboxes;
  for (std::size_t i = 0; i < n; ++i) {
    eps.push_back(std::make_unique<Endpoint>(connect(net.broker, net.server.get(), options), session.session_id,
                                             session.roster[i]));
    inboxes.push_back(eps.back()->link().subscribe("daef/" + session.session_id + "/#"));
  }

  FedResult result;
  result.node_models.resize(n);
  std::vector<std::exception_ptr> errors(n);
  {
    std::vector<std::jthread> actors;
    for (std::size_t i = 0; i < n; ++i) {
      actors.emplace_back([&, i] {
        Endpoint& ep = *eps[i];
        const std::string& me = session.roster[i];
        try {
          if (me == session.aggregator) {
            ep.send(topic_init(session.session_id), 0,
                    InitPayload{session.arch, session.roster, session.aggregator, FedMode::PostHoc});
          }
          // Knowledge from other nodes, keyed by stage then node.
          std::map<std::string, ForeignKnowledge> foreign;
          std::optional<Architecture> arch;
          SequenceFilter filter;
          auto absorb = [&](const std::string&, const KnowledgePacket& p) {
            if (const auto* b = std::get_if<ModelBroadcast>(&p.payload); b && b->aborted) {
              throw Error(ErrorCode::SessionAborted, "aborted by " + p.node_id + ": " + b->reason);
            }
            if (const auto* init = std::get_if<InitPayload>(&p.payload)) arch = init->arch;
            if (p.node_id != me) {
              auto& k = foreign[p.node_id];
              if (const auto* s = std::get_if<EncoderStats>(&p.payload)) k.encoder = *s;
              if (const auto* l = std::get_if<LayerPartialsPayload>(&p.payload)) {
                if (p.layer_index >= 2 && p.layer_index <= stages) {
                  k.layers.resize(static_cast<std::size_t>(stages) - 1);
                  k.layers[static_cast<std::size_t>(p.layer_index) - 2] = l->partials;
                }
              }
            }
            return false;
          };
          const auto wait = session.timeout * 2;
          auto have_init = [&] { return arch.has_value(); };
          if (!drain_until(*inboxes[i], filter, Clock::now() + wait, [&](const std::string& t, const KnowledgePacket& p) {
                absorb(t, p);
                return have_init();
              })) {
            throw Error(ErrorCode::NodeTimeout, me + " never received the session init");
          }

          DaefModel local = train_blocks(std::span<const Matrix>(&local_data[i], 1), *arch, options.workers);
          if (!stops_publishing(options, me, 1)) {
            const ForeignKnowledge mine = export_knowledge(local);
            ep.send(topic_encoder(session.session_id), 1, mine.encoder);
            for (int s = 2; s <= stages; ++s) {
              if (stops_publishing(options, me, s)) break;
              ep.send(topic_layer(session.session_id, s), s,
                      LayerPartialsPayload{mine.layers[static_cast<std::size_t>(s) - 2]});
            }
          }

          auto complete = [&] {
            for (const auto& other : session.roster) {
              if (other == me) continue;
              auto it = foreign.find(other);
              if (it == foreign.end() || it->second.layers.size() != static_cast<std::size_t>(stages) - 1) return false;
              if (it->second.encoder.us_product.rows() == 0) return false;
              for (const auto& l : it->second.layers) {
                if (l.empty()) return false;
              }
            }
            return true;
          };
          if (!complete() && !drain_until(*inboxes[i], filter, Clock::now() + session.timeout,
                                          [&](const std::string& t, const KnowledgePacket& p) {
                                            absorb(t, p);
                                            return complete();
                                          })) {
            throw Error(ErrorCode::SessionAborted, me + " timed out waiting for foreign knowledge");
          }
          DaefModel merged = std::move(local);
          for (const auto& other : session.roster) {
            if (other == me) continue;
            ForeignKnowledge k = foreign.at(other);
            k.arch = *arch;
            merged = post_hoc_merge(merged, k, options.workers);
          }
          result.node_models[i] = std::move(merged);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::SessionAborted) ep.abort(0, me + ": " + e.what());
          errors[i] = std::current_exception();
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    }
  }
  rethrow_first(errors);
  const auto agg = std::find(session.roster.begin(), session.roster.end(), session.aggregator) - session.roster.begin();
  result.global = result.node_models[static_cast<std::size_t>(agg)];
  net.finish(result);
  return result;
}

double max_weight_delta(const DaefModel& a, const DaefModel& b) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  auto diff = [](const auto& x, const auto& y) {
    if (x.rows() != y.rows() || x.cols() != y.cols()) return kInf;
    return x.size() == 0 ? 0.0 : (x - y).cwiseAbs().maxCoeff();
  };
  if (a.decoder.size() != b.decoder.size()) return kInf;
  double d = diff(a.encoder_weights, b.encoder_weights);
  for (std::size_t l = 0; l < a.decoder.size(); ++l) {
    d = std::max({d, diff(a.decoder[l].weights, b.decoder[l].weights), diff(a.decoder[l].bias, b.decoder[l].bias)});
  }
  return d;
}

}  // namespace daef
