#pragma once

#include "daef/packet.hpp"

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace daef {

std::string topic_init(const std::string& session);
std::string topic_encoder(const std::string& session);
std::string topic_layer(const std::string& session, int stage);
std::string topic_model(const std::string& session);

/// Session id of a `daef/<session>/...` topic, or nullopt.
std::optional<std::string> topic_session(const std::string& topic);

/// MQTT filter semantics: `+` matches one level, a trailing `#` any rest.
bool topic_matches(const std::string& pattern, const std::string& topic);

struct Message {
  std::string topic;
  std::string body;  // encoded KnowledgePacket
};

/// FIFO of delivered messages. Producers push, one consumer pops.
class Subscription {
 public:
  explicit Subscription(std::string pattern) : pattern_(std::move(pattern)) {}

  const std::string& pattern() const { return pattern_; }
  void push(Message message);
  std::optional<Message> try_pop();
  /// Waits up to `timeout`; nullopt on timeout or after close().
  std::optional<Message> pop(std::chrono::milliseconds timeout);
  void close();

 private:
  std::string pattern_;
  std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<Message> queue_;
  bool closed_ = false;
};

/// Common face of the in-process broker and the TCP client.
class PubSub {
 public:
  virtual ~PubSub() = default;
  virtual void publish(const std::string& topic, const KnowledgePacket& packet) = 0;
  virtual std::shared_ptr<Subscription> subscribe(const std::string& pattern) = 0;
};

struct BrokerOptions {
  std::size_t max_payload_bytes = std::size_t{64} << 20;
  /// When n > 0, every n-th publish is delivered twice (at-least-once testing).
  std::size_t duplicate_every = 0;
};

/// In-process pub/sub. Publishing happens under one lock, so every
/// subscriber sees the same global order and each publisher's order is kept.
/// Messages on init and model topics are retained and replayed to late
/// subscribers.
class Broker : public PubSub {
 public:
  explicit Broker(BrokerOptions options = {}) : options_(options) {}

  void register_session(const std::string& session);
  bool has_session(const std::string& session) const;

  /// Throws UnknownSession, PayloadTooLarge.
  void publish(const std::string& topic, const KnowledgePacket& packet) override;
  void publish_encoded(const std::string& topic, std::string body);
  std::shared_ptr<Subscription> subscribe(const std::string& pattern) override;

  std::size_t published_count() const;
  std::size_t published_bytes() const;

 private:
  static bool is_retained(const std::string& topic);

  BrokerOptions options_;
  mutable std::mutex mutex_;
  std::set<std::string> sessions_;
  std::vector<std::weak_ptr<Subscription>> subscribers_;
  std::map<std::string, Message> retained_;
  std::size_t published_ = 0;
  std::size_t bytes_ = 0;
};

/// Drops redeliveries: accepts a packet only when its sequence exceeds the
/// last one seen from the same node on the same topic.
class SequenceFilter {
 public:
  bool accept(const std::string& topic, const KnowledgePacket& packet);

 private:
  std::map<std::pair<std::string, std::string>, std::uint64_t> last_;
};

}  // namespace daef
