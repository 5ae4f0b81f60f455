#include "daef/broker.hpp"

#include "daef/error.hpp"

#include <algorithm>

namespace daef {

namespace {

constexpr std::string_view kRoot = "daef/";

std::vector<std::string_view> split_levels(std::string_view topic) {
  std::vector<std::string_view> levels;
  std::size_t start = 0;
  while (true) {
    const auto slash = topic.find('/', start);
    levels.push_back(topic.substr(start, slash - start));
    if (slash == std::string_view::npos) break;
    start = slash + 1;
  }
  return levels;
}

}  // namespace

std::string topic_init(const std::string& session) { return std::string(kRoot) + session + "/init"; }
std::string topic_encoder(const std::string& session) { return std::string(kRoot) + session + "/encoder"; }
std::string topic_layer(const std::string& session, int stage) {
  return std::string(kRoot) + session + "/layer/" + std::to_string(stage);
}
std::string topic_model(const std::string& session) { return std::string(kRoot) + session + "/model"; }

std::optional<std::string> topic_session(const std::string& topic) {
  if (topic.rfind(kRoot, 0) != 0) return std::nullopt;
  const auto end = topic.find('/', kRoot.size());
  if (end == std::string::npos || end == kRoot.size()) return std::nullopt;
  return topic.substr(kRoot.size(), end - kRoot.size());
}

bool topic_matches(const std::string& pattern, const std::string& topic) {
  const auto p = split_levels(pattern);
  const auto t = split_levels(topic);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == "#") return i + 1 == p.size();
    if (i >= t.size()) return false;
    if (p[i] != "+" && p[i] != t[i]) return false;
  }
  return p.size() == t.size();
}

void Subscription::push(Message message) {
  {
    std::lock_guard lock(mutex_);
    if (closed_) return;
    queue_.push_back(std::move(message));
  }
  ready_.notify_one();
}

std::optional<Message> Subscription::try_pop() {
  std::lock_guard lock(mutex_);
  if (queue_.empty()) return std::nullopt;
  Message m = std::move(queue_.front());
  queue_.pop_front();
  return m;
}

std::optional<Message> Subscription::pop(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  if (!ready_.wait_for(lock, timeout, [&] { return !queue_.empty() || closed_; })) return std::nullopt;
  if (queue_.empty()) return std::nullopt;
  Message m = std::move(queue_.front());
  queue_.pop_front();
  return m;
}

void Subscription::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  ready_.notify_all();
}

void Broker::register_session(const std::string& session) {
  std::lock_guard lock(mutex_);
  sessions_.insert(session);
}

bool Broker::has_session(const std::string& session) const {
  std::lock_guard lock(mutex_);
  return sessions_.count(session) > 0;
}

bool Broker::is_retained(const std::string& topic) {
  auto ends_with = [&](std::string_view suffix) {
    return topic.size() >= suffix.size() && topic.compare(topic.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  return ends_with("/init") || ends_with("/model");
}

void Broker::publish(const std::string& topic, const KnowledgePacket& packet) {
  publish_encoded(topic, encode_packet(packet));
}

void Broker::publish_encoded(const std::string& topic, std::string body) {
  const auto session = topic_session(topic);
  if (body.size() > options_.max_payload_bytes) {
    throw Error(ErrorCode::PayloadTooLarge, std::to_string(body.size()) + " bytes exceeds the cap of " +
                                                std::to_string(options_.max_payload_bytes));
  }
  std::lock_guard lock(mutex_);
  if (!session || sessions_.count(*session) == 0) {
    throw Error(ErrorCode::UnknownSession, "no registered session for topic '" + topic + "'");
  }
  ++published_;
  bytes_ += body.size();
  const bool twice = options_.duplicate_every > 0 && published_ % options_.duplicate_every == 0;
  Message message{topic, std::move(body)};

  std::erase_if(subscribers_, [](const auto& w) { return w.expired(); });
  for (const auto& weak : subscribers_) {
    if (auto sub = weak.lock(); sub && topic_matches(sub->pattern(), topic)) {
      sub->push(message);
      if (twice) sub->push(message);
    }
  }
  if (is_retained(topic)) retained_[topic] = std::move(message);
}

std::shared_ptr<Subscription> Broker::subscribe(const std::string& pattern) {
  auto sub = std::make_shared<Subscription>(pattern);
  std::lock_guard lock(mutex_);
  for (const auto& [topic, message] : retained_) {
    if (topic_matches(pattern, topic)) sub->push(message);
  }
  subscribers_.push_back(sub);
  return sub;
}

std::size_t Broker::published_count() const {
  std::lock_guard lock(mutex_);
  return published_;
}

std::size_t Broker::published_bytes() const {
  std::lock_guard lock(mutex_);
  return bytes_;
}

bool SequenceFilter::accept(const std::string& topic, const KnowledgePacket& packet) {
  const auto key = std::make_pair(packet.node_id, topic);
  const auto it = last_.find(key);
  if (it != last_.end() && packet.sequence <= it->second) return false;
  last_[key] = packet.sequence;
  return true;
}

}  // namespace daef
