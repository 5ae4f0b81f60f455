#include "daef/tcp_transport.hpp"

#include "daef/error.hpp"
#include "daef/json_util.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace daef {

namespace {

Error io_error(const std::string& what) { return Error(ErrorCode::IoError, what + ": " + std::strerror(errno)); }

void write_all(int fd, const std::string& bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw io_error("send");
    }
    sent += static_cast<std::size_t>(n);
  }
}

/// Blocks for the next frame; nullopt once the peer has closed.
std::optional<std::string> read_frame(int fd, FrameDecoder& decoder) {
  char buf[8192];
  while (true) {
    if (auto frame = decoder.next()) return frame;
    const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
    if (n == 0) return std::nullopt;
    if (n < 0) {
      if (errno == EINTR) continue;
      return std::nullopt;
    }
    decoder.feed(std::string_view(buf, static_cast<std::size_t>(n)));
  }
}

}  // namespace

std::string encode_frame(std::string_view body) {
  const auto n = static_cast<std::uint32_t>(body.size());
  std::string out;
  out.reserve(body.size() + 4);
  out.push_back(static_cast<char>((n >> 24) & 0xff));
  out.push_back(static_cast<char>((n >> 16) & 0xff));
  out.push_back(static_cast<char>((n >> 8) & 0xff));
  out.push_back(static_cast<char>(n & 0xff));
  out.append(body);
  return out;
}

std::optional<std::string> FrameDecoder::next() {
  if (buffer_.size() < 4) return std::nullopt;
  std::size_t n = 0;
  for (int i = 0; i < 4; ++i) n = (n << 8) | static_cast<unsigned char>(buffer_[static_cast<std::size_t>(i)]);
  if (n > max_) {
    throw Error(ErrorCode::PayloadTooLarge, "frame of " + std::to_string(n) + " bytes exceeds " + std::to_string(max_));
  }
  if (buffer_.size() < 4 + n) return std::nullopt;
  std::string body = buffer_.substr(4, n);
  buffer_.erase(0, 4 + n);
  return body;
}

// ---------------------------------------------------------------------------

struct TcpBrokerServer::Connection {
  int fd = -1;
  std::mutex write_mutex;
  std::vector<std::shared_ptr<Subscription>> subscriptions;

  void send(const Json& j) {
    std::lock_guard lock(write_mutex);
    write_all(fd, encode_frame(j.dump()));
  }
};

TcpBrokerServer::TcpBrokerServer(Broker& broker, std::uint16_t port, std::size_t max_frame_bytes)
    : broker_(broker), max_frame_(max_frame_bytes) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw io_error("socket");
  const int yes = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 64) < 0) {
    const Error e = io_error("bind/listen");
    ::close(listen_fd_);
    throw e;
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  acceptor_ = std::jthread([this] { accept_loop(); });
}

TcpBrokerServer::~TcpBrokerServer() { stop(); }

void TcpBrokerServer::stop() {
  if (stopping_.exchange(true)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::jthread> threads;
  {
    std::lock_guard lock(mutex_);
    for (auto& conn : connections_) {
      ::shutdown(conn->fd, SHUT_RDWR);
      for (auto& sub : conn->subscriptions) sub->close();
    }
    threads = std::move(threads_);
  }
  threads.clear();  // joins
  std::lock_guard lock(mutex_);
  for (auto& conn : connections_) ::close(conn->fd);
  connections_.clear();
}

void TcpBrokerServer::accept_loop() {
  while (!stopping_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      return;
    }
    const int yes = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &yes, sizeof yes);
    auto conn = std::make_shared<Connection>();
    conn->fd = fd;
    std::lock_guard lock(mutex_);
    if (stopping_) {
      ::close(fd);
      return;
    }
    connections_.push_back(conn);
    threads_.emplace_back([this, conn] { serve(conn); });
  }
}

void TcpBrokerServer::serve(const std::shared_ptr<Connection>& conn) {
  FrameDecoder decoder(max_frame_);
  std::vector<std::jthread> forwarders;
  while (true) {
    std::optional<std::string> frame;
    try {
      frame = read_frame(conn->fd, decoder);
    } catch (const Error&) {
      break;  // oversized frame: the stream cannot be resynchronised
    }
    if (!frame) break;
    Json reply;
    std::uint64_t id = 0;
    try {
      const Json request = Json::parse(*frame);
      id = require_field(request, "id").get<std::uint64_t>();
      const auto op = require_field(request, "op").get<std::string>();
      if (op == "publish") {
        broker_.publish_encoded(require_field(request, "topic").get<std::string>(),
                                require_field(request, "body").get<std::string>());
      } else if (op == "subscribe") {
        auto sub = broker_.subscribe(require_field(request, "pattern").get<std::string>());
        {
          std::lock_guard lock(mutex_);
          conn->subscriptions.push_back(sub);
        }
        forwarders.emplace_back([this, conn, sub, id](std::stop_token stop) {
          while (!stop.stop_requested() && !stopping_) {
            auto message = sub->pop(std::chrono::milliseconds(50));
            if (!message) continue;
            try {
              conn->send(Json{{"op", "message"}, {"id", id}, {"topic", message->topic}, {"body", message->body}});
            } catch (const Error&) {
              return;
            }
          }
        });
      } else {
        throw Error(ErrorCode::SchemaError, "unknown op '" + op + "'");
      }
      reply = Json{{"op", "ack"}, {"id", id}};
    } catch (const Error& e) {
      reply = Json{{"op", "error"}, {"id", id}, {"code", static_cast<int>(e.code())}, {"message", e.detail()}};
    } catch (const nlohmann::json::exception& e) {
      reply = Json{{"op", "error"}, {"id", id}, {"code", static_cast<int>(ErrorCode::CorruptPayload)},
                   {"message", e.what()}};
    }
    try {
      conn->send(reply);
    } catch (const Error&) {
      break;
    }
  }
  for (auto& f : forwarders) f.request_stop();
  for (auto& sub : conn->subscriptions) sub->close();
}

// ---------------------------------------------------------------------------

TcpBrokerClient::TcpBrokerClient(std::uint16_t port, std::size_t max_frame_bytes) : max_frame_(max_frame_bytes) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw io_error("socket");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
    const Error e = io_error("connect to port " + std::to_string(port));
    ::close(fd_);
    throw e;
  }
  const int yes = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &yes, sizeof yes);
  reader_ = std::jthread([this] { read_loop(); });
}

TcpBrokerClient::~TcpBrokerClient() {
  ::shutdown(fd_, SHUT_RDWR);
  if (reader_.joinable()) reader_.join();
  ::close(fd_);
}

void TcpBrokerClient::read_loop() {
  FrameDecoder decoder(max_frame_);
  while (true) {
    std::optional<std::string> frame;
    try {
      frame = read_frame(fd_, decoder);
    } catch (const Error&) {
      frame.reset();
    }
    if (!frame) break;
    try {
      const Json j = Json::parse(*frame);
      const auto op = j.at("op").get<std::string>();
      const auto id = j.at("id").get<std::uint64_t>();
      std::lock_guard lock(state_mutex_);
      if (op == "message") {
        if (auto it = subscriptions_.find(id); it != subscriptions_.end()) {
          it->second->push(Message{j.at("topic").get<std::string>(), j.at("body").get<std::string>()});
        }
      } else if (auto it = pending_.find(id); it != pending_.end()) {
        Reply r;
        if (op == "error") {
          r.ok = false;
          r.code = j.at("code").get<int>();
          r.message = j.at("message").get<std::string>();
        }
        it->second.set_value(std::move(r));
        pending_.erase(it);
      }
    } catch (const nlohmann::json::exception&) {
      break;
    }
  }
  std::lock_guard lock(state_mutex_);
  broken_ = true;
  for (auto& [id, promise] : pending_) promise.set_value(Reply{false, static_cast<int>(ErrorCode::IoError), "connection closed"});
  pending_.clear();
  for (auto& [id, sub] : subscriptions_) sub->close();
}

TcpBrokerClient::Reply TcpBrokerClient::request(const std::string& frame_body, std::uint64_t id) {
  std::future<Reply> reply;
  {
    std::lock_guard lock(state_mutex_);
    if (broken_) return Reply{false, static_cast<int>(ErrorCode::IoError), "connection closed"};
    reply = pending_[id].get_future();
  }
  {
    std::lock_guard lock(write_mutex_);
    write_all(fd_, encode_frame(frame_body));
  }
  return reply.get();
}

void TcpBrokerClient::publish(const std::string& topic, const KnowledgePacket& packet) {
  std::uint64_t id = 0;
  {
    std::lock_guard lock(state_mutex_);
    id = next_id_++;
  }
  const Json j{{"op", "publish"}, {"id", id}, {"topic", topic}, {"body", encode_packet(packet)}};
  const Reply r = request(j.dump(), id);
  if (!r.ok) throw Error(static_cast<ErrorCode>(r.code), r.message);
}

std::shared_ptr<Subscription> TcpBrokerClient::subscribe(const std::string& pattern) {
  auto sub = std::make_shared<Subscription>(pattern);
  std::uint64_t id = 0;
  {
    std::lock_guard lock(state_mutex_);
    id = next_id_++;
    subscriptions_[id] = sub;
  }
  const Json j{{"op", "subscribe"}, {"id", id}, {"pattern", pattern}};
  const Reply r = request(j.dump(), id);
  if (!r.ok) throw Error(static_cast<ErrorCode>(r.code), r.message);
  return sub;
}

}  // namespace daef
