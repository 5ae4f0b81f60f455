#pragma once

#include "daef/broker.hpp"

#include <atomic>
#include <cstdint>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace daef {

/// 4-byte big-endian length followed by the UTF-8 body.
std::string encode_frame(std::string_view body);

/// Incremental frame parser for a byte stream.
class FrameDecoder {
 public:
  explicit FrameDecoder(std::size_t max_frame_bytes) : max_(max_frame_bytes) {}

  void feed(std::string_view bytes) { buffer_.append(bytes); }
  /// Next complete frame body. Throws PayloadTooLarge on an oversized header.
  std::optional<std::string> next();

 private:
  std::size_t max_;
  std::string buffer_;
};

/// Exposes a Broker on 127.0.0.1. Control frames are JSON objects:
///   {"op":"publish","id":k,"topic":t,"body":packet}   -> {"op":"ack","id":k}
///   {"op":"subscribe","id":k,"pattern":p}             -> {"op":"ack","id":k}
/// and deliveries arrive as {"op":"message","id":k,"topic":t,"body":packet}.
/// Failures answer {"op":"error","id":k,"code":c,"message":m}.
class TcpBrokerServer {
 public:
  /// Port 0 picks a free port. Throws IoError.
  explicit TcpBrokerServer(Broker& broker, std::uint16_t port = 0, std::size_t max_frame_bytes = std::size_t{64} << 20);
  ~TcpBrokerServer();
  TcpBrokerServer(const TcpBrokerServer&) = delete;
  TcpBrokerServer& operator=(const TcpBrokerServer&) = delete;

  std::uint16_t port() const { return port_; }
  void stop();

 private:
  struct Connection;
  void accept_loop();
  void serve(const std::shared_ptr<Connection>& conn);

  Broker& broker_;
  std::size_t max_frame_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::mutex mutex_;
  std::vector<std::shared_ptr<Connection>> connections_;
  std::vector<std::jthread> threads_;
  std::jthread acceptor_;
};

/// PubSub over one TCP connection. publish() and subscribe() block until the
/// server acknowledges and rethrow the server's error code on failure.
class TcpBrokerClient : public PubSub {
 public:
  /// Throws IoError when the connection fails.
  explicit TcpBrokerClient(std::uint16_t port, std::size_t max_frame_bytes = std::size_t{64} << 20);
  ~TcpBrokerClient() override;
  TcpBrokerClient(const TcpBrokerClient&) = delete;
  TcpBrokerClient& operator=(const TcpBrokerClient&) = delete;

  void publish(const std::string& topic, const KnowledgePacket& packet) override;
  std::shared_ptr<Subscription> subscribe(const std::string& pattern) override;

 private:
  struct Reply {
    bool ok = true;
    int code = 0;
    std::string message;
  };
  Reply request(const std::string& frame_body, std::uint64_t id);
  void read_loop();

  int fd_ = -1;
  std::size_t max_frame_;
  std::mutex write_mutex_;
  std::mutex state_mutex_;
  std::uint64_t next_id_ = 1;
  std::map<std::uint64_t, std::promise<Reply>> pending_;
  std::map<std::uint64_t, std::shared_ptr<Subscription>> subscriptions_;
  bool broken_ = false;
  std::jthread reader_;
};

}  // namespace daef
