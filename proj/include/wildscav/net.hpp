#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wildscav/protocol.hpp"
#include "wildscav/session.hpp"

namespace wildscav {

class ConnectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Error frame surfaced on the client side.
class RemoteError : public std::runtime_error {
 public:
  RemoteError(int code, const std::string& message, std::optional<std::uint32_t> expected_tick)
      : std::runtime_error(message), code_(code), expected_tick_(expected_tick) {}
  int code() const { return code_; }
  std::optional<std::uint32_t> expected_tick() const { return expected_tick_; }

 private:
  int code_;
  std::optional<std::uint32_t> expected_tick_;
};

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

// "host:port"; throws std::invalid_argument.
Endpoint parse_endpoint(const std::string& text);

// TCP host: one reader thread per connection, one worker per session. A
// session's frames that arrive while it steps wait in a queue of
// kSessionQueueLimit; beyond that they are refused with Error 429.
inline constexpr std::size_t kSessionQueueLimit = 4;

class TcpServer {
 public:
  TcpServer(MapStore& maps, ServerOptions options = {});
  ~TcpServer();
  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  // Binds and starts accepting; port 0 picks a free port.
  void start(const Endpoint& endpoint);
  std::uint16_t port() const;
  void stop();
  void wait();  // blocks until stop()
  int session_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Blocking frame transport over one TCP connection.
class RemoteClient {
 public:
  explicit RemoteClient(const Endpoint& endpoint);  // throws ConnectionError
  ~RemoteClient();
  RemoteClient(const RemoteClient&) = delete;
  RemoteClient& operator=(const RemoteClient&) = delete;

  void send(const Frame& frame);
  void send_raw(std::span<const std::uint8_t> bytes);
  Frame receive();  // throws ConnectionError on close
  // Returns nullopt when nothing arrives in time.
  std::optional<Frame> receive_for(std::chrono::milliseconds timeout);
  bool peer_closed(std::chrono::milliseconds timeout);

 private:
  bool fill(std::optional<std::chrono::milliseconds> timeout);

  int fd_ = -1;
  FrameDecoder decoder_;
};

struct RemoteStep {
  std::vector<Observation> observations;
  std::vector<float> rewards;
  bool done = false;
  std::vector<nlohmann::json> events;
  std::optional<nlohmann::json> metrics;  // set at episode end
};

// One session driven over a RemoteClient.
class RemoteEpisode {
 public:
  RemoteEpisode(RemoteClient& client, const TaskSpec& spec);  // throws RemoteError

  std::uint32_t session_id() const { return session_id_; }
  std::uint32_t tick() const { return tick_; }
  int num_agents() const { return num_agents_; }
  int max_steps() const { return max_steps_; }
  bool done() const { return done_; }
  const std::vector<Observation>& observations() const { return observations_; }

  // Sends every agent's action in one frame and waits for the next tick.
  RemoteStep step(const std::vector<Action>& actions);
  void reset(std::optional<std::uint64_t> seed = std::nullopt);
  void close();

 private:
  nlohmann::json expect_control(const char* op);
  void read_observations(RemoteStep* step);

  RemoteClient& client_;
  std::uint32_t session_id_ = 0;
  std::uint32_t tick_ = 0;
  int num_agents_ = 0;
  int max_steps_ = 0;
  bool done_ = false;
  std::vector<Observation> observations_;
};

}  // namespace wildscav
