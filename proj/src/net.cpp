#include "wildscav/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <list>
#include <map>
#include <mutex>
#include <thread>

namespace wildscav {

namespace {

bool send_all(int fd, const std::uint8_t* data, std::size_t n) {
  while (n > 0) {
    const ssize_t k = ::send(fd, data, n, MSG_NOSIGNAL);
    if (k < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data += k;
    n -= static_cast<std::size_t>(k);
  }
  return true;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

sockaddr_in resolve(const Endpoint& ep) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(ep.port);
  const std::string host = ep.host == "localhost" ? "127.0.0.1" : ep.host;
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || !res)
      throw ConnectionError("cannot resolve host " + ep.host);
    addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
    ::freeaddrinfo(res);
  }
  return addr;
}

}  // namespace

Endpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) throw std::invalid_argument("expected host:port, got '" + text + "'");
  Endpoint ep;
  ep.host = text.substr(0, colon);
  if (ep.host.empty()) ep.host = "0.0.0.0";
  const std::string port = text.substr(colon + 1);
  std::size_t used = 0;
  int value = -1;
  try {
    value = std::stoi(port, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != port.size() || value < 0 || value > 65535) throw std::invalid_argument("bad port in '" + text + "'");
  ep.port = static_cast<std::uint16_t>(value);
  return ep;
}

// --- server ------------------------------------------------------------------------------

struct TcpServer::Impl {
  struct Connection;

  struct Entry {
    std::mutex mu;
    std::condition_variable cv;
    std::unique_ptr<Session> session;
    std::deque<Frame> backlog;
    bool stepping = false;
    bool stop = false;
    bool closed = false;
    std::thread worker;
  };

  struct Connection {
    int fd = -1;
    std::mutex write_mu;
    std::atomic<bool> open{true};
    std::thread reader;
    std::map<std::uint32_t, std::shared_ptr<Entry>> sessions;  // reader thread only
    std::atomic<bool> finished{false};
  };

  MapStore& maps;
  ServerOptions options;
  int listen_fd = -1;
  std::uint16_t bound_port = 0;
  std::atomic<bool> running{false};
  std::atomic<int> sessions{0};
  std::atomic<std::uint32_t> next_id{1};
  std::thread acceptor;
  std::mutex conn_mu;
  std::list<std::unique_ptr<Connection>> connections;
  std::mutex stop_mu;
  std::condition_variable stop_cv;

  Impl(MapStore& m, ServerOptions o) : maps(m), options(o) {}

  void send(Connection& c, const std::vector<Frame>& frames) {
    if (frames.empty() || !c.open) return;
    std::vector<std::uint8_t> bytes;
    for (const Frame& f : frames) append_frame(bytes, f);
    std::lock_guard lock(c.write_mu);
    if (!send_all(c.fd, bytes.data(), bytes.size())) c.open = false;
  }

  // Caller holds e.mu.
  void process(Connection& c, Entry& e, const Frame& frame) {
    Session& s = *e.session;
    if (frame.type == MsgType::action) {
      if (auto err = s.accept_actions(frame)) {
        send(c, {*err});
      } else if (s.phase() == SessionPhase::stepping) {
        e.stepping = true;
        e.cv.notify_one();
      }
      return;
    }
    std::vector<Frame> out;
    try {
      const nlohmann::json body = parse_json_payload(frame);
      const std::string op = body.value("op", std::string());
      if (op == "reset") {
        std::optional<std::uint64_t> seed;
        if (body.contains("seed")) seed = body.at("seed").get<std::uint64_t>();
        s.reset(seed);
        out = s.start_frames("reset_done");
      } else if (op == "close_session") {
        s.close();
        e.closed = true;
        sessions.fetch_sub(1);
        out = {json_frame(MsgType::control, s.id(), frame.tick, {{"op", "session_closed"}})};
      } else {
        out = {error_frame(s.id(), frame.tick, error_code::bad_request, "unknown control op '" + op + "'")};
      }
    } catch (const ProtocolError& ex) {
      out = {error_frame(s.id(), frame.tick, ex.code(), ex.what())};
    } catch (const nlohmann::json::exception& ex) {
      out = {error_frame(s.id(), frame.tick, error_code::bad_request, ex.what())};
    } catch (const std::exception& ex) {
      out = {error_frame(s.id(), frame.tick, error_code::server_error, ex.what())};
    }
    send(c, out);
  }

  void submit(Connection& c, Entry& e, const Frame& frame) {
    std::lock_guard lock(e.mu);
    if (e.closed) {
      send(c, {error_frame(frame.session_id, frame.tick, error_code::not_found, "session closed")});
    } else if (e.stepping || !e.backlog.empty()) {
      if (e.backlog.size() >= kSessionQueueLimit) {
        send(c, {error_frame(frame.session_id, frame.tick, error_code::queue_full, "session queue full")});
      } else {
        e.backlog.push_back(frame);
      }
    } else {
      process(c, e, frame);
    }
  }

  void work(Connection& c, Entry& e) {
    std::unique_lock lock(e.mu);
    for (;;) {
      e.cv.wait(lock, [&] { return e.stepping || e.stop; });
      if (e.stop) return;
      lock.unlock();
      std::vector<Frame> out;
      try {
        out = e.session->run_step();
      } catch (const std::exception& ex) {
        out = {error_frame(e.session->id(), e.session->episode().tick(), error_code::server_error, ex.what())};
      }
      send(c, out);
      lock.lock();
      e.stepping = false;
      while (!e.stepping && !e.closed && !e.backlog.empty()) {
        Frame f = std::move(e.backlog.front());
        e.backlog.pop_front();
        process(c, e, f);
      }
      if (e.closed) e.backlog.clear();
    }
  }

  void stop_entry(Entry& e) {
    {
      std::lock_guard lock(e.mu);
      e.stop = true;
      if (!e.closed) {
        e.closed = true;
        sessions.fetch_sub(1);
      }
    }
    e.cv.notify_one();
    if (e.worker.joinable()) e.worker.join();
  }

  void create(Connection& c, const Frame& frame) {
    nlohmann::json body;
    try {
      body = parse_json_payload(frame);
    } catch (const ProtocolError& ex) {
      send(c, {error_frame(0, frame.tick, ex.code(), ex.what())});
      return;
    }
    if (sessions.fetch_add(1) >= options.max_sessions) {
      sessions.fetch_sub(1);
      send(c, {error_frame(0, frame.tick, error_code::unavailable, "max sessions reached")});
      return;
    }
    CreateResult r = create_session(maps, body, next_id.fetch_add(1), options.params);
    if (r.error) {
      sessions.fetch_sub(1);
      send(c, {*r.error});
      return;
    }
    auto entry = std::make_shared<Entry>();
    entry->session = std::move(r.session);
    const std::uint32_t id = entry->session->id();
    send(c, entry->session->start_frames("session_created"));
    entry->worker = std::thread([this, &c, e = entry.get()] { work(c, *e); });
    c.sessions[id] = std::move(entry);
  }

  void dispatch(Connection& c, const Frame& frame) {
    if (frame.type != MsgType::control && frame.type != MsgType::action) {
      send(c, {error_frame(frame.session_id, frame.tick, error_code::bad_request,
                           std::string("clients may not send ") + msg_type_name(frame.type) + " frames")});
      return;
    }
    if (frame.type == MsgType::control && frame.session_id == 0) {
      create(c, frame);
      return;
    }
    auto it = c.sessions.find(frame.session_id);
    if (it == c.sessions.end()) {
      send(c, {error_frame(frame.session_id, frame.tick, error_code::not_found, "unknown session")});
      return;
    }
    submit(c, *it->second, frame);
    bool closed;
    {
      std::lock_guard lock(it->second->mu);
      closed = it->second->closed && !it->second->stepping;
    }
    if (closed) {
      stop_entry(*it->second);
      c.sessions.erase(it);
    }
  }

  void serve_connection(Connection& c) {
    FrameDecoder decoder;
    std::vector<std::uint8_t> buf(1 << 16);
    while (c.open) {
      const ssize_t n = ::recv(c.fd, buf.data(), buf.size(), 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) break;
      try {
        decoder.feed(std::span<const std::uint8_t>(buf.data(), static_cast<std::size_t>(n)));
        while (auto frame = decoder.next()) dispatch(c, *frame);
      } catch (const ProtocolError& ex) {
        send(c, {error_frame(0, 0, ex.code(), ex.what())});
        break;
      }
    }
    for (auto& [id, e] : c.sessions) stop_entry(*e);
    c.sessions.clear();
    c.open = false;
    ::shutdown(c.fd, SHUT_RDWR);
    c.finished = true;
  }

  void reap() {
    std::lock_guard lock(conn_mu);
    for (auto it = connections.begin(); it != connections.end();) {
      if ((*it)->finished) {
        (*it)->reader.join();
        ::close((*it)->fd);
        it = connections.erase(it);
      } else {
        ++it;
      }
    }
  }

  void accept_loop() {
    while (running) {
      pollfd p{listen_fd, POLLIN, 0};
      const int r = ::poll(&p, 1, 100);
      reap();
      if (r <= 0) continue;
      const int fd = ::accept(listen_fd, nullptr, nullptr);
      if (fd < 0) continue;
      set_nodelay(fd);
      auto conn = std::make_unique<Connection>();
      conn->fd = fd;
      Connection* raw = conn.get();
      std::lock_guard lock(conn_mu);
      connections.push_back(std::move(conn));
      raw->reader = std::thread([this, raw] { serve_connection(*raw); });
    }
  }
};

TcpServer::TcpServer(MapStore& maps, ServerOptions options) : impl_(std::make_unique<Impl>(maps, options)) {}

TcpServer::~TcpServer() { stop(); }

void TcpServer::start(const Endpoint& endpoint) {
  if (impl_->running) throw std::logic_error("server already running");
  const sockaddr_in addr = resolve(endpoint);
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw ConnectionError("socket() failed");
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd, 64) != 0) {
    const std::string why = std::strerror(errno);
    ::close(fd);
    throw ConnectionError("cannot listen on " + endpoint.host + ":" + std::to_string(endpoint.port) + ": " + why);
  }
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
  impl_->listen_fd = fd;
  impl_->bound_port = ntohs(bound.sin_port);
  impl_->running = true;
  impl_->acceptor = std::thread([this] { impl_->accept_loop(); });
}

std::uint16_t TcpServer::port() const { return impl_->bound_port; }

int TcpServer::session_count() const { return impl_->sessions.load(); }

void TcpServer::stop() {
  if (!impl_->running.exchange(false)) return;
  impl_->acceptor.join();
  {
    std::lock_guard lock(impl_->conn_mu);
    for (auto& c : impl_->connections) ::shutdown(c->fd, SHUT_RDWR);
  }
  for (;;) {
    impl_->reap();
    std::lock_guard lock(impl_->conn_mu);
    if (impl_->connections.empty()) break;
    for (auto& c : impl_->connections) ::shutdown(c->fd, SHUT_RDWR);
  }
  ::close(impl_->listen_fd);
  impl_->listen_fd = -1;
  std::lock_guard lock(impl_->stop_mu);
  impl_->stop_cv.notify_all();
}

void TcpServer::wait() {
  std::unique_lock lock(impl_->stop_mu);
  impl_->stop_cv.wait(lock, [&] { return !impl_->running; });
}

// --- client ------------------------------------------------------------------------------

RemoteClient::RemoteClient(const Endpoint& endpoint) {
  const sockaddr_in addr = resolve(endpoint);
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw ConnectionError("socket() failed");
  if (::connect(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
    const std::string why = std::strerror(errno);
    ::close(fd_);
    fd_ = -1;
    throw ConnectionError("cannot connect to " + endpoint.host + ":" + std::to_string(endpoint.port) + ": " + why);
  }
  set_nodelay(fd_);
}

RemoteClient::~RemoteClient() {
  if (fd_ >= 0) ::close(fd_);
}

void RemoteClient::send(const Frame& frame) {
  const auto bytes = encode_frame(frame);
  send_raw(bytes);
}

void RemoteClient::send_raw(std::span<const std::uint8_t> bytes) {
  if (!send_all(fd_, bytes.data(), bytes.size())) throw ConnectionError("send failed");
}

bool RemoteClient::fill(std::optional<std::chrono::milliseconds> timeout) {
  if (timeout) {
    pollfd p{fd_, POLLIN, 0};
    const int r = ::poll(&p, 1, static_cast<int>(timeout->count()));
    if (r == 0) return false;
  }
  std::uint8_t buf[1 << 16];
  ssize_t n;
  do {
    n = ::recv(fd_, buf, sizeof buf, 0);
  } while (n < 0 && errno == EINTR);
  if (n <= 0) throw ConnectionError("connection closed by server");
  decoder_.feed(std::span<const std::uint8_t>(buf, static_cast<std::size_t>(n)));
  return true;
}

Frame RemoteClient::receive() {
  for (;;) {
    if (auto f = decoder_.next()) return *f;
    fill(std::nullopt);
  }
}

std::optional<Frame> RemoteClient::receive_for(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    if (auto f = decoder_.next()) return f;
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0 || !fill(left)) return std::nullopt;
  }
}

bool RemoteClient::peer_closed(std::chrono::milliseconds timeout) {
  try {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      while (decoder_.next()) {
      }
      const auto left =
          std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0 || !fill(left)) return false;
    }
  } catch (const ConnectionError&) {
    return true;
  }
}

// --- remote episode ------------------------------------------------------------------------

namespace {

[[noreturn]] void raise_error(const Frame& f) {
  const nlohmann::json body = parse_json_payload(f);
  std::optional<std::uint32_t> expected;
  if (body.contains("expected_tick")) expected = body.at("expected_tick").get<std::uint32_t>();
  throw RemoteError(body.value("code", 0), body.value("message", std::string("error")), expected);
}

}  // namespace

RemoteEpisode::RemoteEpisode(RemoteClient& client, const TaskSpec& spec) : client_(client) {
  client_.send(json_frame(MsgType::control, 0, 0, {{"op", "create_session"}, {"spec", task_spec_to_json(spec)}}));
  const nlohmann::json ack = expect_control("session_created");
  session_id_ = ack.at("session_id").get<std::uint32_t>();
  num_agents_ = ack.at("num_agents").get<int>();
  max_steps_ = ack.at("max_steps").get<int>();
  read_observations(nullptr);
}

nlohmann::json RemoteEpisode::expect_control(const char* op) {
  for (;;) {
    const Frame f = client_.receive();
    if (f.type == MsgType::error) raise_error(f);
    if (f.type != MsgType::control) continue;
    nlohmann::json body = parse_json_payload(f);
    if (body.value("op", std::string()) == op) return body;
  }
}

void RemoteEpisode::read_observations(RemoteStep* step) {
  observations_.assign(static_cast<std::size_t>(num_agents_), Observation{});
  int got = 0;
  bool finished = false;
  while (got < num_agents_ || (done_ && !finished && step)) {
    const Frame f = client_.receive();
    if (f.session_id != session_id_) continue;
    if (f.type == MsgType::error) raise_error(f);
    if (f.type == MsgType::observation) {
      Observation o = decode_observation(f.payload);
      if (o.agent_id >= observations_.size()) throw ConnectionError("observation for unknown agent");
      done_ = done_ || o.done;
      observations_[o.agent_id] = std::move(o);
      ++got;
    } else if (f.type == MsgType::event && step) {
      nlohmann::json body = parse_json_payload(f);
      if (body.value("event", std::string()) == "episode_end") {
        step->metrics = body.at("metrics");
        finished = true;
      } else {
        step->events.push_back(std::move(body));
      }
    }
  }
  if (!observations_.empty()) tick_ = observations_.front().step;
}

RemoteStep RemoteEpisode::step(const std::vector<Action>& actions) {
  std::vector<AgentAction> records;
  for (std::size_t i = 0; i < actions.size(); ++i) records.push_back({static_cast<std::uint32_t>(i), actions[i]});
  Frame f;
  f.type = MsgType::action;
  f.session_id = session_id_;
  f.tick = tick_;
  f.payload = encode_actions(records);
  client_.send(f);
  RemoteStep out;
  read_observations(&out);
  out.observations = observations_;
  for (const Observation& o : observations_) out.rewards.push_back(o.reward);
  out.done = done_;
  return out;
}

void RemoteEpisode::reset(std::optional<std::uint64_t> seed) {
  nlohmann::json body = {{"op", "reset"}};
  if (seed) body["seed"] = *seed;
  client_.send(json_frame(MsgType::control, session_id_, tick_, body));
  expect_control("reset_done");
  done_ = false;
  read_observations(nullptr);
}

void RemoteEpisode::close() {
  client_.send(json_frame(MsgType::control, session_id_, tick_, {{"op", "close_session"}}));
  expect_control("session_closed");
}

}  // namespace wildscav
