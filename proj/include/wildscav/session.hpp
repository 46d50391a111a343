#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "wildscav/protocol.hpp"
#include "wildscav/tasks.hpp"

namespace wildscav {

enum class SessionPhase : std::uint8_t { awaiting_actions, stepping, closed };

// One game instance behind the wire protocol. Not thread-safe.
class Session {
 public:
  Session(std::uint32_t id, const TaskSpec& spec, std::shared_ptr<const WorldMap> map, const SimParams& params = {});

  std::uint32_t id() const { return id_; }
  const Episode& episode() const { return *episode_; }
  SessionPhase phase() const { return phase_; }
  std::size_t pending_count() const;
  bool ready() const;

  // Slots every record of an Action frame, or none of them. Returns the
  // Error frame on rejection; a full slot set moves the phase to stepping.
  std::optional<Frame> accept_actions(const Frame& frame);

  // Executes the pending tick. Returns hit/drop events, the Observation
  // frames of the new tick and, when done, the episode_end event.
  std::vector<Frame> run_step();

  std::vector<Frame> observation_frames() const;
  // Control ack for create/reset, followed by the initial observations.
  std::vector<Frame> start_frames(const char* op) const;

  // New episode with the given seed (default: next seed in sequence).
  void reset(std::optional<std::uint64_t> seed);
  void close() { phase_ = SessionPhase::closed; }

 private:
  std::uint32_t id_;
  TaskSpec spec_;
  std::shared_ptr<const WorldMap> map_;
  SimParams params_;
  std::unique_ptr<Episode> episode_;
  std::uint64_t resets_ = 0;
  SessionPhase phase_ = SessionPhase::awaiting_actions;
  std::vector<std::optional<Action>> slots_;
};

struct ServerOptions {
  int max_sessions = 64;
  SimParams params;
};

// Parses a create_session body and builds the session. Errors are returned
// as Error frames: 400 bad spec, 404 unknown map, 422 unwalkable points.
struct CreateResult {
  std::unique_ptr<Session> session;
  std::optional<Frame> error;
};
CreateResult create_session(MapStore& maps, const nlohmann::json& body, std::uint32_t id, const SimParams& params);

// Synchronous protocol endpoint: every inbound frame yields the outbound
// frames immediately. Not thread-safe.
class ServerCore {
 public:
  ServerCore(MapStore& maps, ServerOptions options = {});

  // Never throws; failures become Error frames.
  std::vector<Frame> handle(const Frame& frame);

  std::size_t session_count() const { return sessions_.size(); }
  const Session* find(std::uint32_t id) const;

 private:
  std::vector<Frame> handle_control(const Frame& frame);

  MapStore& maps_;
  ServerOptions options_;
  std::uint32_t next_id_ = 1;
  std::map<std::uint32_t, std::unique_ptr<Session>> sessions_;
};

}  // namespace wildscav
