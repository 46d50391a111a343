#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "wildscav/dynamics.hpp"
#include "wildscav/tasks.hpp"

namespace wildscav {

enum class MsgType : std::uint8_t { control = 1, observation = 2, action = 3, event = 4, error = 5 };

const char* msg_type_name(MsgType t);

// Header: u32 payload length, u8 type, u32 session id, u32 tick (little-endian).
inline constexpr std::size_t kFrameHeaderSize = 13;
inline constexpr std::uint32_t kMaxFramePayload = 16u << 20;

struct Frame {
  MsgType type = MsgType::control;
  std::uint32_t session_id = 0;
  std::uint32_t tick = 0;
  std::vector<std::uint8_t> payload;

  bool operator==(const Frame&) const = default;
};

// Error codes carried by Error frames.
namespace error_code {
inline constexpr int bad_request = 400;
inline constexpr int not_found = 404;
inline constexpr int conflict = 409;
inline constexpr int invalid_action = 422;
inline constexpr int queue_full = 429;
inline constexpr int server_error = 500;
inline constexpr int unavailable = 503;
}  // namespace error_code

class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(int code, const std::string& message) : std::runtime_error(message), code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

std::vector<std::uint8_t> encode_frame(const Frame& frame);
void append_frame(std::vector<std::uint8_t>& out, const Frame& frame);

// Incremental decoder for a byte stream. Throws ProtocolError(400) on an
// unknown message type or an oversized length; the stream is then unusable.
class FrameDecoder {
 public:
  void feed(std::span<const std::uint8_t> bytes);
  std::optional<Frame> next();
  std::size_t buffered() const { return buffer_.size() - offset_; }

 private:
  std::vector<std::uint8_t> buffer_;
  std::size_t offset_ = 0;
};

// --- action record ---------------------------------------------------------------
// 26 bytes: f32 walk_dir, u8 walk_speed, f32 turn_lr_delta, f32 look_ud_delta,
// u8 flags (jump, pickup, shoot, reload from bit 0), then 12 bytes of padding
// whose first four hold the u32 agent id. The rest must be zero.
inline constexpr std::size_t kActionRecordSize = 26;

struct AgentAction {
  std::uint32_t agent_id = 0;
  Action action;
  bool operator==(const AgentAction&) const = default;
};

std::array<std::uint8_t, kActionRecordSize> encode_action(const AgentAction& a);
AgentAction decode_action(std::span<const std::uint8_t> record);  // throws ProtocolError(400)

// Action frame payload: one or more records back to back.
std::vector<std::uint8_t> encode_actions(const std::vector<AgentAction>& actions);
std::vector<AgentAction> decode_actions(std::span<const std::uint8_t> payload);

// --- observation -----------------------------------------------------------------
// Packed little-endian record; positions and angles as f64 so remote and
// in-process runs compare bit for bit, sensor values as f32 row-major.
std::vector<std::uint8_t> encode_observation(const Observation& obs);
Observation decode_observation(std::span<const std::uint8_t> payload);  // throws ProtocolError(400)

// --- JSON payloads -------------------------------------------------------------------
inline constexpr std::size_t kMaxJsonPayload = 1u << 20;
inline constexpr int kMaxJsonDepth = 32;

Frame json_frame(MsgType type, std::uint32_t session_id, std::uint32_t tick, const nlohmann::json& body);
nlohmann::json parse_json_payload(const Frame& frame);  // throws ProtocolError(400)

Frame error_frame(std::uint32_t session_id, std::uint32_t tick, int code, const std::string& message,
                  std::optional<std::uint32_t> expected_tick = std::nullopt);

nlohmann::json hit_event_json(const HitEvent& e);
nlohmann::json drop_event_json(const DropEvent& e);

}  // namespace wildscav
