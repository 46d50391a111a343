#include "wildscav/protocol.hpp"

#include <cmath>
#include <cstring>

#include "wildscav/bytes.hpp"

namespace wildscav {

namespace {

struct BadFrame : ProtocolError {
  explicit BadFrame(const std::string& message) : ProtocolError(error_code::bad_request, message) {}
};

using Reader = ByteReader<BadFrame>;

constexpr std::uint8_t kFlagMask = 0x0f;

void put_vec(ByteWriter& w, const Vec3& v) {
  w.put(v.x);
  w.put(v.y);
  w.put(v.z);
}

Vec3 get_vec(Reader& r) {
  Vec3 v;
  v.x = r.get<double>();
  v.y = r.get<double>();
  v.z = r.get<double>();
  return v;
}

bool get_bool(Reader& r) {
  const auto b = r.get<std::uint8_t>();
  if (b > 1) throw BadFrame("boolean byte out of range");
  return b != 0;
}

}  // namespace

const char* msg_type_name(MsgType t) {
  switch (t) {
    case MsgType::control:
      return "control";
    case MsgType::observation:
      return "observation";
    case MsgType::action:
      return "action";
    case MsgType::event:
      return "event";
    case MsgType::error:
      return "error";
  }
  return "unknown";
}

void append_frame(std::vector<std::uint8_t>& out, const Frame& frame) {
  if (frame.payload.size() > kMaxFramePayload) throw std::length_error("frame payload too large");
  const auto len = static_cast<std::uint32_t>(frame.payload.size());
  const auto type = static_cast<std::uint8_t>(frame.type);
  const std::size_t at = out.size();
  out.resize(at + kFrameHeaderSize);
  std::memcpy(out.data() + at, &len, 4);
  std::memcpy(out.data() + at + 4, &type, 1);
  std::memcpy(out.data() + at + 5, &frame.session_id, 4);
  std::memcpy(out.data() + at + 9, &frame.tick, 4);
  out.insert(out.end(), frame.payload.begin(), frame.payload.end());
}

std::vector<std::uint8_t> encode_frame(const Frame& frame) {
  std::vector<std::uint8_t> out;
  out.reserve(kFrameHeaderSize + frame.payload.size());
  append_frame(out, frame);
  return out;
}

void FrameDecoder::feed(std::span<const std::uint8_t> bytes) {
  if (offset_ > 0 && offset_ == buffer_.size()) {
    buffer_.clear();
    offset_ = 0;
  }
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

std::optional<Frame> FrameDecoder::next() {
  const std::size_t avail = buffer_.size() - offset_;
  if (avail < kFrameHeaderSize) return std::nullopt;
  const std::uint8_t* p = buffer_.data() + offset_;
  std::uint32_t len = 0;
  std::memcpy(&len, p, 4);
  const std::uint8_t type = p[4];
  if (type < 1 || type > 5) throw ProtocolError(error_code::bad_request, "unknown msg_type " + std::to_string(type));
  if (len > kMaxFramePayload) throw ProtocolError(error_code::bad_request, "frame length exceeds limit");
  if (avail < kFrameHeaderSize + len) return std::nullopt;
  Frame f;
  f.type = static_cast<MsgType>(type);
  std::memcpy(&f.session_id, p + 5, 4);
  std::memcpy(&f.tick, p + 9, 4);
  f.payload.assign(p + kFrameHeaderSize, p + kFrameHeaderSize + len);
  offset_ += kFrameHeaderSize + len;
  if (offset_ > (1u << 16) && offset_ * 2 > buffer_.size()) {
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(offset_));
    offset_ = 0;
  }
  return f;
}

// --- actions ---------------------------------------------------------------------------

std::array<std::uint8_t, kActionRecordSize> encode_action(const AgentAction& a) {
  std::array<std::uint8_t, kActionRecordSize> out{};
  const Action& act = a.action;
  const std::uint8_t flags = static_cast<std::uint8_t>((act.jump ? 1 : 0) | (act.pickup ? 2 : 0) |
                                                       (act.shoot ? 4 : 0) | (act.reload ? 8 : 0));
  std::memcpy(out.data(), &act.walk_dir, 4);
  out[4] = act.walk_speed;
  std::memcpy(out.data() + 5, &act.turn_lr_delta, 4);
  std::memcpy(out.data() + 9, &act.look_ud_delta, 4);
  out[13] = flags;
  std::memcpy(out.data() + 14, &a.agent_id, 4);
  return out;
}

AgentAction decode_action(std::span<const std::uint8_t> record) {
  if (record.size() != kActionRecordSize) throw BadFrame("action record must be 26 bytes");
  AgentAction a;
  std::memcpy(&a.action.walk_dir, record.data(), 4);
  a.action.walk_speed = record[4];
  std::memcpy(&a.action.turn_lr_delta, record.data() + 5, 4);
  std::memcpy(&a.action.look_ud_delta, record.data() + 9, 4);
  const std::uint8_t flags = record[13];
  if (flags & ~kFlagMask) throw BadFrame("unknown action flag bits");
  a.action.jump = flags & 1;
  a.action.pickup = flags & 2;
  a.action.shoot = flags & 4;
  a.action.reload = flags & 8;
  std::memcpy(&a.agent_id, record.data() + 14, 4);
  for (std::size_t i = 18; i < kActionRecordSize; ++i)
    if (record[i] != 0) throw BadFrame("action padding must be zero");
  return a;
}

std::vector<std::uint8_t> encode_actions(const std::vector<AgentAction>& actions) {
  std::vector<std::uint8_t> out;
  out.reserve(actions.size() * kActionRecordSize);
  for (const AgentAction& a : actions) {
    const auto rec = encode_action(a);
    out.insert(out.end(), rec.begin(), rec.end());
  }
  return out;
}

std::vector<AgentAction> decode_actions(std::span<const std::uint8_t> payload) {
  if (payload.empty() || payload.size() % kActionRecordSize != 0)
    throw BadFrame("action payload must hold whole 26-byte records");
  std::vector<AgentAction> out;
  for (std::size_t at = 0; at < payload.size(); at += kActionRecordSize)
    out.push_back(decode_action(payload.subspan(at, kActionRecordSize)));
  return out;
}

// --- observations ------------------------------------------------------------------------

std::vector<std::uint8_t> encode_observation(const Observation& o) {
  ByteWriter w;
  w.put(o.agent_id);
  w.put(o.step);
  w.put(o.reward);
  w.put(static_cast<std::uint8_t>(o.done));
  w.put(static_cast<std::uint8_t>(o.alive));
  w.put(static_cast<std::uint8_t>(o.motion));
  put_vec(w, o.position);
  w.put(o.yaw);
  w.put(o.pitch);
  w.put(static_cast<std::int32_t>(o.health));
  w.put(static_cast<std::int32_t>(o.clip_ammo));
  w.put(static_cast<std::int32_t>(o.spare_ammo));
  w.put(static_cast<std::int32_t>(o.supplies));
  w.put(static_cast<std::uint8_t>(o.target.has_value()));
  if (o.target) put_vec(w, *o.target);
  w.put(static_cast<std::uint16_t>(o.sensor_rows));
  w.put(static_cast<std::uint16_t>(o.sensor_cols));
  for (float v : o.sensor) w.put(v);
  w.put(static_cast<std::uint16_t>(o.nearby_supplies.size()));
  for (const SupplySighting& s : o.nearby_supplies) {
    w.put(s.box_id);
    put_vec(w, s.location);
    w.put(static_cast<std::int32_t>(s.quantity));
  }
  w.put(static_cast<std::uint16_t>(o.visible_enemies.size()));
  for (const EnemySighting& e : o.visible_enemies) {
    w.put(e.agent_id);
    put_vec(w, e.position);
  }
  return std::move(w.bytes());
}

Observation decode_observation(std::span<const std::uint8_t> payload) {
  Reader r(payload);
  Observation o;
  o.agent_id = r.get<std::uint32_t>();
  o.step = r.get<std::uint32_t>();
  o.reward = r.get<float>();
  o.done = get_bool(r);
  o.alive = get_bool(r);
  const auto motion = r.get<std::uint8_t>();
  if (motion > 1) throw BadFrame("bad motion state");
  o.motion = static_cast<MotionState>(motion);
  o.position = get_vec(r);
  o.yaw = r.get<double>();
  o.pitch = r.get<double>();
  o.health = r.get<std::int32_t>();
  o.clip_ammo = r.get<std::int32_t>();
  o.spare_ammo = r.get<std::int32_t>();
  o.supplies = r.get<std::int32_t>();
  if (get_bool(r)) o.target = get_vec(r);
  o.sensor_rows = r.get<std::uint16_t>();
  o.sensor_cols = r.get<std::uint16_t>();
  const std::size_t n = static_cast<std::size_t>(o.sensor_rows) * o.sensor_cols;
  if (r.remaining() < n * sizeof(float)) throw BadFrame("truncated sensor grid");
  o.sensor.resize(n);
  for (float& v : o.sensor) v = r.get<float>();
  const auto n_supplies = r.get<std::uint16_t>();
  for (int i = 0; i < n_supplies; ++i) {
    SupplySighting s;
    s.box_id = r.get<std::uint32_t>();
    s.location = get_vec(r);
    s.quantity = r.get<std::int32_t>();
    o.nearby_supplies.push_back(s);
  }
  const auto n_enemies = r.get<std::uint16_t>();
  for (int i = 0; i < n_enemies; ++i) {
    EnemySighting e;
    e.agent_id = r.get<std::uint32_t>();
    e.position = get_vec(r);
    o.visible_enemies.push_back(e);
  }
  if (!r.at_end()) throw BadFrame("trailing bytes in observation");
  return o;
}

// --- JSON ----------------------------------------------------------------------------------

Frame json_frame(MsgType type, std::uint32_t session_id, std::uint32_t tick, const nlohmann::json& body) {
  Frame f;
  f.type = type;
  f.session_id = session_id;
  f.tick = tick;
  const std::string text = body.dump();
  f.payload.assign(text.begin(), text.end());
  return f;
}

nlohmann::json parse_json_payload(const Frame& frame) {
  if (frame.payload.size() > kMaxJsonPayload) throw BadFrame("JSON payload too large");
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::uint8_t c : frame.payload) {
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
    } else if (c == '"') {
      in_string = true;
    } else if (c == '[' || c == '{') {
      if (++depth > kMaxJsonDepth) throw BadFrame("JSON nested too deeply");
    } else if (c == ']' || c == '}') {
      --depth;
    }
  }
  auto j = nlohmann::json::parse(frame.payload.begin(), frame.payload.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw BadFrame("payload is not a JSON object");
  return j;
}

Frame error_frame(std::uint32_t session_id, std::uint32_t tick, int code, const std::string& message,
                  std::optional<std::uint32_t> expected_tick) {
  nlohmann::json body = {{"code", code}, {"message", message}};
  if (expected_tick) body["expected_tick"] = *expected_tick;
  return json_frame(MsgType::error, session_id, tick, body);
}

nlohmann::json hit_event_json(const HitEvent& e) {
  return {{"event", "hit"},     {"shooter_id", e.shooter_id}, {"target_id", e.target_id},
          {"damage", e.damage}, {"lethal", e.lethal},         {"tick", e.tick}};
}

nlohmann::json drop_event_json(const DropEvent& e) {
  return {{"event", "drop"},
          {"dead_agent_id", e.dead_agent_id},
          {"dropped_quantity", e.dropped_quantity},
          {"drop_location", {e.drop_location.x, e.drop_location.y, e.drop_location.z}}};
}

}  // namespace wildscav
