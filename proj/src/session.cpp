#include "wildscav/session.hpp"

#include <algorithm>

#include "wildscav/pcg.hpp"

namespace wildscav {

Session::Session(std::uint32_t id, const TaskSpec& spec, std::shared_ptr<const WorldMap> map,
                 const SimParams& params)
    : id_(id), spec_(spec), map_(std::move(map)), params_(params) {
  episode_ = std::make_unique<Episode>(spec_, map_, params_);
  slots_.assign(static_cast<std::size_t>(spec_.num_agents), std::nullopt);
}

std::size_t Session::pending_count() const {
  return static_cast<std::size_t>(std::count_if(slots_.begin(), slots_.end(), [](const auto& s) { return s.has_value(); }));
}

bool Session::ready() const { return pending_count() == slots_.size(); }

std::optional<Frame> Session::accept_actions(const Frame& frame) {
  const std::uint32_t tick = episode_->tick();
  if (phase_ == SessionPhase::closed) return error_frame(id_, frame.tick, error_code::not_found, "session closed");
  if (episode_->done()) return error_frame(id_, frame.tick, error_code::conflict, "episode finished");
  if (phase_ == SessionPhase::stepping)
    return error_frame(id_, frame.tick, error_code::conflict, "tick already complete", tick + 1);
  if (frame.tick != tick) return error_frame(id_, frame.tick, error_code::conflict, "wrong tick", tick);

  std::vector<AgentAction> records;
  try {
    records = decode_actions(frame.payload);
  } catch (const ProtocolError& e) {
    return error_frame(id_, frame.tick, e.code(), e.what());
  }
  const ActionMask mask = action_mask_for(spec_.task_type);
  std::vector<bool> seen(slots_.size(), false);
  for (const AgentAction& a : records) {
    if (a.agent_id >= slots_.size())
      return error_frame(id_, frame.tick, error_code::bad_request, "agent id " + std::to_string(a.agent_id) + " out of range");
    if (seen[a.agent_id] || slots_[a.agent_id])
      return error_frame(id_, frame.tick, error_code::conflict,
                         "duplicate action for agent " + std::to_string(a.agent_id), tick);
    seen[a.agent_id] = true;
    try {
      check_action(a.action, mask);
    } catch (const ActionMaskError& e) {
      return json_frame(MsgType::error, id_, frame.tick,
                        {{"code", error_code::invalid_action}, {"message", e.what()}, {"field", e.field()}});
    }
  }
  for (const AgentAction& a : records) slots_[a.agent_id] = a.action;
  if (ready()) phase_ = SessionPhase::stepping;
  return std::nullopt;
}

std::vector<Frame> Session::run_step() {
  std::vector<Action> actions;
  actions.reserve(slots_.size());
  for (auto& s : slots_) actions.push_back(*s);
  std::fill(slots_.begin(), slots_.end(), std::nullopt);
  episode_->step(actions);
  phase_ = SessionPhase::awaiting_actions;

  std::vector<Frame> out;
  const std::uint32_t tick = episode_->tick();
  const StepEvents& ev = episode_->last_events();
  for (const HitEvent& h : ev.hits) out.push_back(json_frame(MsgType::event, id_, tick, hit_event_json(h)));
  for (const DropEvent& d : ev.drops) out.push_back(json_frame(MsgType::event, id_, tick, drop_event_json(d)));
  for (Frame& f : observation_frames()) out.push_back(std::move(f));
  if (episode_->done())
    out.push_back(json_frame(MsgType::event, id_, tick,
                             {{"event", "episode_end"}, {"metrics", episode_->metrics().to_json()}}));
  return out;
}

std::vector<Frame> Session::observation_frames() const {
  std::vector<Frame> out;
  const std::uint32_t tick = episode_->tick();
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    Frame f;
    f.type = MsgType::observation;
    f.session_id = id_;
    f.tick = tick;
    f.payload = encode_observation(episode_->observe(i));
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<Frame> Session::start_frames(const char* op) const {
  const ActionMask mask = action_mask_for(spec_.task_type);
  nlohmann::json ack = {{"op", op},
                        {"session_id", id_},
                        {"num_agents", spec_.num_agents},
                        {"max_steps", episode_->max_steps()},
                        {"seed", episode_->spec().seed},
                        {"sensor_shape", {spec_.camera.height, spec_.camera.width}},
                        {"action_mask", {{"pickup", mask.pickup}, {"shoot", mask.shoot}, {"reload", mask.reload}}}};
  std::vector<Frame> out{json_frame(MsgType::control, id_, episode_->tick(), ack)};
  for (Frame& f : observation_frames()) out.push_back(std::move(f));
  return out;
}

void Session::reset(std::optional<std::uint64_t> seed) {
  ++resets_;
  TaskSpec s = spec_;
  s.seed = seed.value_or(spec_.seed + resets_);
  episode_ = std::make_unique<Episode>(s, map_, params_);
  std::fill(slots_.begin(), slots_.end(), std::nullopt);
  phase_ = SessionPhase::awaiting_actions;
}

CreateResult create_session(MapStore& maps, const nlohmann::json& body, std::uint32_t id, const SimParams& params) {
  CreateResult r;
  if (!body.contains("spec") || !body.at("spec").is_object()) {
    r.error = error_frame(0, 0, error_code::bad_request, "create_session needs a spec object");
    return r;
  }
  TaskSpec spec;
  try {
    spec = task_spec_from_json(body.at("spec"));
  } catch (const std::exception& e) {
    r.error = error_frame(0, 0, error_code::bad_request, e.what());
    return r;
  }
  std::shared_ptr<const WorldMap> map;
  try {
    map = maps.get(spec.map_id);
  } catch (const std::exception& e) {
    r.error = error_frame(0, 0, error_code::not_found, std::string("unknown map_id: ") + e.what());
    return r;
  }
  try {
    r.session = std::make_unique<Session>(id, spec, map, params);
  } catch (const ValidationError& e) {
    r.error = error_frame(0, 0, error_code::invalid_action, e.what());
  } catch (const std::exception& e) {
    r.error = error_frame(0, 0, error_code::bad_request, e.what());
  }
  return r;
}

ServerCore::ServerCore(MapStore& maps, ServerOptions options) : maps_(maps), options_(options) {}

const Session* ServerCore::find(std::uint32_t id) const {
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second.get();
}

std::vector<Frame> ServerCore::handle(const Frame& frame) {
  try {
    switch (frame.type) {
      case MsgType::control:
        return handle_control(frame);
      case MsgType::action: {
        auto it = sessions_.find(frame.session_id);
        if (it == sessions_.end())
          return {error_frame(frame.session_id, frame.tick, error_code::not_found, "unknown session")};
        Session& s = *it->second;
        if (auto err = s.accept_actions(frame)) return {*err};
        if (s.phase() == SessionPhase::stepping) return s.run_step();
        return {};
      }
      default:
        return {error_frame(frame.session_id, frame.tick, error_code::bad_request,
                            std::string("clients may not send ") + msg_type_name(frame.type) + " frames")};
    }
  } catch (const ProtocolError& e) {
    return {error_frame(frame.session_id, frame.tick, e.code(), e.what())};
  } catch (const nlohmann::json::exception& e) {
    return {error_frame(frame.session_id, frame.tick, error_code::bad_request, e.what())};
  } catch (const std::exception& e) {
    return {error_frame(frame.session_id, frame.tick, error_code::server_error, e.what())};
  }
}

std::vector<Frame> ServerCore::handle_control(const Frame& frame) {
  const nlohmann::json body = parse_json_payload(frame);
  const std::string op = body.value("op", std::string());
  if (op == "create_session") {
    if (static_cast<int>(sessions_.size()) >= options_.max_sessions)
      return {error_frame(0, frame.tick, error_code::unavailable, "max sessions reached")};
    CreateResult r = create_session(maps_, body, next_id_, options_.params);
    if (r.error) return {*r.error};
    ++next_id_;
    auto out = r.session->start_frames("session_created");
    sessions_[r.session->id()] = std::move(r.session);
    return out;
  }
  auto it = sessions_.find(frame.session_id);
  if (op != "reset" && op != "close_session")
    return {error_frame(frame.session_id, frame.tick, error_code::bad_request, "unknown control op '" + op + "'")};
  if (it == sessions_.end())
    return {error_frame(frame.session_id, frame.tick, error_code::not_found, "unknown session")};
  if (op == "reset") {
    std::optional<std::uint64_t> seed;
    if (body.contains("seed")) seed = body.at("seed").get<std::uint64_t>();
    it->second->reset(seed);
    return it->second->start_frames("reset_done");
  }
  sessions_.erase(it);
  return {json_frame(MsgType::control, frame.session_id, frame.tick, {{"op", "session_closed"}})};
}

}  // namespace wildscav
