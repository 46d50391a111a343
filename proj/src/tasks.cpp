#include "wildscav/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "wildscav/map_io.hpp"
#include "wildscav/pcg.hpp"

namespace wildscav {

namespace {

constexpr std::uint64_t kEpisodeStream = 0x45504953ull;

Vec3 vec_from_json(const nlohmann::json& j, const char* key) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(std::string(key) + " must be [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

nlohmann::json vec_to_json(const Vec3& v) { return {v.x, v.y, v.z}; }

const char* camera_mode_name(CameraMode m) {
  switch (m) {
    case CameraMode::frustum:
      return "frustum";
    case CameraMode::panorama:
      return "panorama";
    case CameraMode::lidar:
      return "lidar";
  }
  return "frustum";
}

CameraSpec camera_from_json(const nlohmann::json& j) {
  CameraSpec c;
  const std::string mode = j.value("mode", std::string("frustum"));
  if (mode == "frustum") {
    c.mode = CameraMode::frustum;
  } else if (mode == "panorama") {
    c.mode = CameraMode::panorama;
  } else if (mode == "lidar") {
    c.mode = CameraMode::lidar;
  } else {
    throw ConfigError("camera mode must be frustum, panorama or lidar");
  }
  c.width = j.value("width", c.width);
  c.height = j.value("height", c.mode == CameraMode::lidar ? 1 : c.height);
  if (c.mode == CameraMode::lidar && j.contains("beams")) c.width = j.at("beams").get<int>();
  c.horizontal_fov = j.value("horizontal_fov", c.horizontal_fov);
  c.vertical_fov = j.value("vertical_fov", c.vertical_fov);
  c.max_range = j.value("max_range", c.max_range);
  return c;
}

std::vector<float> sensor_values(const WorldMap& map, const Pose& pose, const CameraSpec& camera) {
  return render_depth(map, pose, camera).values;
}

}  // namespace

// --- task metadata ----------------------------------------------------------

const char* task_type_name(TaskType t) {
  switch (t) {
    case TaskType::navigation:
      return "navigation";
    case TaskType::supply_gather_max:
      return "supply_gather_max";
    case TaskType::supply_gather_target:
      return "supply_gather_target";
    case TaskType::target_capture:
      return "target_capture";
    case TaskType::supply_battle:
      return "supply_battle";
  }
  return "navigation";
}

TaskType task_type_from_name(const std::string& name) {
  for (TaskType t : {TaskType::navigation, TaskType::supply_gather_max, TaskType::supply_gather_target,
                     TaskType::target_capture, TaskType::supply_battle})
    if (name == task_type_name(t)) return t;
  throw ConfigError("unknown task_type '" + name + "'");
}

ActionMask action_mask_for(TaskType t) {
  switch (t) {
    case TaskType::navigation:
    case TaskType::target_capture:
      return {false, false, false};
    case TaskType::supply_gather_max:
    case TaskType::supply_gather_target:
      return {true, false, false};
    case TaskType::supply_battle:
      return {true, true, true};
  }
  return {};
}

void check_action(const Action& a, const ActionMask& mask) {
  if (!std::isfinite(a.walk_dir) || a.walk_dir < 0.0f || a.walk_dir > 360.0f)
    throw ActionMaskError("walk_dir", "walk_dir outside [0, 360]");
  if (a.walk_speed > kMaxWalkSpeed) throw ActionMaskError("walk_speed", "walk_speed outside [0, 10]");
  if (!std::isfinite(a.turn_lr_delta)) throw ActionMaskError("turn_lr_delta", "turn_lr_delta not finite");
  if (!std::isfinite(a.look_ud_delta)) throw ActionMaskError("look_ud_delta", "look_ud_delta not finite");
  if (a.pickup && !mask.pickup) throw ActionMaskError("pickup", "action field 'pickup' is masked for this task");
  if (a.shoot && !mask.shoot) throw ActionMaskError("shoot", "action field 'shoot' is masked for this task");
  if (a.reload && !mask.reload) throw ActionMaskError("reload", "action field 'reload' is masked for this task");
}

int TaskSpec::effective_max_steps(const SimParams& params) const {
  int t = max_steps.value_or(
      task_type == TaskType::navigation || task_type == TaskType::target_capture ? kNavigationSteps : kGatherSteps);
  if (timeout_seconds) {
    const int timeout_ticks = static_cast<int>(std::floor(*timeout_seconds / params.dt_seconds() + 1e-9));
    t = std::min(t, timeout_ticks);
  }
  return t;
}

void TaskSpec::validate() const {
  if (num_agents < 1 || num_agents > 64) throw ConfigError("num_agents must lie in [1, 64]");
  if (max_steps && *max_steps < 1) throw ConfigError("max_steps must be >= 1");
  if (timeout_seconds && !(*timeout_seconds > 0.0)) throw ConfigError("timeout must be positive");
  if (!start_locations.empty() && static_cast<int>(start_locations.size()) != num_agents)
    throw ConfigError("start_locations must list one point per agent");
  try {
    camera.validate();
    weapon.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (static_cast<std::size_t>(camera.width) * camera.height > 1u << 20) throw ConfigError("camera too large");
}

TaskSpec task_spec_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw ConfigError("task spec must be a JSON object");
    TaskSpec s;
    s.task_type = task_type_from_name(j.value("task_type", std::string("navigation")));
    s.map_id = j.value("map_id", s.map_id);
    if (j.contains("max_steps") && !j.at("max_steps").is_null()) s.max_steps = j.at("max_steps").get<int>();
    s.num_agents = j.value("num_agents", 1);
    if (j.contains("start_locations")) {
      for (const auto& p : j.at("start_locations")) s.start_locations.push_back(vec_from_json(p, "start_locations"));
    } else if (j.contains("start_location")) {
      s.start_locations.push_back(vec_from_json(j.at("start_location"), "start_location"));
    }
    if (j.contains("target_location") && !j.at("target_location").is_null())
      s.target_location = vec_from_json(j.at("target_location"), "target_location");
    if (j.contains("timeout") && !j.at("timeout").is_null()) s.timeout_seconds = j.at("timeout").get<double>();
    if (j.contains("camera")) s.camera = camera_from_json(j.at("camera"));
    s.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("weapon")) {
      const auto& w = j.at("weapon");
      WeaponSpec& ws = s.weapon;
      ws.clip_size = w.value("clip_size", ws.clip_size);
      ws.starting_spare = w.value("starting_spare", ws.starting_spare);
      ws.damage = w.value("damage", ws.damage);
      ws.fire_cooldown = w.value("fire_cooldown", ws.fire_cooldown);
      ws.reload_duration = w.value("reload_duration", ws.reload_duration);
      ws.hit_range = w.value("hit_range", ws.hit_range);
      ws.drop_fraction = w.value("drop_fraction", ws.drop_fraction);
      ws.respawn_delay = w.value("respawn_delay", ws.respawn_delay);
    }
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad task spec: ") + e.what());
  }
}

nlohmann::json task_spec_to_json(const TaskSpec& s) {
  nlohmann::json j;
  j["task_type"] = task_type_name(s.task_type);
  j["map_id"] = s.map_id;
  j["max_steps"] = s.max_steps ? nlohmann::json(*s.max_steps) : nlohmann::json(nullptr);
  j["num_agents"] = s.num_agents;
  j["start_locations"] = nlohmann::json::array();
  for (const Vec3& p : s.start_locations) j["start_locations"].push_back(vec_to_json(p));
  j["target_location"] = s.target_location ? vec_to_json(*s.target_location) : nlohmann::json(nullptr);
  j["timeout"] = s.timeout_seconds ? nlohmann::json(*s.timeout_seconds) : nlohmann::json(nullptr);
  j["camera"] = {{"mode", camera_mode_name(s.camera.mode)},     {"width", s.camera.width},
                 {"height", s.camera.height},                   {"horizontal_fov", s.camera.horizontal_fov},
                 {"vertical_fov", s.camera.vertical_fov},       {"max_range", s.camera.max_range}};
  j["seed"] = s.seed;
  const WeaponSpec& w = s.weapon;
  j["weapon"] = {{"clip_size", w.clip_size},         {"starting_spare", w.starting_spare},
                 {"damage", w.damage},               {"fire_cooldown", w.fire_cooldown},
                 {"reload_duration", w.reload_duration}, {"hit_range", w.hit_range},
                 {"drop_fraction", w.drop_fraction}, {"respawn_delay", w.respawn_delay}};
  return j;
}

nlohmann::json EvalMetrics::to_json() const {
  return {{"episode_length", episode_length},   {"success", success},
          {"supplies_per_agent", supplies_per_agent}, {"supplies_total", supplies_total},
          {"reward_per_agent", reward_per_agent}, {"kills", kills},
          {"deaths", deaths}};
}

// --- maps ------------------------------------------------------------------------

MapStore::MapStore(std::optional<std::filesystem::path> dir) : dir_(std::move(dir)) {}

std::shared_ptr<const WorldMap> MapStore::get(std::uint32_t map_id) {
  std::lock_guard lock(mu_);
  if (auto it = maps_.find(map_id); it != maps_.end()) return it->second;
  std::shared_ptr<const WorldMap> map;
  if (dir_) {
    char name[32];
    std::snprintf(name, sizeof name, "map_%03u.wscv", map_id);
    const auto path = *dir_ / name;
    if (std::filesystem::exists(path)) map = std::make_shared<const WorldMap>(load_map(path));
  }
  if (!map) map = std::make_shared<const WorldMap>(generate_map(benchmark_config(map_id)));
  maps_[map_id] = map;
  return map;
}

void MapStore::add(std::shared_ptr<const WorldMap> map) {
  if (!map->has_scene()) throw std::invalid_argument("MapStore::add requires a built scene");
  std::lock_guard lock(mu_);
  maps_[map->map_id] = std::move(map);
}

// --- episode ---------------------------------------------------------------------

Episode::Episode(const TaskSpec& spec, std::shared_ptr<const WorldMap> map, const SimParams& params)
    : spec_(spec), map_(std::move(map)), params_(params), rng_(spec.seed, kEpisodeStream) {
  spec_.validate();
  mask_ = action_mask_for(spec_.task_type);
  max_steps_ = spec_.effective_max_steps(params_);
  boxes_ = map_->supply_boxes;
  for (SupplyBox& b : boxes_) b.opened = false;

  const double r = params_.agent_radius;
  std::vector<Vec3> starts;
  for (int i = 0; i < spec_.num_agents; ++i) {
    Vec3 p;
    if (!spec_.start_locations.empty()) {
      const Vec3 given = spec_.start_locations[i];
      if (!in_bounds(*map_, given.x, given.z)) throw ValidationError("start location outside map bounds");
      p = {given.x, snap_to_support(*map_, given.x, given.z, given.y, r), given.z};
      if (!is_walkable(*map_, p, r, params_.agent_height)) throw ValidationError("start location not walkable");
    } else {
      p = sample_start(static_cast<std::size_t>(i));
      for (int attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
        const bool clash = std::any_of(starts.begin(), starts.end(),
                                       [&](const Vec3& q) { return horizontal_distance(p, q) < 1.0; });
        if (!clash) break;
        p = sample_start(static_cast<std::size_t>(i));
      }
    }
    starts.push_back(p);
    AgentState a;
    a.agent_id = static_cast<std::uint32_t>(i);
    a.position = p;
    a.yaw = std::floor(rng_.uniform(0.0, 360.0));
    a.clip_ammo = spec_.weapon.clip_size;
    a.spare_ammo = spec_.weapon.starting_spare;
    agents_.push_back(a);
  }

  if (spec_.target_location) {
    const Vec3 given = *spec_.target_location;
    if (!in_bounds(*map_, given.x, given.z)) throw ValidationError("target location outside map bounds");
    const Vec3 p{given.x, snap_to_support(*map_, given.x, given.z, given.y, r), given.z};
    if (!is_walkable(*map_, p, r, params_.agent_height)) throw ValidationError("target location not walkable");
    target_ = p;
  } else if (spec_.task_type == TaskType::navigation || spec_.task_type == TaskType::target_capture) {
    Rng target_rng = rng_.fork(1);
    target_ = sample_outdoor_point(target_rng, 2.0, starts);
  } else if (spec_.task_type == TaskType::supply_gather_target) {
    if (boxes_.empty()) throw ConfigError("supply_gather_target needs at least one supply box");
    const auto& box = boxes_[static_cast<std::size_t>(rng_.uniform_int(0, static_cast<int>(boxes_.size()) - 1))];
    target_ = box.location.vec();
  }

  const std::size_t n = agents_.size();
  rewards_.assign(n, 0);
  collected_supply_.assign(n, 0);
  metrics_.supplies_per_agent.assign(n, 0);
  metrics_.reward_per_agent.assign(n, 0);
  metrics_.kills.assign(n, 0);
  metrics_.deaths.assign(n, 0);
}

Vec3 Episode::sample_start(std::size_t index) {
  (void)index;
  if (map_->spawn_regions.empty()) return sample_outdoor_point(rng_, 0.0, {});
  for (int attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
    const auto& region = map_->spawn_regions[static_cast<std::size_t>(
        rng_.uniform_int(0, static_cast<int>(map_->spawn_regions.size()) - 1))];
    const Rect rect = region.rect.rect().expanded(-params_.agent_radius - 0.1);
    const double x = rng_.uniform(rect.x0, rect.x1);
    const double z = rng_.uniform(rect.z0, rect.z1);
    const Vec3 p{x, snap_to_support(*map_, x, z, terrain_height_clamped(*map_, x, z), params_.agent_radius), z};
    if (is_walkable(*map_, p, params_.agent_radius, params_.agent_height)) return p;
  }
  throw GenerationError("no walkable start point in spawn regions");
}

Vec3 Episode::spawn_point() { return sample_start(0); }

Vec3 Episode::sample_outdoor_point(Rng& rng, double min_separation, const std::vector<Vec3>& avoid) {
  const double b = map_->bounds - 2.0;
  const double r = params_.agent_radius;
  for (int attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
    const double x = rng.uniform(-b, b);
    const double z = rng.uniform(-b, b);
    if (std::any_of(map_->buildings.begin(), map_->buildings.end(),
                    [&](const Building& bd) { return point_rect_dist2(x, z, bd.footprint.rect()) < 1.0; }))
      continue;
    if (std::any_of(map_->obstacles.begin(), map_->obstacles.end(),
                    [&](const Obstacle& o) { return std::hypot(o.cx - x, o.cz - z) < o.radius + 1.0; }))
      continue;
    const Vec3 p{x, snap_to_support(*map_, x, z, terrain_height_clamped(*map_, x, z), r, 0.3), z};
    if (!is_walkable(*map_, p, r, params_.agent_height)) continue;
    if (std::any_of(avoid.begin(), avoid.end(), [&](const Vec3& q) { return distance(p, q) < min_separation; }))
      continue;
    return p;
  }
  throw GenerationError("no walkable outdoor point found");
}

std::uint32_t Episode::next_box_id() const {
  std::uint32_t id = 0;
  for (const SupplyBox& b : boxes_) id = std::max(id, b.id + 1);
  return id;
}

Observation Episode::observe(std::size_t i) const {
  const AgentState& a = agents_[i];
  Observation o;
  o.agent_id = a.agent_id;
  o.step = tick_;
  o.reward = static_cast<float>(rewards_[i]);
  o.done = done_;
  o.alive = a.alive;
  o.motion = a.motion;
  o.position = a.position;
  o.yaw = a.yaw;
  o.pitch = a.pitch;
  o.health = a.health;
  o.clip_ammo = a.clip_ammo;
  o.spare_ammo = a.spare_ammo;
  o.supplies = a.supplies;
  if (target_ && spec_.task_type != TaskType::supply_gather_max && spec_.task_type != TaskType::supply_battle)
    o.target = target_;
  const Pose pose{a.eye(params_), a.yaw, a.pitch};
  o.sensor_rows = spec_.camera.height;
  o.sensor_cols = spec_.camera.width;
  o.sensor = sensor_values(*map_, pose, spec_.camera);
  const bool supply_task = spec_.task_type == TaskType::supply_gather_max ||
                           spec_.task_type == TaskType::supply_gather_target ||
                           spec_.task_type == TaskType::supply_battle;
  if (supply_task) {
    for (const SupplyBox& b : boxes_)
      if (!b.opened && distance(b.location.vec(), a.position) <= kSensingRadius)
        o.nearby_supplies.push_back({b.id, b.location.vec(), b.quantity});
  }
  if (spec_.task_type == TaskType::supply_battle && a.alive) {
    const Vec3 eye = a.eye(params_);
    for (std::size_t j = 0; j < agents_.size(); ++j) {
      if (j == i || !agents_[j].alive) continue;
      if (!segment_blocked(*map_, eye, agents_[j].center(params_)))
        o.visible_enemies.push_back({agents_[j].agent_id, agents_[j].position});
    }
  }
  return o;
}

std::vector<Observation> Episode::observations() const {
  std::vector<Observation> out;
  out.reserve(agents_.size());
  for (std::size_t i = 0; i < agents_.size(); ++i) out.push_back(observe(i));
  return out;
}

const std::vector<int>& Episode::step(const std::vector<Action>& actions) {
  if (done_) throw std::logic_error("episode finished");
  if (actions.size() != agents_.size())
    throw std::invalid_argument("expected " + std::to_string(agents_.size()) + " actions");
  for (const Action& a : actions) check_action(a, mask_);

  events_ = {};
  const std::int64_t now = tick_;
  const bool combat = spec_.task_type == TaskType::supply_battle;

  // Respawns and reload completion.
  for (AgentState& a : agents_) {
    if (!a.alive) {
      if (--a.respawn_timer <= 0) respawn(a, spawn_point(), spec_.weapon);
    } else {
      finish_reload(a, spec_.weapon, now);
    }
  }

  std::vector<Vec3> intended(agents_.size());
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    ActionResult r = apply_action(agents_[i], actions[i], params_);
    agents_[i] = r.state;
    intended[i] = r.intended;
  }
  for (std::size_t i = 0; i < agents_.size(); ++i)
    agents_[i] = integrate_tick(*map_, agents_[i], intended[i], params_);

  for (std::size_t i = 0; i < agents_.size(); ++i) {
    if (!actions[i].pickup || !agents_[i].alive) continue;
    PickupResult r = resolve_pickup(boxes_, agents_[i], params_);
    agents_[i] = r.state;
    metrics_.supplies_per_agent[i] += r.quantity;
    metrics_.supplies_total += r.quantity;
    if (!r.collected.empty()) events_.pickups.emplace_back(agents_[i].agent_id, r.collected);
  }

  if (combat) {
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      if (!agents_[i].alive) continue;
      if (actions[i].reload && start_reload(agents_[i], spec_.weapon, now) == ReloadOutcome::started) continue;
      if (!actions[i].shoot) continue;
      const ShotResult shot = resolve_shot(*map_, agents_, i, spec_.weapon, params_, now);
      if (!shot.hit) continue;
      events_.hits.push_back(*shot.hit);
      if (!shot.hit->lethal) continue;
      AgentState& victim = agents_[shot.hit->target_id];
      DeathResult death = on_death(victim, spec_.weapon, next_box_id());
      metrics_.kills[i] += 1;
      metrics_.deaths[shot.hit->target_id] += 1;
      if (death.box) {
        const Vec3 loc = death.box->location.vec();
        death.box->location.y = static_cast<float>(
            snap_to_support(*map_, loc.x, loc.z, loc.y, params_.agent_radius, 0.0));
        boxes_.push_back(*death.box);
      }
      events_.drops.push_back(death.drop);
    }
  }

  ++tick_;

  std::fill(rewards_.begin(), rewards_.end(), 0);
  switch (spec_.task_type) {
    case TaskType::navigation:
      for (std::size_t i = 0; i < agents_.size(); ++i) {
        if (distance(agents_[i].position, *target_) <= 1.0) {
          rewards_[i] = 1;
          done_ = true;
          success_ = true;
        }
      }
      break;
    case TaskType::target_capture:
    case TaskType::supply_gather_target:
      for (std::size_t i = 0; i < agents_.size(); ++i) {
        if (distance(agents_[i].position, *target_) <= 1.0) {
          rewards_[i] = 1;
          done_ = true;
          success_ = true;
          break;
        }
      }
      break;
    case TaskType::supply_gather_max:
    case TaskType::supply_battle:
      for (std::size_t i = 0; i < agents_.size(); ++i) {
        if (agents_[i].supplies > collected_supply_[i]) {
          rewards_[i] = 1;
          collected_supply_[i] = agents_[i].supplies;
        }
      }
      break;
  }
  for (std::size_t i = 0; i < agents_.size(); ++i) metrics_.reward_per_agent[i] += rewards_[i];
  if (static_cast<int>(tick_) >= max_steps_) done_ = true;
  metrics_.episode_length = static_cast<int>(tick_);
  metrics_.success = success_;
  return rewards_;
}

// --- evaluation --------------------------------------------------------------------

std::vector<Action> NoopPolicy::act(const Episode& episode, const std::vector<Observation>& obs) {
  (void)episode;
  return std::vector<Action>(obs.size());
}

nlohmann::json EvalSummary::to_json() const {
  auto stats = [](const MetricStats& s) { return nlohmann::json{{"mean", s.mean}, {"stddev", s.stddev}}; };
  nlohmann::json runs_json = nlohmann::json::array();
  for (const EvalMetrics& m : runs) runs_json.push_back(m.to_json());
  return {{"episodes", episodes},
          {"episode_length", stats(episode_length)},
          {"success_rate", stats(success)},
          {"supplies_total", stats(supplies_total)},
          {"runs", runs_json}};
}

EvalSummary evaluate(const TaskSpec& spec, MapStore& maps, Policy& policy, int episodes, const SimParams& params) {
  if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  EvalSummary summary;
  summary.episodes = episodes;
  const auto map = maps.get(spec.map_id);
  for (int e = 0; e < episodes; ++e) {
    TaskSpec s = spec;
    s.seed = spec.seed + static_cast<std::uint64_t>(e);
    Episode episode(s, map, params);
    policy.reset(episode);
    while (!episode.done()) episode.step(policy.act(episode, episode.observations()));
    summary.runs.push_back(episode.metrics());
  }
  auto stats = [&](auto field) {
    MetricStats st;
    for (const EvalMetrics& m : summary.runs) st.mean += field(m);
    st.mean /= episodes;
    for (const EvalMetrics& m : summary.runs) st.stddev += (field(m) - st.mean) * (field(m) - st.mean);
    st.stddev = std::sqrt(st.stddev / episodes);
    return st;
  };
  summary.episode_length = stats([](const EvalMetrics& m) { return double(m.episode_length); });
  summary.success = stats([](const EvalMetrics& m) { return m.success ? 1.0 : 0.0; });
  summary.supplies_total = stats([](const EvalMetrics& m) { return double(m.supplies_total); });
  return summary;
}

}  // namespace wildscav
