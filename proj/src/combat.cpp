#include "wildscav/combat.hpp"

#include <cmath>
#include <stdexcept>

namespace wildscav {

void WeaponSpec::validate() const {
  if (clip_size <= 0 || starting_spare < 0 || damage <= 0 || fire_cooldown <= 0 || reload_duration <= 0 ||
      !(hit_range > 0.0) || respawn_delay <= 0)
    throw std::invalid_argument("weapon values must be positive");
  if (drop_fraction < 0.0 || drop_fraction > 1.0) throw std::invalid_argument("drop_fraction must lie in [0, 1]");
}

std::optional<double> ray_hits_agent(const Vec3& o, const Vec3& d, const AgentState& target,
                                     const SimParams& params) {
  Solid body;
  body.kind = SolidKind::cylinder;
  body.cx = target.position.x;
  body.cz = target.position.z;
  body.radius = params.agent_radius;
  body.bounds = {target.position - Vec3{params.agent_radius, 0.0, params.agent_radius},
                 target.position + Vec3{params.agent_radius, params.agent_height, params.agent_radius}};
  double t;
  if (body.intersect(o, d, std::numeric_limits<double>::infinity(), t)) return t;
  return std::nullopt;
}

ShotResult resolve_shot(const WorldMap& map, std::vector<AgentState>& agents, std::size_t shooter,
                        const WeaponSpec& spec, const SimParams& params, std::int64_t tick) {
  ShotResult result;
  AgentState& s = agents[shooter];
  if (!s.alive || s.reloading() || tick < s.next_fire_tick) return result;
  if (s.clip_ammo <= 0) {
    result.outcome = ShotOutcome::empty_clip;
    return result;
  }
  result.outcome = ShotOutcome::fired;
  s.clip_ammo -= 1;
  s.shots_fired += 1;
  s.next_fire_tick = tick + spec.fire_cooldown;

  const Vec3 eye = s.eye(params);
  const Vec3 dir = direction_from_angles(s.yaw, s.pitch);
  const double wall = raycast_static(map, eye, dir, spec.hit_range);
  double best = wall;
  std::optional<std::size_t> victim;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (i == shooter || !agents[i].alive) continue;
    const auto t = ray_hits_agent(eye, dir, agents[i], params);
    if (t && *t < best) {
      best = *t;
      victim = i;
    }
  }
  if (!victim || segment_blocked(map, eye, agents[*victim].center(params))) return result;
  AgentState& target = agents[*victim];
  target.health = std::max(0, target.health - spec.damage);
  result.hit = HitEvent{s.agent_id, target.agent_id, spec.damage, target.health <= 0, tick};
  return result;
}

ReloadOutcome start_reload(AgentState& state, const WeaponSpec& spec, std::int64_t tick) {
  if (!state.alive) return ReloadOutcome::dead;
  if (state.reloading()) return ReloadOutcome::busy;
  if (state.clip_ammo >= spec.clip_size) return ReloadOutcome::clip_full;
  if (state.spare_ammo <= 0) return ReloadOutcome::no_ammo;
  state.reload_done_tick = tick + spec.reload_duration;
  return ReloadOutcome::started;
}

bool finish_reload(AgentState& state, const WeaponSpec& spec, std::int64_t tick) {
  if (!state.reloading() || tick < state.reload_done_tick) return false;
  const int moved = std::min(spec.clip_size - state.clip_ammo, state.spare_ammo);
  state.clip_ammo += moved;
  state.spare_ammo -= moved;
  state.reload_done_tick = -1;
  return true;
}

DeathResult on_death(AgentState& state, const WeaponSpec& spec, std::uint32_t next_box_id) {
  DeathResult r;
  const int dropped = static_cast<int>(std::floor(state.supplies * spec.drop_fraction));
  state.supplies -= dropped;
  state.alive = false;
  state.health = 0;
  state.respawn_timer = spec.respawn_delay;
  state.vertical_velocity = 0.0;
  state.reload_done_tick = -1;
  r.drop = {state.agent_id, dropped, state.position};
  if (dropped >= 1) {
    SupplyBox box;
    box.id = next_box_id;
    box.location = {static_cast<float>(state.position.x), static_cast<float>(state.position.y),
                    static_cast<float>(state.position.z)};
    box.quantity = static_cast<std::uint16_t>(std::min(dropped, 65535));
    r.box = box;
  }
  return r;
}

void respawn(AgentState& state, const Vec3& position, const WeaponSpec& spec) {
  state.position = position;
  state.alive = true;
  state.health = 100;
  state.clip_ammo = spec.clip_size;
  state.spare_ammo = spec.starting_spare;
  state.shots_fired = 0;
  state.respawn_timer = 0;
  state.vertical_velocity = 0.0;
  state.motion = MotionState::on_ground;
  state.reload_done_tick = -1;
  state.next_fire_tick = 0;
}

}  // namespace wildscav
