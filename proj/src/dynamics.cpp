#include "wildscav/dynamics.hpp"

#include <cmath>

namespace wildscav {

namespace {

constexpr double kSubstepLength = 0.25;
constexpr int kMinSubsteps = 6;
constexpr double kSnapDown = 0.5;

struct Mover {
  const WorldMap& map;
  const SimParams& p;
  AgentState& s;

  bool blocked(const DiscProbe& probe, double feet_after) const {
    return probe.out_of_bounds || probe.terrain_too_high || probe.center_over_lake ||
           probe.obstruction_bottom < std::max(s.position.y, feet_after) + p.agent_height - 1e-9;
  }

  void move_axis(int axis, double delta) {
    if (delta == 0.0) return;
    const double nx = s.position.x + (axis == 0 ? delta : 0.0);
    const double nz = s.position.z + (axis == 1 ? delta : 0.0);
    if (s.motion == MotionState::on_ground) {
      const double rise = std::min(p.step_up_limit, std::abs(delta) * std::tan(deg_to_rad(p.max_slope_deg)));
      DiscProbe probe = probe_disc(map, nx, nz, p.agent_radius, s.position.y + rise);
      if (!probe.terrain_too_high && rise < p.step_up_limit &&
          (!std::isfinite(probe.support) || blocked(probe, probe.support))) {
        // Terrain obeys the slope rule; solid tops up to step_up_limit are steps.
        probe = probe_disc(map, nx, nz, p.agent_radius, s.position.y + p.step_up_limit);
      }
      if (!std::isfinite(probe.support) || blocked(probe, probe.support)) return;
      s.position.x = nx;
      s.position.z = nz;
      if (probe.support >= s.position.y - kSnapDown) {
        s.position.y = probe.support;
      } else {
        s.motion = MotionState::in_air;
        s.vertical_velocity = 0.0;
      }
    } else {
      const DiscProbe probe = probe_disc(map, nx, nz, p.agent_radius, s.position.y);
      if (blocked(probe, s.position.y)) return;
      s.position.x = nx;
      s.position.z = nz;
    }
  }

  void fall(double sub_dt) {
    if (s.motion != MotionState::in_air) return;
    const double f0 = s.position.y;
    const double v0 = s.vertical_velocity;
    double f1 = f0 + v0 * sub_dt - 0.5 * p.gravity * sub_dt * sub_dt;
    double v1 = v0 - p.gravity * sub_dt;
    if (f1 > f0) {
      const double ceiling = ceiling_over_disc(map, s.position.x, s.position.z, p.agent_radius, f0 + p.agent_height);
      if (f1 + p.agent_height > ceiling) {
        f1 = std::max(f0, ceiling - p.agent_height);
        v1 = 0.0;
      }
    } else {
      const DiscProbe probe = probe_disc(map, s.position.x, s.position.z, p.agent_radius, f0);
      if (std::isfinite(probe.support) && f1 <= probe.support) {
        s.position.y = probe.support;
        s.vertical_velocity = 0.0;
        s.motion = MotionState::on_ground;
        return;
      }
    }
    s.position.y = f1;
    s.vertical_velocity = v1;
  }
};

}  // namespace

Vec3 walk_direction(double walk_dir_deg) {
  const double a = deg_to_rad(walk_dir_deg);
  return {std::cos(a), 0.0, std::sin(a)};
}

ActionResult apply_action(const AgentState& state, const Action& action, const SimParams& params) {
  ActionResult r{state, {}, false};
  if (!state.alive) {
    r.ignored = true;
    return r;
  }
  r.state.yaw = normalize_degrees(state.yaw + action.turn_lr_delta);
  r.state.pitch = std::clamp(state.pitch + static_cast<double>(action.look_ud_delta), -89.0, 89.0);
  const double speed = std::min<int>(action.walk_speed, kMaxWalkSpeed);
  if (speed > 0.0) r.intended = walk_direction(action.walk_dir) * (speed * params.dt_seconds());
  if (action.jump && state.motion == MotionState::on_ground) {
    r.state.vertical_velocity = params.jump_speed;
    r.state.motion = MotionState::in_air;
  }
  return r;
}

AgentState integrate_tick(const WorldMap& map, const AgentState& state, const Vec3& intended,
                          const SimParams& params) {
  AgentState s = state;
  if (!s.alive) return s;
  const double dist = std::hypot(intended.x, intended.z);
  if (dist == 0.0 && s.motion == MotionState::on_ground) return s;
  const int n = std::max(static_cast<int>(std::ceil(dist / kSubstepLength)), kMinSubsteps);
  const double sub_dt = params.dt_seconds() / n;
  const double dx = intended.x / n, dz = intended.z / n;
  Mover mover{map, params, s};
  for (int k = 0; k < n; ++k) {
    mover.move_axis(0, dx);
    mover.move_axis(1, dz);
    mover.fall(sub_dt);
  }
  return s;
}

PickupResult resolve_pickup(std::vector<SupplyBox>& boxes, const AgentState& state, const SimParams& params) {
  PickupResult r{state, {}, 0};
  if (!state.alive) return r;
  for (SupplyBox& box : boxes) {
    if (box.opened) continue;
    if (distance(box.location.vec(), state.position) <= params.pickup_radius) {
      box.opened = true;
      r.collected.push_back(box.id);
      r.quantity += box.quantity;
    }
  }
  r.state.supplies += r.quantity;
  return r;
}

double body_clearance(const WorldMap& map, const AgentState& state, const SimParams& params) {
  const double x = state.position.x, z = state.position.z, feet = state.position.y;
  const double r = params.agent_radius;
  const double head = feet + params.agent_height;
  double clearance = feet - terrain_max_over_disc(map, x, z, r);
  map.scene().for_each_near(x, z, r, [&](const Solid& s, std::uint32_t) {
    if (!s.overlaps_disc(x, z, r)) return;
    const double top = s.max_top_over_disc(x, z, r);
    const double bottom = s.bounds.lo.y;
    // Vertical overlap of [bottom, top] with [feet, head].
    const double overlap = std::min(top, head) - std::max(bottom, feet);
    if (overlap > 0.0) clearance = std::min(clearance, -overlap);
  });
  return clearance;
}

}  // namespace wildscav
