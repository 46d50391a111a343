#pragma once

#include <chrono>
#include <cstdint>
#include <vector>

#include "wildscav/geometry.hpp"
#include "wildscav/world.hpp"

namespace wildscav {

struct SimParams {
  std::chrono::milliseconds dt{300};
  double gravity = 9.8;
  double jump_speed = 4.0;
  double agent_radius = 0.5;
  double agent_height = 1.8;
  double step_up_limit = 0.4;
  double max_slope_deg = 40.0;
  double pickup_radius = 1.0;
  double eye_height = 1.6;

  double dt_seconds() const { return std::chrono::duration<double>(dt).count(); }
  WalkerShape walker() const { return {agent_radius, agent_height, step_up_limit, max_slope_deg}; }
};

struct Action {
  float walk_dir = 0.0f;        // degrees, absolute world bearing
  std::uint8_t walk_speed = 0;  // m/s, 0..10
  float turn_lr_delta = 0.0f;   // degrees
  float look_ud_delta = 0.0f;   // degrees
  bool jump = false;
  bool pickup = false;
  bool shoot = false;
  bool reload = false;

  bool operator==(const Action&) const = default;
};

inline constexpr int kMaxWalkSpeed = 10;

enum class MotionState : std::uint8_t { on_ground = 0, in_air = 1 };

struct AgentState {
  std::uint32_t agent_id = 0;
  Vec3 position;  // feet point
  double yaw = 0.0;
  double pitch = 0.0;
  double vertical_velocity = 0.0;
  MotionState motion = MotionState::on_ground;
  int health = 100;
  int clip_ammo = 0;
  int spare_ammo = 0;
  int supplies = 0;
  bool alive = true;
  int respawn_timer = 0;
  // weapon timing, in ticks
  int shots_fired = 0;
  std::int64_t next_fire_tick = 0;
  std::int64_t reload_done_tick = -1;  // -1 when not reloading

  bool reloading() const { return reload_done_tick >= 0; }
  Vec3 eye(const SimParams& p) const { return position + Vec3{0.0, p.eye_height, 0.0}; }
  Vec3 center(const SimParams& p) const { return position + Vec3{0.0, p.agent_height / 2.0, 0.0}; }
  bool operator==(const AgentState&) const = default;
};

struct ActionResult {
  AgentState state;
  Vec3 intended;  // horizontal displacement for this tick
  bool ignored = false;  // dead agent
};

// Horizontal unit vector for an absolute world bearing.
Vec3 walk_direction(double walk_dir_deg);

ActionResult apply_action(const AgentState& state, const Action& action, const SimParams& params);

// Moves the agent by `intended` with collision, stepping and gravity.
AgentState integrate_tick(const WorldMap& map, const AgentState& state, const Vec3& intended,
                          const SimParams& params);

struct PickupResult {
  AgentState state;
  std::vector<std::uint32_t> collected;
  int quantity = 0;
};

// Opens every unopened box within pickup_radius (3D, from the feet point).
PickupResult resolve_pickup(std::vector<SupplyBox>& boxes, const AgentState& state, const SimParams& params);

// Minimum clearance between the agent's collision cylinder and static
// geometry; negative values are penetration depths.
double body_clearance(const WorldMap& map, const AgentState& state, const SimParams& params);

}  // namespace wildscav
