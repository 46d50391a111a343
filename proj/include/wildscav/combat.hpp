#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "wildscav/dynamics.hpp"
#include "wildscav/rng.hpp"
#include "wildscav/world.hpp"

namespace wildscav {

struct WeaponSpec {
  int clip_size = 20;
  int starting_spare = 60;
  int damage = 25;
  int fire_cooldown = 1;    // ticks between shots
  int reload_duration = 3;  // ticks
  double hit_range = 100.0;
  double drop_fraction = 0.5;
  int respawn_delay = 10;  // ticks

  // Throws std::invalid_argument unless every value is positive.
  void validate() const;
  bool operator==(const WeaponSpec&) const = default;
};

struct HitEvent {
  std::uint32_t shooter_id = 0;
  std::uint32_t target_id = 0;
  int damage = 0;
  bool lethal = false;
  std::int64_t tick = 0;
  bool operator==(const HitEvent&) const = default;
};

struct DropEvent {
  std::uint32_t dead_agent_id = 0;
  int dropped_quantity = 0;
  Vec3 drop_location;
  bool operator==(const DropEvent&) const = default;
};

enum class ShotOutcome : std::uint8_t { fired, empty_clip, ignored };

struct ShotResult {
  ShotOutcome outcome = ShotOutcome::ignored;
  std::optional<HitEvent> hit;
};

// Entry distance of a ray into an agent's collision cylinder, if any.
std::optional<double> ray_hits_agent(const Vec3& origin, const Vec3& dir, const AgentState& target,
                                     const SimParams& params);

// Fires the shooter's weapon at `tick`. Ignored while dead, reloading or
// cooling down; an empty clip dry-fires. Damage is applied to the target but
// the death pipeline is left to the caller.
ShotResult resolve_shot(const WorldMap& map, std::vector<AgentState>& agents, std::size_t shooter,
                        const WeaponSpec& spec, const SimParams& params, std::int64_t tick);

enum class ReloadOutcome : std::uint8_t { started, no_ammo, clip_full, busy, dead };

ReloadOutcome start_reload(AgentState& state, const WeaponSpec& spec, std::int64_t tick);

// Completes a pending reload whose duration has elapsed by `tick`.
bool finish_reload(AgentState& state, const WeaponSpec& spec, std::int64_t tick);

struct DeathResult {
  DropEvent drop;
  std::optional<SupplyBox> box;  // quantity >= 1 only
};

// Marks the agent dead, splits its supplies and schedules the respawn. The
// dropped share is floor(supplies * drop_fraction); the agent keeps the rest.
DeathResult on_death(AgentState& state, const WeaponSpec& spec, std::uint32_t next_box_id);

// Fresh body at `position`: full health, full clip, starting spare ammo.
void respawn(AgentState& state, const Vec3& position, const WeaponSpec& spec);

}  // namespace wildscav
