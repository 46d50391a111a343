#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "wildscav/combat.hpp"
#include "wildscav/dynamics.hpp"
#include "wildscav/perception.hpp"
#include "wildscav/rng.hpp"
#include "wildscav/world.hpp"

namespace wildscav {

enum class TaskType : std::uint8_t {
  navigation = 0,
  supply_gather_max = 1,
  supply_gather_target = 2,
  target_capture = 3,
  supply_battle = 4,
};

const char* task_type_name(TaskType t);
TaskType task_type_from_name(const std::string& name);  // throws ConfigError

inline constexpr int kNavigationSteps = 400;
inline constexpr int kGatherSteps = 600;
inline constexpr double kSensingRadius = 30.0;

// Action fields that may be non-zero for a task (columns of the action table).
struct ActionMask {
  bool pickup = false;
  bool shoot = false;
  bool reload = false;
};

ActionMask action_mask_for(TaskType t);

// Raised when an action sets a field outside the task's mask or out of range.
class ActionMaskError : public std::runtime_error {
 public:
  ActionMaskError(const std::string& field, const std::string& message)
      : std::runtime_error(message), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Throws ActionMaskError naming the first offending field.
void check_action(const Action& action, const ActionMask& mask);

struct TaskSpec {
  TaskType task_type = TaskType::navigation;
  std::uint32_t map_id = 103;
  std::optional<int> max_steps;
  int num_agents = 1;
  std::vector<Vec3> start_locations;
  std::optional<Vec3> target_location;
  std::optional<double> timeout_seconds;
  CameraSpec camera;
  std::uint64_t seed = 0;
  WeaponSpec weapon;

  // Steps until forced termination: the task default (or max_steps) capped by the timeout.
  int effective_max_steps(const SimParams& params = {}) const;
  void validate() const;  // throws ConfigError
};

TaskSpec task_spec_from_json(const nlohmann::json& j);
nlohmann::json task_spec_to_json(const TaskSpec& spec);

struct SupplySighting {
  std::uint32_t box_id = 0;
  Vec3 location;
  int quantity = 0;
  bool operator==(const SupplySighting&) const = default;
};

struct EnemySighting {
  std::uint32_t agent_id = 0;
  Vec3 position;
  bool operator==(const EnemySighting&) const = default;
};

// Sensor grid is the depth map (frustum/panorama) or a 1 x beams LIDAR row.
struct Observation {
  std::uint32_t agent_id = 0;
  std::uint32_t step = 0;
  float reward = 0.0f;
  bool done = false;
  bool alive = true;
  MotionState motion = MotionState::on_ground;
  Vec3 position;
  double yaw = 0.0;
  double pitch = 0.0;
  int health = 0;
  int clip_ammo = 0;
  int spare_ammo = 0;
  int supplies = 0;
  std::optional<Vec3> target;
  int sensor_rows = 0;
  int sensor_cols = 0;
  std::vector<float> sensor;
  std::vector<SupplySighting> nearby_supplies;
  std::vector<EnemySighting> visible_enemies;

  bool operator==(const Observation&) const = default;
};

struct EvalMetrics {
  int episode_length = 0;
  bool success = false;
  std::vector<int> supplies_per_agent;  // quantities picked up
  int supplies_total = 0;
  std::vector<int> reward_per_agent;
  std::vector<int> kills;
  std::vector<int> deaths;

  nlohmann::json to_json() const;
};

// Thread-safe cache of maps by id. Lookup order: registered maps, then
// `<dir>/map_NNN.wscv`, then the benchmark config generated with seed 0.
class MapStore {
 public:
  explicit MapStore(std::optional<std::filesystem::path> dir = std::nullopt);

  std::shared_ptr<const WorldMap> get(std::uint32_t map_id);  // throws ConfigError
  void add(std::shared_ptr<const WorldMap> map);

 private:
  std::optional<std::filesystem::path> dir_;
  std::mutex mu_;
  std::map<std::uint32_t, std::shared_ptr<const WorldMap>> maps_;
};

struct StepEvents {
  std::vector<HitEvent> hits;
  std::vector<DropEvent> drops;
  std::vector<std::pair<std::uint32_t, std::vector<std::uint32_t>>> pickups;  // agent, box ids
};

class Episode {
 public:
  // Throws ValidationError for unwalkable explicit start or target points.
  Episode(const TaskSpec& spec, std::shared_ptr<const WorldMap> map, const SimParams& params = {});

  const TaskSpec& spec() const { return spec_; }
  const WorldMap& map() const { return *map_; }
  const SimParams& params() const { return params_; }
  int max_steps() const { return max_steps_; }
  std::uint32_t tick() const { return tick_; }
  bool done() const { return done_; }
  bool success() const { return success_; }
  const std::vector<AgentState>& agents() const { return agents_; }
  const std::vector<SupplyBox>& boxes() const { return boxes_; }
  const std::optional<Vec3>& target() const { return target_; }
  const std::vector<int>& last_rewards() const { return rewards_; }
  const StepEvents& last_events() const { return events_; }
  // High-water supply counts used by the gathering reward.
  const std::vector<int>& collected_supply() const { return collected_supply_; }
  const EvalMetrics& metrics() const { return metrics_; }
  double simulated_seconds() const { return tick_ * params_.dt_seconds(); }

  Observation observe(std::size_t agent) const;
  std::vector<Observation> observations() const;

  // Advances one tick. Throws ActionMaskError for masked fields and
  // std::logic_error once the episode is done.
  const std::vector<int>& step(const std::vector<Action>& actions);

 private:
  Vec3 sample_start(std::size_t index);
  Vec3 sample_outdoor_point(Rng& rng, double min_separation, const std::vector<Vec3>& avoid);
  Vec3 spawn_point();
  std::uint32_t next_box_id() const;

  TaskSpec spec_;
  std::shared_ptr<const WorldMap> map_;
  SimParams params_;
  ActionMask mask_;
  int max_steps_ = 0;
  Rng rng_;
  std::uint32_t tick_ = 0;
  bool done_ = false;
  bool success_ = false;
  std::vector<AgentState> agents_;
  std::vector<SupplyBox> boxes_;
  std::optional<Vec3> target_;
  std::vector<int> rewards_;
  std::vector<int> collected_supply_;
  StepEvents events_;
  EvalMetrics metrics_;
};

// A policy produces one action per agent from the current observations.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual void reset(const Episode& episode) { (void)episode; }
  virtual std::vector<Action> act(const Episode& episode, const std::vector<Observation>& obs) = 0;
};

class NoopPolicy : public Policy {
 public:
  std::vector<Action> act(const Episode& episode, const std::vector<Observation>& obs) override;
};

struct MetricStats {
  double mean = 0.0;
  double stddev = 0.0;
};

struct EvalSummary {
  int episodes = 0;
  MetricStats episode_length;
  MetricStats success;
  MetricStats supplies_total;
  std::vector<EvalMetrics> runs;

  nlohmann::json to_json() const;
};

// Runs `episodes` episodes with seeds spec.seed + i.
EvalSummary evaluate(const TaskSpec& spec, MapStore& maps, Policy& policy, int episodes,
                     const SimParams& params = {});

}  // namespace wildscav
