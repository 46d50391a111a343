#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "wildscav/perception.hpp"
#include "wildscav/tasks.hpp"

namespace wildscav {

enum class CellState : std::uint8_t { unknown = 0, free = 1, blocked = 2 };

struct GridCell {
  int ix = 0;
  int iz = 0;
  auto operator<=>(const GridCell&) const = default;
};

// 600 x 600 x 4 obstacle marker matrix over x, z in [-300, 300), 1 m cells,
// one slice per 3 m storey.
class OccupancyGrid {
 public:
  static constexpr int kCells = 600;
  static constexpr int kStoreys = 4;
  static constexpr double kOrigin = -300.0;
  static constexpr double kCellSize = 1.0;
  static constexpr double kStoreyHeight = 3.0;

  OccupancyGrid();

  void clear();
  static bool in_grid(int ix, int iz) { return ix >= 0 && iz >= 0 && ix < kCells && iz < kCells; }
  static std::optional<GridCell> cell_of(double x, double z);
  static Vec3 cell_center(GridCell c, double y = 0.0);

  CellState at(int ix, int iz, int storey) const;
  CellState at(GridCell c, int storey) const { return at(c.ix, c.iz, storey); }
  // Free marks never overwrite blocked cells.
  void mark_free(GridCell c, int storey);
  void mark_blocked(GridCell c, int storey);

  std::size_t count(CellState state, int storey) const;
  std::uint64_t version() const { return version_; }

 private:
  std::size_t index(int ix, int iz, int storey) const {
    return (static_cast<std::size_t>(storey) * kCells + iz) * kCells + ix;
  }

  std::vector<CellState> cells_;
  std::uint64_t version_ = 0;
};

struct OccupancyParams {
  double eye_height = 1.6;
  double agent_height = 1.8;
  double max_slope_deg = 40.0;
  double borderline_slope_deg = 60.0;  // steeper than max but still jumpable
  double ramp_min_slope_deg = 12.0;
  double max_range = 100.0;
};

// Walkability of the surface sampled by one vertical column of rays.
// `depths[k]` lies along elevation `elevations_deg[k]`; samples at or beyond
// max_range are ignored. Fewer than two valid samples gives false.
bool slope_passable(std::span<const float> depths, std::span<const double> elevations_deg, double max_range,
                    double max_slope_deg = 40.0);

// Largest inclination in degrees between successive valid samples, if any.
std::optional<double> column_slope(std::span<const float> depths, std::span<const double> elevations_deg,
                                   double max_range);

struct RampSighting {
  GridCell cell;
  int storey = 0;
  double ascent_bearing = 0.0;  // degrees
  double surface_y = 0.0;
  auto operator<=>(const RampSighting&) const = default;
};

struct OccupancyUpdate {
  int marked_free = 0;
  int marked_blocked = 0;
  std::vector<GridCell> borderline;  // blocked cells whose slope was close to walkable
  std::vector<RampSighting> ramps;
};

// Cells crossed by a ray before its hit are marked free while the ray stays
// within the body's height band; the hit cell is marked blocked unless the
// surface there is passable.
OccupancyUpdate update_occupancy(OccupancyGrid& grid, const DepthMap& depth, int storey,
                                 const OccupancyParams& params = {});
OccupancyUpdate update_occupancy(OccupancyGrid& grid, const LidarScan& scan, const Pose& pose, int storey,
                                 const OccupancyParams& params = {});

// A* over one storey slice, 8-connected without corner cutting. Unknown
// cells count as free and cells next to blocked ones cost extra; the goal
// is always enterable. Empty when no path.
std::vector<GridCell> plan_path(const OccupancyGrid& grid, int storey, GridCell start, GridCell goal,
                                std::size_t max_expansions = 400000);

// Whether the straight segment between two points crosses a blocked cell.
bool line_blocked(const OccupancyGrid& grid, int storey, const Vec3& from, const Vec3& to);
// Same test for the segment and its two parallels offset by half_width.
bool corridor_blocked(const OccupancyGrid& grid, int storey, const Vec3& from, const Vec3& to, double half_width);

struct BotConfig {
  int stuck_window = 20;
  double stuck_distance = 1.0;
  int checkpoint_interval = 15;
  int reload_threshold = 5;
  double aim_tolerance_deg = 2.0;
  double jump_lookahead = 1.5;
  int walk_speed = 10;
  int lookahead_cells = 10;
  int unreachable_after_stuck = 3;
};

struct KnownSupply {
  std::uint32_t box_id = 0;
  Vec3 location;
  int quantity = 0;
  int stuck_count = 0;
};

struct BotMemory {
  std::vector<Vec3> checkpoints;
  std::vector<GridCell> visited_route;  // upstairs route, for backtracking
  std::deque<Vec3> recent;              // last stuck_window + 1 positions
  std::uint32_t last_progress_tick = 0;
  std::vector<KnownSupply> known_supplies;
  std::set<std::uint32_t> unreachable_boxes;
  std::set<GridCell> borderline;
  std::vector<RampSighting> ramps;
  std::size_t ramps_avoided = 0;  // prefix of `ramps` already marked blocked
  std::optional<Vec3> detour;  // active checkpoint return
  int detour_ticks = 0;
  int no_path_ticks = 0;
  bool jump_next = false;
  std::optional<std::uint32_t> goal_box;
  int ticks = 0;

  void clear() { *this = BotMemory{}; }
};

// Static inputs every policy needs beside the observation.
struct BotContext {
  const WorldMap* map = nullptr;  // terrain heights for storey lookup and bounds
  CameraSpec camera;
  SimParams params;
  BotConfig config;
  ActionMask mask;
};

BotContext make_bot_context(const Episode& episode, const BotConfig& config = {});

// Storey slice index of a feet position: height above the terrain in 3 m
// steps, clamped to [0, 3].
int storey_of(const WorldMap& map, const Vec3& feet);

// Folds an observation into the memory and grid (checkpoints, stuck
// history, occupancy). Policies call this first.
void observe(BotMemory& memory, OccupancyGrid& grid, const Observation& obs, const BotContext& ctx);

Action nav_bot_policy(BotMemory& memory, OccupancyGrid& grid, const Observation& obs, const Vec3& target,
                      const BotContext& ctx);
Action gather_bot_policy(BotMemory& memory, OccupancyGrid& grid, const Observation& obs, const BotContext& ctx);
Action battle_bot_policy(BotMemory& memory, OccupancyGrid& grid, const Observation& obs, const BotContext& ctx);

// Turn and look deltas that point the camera at `point`.
void aim_deltas(const Observation& obs, const Vec3& point, const SimParams& params, float& turn, float& look);

enum class BotKind : std::uint8_t { nav, gather, battle };
BotKind bot_kind_from_name(const std::string& name);  // throws ConfigError

// Policy adapter running one bot per agent.
class BotPolicy : public Policy {
 public:
  explicit BotPolicy(BotKind kind, BotConfig config = {});
  void reset(const Episode& episode) override;
  std::vector<Action> act(const Episode& episode, const std::vector<Observation>& obs) override;

  const OccupancyGrid& grid(std::size_t agent) const { return grids_[agent]; }
  const BotMemory& memory(std::size_t agent) const { return memories_[agent]; }

 private:
  BotKind kind_;
  BotConfig config_;
  std::vector<OccupancyGrid> grids_;
  std::vector<BotMemory> memories_;
};

}  // namespace wildscav
