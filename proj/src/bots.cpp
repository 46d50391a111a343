#include "wildscav/bots.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "wildscav/pcg.hpp"

namespace wildscav {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDeg = kPi / 180.0;
constexpr double kBandLow = 0.3;  // above the feet; lower hits are ground clutter
constexpr int kNoPathReset = 8;
constexpr int kBoxTickBudget = 150;
constexpr double kStoreyDetour = 15.0;  // ratio distance charged per storey
constexpr float kClearancePenalty = 2.0f;

double wrap180(double deg) {
  double d = std::fmod(deg + 180.0, 360.0);
  if (d < 0.0) d += 360.0;
  return d - 180.0;
}

double bearing_to(const Vec3& from, const Vec3& to) {
  return normalize_degrees(std::atan2(to.z - from.z, to.x - from.x) / kDeg);
}

float walk_dir_value(double bearing) {
  const float v = static_cast<float>(normalize_degrees(bearing));
  return std::clamp(v, 0.0f, 360.0f);
}

// Samples projected into the vertical plane of the column, ordered by elevation.
struct ColumnPoint {
  double h;  // horizontal distance
  double v;  // height relative to the eye
};

std::vector<ColumnPoint> column_points(std::span<const float> depths, std::span<const double> elevations,
                                       double max_range) {
  std::vector<std::pair<double, ColumnPoint>> pts;
  const std::size_t n = std::min(depths.size(), elevations.size());
  for (std::size_t k = 0; k < n; ++k) {
    const double t = depths[k];
    if (!(t > 0.0) || t >= max_range * (1.0 - 1e-6)) continue;
    const double e = elevations[k] * kDeg;
    pts.push_back({elevations[k], {t * std::cos(e), t * std::sin(e)}});
  }
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<ColumnPoint> out;
  for (const auto& p : pts) out.push_back(p.second);
  return out;
}

double pair_slope(const ColumnPoint& a, const ColumnPoint& b) {
  return std::atan2(std::abs(b.v - a.v), std::abs(b.h - a.h)) / kDeg;
}

// Walks the horizontal projection of a ray through grid cells; `visit`
// receives each cell with its [s0, s1] horizontal-distance interval.
template <typename Visit>
void trace_cells(double x0, double z0, double dx, double dz, double length, Visit&& visit) {
  auto cell = OccupancyGrid::cell_of(x0, z0);
  if (!cell) return;
  int ix = cell->ix, iz = cell->iz;
  const int step_x = dx > 0 ? 1 : -1;
  const int step_z = dz > 0 ? 1 : -1;
  const double inf = std::numeric_limits<double>::infinity();
  const double gx = (x0 - OccupancyGrid::kOrigin) / OccupancyGrid::kCellSize;
  const double gz = (z0 - OccupancyGrid::kOrigin) / OccupancyGrid::kCellSize;
  double t_max_x = dx != 0.0 ? ((dx > 0 ? std::floor(gx) + 1.0 - gx : gx - std::floor(gx)) / std::abs(dx)) : inf;
  double t_max_z = dz != 0.0 ? ((dz > 0 ? std::floor(gz) + 1.0 - gz : gz - std::floor(gz)) / std::abs(dz)) : inf;
  const double t_dx = dx != 0.0 ? 1.0 / std::abs(dx) : inf;
  const double t_dz = dz != 0.0 ? 1.0 / std::abs(dz) : inf;
  double s = 0.0;
  while (OccupancyGrid::in_grid(ix, iz)) {
    const double next = std::min(t_max_x, t_max_z);
    const double end = std::min(next, length);
    if (!visit(GridCell{ix, iz}, s, end)) return;
    if (next >= length) return;
    s = next;
    if (t_max_x < t_max_z) {
      ix += step_x;
      t_max_x += t_dx;
    } else {
      iz += step_z;
      t_max_z += t_dz;
    }
  }
}

struct RayHit {
  Vec3 origin;
  Vec3 dir;
  double t;
  bool valid;       // hit before max_range
  bool passable;    // walkable surface at the hit
  bool borderline;  // steep but close to the limit
  std::optional<double> ramp_bearing;
};

void apply_ray(OccupancyGrid& grid, int storey, const RayHit& ray, double feet_y, const OccupancyParams& params,
               OccupancyUpdate& out) {
  const double dh = std::hypot(ray.dir.x, ray.dir.z);
  if (dh < 1e-6) return;
  const double ux = ray.dir.x / dh, uz = ray.dir.z / dh;
  const double grade = ray.dir.y / dh;
  const double length = ray.t * dh;
  const double band_lo = feet_y + kBandLow;
  const double band_hi = feet_y + params.agent_height;
  // Horizontal interval where the ray height lies in the body band.
  double s_lo = 0.0, s_hi = length;
  if (std::abs(grade) < 1e-12) {
    if (ray.origin.y < band_lo || ray.origin.y > band_hi) s_hi = -1.0;
  } else {
    double a = (band_lo - ray.origin.y) / grade;
    double b = (band_hi - ray.origin.y) / grade;
    if (a > b) std::swap(a, b);
    s_lo = std::max(s_lo, a);
    s_hi = std::min(s_hi, b);
  }
  std::optional<GridCell> hit_cell;
  if (ray.valid) {
    const Vec3 p = ray.origin + ray.dir * ray.t;
    hit_cell = OccupancyGrid::cell_of(p.x + ux * 0.05, p.z + uz * 0.05);
  }
  trace_cells(ray.origin.x, ray.origin.z, ux, uz, length, [&](GridCell c, double s0, double s1) {
    if (hit_cell && c == *hit_cell) return false;
    if (s1 >= s_lo && s0 <= s_hi && grid.at(c, storey) == CellState::unknown) {
      grid.mark_free(c, storey);
      ++out.marked_free;
    }
    return true;
  });
  if (!hit_cell) return;
  const double hit_y = ray.origin.y + ray.dir.y * ray.t;
  if (hit_y > feet_y + params.agent_height + 0.2) return;  // overhead
  if (ray.passable) {
    if (grid.at(*hit_cell, storey) == CellState::unknown) {
      grid.mark_free(*hit_cell, storey);
      ++out.marked_free;
    }
    if (ray.ramp_bearing) out.ramps.push_back({*hit_cell, storey, *ray.ramp_bearing, hit_y});
  } else {
    if (grid.at(*hit_cell, storey) != CellState::blocked) ++out.marked_blocked;
    grid.mark_blocked(*hit_cell, storey);
    if (ray.borderline) out.borderline.push_back(*hit_cell);
  }
}

}  // namespace

// --- grid ---------------------------------------------------------------------------------

OccupancyGrid::OccupancyGrid() : cells_(static_cast<std::size_t>(kCells) * kCells * kStoreys, CellState::unknown) {}

void OccupancyGrid::clear() {
  std::fill(cells_.begin(), cells_.end(), CellState::unknown);
  ++version_;
}

std::optional<GridCell> OccupancyGrid::cell_of(double x, double z) {
  const double fx = std::floor((x - kOrigin) / kCellSize);
  const double fz = std::floor((z - kOrigin) / kCellSize);
  if (!(fx >= 0.0 && fz >= 0.0 && fx < kCells && fz < kCells)) return std::nullopt;
  return GridCell{static_cast<int>(fx), static_cast<int>(fz)};
}

Vec3 OccupancyGrid::cell_center(GridCell c, double y) {
  return {kOrigin + (c.ix + 0.5) * kCellSize, y, kOrigin + (c.iz + 0.5) * kCellSize};
}

CellState OccupancyGrid::at(int ix, int iz, int storey) const {
  if (!in_grid(ix, iz) || storey < 0 || storey >= kStoreys) return CellState::blocked;
  return cells_[index(ix, iz, storey)];
}

void OccupancyGrid::mark_free(GridCell c, int storey) {
  if (!in_grid(c.ix, c.iz) || storey < 0 || storey >= kStoreys) return;
  CellState& s = cells_[index(c.ix, c.iz, storey)];
  if (s == CellState::unknown) {
    s = CellState::free;
    ++version_;
  }
}

void OccupancyGrid::mark_blocked(GridCell c, int storey) {
  if (!in_grid(c.ix, c.iz) || storey < 0 || storey >= kStoreys) return;
  CellState& s = cells_[index(c.ix, c.iz, storey)];
  if (s != CellState::blocked) {
    s = CellState::blocked;
    ++version_;
  }
}

std::size_t OccupancyGrid::count(CellState state, int storey) const {
  const auto begin = cells_.begin() + static_cast<std::ptrdiff_t>(index(0, 0, storey));
  return static_cast<std::size_t>(std::count(begin, begin + kCells * kCells, state));
}

// --- slope --------------------------------------------------------------------------------

std::optional<double> column_slope(std::span<const float> depths, std::span<const double> elevations_deg,
                                   double max_range) {
  const auto pts = column_points(depths, elevations_deg, max_range);
  if (pts.size() < 2) return std::nullopt;
  double worst = 0.0;
  for (std::size_t k = 1; k < pts.size(); ++k) worst = std::max(worst, pair_slope(pts[k - 1], pts[k]));
  return worst;
}

bool slope_passable(std::span<const float> depths, std::span<const double> elevations_deg, double max_range,
                    double max_slope_deg) {
  const auto slope = column_slope(depths, elevations_deg, max_range);
  return slope && *slope <= max_slope_deg;
}

// --- occupancy update --------------------------------------------------------------------------

OccupancyUpdate update_occupancy(OccupancyGrid& grid, const DepthMap& depth, int storey,
                                 const OccupancyParams& params) {
  OccupancyUpdate out;
  const Pose pose = depth.pose;
  const double feet_y = pose.position.y - params.eye_height;
  const double max_range = depth.camera.max_range;
  for (int c = 0; c < depth.cols; ++c) {
    std::vector<Vec3> dirs(static_cast<std::size_t>(depth.rows));
    std::vector<double> elev(static_cast<std::size_t>(depth.rows));
    std::vector<float> col(static_cast<std::size_t>(depth.rows));
    for (int r = 0; r < depth.rows; ++r) {
      dirs[r] = pixel_direction(depth.camera, pose, r, c);
      elev[r] = std::asin(std::clamp(dirs[r].y, -1.0, 1.0)) / kDeg;
      col[r] = depth.at(r, c);
    }
    for (int r = 0; r < depth.rows; ++r) {
      RayHit ray{pose.position, dirs[r], std::min<double>(col[r], max_range), false, false, false, std::nullopt};
      ray.valid = col[r] < max_range * (1.0 - 1e-6);
      if (ray.valid) {
        // Local slope: the gentler of the two neighbouring pairs.
        std::optional<double> local;
        std::optional<double> rise;
        for (int nb : {r - 1, r + 1}) {
          if (nb < 0 || nb >= depth.rows) continue;
          const float pair_d[2] = {col[r], col[nb]};
          const double pair_e[2] = {elev[r], elev[nb]};
          const auto pts = column_points(pair_d, pair_e, max_range);
          if (pts.size() < 2) continue;
          const double s = pair_slope(pts[0], pts[1]);
          if (!local || s < *local) {
            local = s;
            rise = (pts[1].v - pts[0].v) * (pts[1].h - pts[0].h);
          }
        }
        ray.passable = local && *local <= params.max_slope_deg;
        ray.borderline = local && !ray.passable && *local <= params.borderline_slope_deg;
        if (ray.passable && *local >= params.ramp_min_slope_deg && rise && *rise > 0.0) {
          // Stairs run along the building axes.
          const double az = std::atan2(dirs[r].z, dirs[r].x) / kDeg;
          ray.ramp_bearing = normalize_degrees(90.0 * std::round(az / 90.0));
        }
      }
      apply_ray(grid, storey, ray, feet_y, params, out);
    }
  }
  return out;
}

OccupancyUpdate update_occupancy(OccupancyGrid& grid, const LidarScan& scan, const Pose& pose, int storey,
                                 const OccupancyParams& params) {
  OccupancyUpdate out;
  const double feet_y = pose.position.y - params.eye_height;
  for (std::size_t b = 0; b < scan.ranges.size(); ++b) {
    const Vec3 dir = direction_from_angles(scan.beam_azimuths[b], scan.beam_elevation);
    RayHit ray{pose.position, dir, std::min<double>(scan.ranges[b], params.max_range), false, false, false,
               std::nullopt};
    ray.valid = scan.ranges[b] < params.max_range * (1.0 - 1e-6);
    apply_ray(grid, storey, ray, feet_y, params, out);
  }
  return out;
}

// --- planning ------------------------------------------------------------------------------

std::vector<GridCell> plan_path(const OccupancyGrid& grid, int storey, GridCell start, GridCell goal,
                                std::size_t max_expansions) {
  constexpr int n = OccupancyGrid::kCells;
  if (!OccupancyGrid::in_grid(start.ix, start.iz) || !OccupancyGrid::in_grid(goal.ix, goal.iz)) return {};
  if (start == goal) return {start};
  thread_local std::vector<float> g;
  thread_local std::vector<int> parent;
  thread_local std::vector<std::uint32_t> stamp;
  thread_local std::vector<std::uint8_t> closed;
  thread_local std::uint32_t generation = 0;
  if (g.empty()) {
    g.resize(n * n);
    parent.resize(n * n);
    stamp.assign(n * n, 0);
    closed.resize(n * n);
  }
  if (++generation == 0) {
    std::fill(stamp.begin(), stamp.end(), 0);
    generation = 1;
  }
  const auto idx = [](int ix, int iz) { return iz * n + ix; };
  const auto h = [&](int ix, int iz) {
    const double dx = std::abs(ix - goal.ix), dz = std::abs(iz - goal.iz);
    return static_cast<float>(std::max(dx, dz) + (std::sqrt(2.0) - 1.0) * std::min(dx, dz));
  };
  const auto near_blocked = [&](int ix, int iz) {
    for (int dz = -1; dz <= 1; ++dz)
      for (int dx = -1; dx <= 1; ++dx)
        if ((dx || dz) && grid.at(ix + dx, iz + dz, storey) == CellState::blocked) return true;
    return false;
  };
  const auto passable = [&](int ix, int iz) {
    if (ix == goal.ix && iz == goal.iz) return OccupancyGrid::in_grid(ix, iz);
    return grid.at(ix, iz, storey) != CellState::blocked;
  };
  const auto ni_is_goal = [&](int ix, int iz) { return ix == goal.ix && iz == goal.iz; };
  using Node = std::pair<float, int>;
  std::priority_queue<Node, std::vector<Node>, std::greater<>> open;
  const int s = idx(start.ix, start.iz);
  stamp[s] = generation;
  g[s] = 0.0f;
  parent[s] = -1;
  closed[s] = 0;
  open.push({h(start.ix, start.iz), s});
  const int gi = idx(goal.ix, goal.iz);
  std::size_t expansions = 0;
  static const int kDx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  static const int kDz[8] = {0, 0, 1, -1, 1, -1, 1, -1};
  while (!open.empty()) {
    const int cur = open.top().second;
    open.pop();
    if (closed[cur]) continue;
    closed[cur] = 1;
    if (cur == gi) break;
    if (++expansions > max_expansions) return {};
    const int cx = cur % n, cz = cur / n;
    for (int k = 0; k < 8; ++k) {
      const int nx = cx + kDx[k], nz = cz + kDz[k];
      if (!OccupancyGrid::in_grid(nx, nz) || !passable(nx, nz)) continue;
      if (k >= 4 && (!passable(cx + kDx[k], cz) || !passable(cx, cz + kDz[k]))) continue;
      const int ni = idx(nx, nz);
      float cost = g[cur] + (k < 4 ? 1.0f : static_cast<float>(std::sqrt(2.0)));
      if (!ni_is_goal(nx, nz) && near_blocked(nx, nz)) cost += kClearancePenalty;
      if (stamp[ni] != generation) {
        stamp[ni] = generation;
        closed[ni] = 0;
      } else if (closed[ni] || cost >= g[ni]) {
        continue;
      }
      g[ni] = cost;
      parent[ni] = cur;
      open.push({cost + h(nx, nz), ni});
    }
  }
  if (stamp[gi] != generation || !closed[gi]) return {};
  std::vector<GridCell> path;
  for (int c = gi; c >= 0; c = parent[c]) path.push_back({c % n, c / n});
  std::reverse(path.begin(), path.end());
  return path;
}

bool corridor_blocked(const OccupancyGrid& grid, int storey, const Vec3& from, const Vec3& to, double half_width) {
  const double dx = to.x - from.x, dz = to.z - from.z;
  const double len = std::hypot(dx, dz);
  if (len < 1e-9) return false;
  const Vec3 side{-dz / len * half_width, 0.0, dx / len * half_width};
  return line_blocked(grid, storey, from, to) || line_blocked(grid, storey, from + side, to + side) ||
         line_blocked(grid, storey, from - side, to - side);
}

bool line_blocked(const OccupancyGrid& grid, int storey, const Vec3& from, const Vec3& to) {
  const double dx = to.x - from.x, dz = to.z - from.z;
  const double len = std::hypot(dx, dz);
  if (len < 1e-9) return false;
  const auto start = OccupancyGrid::cell_of(from.x, from.z);
  bool blocked = false;
  trace_cells(from.x, from.z, dx / len, dz / len, len, [&](GridCell c, double, double) {
    if (start && c == *start) return true;
    if (grid.at(c, storey) == CellState::blocked) {
      blocked = true;
      return false;
    }
    return true;
  });
  return blocked;
}

// --- bots -----------------------------------------------------------------------------------

BotContext make_bot_context(const Episode& episode, const BotConfig& config) {
  BotContext ctx;
  ctx.map = &episode.map();
  ctx.camera = episode.spec().camera;
  ctx.params = episode.params();
  ctx.config = config;
  ctx.mask = action_mask_for(episode.spec().task_type);
  return ctx;
}

int storey_of(const WorldMap& map, const Vec3& feet) {
  const double above = feet.y - terrain_height_clamped(map, feet.x, feet.z);
  return std::clamp(static_cast<int>(std::floor((above + 1.0) / OccupancyGrid::kStoreyHeight)), 0,
                    OccupancyGrid::kStoreys - 1);
}

namespace {

void mark_outside(OccupancyGrid& grid, double bounds, double radius) {
  const double limit = bounds - radius;
  for (int iz = 0; iz < OccupancyGrid::kCells; ++iz) {
    for (int ix = 0; ix < OccupancyGrid::kCells; ++ix) {
      const Vec3 c = OccupancyGrid::cell_center({ix, iz});
      if (std::abs(c.x) > limit || std::abs(c.z) > limit)
        for (int s = 0; s < OccupancyGrid::kStoreys; ++s) grid.mark_blocked({ix, iz}, s);
    }
  }
}

Action steer(BotMemory& memory, OccupancyGrid& grid, const Observation& obs, const Vec3& goal, bool final_goal,
             const BotContext& ctx) {
  Action a;
  const BotConfig& cfg = ctx.config;
  const int storey = storey_of(*ctx.map, obs.position);
  const auto start = OccupancyGrid::cell_of(obs.position.x, obs.position.z);
  const auto goal_cell = OccupancyGrid::cell_of(goal.x, goal.z);
  const double dist = horizontal_distance(obs.position, goal);
  if (!start || !goal_cell) return a;

  std::optional<double> bearing;
  bool direct = false;
  if (dist < 1.5 || (dist < 3.0 && !line_blocked(grid, storey, obs.position, goal))) {
    bearing = bearing_to(obs.position, goal);
    direct = true;
  } else {
    const auto path = plan_path(grid, storey, *start, *goal_cell);
    if (path.empty()) {
      // Rotate in place; drop the slice's marks when it stays unplannable.
      memory.recent.clear();
      if (++memory.no_path_ticks > kNoPathReset) {
        grid.clear();
        mark_outside(grid, ctx.map->bounds, ctx.params.agent_radius);
        memory.no_path_ticks = 0;
      }
      a.turn_lr_delta = 45.0f;
      a.pickup = ctx.mask.pickup;
      return a;
    }
    std::size_t pick = 1;
    const std::size_t last = std::min(path.size() - 1, static_cast<std::size_t>(cfg.lookahead_cells));
    for (std::size_t k = last; k >= 1; --k) {
      const Vec3 c = OccupancyGrid::cell_center(path[k], obs.position.y);
      if (!corridor_blocked(grid, storey, obs.position, c, ctx.params.agent_radius * 0.9)) {
        pick = k;
        break;
      }
    }
    Vec3 waypoint = OccupancyGrid::cell_center(path[pick], obs.position.y);
    if (pick == path.size() - 1) {
      waypoint = goal;
      direct = true;
    }
    bearing = bearing_to(obs.position, waypoint);
  }

  a.walk_dir = walk_dir_value(*bearing);
  int speed = cfg.walk_speed;
  if (final_goal && direct) {
    const double per_unit = ctx.params.dt_seconds();
    speed = std::clamp(static_cast<int>(std::lround(dist / per_unit)), 0, cfg.walk_speed);
  }
  a.walk_speed = static_cast<std::uint8_t>(speed);
  a.turn_lr_delta = static_cast<float>(wrap180(*bearing - obs.yaw));
  a.look_ud_delta = static_cast<float>(-obs.pitch);

  // Jump over borderline obstacles right ahead.
  const Vec3 dir = walk_direction(*bearing);
  bool jump = memory.jump_next;
  for (double s = 0.5; s <= cfg.jump_lookahead + 1e-9 && !jump; s += 0.5) {
    const auto c = OccupancyGrid::cell_of(obs.position.x + dir.x * s, obs.position.z + dir.z * s);
    if (c && *c != *start && grid.at(*c, storey) == CellState::blocked && memory.borderline.count(*c)) jump = true;
  }
  a.jump = jump && speed > 0;
  memory.jump_next = false;
  return a;
}

void note_motion(BotMemory& memory, const Action& a) {
  if (a.walk_speed == 0) memory.recent.clear();
}

// Stuck rule: if the last stuck_window moving ticks covered less than
// stuck_distance, head back to the last checkpoint. Returns true on firing.
bool check_stuck(BotMemory& memory, OccupancyGrid& grid, const Observation& obs, const BotContext& ctx,
                 std::optional<double> heading) {
  const BotConfig& cfg = ctx.config;
  if (static_cast<int>(memory.recent.size()) <= cfg.stuck_window) return false;
  if (horizontal_distance(memory.recent.front(), memory.recent.back()) >= cfg.stuck_distance) return false;
  memory.recent.clear();
  const int storey = storey_of(*ctx.map, obs.position);
  if (heading) {
    const Vec3 d = walk_direction(*heading);
    const auto here = OccupancyGrid::cell_of(obs.position.x, obs.position.z);
    auto ahead = OccupancyGrid::cell_of(obs.position.x + d.x * 0.9, obs.position.z + d.z * 0.9);
    if (ahead && here && *ahead == *here)
      ahead = OccupancyGrid::cell_of(obs.position.x + d.x * 1.4, obs.position.z + d.z * 1.4);
    if (ahead && here && *ahead != *here) grid.mark_blocked(*ahead, storey);
  }
  memory.detour.reset();
  for (auto it = memory.checkpoints.rbegin(); it != memory.checkpoints.rend(); ++it) {
    if (horizontal_distance(*it, obs.position) >= 2.0) {
      memory.detour = *it;
      break;
    }
  }
  memory.detour_ticks = 0;
  memory.jump_next = true;
  return true;
}

Action follow(BotMemory& memory, OccupancyGrid& grid, const Observation& obs, const Vec3& goal, bool final_goal,
              const BotContext& ctx) {
  if (memory.detour) {
    if (horizontal_distance(*memory.detour, obs.position) < 1.0 || ++memory.detour_ticks > ctx.config.stuck_window) {
      memory.detour.reset();
      memory.detour_ticks = 0;
    }
  }
  Action a = memory.detour ? steer(memory, grid, obs, *memory.detour, false, ctx)
                           : steer(memory, grid, obs, goal, final_goal, ctx);
  note_motion(memory, a);
  return a;
}

Action retrace_route(BotMemory& memory, OccupancyGrid& grid, const Observation& obs, const BotContext& ctx) {
  const Vec3 back = OccupancyGrid::cell_center(memory.visited_route.back(), obs.position.y);
  if (horizontal_distance(back, obs.position) < 0.7 && memory.visited_route.size() > 1) memory.visited_route.pop_back();
  return follow(memory, grid, obs, OccupancyGrid::cell_center(memory.visited_route.back(), obs.position.y), false, ctx);
}

std::optional<GridCell> frontier_goal(const OccupancyGrid& grid, int storey, const Vec3& from) {
  const auto start = OccupancyGrid::cell_of(from.x, from.z);
  if (!start) return std::nullopt;
  constexpr int kRadius = 60;
  const int side = 2 * kRadius + 1;
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(side) * side, 0);
  std::deque<std::pair<GridCell, int>> q;
  const auto mark = [&](GridCell c) {
    const int lx = c.ix - start->ix + kRadius, lz = c.iz - start->iz + kRadius;
    if (lx < 0 || lz < 0 || lx >= side || lz >= side) return false;
    auto& s = seen[static_cast<std::size_t>(lz) * side + lx];
    if (s) return false;
    s = 1;
    return true;
  };
  mark(*start);
  q.push_back({*start, 0});
  static const int kDx[4] = {1, -1, 0, 0};
  static const int kDz[4] = {0, 0, 1, -1};
  while (!q.empty()) {
    const auto [c, d] = q.front();
    q.pop_front();
    if (d >= 4 && grid.at(c, storey) == CellState::unknown) return c;
    for (int k = 0; k < 4; ++k) {
      const GridCell nb{c.ix + kDx[k], c.iz + kDz[k]};
      if (grid.at(nb, storey) == CellState::blocked || !mark(nb)) continue;
      q.push_back({nb, d + 1});
    }
  }
  return std::nullopt;
}

}  // namespace

void observe(BotMemory& memory, OccupancyGrid& grid, const Observation& obs, const BotContext& ctx) {
  if (memory.ticks == 0) mark_outside(grid, ctx.map->bounds, ctx.params.agent_radius);
  if (memory.ticks % ctx.config.checkpoint_interval == 0) memory.checkpoints.push_back(obs.position);
  ++memory.ticks;
  memory.recent.push_back(obs.position);
  while (static_cast<int>(memory.recent.size()) > ctx.config.stuck_window + 1) memory.recent.pop_front();

  const int storey = storey_of(*ctx.map, obs.position);
  const auto here = OccupancyGrid::cell_of(obs.position.x, obs.position.z);
  if (storey > 0 && here && (memory.visited_route.empty() || memory.visited_route.back() != *here))
    memory.visited_route.push_back(*here);
  if (storey == 0) memory.visited_route.clear();

  if (obs.sensor.empty()) return;
  DepthMap depth;
  depth.rows = obs.sensor_rows;
  depth.cols = obs.sensor_cols;
  depth.values = obs.sensor;
  depth.camera = ctx.camera;
  depth.pose = Pose{obs.position + Vec3{0.0, ctx.params.eye_height, 0.0}, obs.yaw, obs.pitch}.normalized();
  OccupancyParams op;
  op.eye_height = ctx.params.eye_height;
  op.agent_height = ctx.params.agent_height;
  op.max_slope_deg = ctx.params.max_slope_deg;
  op.max_range = ctx.camera.max_range;
  OccupancyUpdate up = update_occupancy(grid, depth, storey, op);
  for (const GridCell& c : up.borderline) memory.borderline.insert(c);
  for (const RampSighting& r : up.ramps) {
    const Vec3 c = OccupancyGrid::cell_center(r.cell);
    if (r.surface_y - terrain_height_clamped(*ctx.map, c.x, c.z) < 0.3) continue;  // hillside, not a stair
    const auto dup = std::find_if(memory.ramps.begin(), memory.ramps.end(),
                                  [&](const RampSighting& q) { return q.cell == r.cell && q.storey == r.storey; });
    if (dup == memory.ramps.end() && memory.ramps.size() < 512) memory.ramps.push_back(r);
  }
}

Action nav_bot_policy(BotMemory& memory, OccupancyGrid& grid, const Observation& obs, const Vec3& target,
                      const BotContext& ctx) {
  observe(memory, grid, obs, ctx);
  check_stuck(memory, grid, obs, ctx, bearing_to(obs.position, target));
  const int storey = storey_of(*ctx.map, obs.position);
  const int target_storey = storey_of(*ctx.map, target);
  Action a;
  if (storey > target_storey && !memory.visited_route.empty()) {
    a = retrace_route(memory, grid, obs, ctx);
  } else {
    // Stairs only lead away from a target that is not above us.
    for (; memory.ramps_avoided < memory.ramps.size(); ++memory.ramps_avoided) {
      const RampSighting& r = memory.ramps[memory.ramps_avoided];
      if (r.storey >= target_storey) grid.mark_blocked(r.cell, r.storey);
    }
    a = follow(memory, grid, obs, target, true, ctx);
  }
  a.pickup = false;
  return a;
}

namespace {

void refresh_supplies(BotMemory& memory, const Observation& obs) {
  for (const SupplySighting& s : obs.nearby_supplies) {
    if (memory.unreachable_boxes.count(s.box_id)) continue;
    auto it = std::find_if(memory.known_supplies.begin(), memory.known_supplies.end(),
                           [&](const KnownSupply& k) { return k.box_id == s.box_id; });
    if (it == memory.known_supplies.end()) {
      memory.known_supplies.push_back({s.box_id, s.location, s.quantity, 0});
    } else {
      it->location = s.location;
      it->quantity = s.quantity;
    }
  }
  // Boxes inside the sensing radius that are no longer reported were opened.
  std::erase_if(memory.known_supplies, [&](const KnownSupply& k) {
    if (distance(k.location, obs.position) > kSensingRadius - 0.5) return false;
    return std::none_of(obs.nearby_supplies.begin(), obs.nearby_supplies.end(),
                        [&](const SupplySighting& s) { return s.box_id == k.box_id; });
  });
}

Action gather_step(BotMemory& memory, OccupancyGrid& grid, const Observation& obs, const BotContext& ctx) {
  refresh_supplies(memory, obs);
  const int storey = storey_of(*ctx.map, obs.position);

  // (1) pick up anything within reach.
  for (const KnownSupply& k : memory.known_supplies) {
    if (distance(k.location, obs.position) <= ctx.params.pickup_radius) {
      Action a;
      a.pickup = true;
      memory.recent.clear();
      return a;
    }
  }

  // (2) best quantity / distance ratio.
  const KnownSupply* best = nullptr;
  double best_ratio = -1.0;
  for (const KnownSupply& k : memory.known_supplies) {
    const int floors = std::abs(storey_of(*ctx.map, k.location) - storey);
    const double ratio = k.quantity / std::max(distance(k.location, obs.position) + kStoreyDetour * floors, 0.5);
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = &k;
    }
  }
  if (best && memory.goal_box != best->box_id) {
    memory.goal_box = best->box_id;
    memory.last_progress_tick = static_cast<std::uint32_t>(memory.ticks);
  }

  const double heading = best ? bearing_to(obs.position, best->location) : obs.yaw;
  const bool stuck = check_stuck(memory, grid, obs, ctx, heading);
  if (stuck) {
    // A stair sighting we got stuck on is not a way up.
    std::erase_if(memory.ramps, [&](const RampSighting& r) {
      return r.storey == storey && horizontal_distance(OccupancyGrid::cell_center(r.cell), obs.position) < 3.0;
    });
    memory.ramps_avoided = std::min(memory.ramps_avoided, memory.ramps.size());
  }
  if (stuck && best) {
    auto it = std::find_if(memory.known_supplies.begin(), memory.known_supplies.end(),
                           [&](const KnownSupply& k) { return k.box_id == best->box_id; });
    if (++it->stuck_count >= ctx.config.unreachable_after_stuck) {
      memory.unreachable_boxes.insert(it->box_id);
      memory.known_supplies.erase(it);
      best = nullptr;
    }
  }
  if (best && memory.ticks - static_cast<int>(memory.last_progress_tick) > kBoxTickBudget) {
    memory.unreachable_boxes.insert(best->box_id);
    const std::uint32_t id = best->box_id;
    std::erase_if(memory.known_supplies, [&](const KnownSupply& k) { return k.box_id == id; });
    best = nullptr;
    memory.goal_box.reset();
  }

  Action a;
  if (best) {
    const int box_storey = storey_of(*ctx.map, best->location);
    if (box_storey < storey && !memory.visited_route.empty()) {
      // (3) retrace the upstairs route before heading down.
      a = retrace_route(memory, grid, obs, ctx);
    } else if (box_storey > storey) {
      const RampSighting* ramp = nullptr;
      double best_d = std::numeric_limits<double>::infinity();
      for (const RampSighting& r : memory.ramps) {
        if (r.storey != storey) continue;
        const double d = horizontal_distance(OccupancyGrid::cell_center(r.cell), obs.position);
        if (d < best_d) {
          best_d = d;
          ramp = &r;
        }
      }
      const double above = obs.position.y - terrain_height_clamped(*ctx.map, obs.position.x, obs.position.z);
      const double frac = above - OccupancyGrid::kStoreyHeight * storey;
      if (ramp && best_d < 1.5 && frac > -0.8 && !memory.detour) {
        a.walk_dir = walk_dir_value(ramp->ascent_bearing);
        a.walk_speed = static_cast<std::uint8_t>(ctx.config.walk_speed / 2);
        a.turn_lr_delta = static_cast<float>(wrap180(ramp->ascent_bearing - obs.yaw));
      } else if (ramp) {
        a = follow(memory, grid, obs, OccupancyGrid::cell_center(ramp->cell, obs.position.y), false, ctx);
      } else {
        a = follow(memory, grid, obs, best->location, true, ctx);
      }
    } else {
      a = follow(memory, grid, obs, best->location, true, ctx);
    }
  } else if (storey > 0 && !memory.visited_route.empty()) {
    a = retrace_route(memory, grid, obs, ctx);
  } else if (const auto f = frontier_goal(grid, storey, obs.position)) {
    // (4) explore toward the nearest unknown region.
    a = follow(memory, grid, obs, OccupancyGrid::cell_center(*f, obs.position.y), false, ctx);
  } else {
    a.turn_lr_delta = 45.0f;
  }
  a.pickup = ctx.mask.pickup;
  return a;
}

}  // namespace

Action gather_bot_policy(BotMemory& memory, OccupancyGrid& grid, const Observation& obs, const BotContext& ctx) {
  observe(memory, grid, obs, ctx);
  return gather_step(memory, grid, obs, ctx);
}

void aim_deltas(const Observation& obs, const Vec3& point, const SimParams& params, float& turn, float& look) {
  const Vec3 eye = obs.position + Vec3{0.0, params.eye_height, 0.0};
  const Vec3 v = point - eye;
  const double yaw = std::atan2(v.z, v.x) / kDeg;
  const double pitch = std::clamp(std::atan2(v.y, std::hypot(v.x, v.z)) / kDeg, -89.0, 89.0);
  turn = static_cast<float>(wrap180(yaw - obs.yaw));
  look = static_cast<float>(pitch - obs.pitch);
}

Action battle_bot_policy(BotMemory& memory, OccupancyGrid& grid, const Observation& obs, const BotContext& ctx) {
  observe(memory, grid, obs, ctx);
  const int clip_floor = ctx.config.reload_threshold;
  if (!obs.visible_enemies.empty()) {
    const EnemySighting* nearest = &obs.visible_enemies.front();
    for (const EnemySighting& e : obs.visible_enemies)
      if (distance(e.position, obs.position) < distance(nearest->position, obs.position)) nearest = &e;
    Action a;
    const Vec3 center = nearest->position + Vec3{0.0, ctx.params.agent_height / 2.0, 0.0};
    aim_deltas(obs, center, ctx.params, a.turn_lr_delta, a.look_ud_delta);
    const Vec3 eye = obs.position + Vec3{0.0, ctx.params.eye_height, 0.0};
    const Vec3 aim = direction_from_angles(obs.yaw + a.turn_lr_delta,
                                           std::clamp(obs.pitch + a.look_ud_delta, -89.0, 89.0));
    const Vec3 want = normalized(center - eye);
    const double error = std::acos(std::clamp(dot(aim, want), -1.0, 1.0)) / kDeg;
    if (obs.clip_ammo > 0) {
      a.shoot = ctx.mask.shoot && error < ctx.config.aim_tolerance_deg;
    } else {
      a.reload = ctx.mask.reload && obs.spare_ammo > 0;
    }
    a.pickup = ctx.mask.pickup;
    memory.recent.clear();
    return a;
  }
  if (obs.clip_ammo < clip_floor && obs.spare_ammo > 0 && ctx.mask.reload) {
    Action a = gather_step(memory, grid, obs, ctx);
    a.reload = true;
    a.shoot = false;
    return a;
  }
  return gather_step(memory, grid, obs, ctx);
}

BotKind bot_kind_from_name(const std::string& name) {
  if (name == "nav") return BotKind::nav;
  if (name == "gather") return BotKind::gather;
  if (name == "battle") return BotKind::battle;
  throw ConfigError("unknown bot '" + name + "' (expected nav, gather or battle)");
}

BotPolicy::BotPolicy(BotKind kind, BotConfig config) : kind_(kind), config_(config) {}

void BotPolicy::reset(const Episode& episode) {
  const std::size_t n = episode.agents().size();
  grids_.resize(n);
  for (OccupancyGrid& g : grids_) g.clear();
  memories_.assign(n, BotMemory{});
}

std::vector<Action> BotPolicy::act(const Episode& episode, const std::vector<Observation>& obs) {
  if (grids_.size() != obs.size()) reset(episode);
  const BotContext ctx = make_bot_context(episode, config_);
  std::vector<Action> out(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (!obs[i].alive) continue;
    switch (kind_) {
      case BotKind::nav: {
        const Vec3 target = obs[i].target.value_or(episode.target().value_or(obs[i].position));
        out[i] = nav_bot_policy(memories_[i], grids_[i], obs[i], target, ctx);
        break;
      }
      case BotKind::gather:
        out[i] = gather_bot_policy(memories_[i], grids_[i], obs[i], ctx);
        break;
      case BotKind::battle:
        out[i] = battle_bot_policy(memories_[i], grids_[i], obs[i], ctx);
        break;
    }
  }
  return out;
}

}  // namespace wildscav
