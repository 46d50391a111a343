#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "wildscav/geometry.hpp"

namespace wildscav {

inline constexpr double kStoreyHeight = 3.0;
inline constexpr double kSlabThickness = 0.2;
inline constexpr double kWallThickness = 0.2;
inline constexpr double kDoorWidth = 2.0;
inline constexpr double kDoorHeight = 2.2;
inline constexpr double kWaterLevel = -0.5;
inline constexpr double kMaxTerrainHeight = 20.0;
inline constexpr double kMaxBounds = 300.0;
inline constexpr int kMaxStoreys = 4;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Persistent map data is stored in single precision so that the binary file
// reproduces it exactly; all queries compute in double.
struct Rectf {
  float x0 = 0, z0 = 0, x1 = 0, z1 = 0;
  Rect rect() const { return {x0, z0, x1, z1}; }
  bool operator==(const Rectf&) const = default;
};

struct Box3f {
  float x0 = 0, y0 = 0, z0 = 0, x1 = 0, y1 = 0, z1 = 0;
  Aabb aabb() const { return {{x0, y0, z0}, {x1, y1, z1}}; }
  bool operator==(const Box3f&) const = default;
};

struct Vec3f {
  float x = 0, y = 0, z = 0;
  Vec3 vec() const { return {x, y, z}; }
  bool operator==(const Vec3f&) const = default;
};

struct Heightfield {
  int resolution = 0;  // cells per side
  float cell_size = 0;
  std::vector<float> heights;  // index = iz * resolution + ix; sample at cell center

  float at(int ix, int iz) const;  // indices clamped to the grid
  bool operator==(const Heightfield&) const = default;
};

// Opening through the full wall thickness; `start`/`end` run along the wall's
// long horizontal axis, `bottom`/`top` are absolute elevations.
struct Opening {
  float start = 0, end = 0, bottom = 0, top = 0;
  bool operator==(const Opening&) const = default;
};

struct Wall {
  Box3f box;
  std::vector<Opening> openings;

  int axis() const { return (box.x1 - box.x0) >= (box.z1 - box.z0) ? 0 : 1; }
  bool operator==(const Wall&) const = default;
};

// Stair ramp: a solid wedge over `rect` whose top surface rises linearly
// from y_low to y_high along `axis` (0 = x, 1 = z) in direction `rise_dir`.
struct Ramp {
  Rectf rect;
  std::uint8_t axis = 0;
  std::int8_t rise_dir = 1;
  float y_low = 0, y_high = 0;

  double surface_at(double x, double z) const;
  bool operator==(const Ramp&) const = default;
};

struct Building {
  Rectf footprint;
  float base_y = 0;
  std::uint8_t storeys = 1;
  std::uint8_t template_id = 0;
  std::vector<Wall> walls;
  std::vector<Ramp> stairs;

  double storey_floor(int k) const { return base_y + kStoreyHeight * k; }
  bool operator==(const Building&) const = default;
};

enum class ObstacleKind : std::uint8_t { tree = 0, rock = 1 };

// Vertical cylinder from base_y to base_y + height.
struct Obstacle {
  ObstacleKind kind = ObstacleKind::tree;
  float cx = 0, cz = 0, radius = 0, height = 0, base_y = 0;
  bool operator==(const Obstacle&) const = default;
};

struct SupplyBox {
  std::uint32_t id = 0;
  Vec3f location;
  std::uint16_t quantity = 1;
  bool indoor = false;
  bool opened = false;
  bool operator==(const SupplyBox&) const = default;
};

struct SpawnRegion {
  Rectf rect;
  bool operator==(const SpawnRegion&) const = default;
};

enum class SolidKind : std::uint8_t { box, wedge, cylinder };
enum class SolidRole : std::uint8_t { wall, floor, stair, obstacle };

// Derived collision primitive. Boxes are exact AABBs; wedges and cylinders
// keep their parameters and use `bounds` as a bounding box.
struct Solid {
  SolidKind kind = SolidKind::box;
  SolidRole role = SolidRole::wall;
  int building = -1;
  Aabb bounds;
  // wedge
  int axis = 0;
  int rise_dir = 1;
  double y_low = 0, y_high = 0;
  // cylinder
  double cx = 0, cz = 0, radius = 0;

  double surface_at(double x, double z) const;  // wedge top surface
  bool contains(const Vec3& p) const;
  bool overlaps_disc(double x, double z, double r) const;
  // Highest top of the solid over the part of the disc it covers.
  double max_top_over_disc(double x, double z, double r) const;
  // First entry distance in (eps, t_max]; false when the ray misses.
  bool intersect(const Vec3& origin, const Vec3& dir, double t_max, double& t_hit) const;
};

class Scene;

struct WorldMap {
  std::uint32_t map_id = 0;
  int size = 100;    // meters per side
  int bounds = 50;   // half extent in meters
  Heightfield terrain;
  std::vector<Building> buildings;
  std::vector<Obstacle> obstacles;
  std::vector<SupplyBox> supply_boxes;
  std::vector<SpawnRegion> spawn_regions;
  std::uint8_t rng_algorithm = 0;
  std::uint64_t seed = 0;

  // Rebuilds the derived collision scene; call after editing geometry.
  void build_scene();
  const Scene& scene() const;
  bool has_scene() const { return scene_ != nullptr; }

  bool operator==(const WorldMap& o) const;

 private:
  std::shared_ptr<const Scene> scene_;
};

// Uniform 2D bucket grid over all solids for disc and ray queries.
class Scene {
 public:
  Scene(const WorldMap& map);

  const std::vector<Solid>& solids() const { return solids_; }
  double bucket_size() const { return bucket_size_; }
  int bucket_count() const { return buckets_per_side_; }
  // Upper bound on |grad h| of the bilinear terrain surface.
  double terrain_slope_bound() const { return slope_bound_; }

  template <typename Fn>
  void for_each_near(double x, double z, double r, Fn&& fn) const {
    const int bx0 = bucket_index(x - r), bx1 = bucket_index(x + r);
    const int bz0 = bucket_index(z - r), bz1 = bucket_index(z + r);
    for (int bz = bz0; bz <= bz1; ++bz)
      for (int bx = bx0; bx <= bx1; ++bx)
        for (std::uint32_t id : buckets_[static_cast<std::size_t>(bz) * buckets_per_side_ + bx])
          fn(solids_[id], id);
  }

  // Ray against all solids; returns max_range when nothing is hit.
  double raycast_solids(const Vec3& origin, const Vec3& dir, double max_range) const;

 private:
  int bucket_index(double v) const;

  std::vector<Solid> solids_;
  std::vector<std::vector<std::uint32_t>> buckets_;
  double origin_ = 0;
  double bucket_size_ = 8.0;
  int buckets_per_side_ = 1;
  double slope_bound_ = 0;
};

// Solid boxes of a wall once its openings are cut out.
std::vector<Aabb> wall_solid_boxes(const Wall& wall);
// Floor slabs of storey k (0 = ground floor, storeys = roof) with stairwell holes.
std::vector<Aabb> floor_slab_boxes(const Building& b, int k);

// --- spatial queries -------------------------------------------------------

bool in_bounds(const WorldMap& map, double x, double z);
// Bilinear heightfield interpolation. Throws std::domain_error out of bounds.
double ground_height(const WorldMap& map, double x, double z);
// Same interpolation with coordinates clamped to the grid; never throws.
double terrain_height_clamped(const WorldMap& map, double x, double z);
bool is_lake(const WorldMap& map, double x, double z);

struct WalkerShape {
  double radius = 0.5;
  double height = 1.8;
  double step_up = 0.4;
  double max_slope_deg = 40.0;
};

// Result of probing a vertical cylinder footprint at (x, z).
struct DiscProbe {
  // Highest surface under the disc whose top is <= the probe's y_max.
  double support = -std::numeric_limits<double>::infinity();
  // Lowest bottom among solids under the disc that rise above y_max.
  double obstruction_bottom = std::numeric_limits<double>::infinity();
  bool terrain_too_high = false;
  bool center_over_lake = false;
  bool out_of_bounds = false;
};

DiscProbe probe_disc(const WorldMap& map, double x, double z, double radius, double y_max);

// Upper bound of the terrain surface over a disc (includes a sampling margin).
double terrain_max_over_disc(const WorldMap& map, double x, double z, double radius);

// Lowest solid bottom above `y_from` over the disc (infinity if none).
double ceiling_over_disc(const WorldMap& map, double x, double z, double radius, double y_from);

// True iff p is on a support surface (gap <= 0.1 m), not in a lake and a
// standing cylinder of the given radius/height there is collision free.
bool is_walkable(const WorldMap& map, const Vec3& p, double agent_radius, double agent_height = 1.8);

// First static-geometry hit distance along a unit direction; max_range if none.
double raycast_static(const WorldMap& map, const Vec3& origin, const Vec3& dir, double max_range);

// True iff the open segment (a, b) intersects static geometry. Symmetric.
bool segment_blocked(const WorldMap& map, const Vec3& a, const Vec3& b);

// Highest support at (x, z) at or below y_hint + tolerance, or terrain if none.
double snap_to_support(const WorldMap& map, double x, double z, double y_hint, double radius,
                       double tolerance = 1.0);

// --- reachability ----------------------------------------------------------

struct ReachabilityReport {
  std::size_t reachable_nodes = 0;
  std::vector<std::uint32_t> unreachable_boxes;
  bool all_reachable() const { return unreachable_boxes.empty(); }
};

// Breadth-first search over a 0.5 m lattice of standing positions, starting
// from the center of the first spawn region, using the walker's step/slope
// rules in two half-steps per lattice edge.
// A box counts as reached when a reached node lies within `pickup_radius`.
ReachabilityReport check_supply_reachability(const WorldMap& map, const WalkerShape& shape = {},
                                             double pickup_radius = 1.0);

// Validates every WorldMap invariant; throws ValidationError naming the first
// violation.
void validate_map(const WorldMap& map);

}  // namespace wildscav
