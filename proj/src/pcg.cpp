#include "wildscav/pcg.hpp"

#include <algorithm>
#include <cmath>

namespace wildscav {

namespace {

constexpr double kCellSize = 2.0;
constexpr double kBlendWidth = 6.0;
constexpr double kMaxPadDeviation = 1.5;
constexpr double kDryLevel = -0.3;
// Stored heights are floats; wet tests leave room for the rounding of kDryLevel.
constexpr double kWetLevel = -0.35;
constexpr double kSpawnHalf = 4.0;

enum Stream : std::uint64_t { kTerrain = 1, kBuildings, kSpawns, kObstacles, kSupplies };

double cell_center(int i, double bounds) { return -bounds + kCellSize * (i + 0.5); }

Heightfield make_terrain(const PcgConfig& cfg, Rng rng) {
  const double b = cfg.size / 2.0;
  Heightfield hf;
  hf.resolution = static_cast<int>(cfg.size / kCellSize);
  hf.cell_size = static_cast<float>(kCellSize);
  const int n = hf.resolution;

  struct Bump {
    double x, z, sigma, amp;
  };
  std::vector<Bump> bumps;
  const int n_bumps = std::max(4, cfg.size / 20);
  const double amp_scale = std::sqrt(cfg.size / 100.0);
  for (int i = 0; i < n_bumps; ++i) {
    Bump bump;
    bump.x = rng.uniform(-b, b);
    bump.z = rng.uniform(-b, b);
    bump.sigma = rng.uniform(0.06, 0.16) * cfg.size;
    bump.amp = rng.uniform(-1.5, 2.5) * amp_scale;
    bumps.push_back(bump);
  }
  std::vector<Bump> lakes;
  const int lake_count = cfg.lake_count >= 0 ? cfg.lake_count : (cfg.size >= 500 ? 1 : 0);
  for (int i = 0; i < lake_count; ++i) {
    const double r = rng.uniform(0.35, 0.75) * b;
    const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
    lakes.push_back({r * std::cos(a), r * std::sin(a), rng.uniform(8.0, 14.0), 3.0});
  }

  hf.heights.resize(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double x = cell_center(i, b), z = cell_center(j, b);
      double h = 0.0;
      for (const Bump& bump : bumps) {
        const double d2 = (x - bump.x) * (x - bump.x) + (z - bump.z) * (z - bump.z);
        h += bump.amp * std::exp(-d2 / (2.0 * bump.sigma * bump.sigma));
      }
      h = std::clamp(h, kDryLevel, 15.0);
      for (const Bump& lake : lakes) {
        const double d2 = (x - lake.x) * (x - lake.x) + (z - lake.z) * (z - lake.z);
        h -= lake.amp * std::exp(-d2 / (2.0 * lake.sigma * lake.sigma));
      }
      hf.heights[static_cast<std::size_t>(j) * n + i] = static_cast<float>(h);
    }
  }
  return hf;
}

struct Pad {
  Rect footprint;
  double base;
};

// Cells whose centers lie within `margin` of the rectangle.
template <typename Fn>
void for_cells_near(const Heightfield& hf, double bounds, const Rect& r, double margin, Fn&& fn) {
  const int n = hf.resolution;
  const int i0 = std::max(0, static_cast<int>(std::floor((r.x0 - margin + bounds) / kCellSize - 0.5)));
  const int i1 = std::min(n - 1, static_cast<int>(std::ceil((r.x1 + margin + bounds) / kCellSize - 0.5)));
  const int j0 = std::max(0, static_cast<int>(std::floor((r.z0 - margin + bounds) / kCellSize - 0.5)));
  const int j1 = std::min(n - 1, static_cast<int>(std::ceil((r.z1 + margin + bounds) / kCellSize - 0.5)));
  for (int j = j0; j <= j1; ++j) {
    for (int i = i0; i <= i1; ++i) {
      const double d = std::sqrt(point_rect_dist2(cell_center(i, bounds), cell_center(j, bounds), r));
      if (d <= margin) fn(i, j, d);
    }
  }
}

void place_buildings(const PcgConfig& cfg, WorldMap& map, Rng rng) {
  const double b = map.bounds;
  const double min_gap = cfg.house_density == HouseDensity::low ? 8.0 : 2.0;
  const double neighbour_reach = 2.0 * (kCellSize + kBlendWidth);
  const double pad_reach = kCellSize + kBlendWidth;
  std::vector<Pad> pads;
  std::vector<bool> locked(map.terrain.heights.size(), false);
  const int n = map.terrain.resolution;
  auto height = [&](int i, int j) -> float& { return map.terrain.heights[static_cast<std::size_t>(j) * n + i]; };

  for (int house = 0; house < cfg.house_count; ++house) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxPlacementAttempts && !placed; ++attempt) {
      const int storeys = static_cast<int>(rng.uniform_int(cfg.storey_range.lo, cfg.storey_range.hi));
      const auto layouts = AssetPool::standard().for_storeys(storeys);
      const BuildingTemplate tmpl = layouts[rng.uniform_int(0, static_cast<int>(layouts.size()) - 1)];
      const IntRange dims = AssetPool::footprint_range(storeys);
      const double w = static_cast<double>(rng.uniform_int(dims.lo, dims.hi));
      const double d = static_cast<double>(rng.uniform_int(dims.lo, dims.hi));
      const double extent = cfg.house_density == HouseDensity::high ? 0.5 * b : b;
      const double cx = std::round(rng.uniform(-extent, extent) * 2.0) / 2.0;
      const double cz = std::round(rng.uniform(-extent, extent) * 2.0) / 2.0;
      const Rect fp{cx - w / 2, cz - d / 2, cx + w / 2, cz + d / 2};
      const Rect reach = fp.expanded(pad_reach + kCellSize);
      if (reach.x0 < -b || reach.z0 < -b || reach.x1 > b || reach.z1 > b) continue;
      if (std::any_of(pads.begin(), pads.end(), [&](const Pad& p) { return rect_gap(fp, p.footprint) < min_gap; }))
        continue;

      double base = 0.0;
      bool has_neighbour = false;
      for (const Pad& p : pads) {
        if (rect_gap(fp, p.footprint) < neighbour_reach) {
          base = p.base;
          has_neighbour = true;
          break;
        }
      }
      if (!has_neighbour) {
        double sum = 0.0;
        int count = 0;
        for_cells_near(map.terrain, b, fp, kCellSize, [&](int i, int j, double) {
          sum += height(i, j);
          ++count;
        });
        base = count ? sum / count : 0.0;
      }
      base = static_cast<float>(base);
      bool flat = true;
      for_cells_near(map.terrain, b, fp, pad_reach, [&](int i, int j, double) {
        const double h = height(i, j);
        if (std::abs(h - base) > kMaxPadDeviation || h < kWetLevel) flat = false;
      });
      if (!flat || base < kWetLevel) continue;

      for_cells_near(map.terrain, b, fp, pad_reach, [&](int i, int j, double dist) {
        const std::size_t idx = static_cast<std::size_t>(j) * n + i;
        if (dist <= kCellSize) {
          height(i, j) = static_cast<float>(base);
          locked[idx] = true;
        } else if (!locked[idx]) {
          const double t = (dist - kCellSize) / kBlendWidth;
          const double s = t * t * (3.0 - 2.0 * t);
          height(i, j) = static_cast<float>(base + (height(i, j) - base) * s);
        }
      });
      const Rectf fpf{static_cast<float>(fp.x0), static_cast<float>(fp.z0), static_cast<float>(fp.x1),
                      static_cast<float>(fp.z1)};
      Building building = AssetPool::instantiate(tmpl, fpf, static_cast<float>(base));
      map.buildings.push_back(std::move(building));
      pads.push_back({fp, base});
      placed = true;
    }
    if (!placed) throw GenerationError("building placement failed after 10000 attempts");
  }
}

void place_spawn_regions(WorldMap& map, Rng rng) {
  const double b = map.bounds;
  for (int q = 0; q < 4; ++q) {
    const double sx = (q & 1) ? 1.0 : -1.0;
    const double sz = (q & 2) ? 1.0 : -1.0;
    bool placed = false;
    for (int attempt = 0; attempt < kMaxPlacementAttempts && !placed; ++attempt) {
      const double cx = std::round(sx * rng.uniform(0.15, 0.75) * b);
      const double cz = std::round(sz * rng.uniform(0.15, 0.75) * b);
      const Rect r{cx - kSpawnHalf, cz - kSpawnHalf, cx + kSpawnHalf, cz + kSpawnHalf};
      if (std::any_of(map.buildings.begin(), map.buildings.end(),
                      [&](const Building& bd) { return rect_gap(r, bd.footprint.rect()) < 4.0; }))
        continue;
      bool ok = true;
      for (int k = 0; k < 9 && ok; ++k) {
        const double x = r.x0 + 0.5 + (k % 3) * (kSpawnHalf - 0.5);
        const double z = r.z0 + 0.5 + (k / 3) * (kSpawnHalf - 0.5);
        const double y = snap_to_support(map, x, z, terrain_height_clamped(map, x, z), 0.5, 0.5);
        if (!is_walkable(map, {x, y, z}, 0.5) || terrain_height_clamped(map, x, z) < kWetLevel) ok = false;
      }
      if (!ok) continue;
      map.spawn_regions.push_back({{static_cast<float>(r.x0), static_cast<float>(r.z0), static_cast<float>(r.x1),
                                    static_cast<float>(r.z1)}});
      placed = true;
    }
    if (!placed) throw GenerationError("spawn region placement failed after 10000 attempts");
  }
}

void place_obstacles(const PcgConfig& cfg, WorldMap& map, Rng rng) {
  if (cfg.obstacle_density == ObstacleDensity::none) return;
  const double b = map.bounds;
  int count = cfg.size * cfg.size / 2500;
  if (cfg.obstacle_density == ObstacleDensity::high) count *= 3;
  for (int k = 0; k < count; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxPlacementAttempts && !placed; ++attempt) {
      Obstacle ob;
      ob.kind = rng.bernoulli(0.7) ? ObstacleKind::tree : ObstacleKind::rock;
      if (ob.kind == ObstacleKind::tree) {
        ob.radius = static_cast<float>(rng.uniform(0.3, 0.6));
        ob.height = static_cast<float>(rng.uniform(5.0, 9.0));
      } else {
        ob.radius = static_cast<float>(rng.uniform(0.8, 2.0));
        ob.height = static_cast<float>(rng.uniform(0.8, 2.0));
      }
      const double x = rng.uniform(-b + 3.0, b - 3.0);
      const double z = rng.uniform(-b + 3.0, b - 3.0);
      const double r = ob.radius;
      auto too_close_rect = [&](const Rect& rect, double gap) {
        return point_rect_dist2(x, z, rect) < (r + gap) * (r + gap);
      };
      if (std::any_of(map.buildings.begin(), map.buildings.end(),
                      [&](const Building& bd) { return too_close_rect(bd.footprint.rect(), 3.0); }))
        continue;
      if (std::any_of(map.spawn_regions.begin(), map.spawn_regions.end(),
                      [&](const SpawnRegion& s) { return too_close_rect(s.rect.rect(), 2.0); }))
        continue;
      if (std::any_of(map.obstacles.begin(), map.obstacles.end(), [&](const Obstacle& o) {
            return std::hypot(o.cx - x, o.cz - z) < o.radius + r + 2.5;
          }))
        continue;
      double lowest = terrain_height_clamped(map, x, z);
      bool wet = lowest < kWetLevel;
      for (int s = 0; s < 8 && !wet; ++s) {
        const double a = 2.0 * std::numbers::pi * s / 8.0;
        const double h = terrain_height_clamped(map, x + (r + 1.0) * std::cos(a), z + (r + 1.0) * std::sin(a));
        lowest = std::min(lowest, h);
        wet = h < kWetLevel;
      }
      if (wet) continue;
      ob.cx = static_cast<float>(x);
      ob.cz = static_cast<float>(z);
      ob.base_y = static_cast<float>(lowest - 0.1);
      map.obstacles.push_back(ob);
      placed = true;
    }
    if (!placed) throw GenerationError("obstacle placement failed after 10000 attempts");
  }
}

const char* density_name(HouseDensity d) { return d == HouseDensity::low ? "low" : "high"; }

const char* obstacle_name(ObstacleDensity d) {
  switch (d) {
    case ObstacleDensity::none:
      return "none";
    case ObstacleDensity::low:
      return "low";
    case ObstacleDensity::high:
      return "high";
  }
  return "low";
}

IntRange range_from_json(const nlohmann::json& j, const char* key) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(std::string(key) + " must be [lo, hi]");
  return {j[0].get<int>(), j[1].get<int>()};
}

}  // namespace

// --- config ------------------------------------------------------------------

SupplyProfile default_supply_profile(int size, int house_count) {
  SupplyProfile p;
  switch (size) {
    case 100:
      p.outdoor_box_count = 20;
      p.indoor_box_count = 6;
      break;
    case 200:
      p.outdoor_box_count = 60;
      p.indoor_box_count = 16;
      break;
    case 500:
      p.outdoor_box_count = 200;
      p.indoor_box_count = 40;
      break;
    default: {
      const double scale = (size / 200.0) * (size / 200.0);
      p.outdoor_box_count = static_cast<int>(std::lround(60 * scale));
      p.indoor_box_count = static_cast<int>(std::lround(16 * scale));
    }
  }
  if (house_count == 0) p.indoor_box_count = 0;
  return p;
}

void PcgConfig::validate() const {
  if (size != 100 && size != 200 && size != 500) throw ConfigError("size must be one of 100, 200, 500");
  if (house_count < 0) throw ConfigError("house_count < 0");
  if (storey_range.lo < 1 || storey_range.hi > kMaxStoreys || storey_range.lo > storey_range.hi)
    throw ConfigError("storey_range must lie within [1, 4]");
  const SupplyProfile& p = supply_profile;
  if (p.outdoor_box_count < 0 || p.indoor_box_count < 0) throw ConfigError("negative supply box count");
  if (p.outdoor_quantity_range.lo < 1 || p.outdoor_quantity_range.lo > p.outdoor_quantity_range.hi ||
      p.indoor_quantity_range.lo < 1 || p.indoor_quantity_range.lo > p.indoor_quantity_range.hi)
    throw ConfigError("supply quantity ranges must be non-empty and >= 1");
  if (p.indoor_quantity_range.lo <= p.outdoor_quantity_range.hi)
    throw ConfigError("indoor quantity range must lie strictly above the outdoor range");
  if (!(p.radial_sigma_fraction > 0.0)) throw ConfigError("radial_sigma_fraction must be positive");
  if (lake_count > 8) throw ConfigError("lake_count > 8");
}

PcgConfig config_from_json(const nlohmann::json& j) {
  try {
    PcgConfig c;
    c.map_id = j.at("map_id").get<std::uint32_t>();
    c.size = j.at("size").get<int>();
    c.house_count = j.value("house_count", 0);
    const std::string density = j.value("house_density", std::string("low"));
    if (density == "low") {
      c.house_density = HouseDensity::low;
    } else if (density == "high") {
      c.house_density = HouseDensity::high;
    } else {
      throw ConfigError("house_density must be low or high");
    }
    if (j.contains("storey_range")) c.storey_range = range_from_json(j.at("storey_range"), "storey_range");
    const std::string obstacles = j.value("obstacle_density", std::string("low"));
    if (obstacles == "none") {
      c.obstacle_density = ObstacleDensity::none;
    } else if (obstacles == "low") {
      c.obstacle_density = ObstacleDensity::low;
    } else if (obstacles == "high") {
      c.obstacle_density = ObstacleDensity::high;
    } else {
      throw ConfigError("obstacle_density must be none, low or high");
    }
    c.supply_profile = default_supply_profile(c.size, c.house_count);
    if (j.contains("supply_profile")) {
      const auto& p = j.at("supply_profile");
      SupplyProfile& sp = c.supply_profile;
      sp.outdoor_box_count = p.value("outdoor_box_count", sp.outdoor_box_count);
      sp.indoor_box_count = p.value("indoor_box_count", sp.indoor_box_count);
      if (p.contains("outdoor_quantity_range"))
        sp.outdoor_quantity_range = range_from_json(p.at("outdoor_quantity_range"), "outdoor_quantity_range");
      if (p.contains("indoor_quantity_range"))
        sp.indoor_quantity_range = range_from_json(p.at("indoor_quantity_range"), "indoor_quantity_range");
      sp.radial_sigma_fraction = p.value("radial_sigma_fraction", sp.radial_sigma_fraction);
    }
    c.seed = j.value("seed", std::uint64_t{0});
    c.lake_count = j.value("lake_count", -1);
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config json: ") + e.what());
  }
}

nlohmann::json config_to_json(const PcgConfig& c) {
  const SupplyProfile& p = c.supply_profile;
  return {
      {"map_id", c.map_id},
      {"size", c.size},
      {"house_count", c.house_count},
      {"house_density", density_name(c.house_density)},
      {"storey_range", {c.storey_range.lo, c.storey_range.hi}},
      {"obstacle_density", obstacle_name(c.obstacle_density)},
      {"supply_profile",
       {{"outdoor_box_count", p.outdoor_box_count},
        {"indoor_box_count", p.indoor_box_count},
        {"outdoor_quantity_range", {p.outdoor_quantity_range.lo, p.outdoor_quantity_range.hi}},
        {"indoor_quantity_range", {p.indoor_quantity_range.lo, p.indoor_quantity_range.hi}},
        {"radial_sigma_fraction", p.radial_sigma_fraction}}},
      {"seed", c.seed},
      {"lake_count", c.lake_count},
  };
}

// --- asset pool ----------------------------------------------------------------

const AssetPool& AssetPool::standard() {
  static const AssetPool pool = [] {
    AssetPool p;
    for (int s = 1; s <= kMaxStoreys; ++s)
      for (std::uint8_t layout = 0; layout < 3; ++layout)
        p.templates_.push_back({layout, s, static_cast<BuildingLayout>(layout)});
    return p;
  }();
  return pool;
}

std::vector<BuildingTemplate> AssetPool::for_storeys(int storeys) const {
  std::vector<BuildingTemplate> out;
  for (const auto& t : templates_)
    if (t.storeys == storeys) out.push_back(t);
  return out;
}

IntRange AssetPool::footprint_range(int storeys) { return storeys > 1 ? IntRange{11, 14} : IntRange{7, 12}; }

Building AssetPool::instantiate(const BuildingTemplate& t, const Rectf& footprint, float base_y) {
  Building b;
  b.footprint = footprint;
  b.base_y = base_y;
  b.storeys = static_cast<std::uint8_t>(t.storeys);
  b.template_id = t.id;

  const double x0 = footprint.x0, z0 = footprint.z0, x1 = footprint.x1, z1 = footprint.z1;
  const double wt = kWallThickness;
  const double bottom = base_y - kSlabThickness;
  const double top = b.storey_floor(t.storeys);
  const bool stairs = t.storeys > 1;
  const double lane = 2.4;
  const double lanes_z0 = z1 - wt - 2.0 * lane;

  auto box = [&](double ax, double az, double bx, double bz) {
    return Box3f{static_cast<float>(ax), static_cast<float>(bottom), static_cast<float>(az),
                 static_cast<float>(bx), static_cast<float>(top), static_cast<float>(bz)};
  };
  auto door = [&](double center, double floor_y) {
    return Opening{static_cast<float>(center - kDoorWidth / 2), static_cast<float>(center + kDoorWidth / 2),
                   static_cast<float>(floor_y), static_cast<float>(floor_y + kDoorHeight)};
  };
  auto interior_doors = [&](double center) {
    std::vector<Opening> out;
    for (int k = 0; k < t.storeys; ++k) out.push_back(door(center, b.storey_floor(k)));
    return out;
  };

  const double width = x1 - x0, depth = z1 - z0;
  const double south_door = t.layout == BuildingLayout::split ? x0 + 0.3 * width : 0.5 * (x0 + x1);
  b.walls.push_back({box(x0, z0, x1, z0 + wt), {door(south_door, base_y)}});
  b.walls.push_back({box(x0, z1 - wt, x1, z1), {}});
  b.walls.push_back({box(x0, z0 + wt, x0 + wt, z1 - wt), {}});
  Wall east{box(x1 - wt, z0 + wt, x1, z1 - wt), {}};
  if (t.layout == BuildingLayout::two_door) east.openings.push_back(door(z0 + 0.25 * depth, base_y));
  b.walls.push_back(east);

  if (t.layout == BuildingLayout::split) {
    const double mx = 0.5 * (x0 + x1);
    const double end = stairs ? lanes_z0 : z1 - wt;
    b.walls.push_back({box(mx - wt / 2, z0 + wt, mx + wt / 2, end), interior_doors(0.5 * (z0 + wt + end))});
  } else if (t.layout == BuildingLayout::two_door) {
    const double mz = z0 + 0.45 * depth;
    b.walls.push_back({box(x0 + wt, mz - wt / 2, x1 - wt, mz + wt / 2), interior_doors(x0 + 0.7 * width)});
  }

  // Switchback stairs along the north wall: even flights in the north lane
  // rising toward +x, odd flights in the inner lane rising toward -x.
  const double xs = x0 + wt + 2.0;
  const double xe = xs + 6.0;
  for (int k = 0; k + 1 < t.storeys; ++k) {
    Ramp r;
    const bool north = k % 2 == 0;
    const double rz0 = north ? z1 - wt - lane : lanes_z0;
    const double rz1 = north ? z1 - wt : z1 - wt - lane;
    r.rect = {static_cast<float>(xs), static_cast<float>(rz0), static_cast<float>(xe), static_cast<float>(rz1)};
    r.axis = 0;
    r.rise_dir = north ? 1 : -1;
    r.y_low = static_cast<float>(b.storey_floor(k));
    r.y_high = static_cast<float>(b.storey_floor(k + 1));
    b.stairs.push_back(r);
  }
  return b;
}

// --- generation ------------------------------------------------------------------

void sample_truncated_gaussian(Rng& rng, double sigma, double limit, double& x, double& z) {
  do {
    x = sigma * rng.normal();
  } while (std::abs(x) > limit);
  do {
    z = sigma * rng.normal();
  } while (std::abs(z) > limit);
}

WorldMap place_supplies(WorldMap map, const SupplyProfile& profile, Rng& rng) {
  if (profile.indoor_box_count > 0 && map.buildings.empty())
    throw ConfigError("indoor supply boxes requested but the map has no buildings");
  if (profile.indoor_box_count > 0 && profile.indoor_quantity_range.lo <= profile.outdoor_quantity_range.hi)
    throw ConfigError("indoor quantity range must lie strictly above the outdoor range");
  map.supply_boxes.clear();
  const double b = map.bounds;

  for (int k = 0; k < profile.outdoor_box_count; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxPlacementAttempts && !placed; ++attempt) {
      double x, z;
      sample_truncated_gaussian(rng, profile.radial_sigma_fraction * b, b - 1.0, x, z);
      if (std::any_of(map.buildings.begin(), map.buildings.end(), [&](const Building& bd) {
            return point_rect_dist2(x, z, bd.footprint.rect()) < 1.0;
          }))
        continue;
      if (std::any_of(map.obstacles.begin(), map.obstacles.end(),
                      [&](const Obstacle& o) { return std::hypot(o.cx - x, o.cz - z) < o.radius + 0.8; }))
        continue;
      const double y = snap_to_support(map, x, z, terrain_height_clamped(map, x, z), 0.5, 0.2);
      if (!is_walkable(map, {x, y, z}, 0.5)) continue;
      SupplyBox box;
      box.id = static_cast<std::uint32_t>(map.supply_boxes.size());
      box.location = {static_cast<float>(x), static_cast<float>(y), static_cast<float>(z)};
      box.quantity = static_cast<std::uint16_t>(
          rng.uniform_int(profile.outdoor_quantity_range.lo, profile.outdoor_quantity_range.hi));
      map.supply_boxes.push_back(box);
      placed = true;
    }
    if (!placed) throw GenerationError("outdoor supply placement failed after 10000 attempts");
  }

  // Buildings are weighted by total floor area so floor cells are uniform.
  std::vector<double> weights;
  double total = 0.0;
  for (const Building& bd : map.buildings) {
    const Rect r = bd.footprint.rect();
    total += r.width() * r.depth() * bd.storeys;
    weights.push_back(total);
  }
  for (int k = 0; k < profile.indoor_box_count; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxPlacementAttempts && !placed; ++attempt) {
      const double pick = rng.uniform(0.0, total);
      const std::size_t bi = std::min<std::size_t>(
          std::upper_bound(weights.begin(), weights.end(), pick) - weights.begin(), weights.size() - 1);
      const Building& bd = map.buildings[bi];
      const int storey = static_cast<int>(rng.uniform_int(0, bd.storeys - 1));
      const Rect r = bd.footprint.rect().expanded(-(kWallThickness + 0.7));
      const double x = rng.uniform(r.x0, r.x1);
      const double z = rng.uniform(r.z0, r.z1);
      const double y = bd.storey_floor(storey);
      if (!is_walkable(map, {x, y, z}, 0.5)) continue;
      SupplyBox box;
      box.id = static_cast<std::uint32_t>(map.supply_boxes.size());
      box.location = {static_cast<float>(x), static_cast<float>(y), static_cast<float>(z)};
      box.quantity = static_cast<std::uint16_t>(
          rng.uniform_int(profile.indoor_quantity_range.lo, profile.indoor_quantity_range.hi));
      box.indoor = true;
      map.supply_boxes.push_back(box);
      placed = true;
    }
    if (!placed) throw GenerationError("indoor supply placement failed after 10000 attempts");
  }
  return map;
}

int total_supply_quantity(const WorldMap& map) {
  int total = 0;
  for (const SupplyBox& b : map.supply_boxes) total += b.quantity;
  return total;
}

WorldMap generate_map(const PcgConfig& config) {
  config.validate();
  const Rng root(config.seed);
  WorldMap map;
  map.map_id = config.map_id;
  map.size = config.size;
  map.bounds = config.size / 2;
  map.rng_algorithm = Rng::kAlgorithmId;
  map.seed = config.seed;
  map.terrain = make_terrain(config, root.fork(kTerrain));
  place_buildings(config, map, root.fork(kBuildings));
  map.build_scene();
  place_spawn_regions(map, root.fork(kSpawns));
  place_obstacles(config, map, root.fork(kObstacles));
  map.build_scene();
  Rng supply_rng = root.fork(kSupplies);
  map = place_supplies(std::move(map), config.supply_profile, supply_rng);
  validate_map(map);
  return map;
}

std::vector<PcgConfig> benchmark_configs() {
  struct Row {
    std::uint32_t id;
    int size, houses;
    HouseDensity density;
    IntRange storeys;
  };
  const Row rows[] = {
      {8, 500, 12, HouseDensity::low, {2, 3}},    {14, 500, 15, HouseDensity::high, {2, 3}},
      {101, 200, 4, HouseDensity::low, {1, 1}},   {102, 200, 8, HouseDensity::high, {2, 3}},
      {103, 100, 2, HouseDensity::low, {1, 1}},   {104, 100, 4, HouseDensity::high, {2, 3}},
  };
  std::vector<PcgConfig> out;
  for (const Row& r : rows) {
    PcgConfig c;
    c.map_id = r.id;
    c.size = r.size;
    c.house_count = r.houses;
    c.house_density = r.density;
    c.storey_range = r.storeys;
    c.obstacle_density = ObstacleDensity::low;
    c.supply_profile = default_supply_profile(r.size, r.houses);
    out.push_back(c);
  }
  return out;
}

PcgConfig benchmark_config(std::uint32_t map_id) {
  for (const PcgConfig& c : benchmark_configs())
    if (c.map_id == map_id) return c;
  throw ConfigError("unknown benchmark map id " + std::to_string(map_id));
}

}  // namespace wildscav
