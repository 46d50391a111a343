#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace oracle {

double terrain_height(const WorldMap& map, double x, double z) {
  const Heightfield& hf = map.terrain;
  const int n = hf.resolution;
  const double u = (x + map.bounds) / hf.cell_size - 0.5;
  const double v = (z + map.bounds) / hf.cell_size - 0.5;
  const int i = static_cast<int>(std::floor(u));
  const int j = static_cast<int>(std::floor(v));
  const double fu = u - i, fv = v - j;
  auto h = [&](int a, int b) {
    a = std::clamp(a, 0, n - 1);
    b = std::clamp(b, 0, n - 1);
    return static_cast<double>(hf.heights[static_cast<std::size_t>(b) * n + a]);
  };
  return h(i, j) * (1 - fu) * (1 - fv) + h(i + 1, j) * fu * (1 - fv) + h(i, j + 1) * (1 - fu) * fv +
         h(i + 1, j + 1) * fu * fv;
}

namespace {

double wedge_surface(const Solid& s, double x, double z) {
  const double a = s.axis == 0 ? x : z;
  const double a0 = s.axis == 0 ? s.bounds.lo.x : s.bounds.lo.z;
  const double a1 = s.axis == 0 ? s.bounds.hi.x : s.bounds.hi.z;
  double f = (a - a0) / (a1 - a0);
  if (s.rise_dir < 0) f = 1.0 - f;
  return s.y_low + std::clamp(f, 0.0, 1.0) * (s.y_high - s.y_low);
}

bool in_rect(const Aabb& b, double x, double z) { return x >= b.lo.x && x <= b.hi.x && z >= b.lo.z && z <= b.hi.z; }

double box_distance(const Aabb& b, const Vec3& p) {
  const double dx = std::max({b.lo.x - p.x, 0.0, p.x - b.hi.x});
  const double dy = std::max({b.lo.y - p.y, 0.0, p.y - b.hi.y});
  const double dz = std::max({b.lo.z - p.z, 0.0, p.z - b.hi.z});
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace

bool solid_contains(const Solid& s, const Vec3& p) {
  switch (s.kind) {
    case SolidKind::box:
      return in_rect(s.bounds, p.x, p.z) && p.y >= s.bounds.lo.y && p.y <= s.bounds.hi.y;
    case SolidKind::wedge:
      return in_rect(s.bounds, p.x, p.z) && p.y >= s.y_low && p.y <= wedge_surface(s, p.x, p.z);
    case SolidKind::cylinder:
      return p.y >= s.bounds.lo.y && p.y <= s.bounds.hi.y &&
             (p.x - s.cx) * (p.x - s.cx) + (p.z - s.cz) * (p.z - s.cz) <= s.radius * s.radius;
  }
  return false;
}

RayMarcher::RayMarcher(const WorldMap& map, double step) : map_(map), step_(step) {
  const Heightfield& hf = map.terrain;
  const int n = hf.resolution;
  double gx = 0, gz = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double h = hf.heights[static_cast<std::size_t>(j) * n + i];
      if (i + 1 < n) gx = std::max(gx, std::abs(hf.heights[static_cast<std::size_t>(j) * n + i + 1] - h));
      if (j + 1 < n) gz = std::max(gz, std::abs(hf.heights[static_cast<std::size_t>(j + 1) * n + i] - h));
    }
  const double l = std::hypot(gx, gz) / hf.cell_size;
  slope_factor_ = std::sqrt(1.0 + l * l);

  origin_ = -map.bounds - 2 * kBucket;
  side_ = static_cast<int>(std::ceil((2.0 * map.bounds + 4 * kBucket) / kBucket));
  buckets_.resize(static_cast<std::size_t>(side_) * side_);
  const auto& solids = map.scene().solids();
  for (std::size_t k = 0; k < solids.size(); ++k) {
    const Aabb& b = solids[k].bounds;
    const int x0 = std::clamp(static_cast<int>(std::floor((b.lo.x - origin_) / kBucket)), 0, side_ - 1);
    const int x1 = std::clamp(static_cast<int>(std::floor((b.hi.x - origin_) / kBucket)), 0, side_ - 1);
    const int z0 = std::clamp(static_cast<int>(std::floor((b.lo.z - origin_) / kBucket)), 0, side_ - 1);
    const int z1 = std::clamp(static_cast<int>(std::floor((b.hi.z - origin_) / kBucket)), 0, side_ - 1);
    for (int bz = z0; bz <= z1; ++bz)
      for (int bx = x0; bx <= x1; ++bx) buckets_[static_cast<std::size_t>(bz) * side_ + bx].push_back(k);
  }
}

const std::vector<std::size_t>& RayMarcher::bucket(int bx, int bz) const {
  if (bx < 0 || bz < 0 || bx >= side_ || bz >= side_) return empty_;
  return buckets_[static_cast<std::size_t>(bz) * side_ + bx];
}

bool RayMarcher::inside(const Vec3& p) const {
  const double b = map_.bounds;
  if (std::abs(p.x) <= b && std::abs(p.z) <= b) {
    if (p.y <= std::max(terrain_height(map_, p.x, p.z), kWaterLevel)) return true;
  }
  const int bx = static_cast<int>(std::floor((p.x - origin_) / kBucket));
  const int bz = static_cast<int>(std::floor((p.z - origin_) / kBucket));
  const auto& solids = map_.scene().solids();
  for (std::size_t k : bucket(bx, bz))
    if (solid_contains(solids[k], p)) return true;
  return false;
}

double RayMarcher::distance_bound(const Vec3& p) const {
  const double b = map_.bounds;
  double d;
  const double ox = std::max(std::abs(p.x) - b, 0.0), oz = std::max(std::abs(p.z) - b, 0.0);
  if (ox > 0 || oz > 0) {
    d = std::hypot(ox, oz);
  } else {
    d = (p.y - std::max(terrain_height(map_, p.x, p.z), kWaterLevel)) / slope_factor_;
  }
  // Every solid within kBucket horizontally touches the 3x3 neighbourhood.
  d = std::min(d, kBucket);
  const int bx = static_cast<int>(std::floor((p.x - origin_) / kBucket));
  const int bz = static_cast<int>(std::floor((p.z - origin_) / kBucket));
  const auto& solids = map_.scene().solids();
  for (int dz = -1; dz <= 1; ++dz)
    for (int dx = -1; dx <= 1; ++dx)
      for (std::size_t k : bucket(bx + dx, bz + dz)) d = std::min(d, box_distance(solids[k].bounds, p));
  return std::max(d, 0.0);
}

double RayMarcher::march(const Vec3& o, const Vec3& dir, double max_range) const {
  double t = 0.0;
  while (t < max_range) {
    const double next = std::min(max_range, t + std::max(step_, distance_bound(o + dir * t)));
    if (inside(o + dir * next)) {
      double lo = t, hi = next;
      for (int k = 0; k < 60; ++k) {
        const double mid = 0.5 * (lo + hi);
        (inside(o + dir * mid) ? hi : lo) = mid;
      }
      return hi;
    }
    t = next;
  }
  return max_range;
}

RewardReplay::RewardReplay(TaskType task, std::optional<Vec3> target, std::size_t agents)
    : task_(task), target_(target), collected_(agents, 0) {}

std::vector<int> RewardReplay::step(const std::vector<Vec3>& positions, const std::vector<int>& supplies) {
  std::vector<int> rewards(positions.size(), 0);
  auto get_distance = [](const Vec3& a, const Vec3& b) {
    return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) + (a.z - b.z) * (a.z - b.z));
  };
  switch (task_) {
    case TaskType::navigation:
      for (std::size_t i = 0; i < positions.size(); ++i)
        rewards[i] = get_distance(positions[i], *target_) <= 1 ? 1 : 0;
      break;
    case TaskType::target_capture:
    case TaskType::supply_gather_target:
      for (std::size_t i = 0; i < positions.size(); ++i)
        if (get_distance(positions[i], *target_) <= 1) {
          rewards[i] = 1;
          break;
        }
      break;
    case TaskType::supply_gather_max:
    case TaskType::supply_battle:
      for (std::size_t i = 0; i < positions.size(); ++i) {
        if (supplies[i] > collected_[i]) {
          rewards[i] = 1;
          collected_[i] = supplies[i];
        } else {
          rewards[i] = 0;
        }
      }
      break;
  }
  return rewards;
}

double penetration_depth(const WorldMap& map, const Vec3& feet, double radius, double height) {
  const double head = feet.y + height;
  double depth = -1e9;
  auto vertical = [&](double bottom, double top) { return std::min(top, head) - std::max(bottom, feet.y); };
  for (const Solid& s : map.scene().solids()) {
    switch (s.kind) {
      case SolidKind::box: {
        const double dx = std::max({s.bounds.lo.x - feet.x, 0.0, feet.x - s.bounds.hi.x});
        const double dz = std::max({s.bounds.lo.z - feet.z, 0.0, feet.z - s.bounds.hi.z});
        const double horizontal = radius - std::hypot(dx, dz);
        depth = std::max(depth, std::min(horizontal, vertical(s.bounds.lo.y, s.bounds.hi.y)));
        break;
      }
      case SolidKind::cylinder: {
        const double horizontal = radius + s.radius - std::hypot(feet.x - s.cx, feet.z - s.cz);
        depth = std::max(depth, std::min(horizontal, vertical(s.bounds.lo.y, s.bounds.hi.y)));
        break;
      }
      case SolidKind::wedge: {
        if (box_distance(s.bounds, {feet.x, std::clamp(feet.y, s.bounds.lo.y, s.bounds.hi.y), feet.z}) > radius)
          break;
        for (int ring = 0; ring <= 6; ++ring) {
          const double rr = radius * ring / 6.0 * (1.0 - 1e-9);
          const int n = ring == 0 ? 1 : 64;
          for (int k = 0; k < n; ++k) {
            const double a = 2.0 * std::numbers::pi * k / n;
            const double x = feet.x + rr * std::cos(a), z = feet.z + rr * std::sin(a);
            if (!in_rect(s.bounds, x, z)) continue;
            depth = std::max(depth, vertical(s.y_low, wedge_surface(s, x, z)));
          }
        }
        break;
      }
    }
  }
  for (int ring = 0; ring <= 6; ++ring) {
    const double rr = radius * ring / 6.0 * (1.0 - 1e-9);
    const int n = ring == 0 ? 1 : 64;
    for (int k = 0; k < n; ++k) {
      const double a = 2.0 * std::numbers::pi * k / n;
      const double x = feet.x + rr * std::cos(a), z = feet.z + rr * std::sin(a);
      if (std::abs(x) > map.bounds || std::abs(z) > map.bounds) continue;
      depth = std::max(depth, terrain_height(map, x, z) - feet.y);
    }
  }
  return depth;
}

}  // namespace oracle
