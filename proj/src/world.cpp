#include "wildscav/world.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

namespace wildscav {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRayEps = 1e-9;
constexpr int kRimSamples = 32;

// Clips the parametric ray against the half-space num + t * denom <= 0.
bool clip_halfspace(double num, double denom, double& t_enter, double& t_exit) {
  if (denom == 0.0) return num <= 0.0;
  const double t = -num / denom;
  if (denom < 0.0) {
    t_enter = std::max(t_enter, t);
  } else {
    t_exit = std::min(t_exit, t);
  }
  return t_enter <= t_exit;
}

bool clip_slab(double o, double d, double lo, double hi, double& t_enter, double& t_exit) {
  // lo <= o + t d <= hi
  return clip_halfspace(lo - o, -d, t_enter, t_exit) && clip_halfspace(o - hi, d, t_enter, t_exit);
}

double bilinear(const Heightfield& hf, double u, double v) {
  const int n = hf.resolution;
  u = std::clamp(u, 0.0, static_cast<double>(n - 1));
  v = std::clamp(v, 0.0, static_cast<double>(n - 1));
  int i = static_cast<int>(std::floor(u));
  int j = static_cast<int>(std::floor(v));
  i = std::min(i, std::max(0, n - 2));
  j = std::min(j, std::max(0, n - 2));
  const double fu = u - i;
  const double fv = v - j;
  const double h00 = hf.at(i, j), h10 = hf.at(i + 1, j);
  const double h01 = hf.at(i, j + 1), h11 = hf.at(i + 1, j + 1);
  return h00 * (1 - fu) * (1 - fv) + h10 * fu * (1 - fv) + h01 * (1 - fu) * fv + h11 * fu * fv;
}

// Smallest t in [ta, tb] with A t^2 + B t + C <= 0, or +inf.
double first_nonpositive(double A, double B, double C, double ta, double tb) {
  auto f = [&](double t) { return (A * t + B) * t + C; };
  if (f(ta) <= 0.0) return ta;
  double roots[2];
  int count = 0;
  const double scale = std::abs(B) + std::abs(C) + 1e-300;
  if (std::abs(A) * std::max(1.0, tb * tb) < 1e-14 * scale) {
    if (B != 0.0) roots[count++] = -C / B;
  } else {
    const double disc = B * B - 4.0 * A * C;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      const double q = -0.5 * (B + (B >= 0.0 ? sq : -sq));
      if (q != 0.0) {
        roots[count++] = q / A;
        roots[count++] = C / q;
      } else {
        roots[count++] = 0.0;
      }
    }
  }
  double best = kInf;
  for (int k = 0; k < count; ++k) {
    if (roots[k] >= ta && roots[k] <= tb) best = std::min(best, roots[k]);
  }
  if (best == kInf && f(tb) <= 0.0) {
    // Numerical fallback: bisection on a bracketed sign change.
    double lo = ta, hi = tb;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (f(mid) <= 0.0 ? hi : lo) = mid;
    }
    best = hi;
  }
  return best;
}

double raycast_terrain(const WorldMap& map, const Vec3& o, const Vec3& d, double t_max) {
  const Heightfield& hf = map.terrain;
  const int n = hf.resolution;
  const double cs = hf.cell_size;
  const double b = map.bounds;
  double t0 = 0.0, t1 = t_max;
  if (!clip_slab(o.x, d.x, -b, b, t0, t1) || !clip_slab(o.z, d.z, -b, b, t0, t1)) return t_max;
  if (t0 > t1) return t_max;

  const double u_origin = (o.x + b) / cs - 0.5;
  const double v_origin = (o.z + b) / cs - 0.5;
  const double ku = d.x / cs;
  const double kv = d.z / cs;
  auto lattice_u = [&](double t) { return u_origin + ku * t; };
  auto lattice_v = [&](double t) { return v_origin + kv * t; };

  int pu = std::clamp(static_cast<int>(std::floor(lattice_u(t0))), -1, n - 1);
  int pv = std::clamp(static_cast<int>(std::floor(lattice_v(t0))), -1, n - 1);
  const int su = d.x > 0 ? 1 : -1;
  const int sv = d.z > 0 ? 1 : -1;
  auto next_boundary = [](double origin, double k, int p, int step) {
    if (k == 0.0) return kInf;
    const double target = step > 0 ? p + 1 : p;
    return (target - origin) / k;
  };
  double t_next_u = next_boundary(u_origin, ku, pu, su);
  double t_next_v = next_boundary(v_origin, kv, pv, sv);
  const double dt_u = ku != 0.0 ? 1.0 / std::abs(ku) : kInf;
  const double dt_v = kv != 0.0 ? 1.0 / std::abs(kv) : kInf;

  double t_cur = t0;
  while (true) {
    const double seg_end = std::min({t_next_u, t_next_v, t1});
    const double ta = t_cur, tb = std::max(seg_end, t_cur);
    // Terrain patch with clamped corner samples.
    const double h00 = hf.at(pu, pv), h10 = hf.at(pu + 1, pv);
    const double h01 = hf.at(pu, pv + 1), h11 = hf.at(pu + 1, pv + 1);
    const double a = h00, bb = h10 - h00, c = h01 - h00, e = h11 - h10 - h01 + h00;
    const double p = u_origin - pu, r = v_origin - pv;
    const double C = o.y - (a + bb * p + c * r + e * p * r);
    const double B = d.y - (bb * ku + c * kv + e * (p * kv + r * ku));
    const double A = -e * ku * kv;
    double hit = first_nonpositive(A, B, C, ta, tb);
    // Water surface over lake cells.
    const double water = first_nonpositive(0.0, d.y, o.y - kWaterLevel, ta, tb);
    hit = std::min(hit, water);
    if (hit < kInf) return std::max(hit, 1e-6);
    if (seg_end >= t1) break;
    if (t_next_u < t_next_v) {
      pu += su;
      t_cur = t_next_u;
      t_next_u += dt_u;
    } else {
      pv += sv;
      t_cur = t_next_v;
      t_next_v += dt_v;
    }
    if (pu < -1 || pu > n - 1 || pv < -1 || pv > n - 1) break;
  }
  return t_max;
}

Rect ramp_rect(const Solid& s) { return s.bounds.footprint(); }

}  // namespace

// --- basic records ---------------------------------------------------------

float Heightfield::at(int ix, int iz) const {
  ix = std::clamp(ix, 0, resolution - 1);
  iz = std::clamp(iz, 0, resolution - 1);
  return heights[static_cast<std::size_t>(iz) * resolution + ix];
}

double Ramp::surface_at(double x, double z) const {
  const double s = axis == 0 ? x : z;
  const double s0 = axis == 0 ? rect.x0 : rect.z0;
  const double s1 = axis == 0 ? rect.x1 : rect.z1;
  double frac = rise_dir > 0 ? (s - s0) / (s1 - s0) : (s1 - s) / (s1 - s0);
  frac = std::clamp(frac, 0.0, 1.0);
  return y_low + frac * (static_cast<double>(y_high) - y_low);
}

// --- solids ----------------------------------------------------------------

double Solid::surface_at(double x, double z) const {
  const Rect r = ramp_rect(*this);
  const double s = axis == 0 ? x : z;
  const double s0 = axis == 0 ? r.x0 : r.z0;
  const double s1 = axis == 0 ? r.x1 : r.z1;
  double frac = rise_dir > 0 ? (s - s0) / (s1 - s0) : (s1 - s) / (s1 - s0);
  frac = std::clamp(frac, 0.0, 1.0);
  return y_low + frac * (y_high - y_low);
}

bool Solid::contains(const Vec3& p) const {
  switch (kind) {
    case SolidKind::box:
      return bounds.contains(p);
    case SolidKind::wedge:
      return bounds.footprint().contains(p.x, p.z) && p.y >= y_low && p.y <= surface_at(p.x, p.z);
    case SolidKind::cylinder: {
      const double dx = p.x - cx, dz = p.z - cz;
      return p.y >= bounds.lo.y && p.y <= bounds.hi.y && dx * dx + dz * dz <= radius * radius;
    }
  }
  return false;
}

bool Solid::overlaps_disc(double x, double z, double r) const {
  if (kind == SolidKind::cylinder) {
    const double rr = r + radius;
    const double dx = x - cx, dz = z - cz;
    return dx * dx + dz * dz < rr * rr;
  }
  return point_rect_dist2(x, z, bounds.footprint()) < r * r;
}

double Solid::max_top_over_disc(double x, double z, double r) const {
  if (kind != SolidKind::wedge) return bounds.hi.y;
  const Rect rect = bounds.footprint();
  const double ca = axis == 0 ? x : z;
  const double cl = axis == 0 ? z : x;
  const double a0 = axis == 0 ? rect.x0 : rect.z0, a1 = axis == 0 ? rect.x1 : rect.z1;
  const double l0 = axis == 0 ? rect.z0 : rect.x0, l1 = axis == 0 ? rect.z1 : rect.x1;
  const double dl = std::max({0.0, l0 - cl, cl - l1});
  const double half_chord = std::sqrt(std::max(0.0, r * r - dl * dl));
  const double along = rise_dir > 0 ? std::min(a1, ca + half_chord) : std::max(a0, ca - half_chord);
  const double px = axis == 0 ? along : x;
  const double pz = axis == 0 ? z : along;
  return surface_at(px, pz);
}

bool Solid::intersect(const Vec3& o, const Vec3& d, double t_max, double& t_hit) const {
  double t_enter = -kInf, t_exit = kInf;
  switch (kind) {
    case SolidKind::box:
      if (!clip_slab(o.x, d.x, bounds.lo.x, bounds.hi.x, t_enter, t_exit)) return false;
      if (!clip_slab(o.y, d.y, bounds.lo.y, bounds.hi.y, t_enter, t_exit)) return false;
      if (!clip_slab(o.z, d.z, bounds.lo.z, bounds.hi.z, t_enter, t_exit)) return false;
      break;
    case SolidKind::wedge: {
      if (!clip_slab(o.x, d.x, bounds.lo.x, bounds.hi.x, t_enter, t_exit)) return false;
      if (!clip_slab(o.z, d.z, bounds.lo.z, bounds.hi.z, t_enter, t_exit)) return false;
      if (!clip_halfspace(y_low - o.y, -d.y, t_enter, t_exit)) return false;
      // y - surface(s) <= 0 with surface linear in s.
      const Rect r = bounds.footprint();
      const double s0 = axis == 0 ? r.x0 : r.z0, s1 = axis == 0 ? r.x1 : r.z1;
      const double slope = (y_high - y_low) / (s1 - s0);
      const double os = axis == 0 ? o.x : o.z;
      const double ds = axis == 0 ? d.x : d.z;
      double num, denom;
      if (rise_dir > 0) {
        num = o.y - y_low - slope * (os - s0);
        denom = d.y - slope * ds;
      } else {
        num = o.y - y_low - slope * (s1 - os);
        denom = d.y + slope * ds;
      }
      if (!clip_halfspace(num, denom, t_enter, t_exit)) return false;
      break;
    }
    case SolidKind::cylinder: {
      if (!clip_slab(o.y, d.y, bounds.lo.y, bounds.hi.y, t_enter, t_exit)) return false;
      const double ox = o.x - cx, oz = o.z - cz;
      const double a = d.x * d.x + d.z * d.z;
      const double c = ox * ox + oz * oz - radius * radius;
      if (a < 1e-18) {
        if (c > 0.0) return false;
      } else {
        const double bq = 2.0 * (ox * d.x + oz * d.z);
        const double disc = bq * bq - 4.0 * a * c;
        if (disc < 0.0) return false;
        const double sq = std::sqrt(disc);
        const double q = -0.5 * (bq + (bq >= 0.0 ? sq : -sq));
        double r1 = q / a;
        double r2 = q != 0.0 ? c / q : r1;
        if (r1 > r2) std::swap(r1, r2);
        t_enter = std::max(t_enter, r1);
        t_exit = std::min(t_exit, r2);
        if (t_enter > t_exit) return false;
      }
      break;
    }
  }
  if (t_enter <= kRayEps || t_enter > t_max || t_enter > t_exit) return false;
  t_hit = t_enter;
  return true;
}

// --- derived geometry ------------------------------------------------------

std::vector<Aabb> wall_solid_boxes(const Wall& wall) {
  const Aabb box = wall.box.aabb();
  const int axis = wall.axis();
  const double a0 = axis == 0 ? box.lo.x : box.lo.z;
  const double a1 = axis == 0 ? box.hi.x : box.hi.z;
  auto make = [&](double s0, double s1, double y0, double y1) {
    Aabb b = box;
    if (axis == 0) {
      b.lo.x = s0;
      b.hi.x = s1;
    } else {
      b.lo.z = s0;
      b.hi.z = s1;
    }
    b.lo.y = y0;
    b.hi.y = y1;
    return b;
  };
  // Split the wall at every opening edge, then subtract the vertical extents
  // of the openings covering each piece.
  std::vector<double> cuts{a0, a1};
  for (const Opening& op : wall.openings) {
    cuts.push_back(std::clamp<double>(op.start, a0, a1));
    cuts.push_back(std::clamp<double>(op.end, a0, a1));
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<Aabb> out;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double s = cuts[c], e = cuts[c + 1];
    std::vector<std::pair<double, double>> gaps;
    for (const Opening& op : wall.openings)
      if (op.start <= s && op.end >= e && op.top > op.bottom) gaps.emplace_back(op.bottom, op.top);
    std::sort(gaps.begin(), gaps.end());
    double y = box.lo.y;
    for (const auto& [g0, g1] : gaps) {
      if (g0 > y) out.push_back(make(s, e, y, std::min(g0, box.hi.y)));
      y = std::max(y, g1);
      if (y >= box.hi.y) break;
    }
    if (y < box.hi.y) out.push_back(make(s, e, y, box.hi.y));
  }
  return out;
}

std::vector<Aabb> floor_slab_boxes(const Building& b, int k) {
  const double top = b.storey_floor(k);
  std::vector<Rect> pieces{b.footprint.rect()};
  for (const Ramp& ramp : b.stairs) {
    if (std::abs(ramp.y_high - top) > 1e-3) continue;
    const Rect hole = ramp.rect.rect();
    std::vector<Rect> next;
    for (const Rect& p : pieces) {
      if (!p.overlaps(hole)) {
        next.push_back(p);
        continue;
      }
      if (hole.z0 > p.z0) next.push_back({p.x0, p.z0, p.x1, hole.z0});
      if (hole.z1 < p.z1) next.push_back({p.x0, hole.z1, p.x1, p.z1});
      const double z0 = std::max(p.z0, hole.z0), z1 = std::min(p.z1, hole.z1);
      if (hole.x0 > p.x0) next.push_back({p.x0, z0, hole.x0, z1});
      if (hole.x1 < p.x1) next.push_back({hole.x1, z0, p.x1, z1});
    }
    pieces = std::move(next);
  }
  std::vector<Aabb> out;
  out.reserve(pieces.size());
  for (const Rect& p : pieces) out.push_back({{p.x0, top - kSlabThickness, p.z0}, {p.x1, top, p.z1}});
  return out;
}

// --- scene -----------------------------------------------------------------

void WorldMap::build_scene() { scene_ = std::make_shared<const Scene>(*this); }

const Scene& WorldMap::scene() const {
  if (!scene_) throw std::logic_error("WorldMap scene not built");
  return *scene_;
}

bool WorldMap::operator==(const WorldMap& o) const {
  return map_id == o.map_id && size == o.size && bounds == o.bounds && terrain == o.terrain &&
         buildings == o.buildings && obstacles == o.obstacles && supply_boxes == o.supply_boxes &&
         spawn_regions == o.spawn_regions && rng_algorithm == o.rng_algorithm && seed == o.seed;
}

Scene::Scene(const WorldMap& map) {
  for (std::size_t bi = 0; bi < map.buildings.size(); ++bi) {
    const Building& b = map.buildings[bi];
    for (const Wall& w : b.walls) {
      for (const Aabb& box : wall_solid_boxes(w)) {
        Solid s;
        s.kind = SolidKind::box;
        s.role = SolidRole::wall;
        s.building = static_cast<int>(bi);
        s.bounds = box;
        solids_.push_back(s);
      }
    }
    for (int k = 0; k <= b.storeys; ++k) {
      for (const Aabb& box : floor_slab_boxes(b, k)) {
        Solid s;
        s.kind = SolidKind::box;
        s.role = SolidRole::floor;
        s.building = static_cast<int>(bi);
        s.bounds = box;
        solids_.push_back(s);
      }
    }
    for (const Ramp& r : b.stairs) {
      Solid s;
      s.kind = SolidKind::wedge;
      s.role = SolidRole::stair;
      s.building = static_cast<int>(bi);
      s.bounds = {{r.rect.x0, r.y_low, r.rect.z0}, {r.rect.x1, r.y_high, r.rect.z1}};
      s.axis = r.axis;
      s.rise_dir = r.rise_dir;
      s.y_low = r.y_low;
      s.y_high = r.y_high;
      solids_.push_back(s);
    }
  }
  for (const Obstacle& ob : map.obstacles) {
    Solid s;
    s.kind = SolidKind::cylinder;
    s.role = SolidRole::obstacle;
    s.cx = ob.cx;
    s.cz = ob.cz;
    s.radius = ob.radius;
    s.bounds = {{ob.cx - ob.radius, ob.base_y, ob.cz - ob.radius},
                {ob.cx + ob.radius, static_cast<double>(ob.base_y) + ob.height, ob.cz + ob.radius}};
    solids_.push_back(s);
  }

  origin_ = -static_cast<double>(map.bounds);
  buckets_per_side_ = std::max(1, static_cast<int>(std::ceil(2.0 * map.bounds / bucket_size_)));
  buckets_.assign(static_cast<std::size_t>(buckets_per_side_) * buckets_per_side_, {});
  for (std::uint32_t id = 0; id < solids_.size(); ++id) {
    const Rect r = solids_[id].bounds.footprint();
    for (int bz = bucket_index(r.z0); bz <= bucket_index(r.z1); ++bz)
      for (int bx = bucket_index(r.x0); bx <= bucket_index(r.x1); ++bx)
        buckets_[static_cast<std::size_t>(bz) * buckets_per_side_ + bx].push_back(id);
  }

  // Bilinear gradient components are interpolations of adjacent differences.
  const Heightfield& hf = map.terrain;
  double gx = 0.0, gz = 0.0;
  for (int j = 0; j < hf.resolution; ++j) {
    for (int i = 0; i < hf.resolution; ++i) {
      if (i + 1 < hf.resolution) gx = std::max(gx, std::abs(double(hf.at(i + 1, j)) - hf.at(i, j)));
      if (j + 1 < hf.resolution) gz = std::max(gz, std::abs(double(hf.at(i, j + 1)) - hf.at(i, j)));
    }
  }
  slope_bound_ = hf.cell_size > 0 ? std::hypot(gx, gz) / hf.cell_size : 0.0;
}

int Scene::bucket_index(double v) const {
  const int i = static_cast<int>(std::floor((v - origin_) / bucket_size_));
  return std::clamp(i, 0, buckets_per_side_ - 1);
}

double Scene::raycast_solids(const Vec3& o, const Vec3& d, double max_range) const {
  double best = max_range;
  const double lo = origin_, hi = origin_ + bucket_size_ * buckets_per_side_;
  double t0 = 0.0, t1 = max_range;
  if (!clip_slab(o.x, d.x, lo, hi, t0, t1) || !clip_slab(o.z, d.z, lo, hi, t0, t1)) return best;
  if (t0 > t1) return best;

  auto test_bucket = [&](int bx, int bz) {
    for (std::uint32_t id : buckets_[static_cast<std::size_t>(bz) * buckets_per_side_ + bx]) {
      double t;
      if (solids_[id].intersect(o, d, best, t)) best = t;
    }
  };

  const double ex = o.x + d.x * t0, ez = o.z + d.z * t0;
  int bx = bucket_index(ex), bz = bucket_index(ez);
  const int sx = d.x > 0 ? 1 : -1, sz = d.z > 0 ? 1 : -1;
  auto boundary = [&](double o_c, double d_c, int b, int step) {
    if (d_c == 0.0) return kInf;
    const double edge = origin_ + bucket_size_ * (step > 0 ? b + 1 : b);
    return (edge - o_c) / d_c;
  };
  double tx = boundary(o.x, d.x, bx, sx);
  double tz = boundary(o.z, d.z, bz, sz);
  const double dtx = d.x != 0.0 ? bucket_size_ / std::abs(d.x) : kInf;
  const double dtz = d.z != 0.0 ? bucket_size_ / std::abs(d.z) : kInf;
  while (true) {
    test_bucket(bx, bz);
    const double t_exit = std::min({tx, tz, t1});
    if (best <= t_exit || t_exit >= t1) break;
    if (tx < tz) {
      bx += sx;
      tx += dtx;
    } else {
      bz += sz;
      tz += dtz;
    }
    if (bx < 0 || bz < 0 || bx >= buckets_per_side_ || bz >= buckets_per_side_) break;
  }
  return best;
}

// --- queries ---------------------------------------------------------------

bool in_bounds(const WorldMap& map, double x, double z) {
  return std::abs(x) <= map.bounds && std::abs(z) <= map.bounds;
}

double terrain_height_clamped(const WorldMap& map, double x, double z) {
  const Heightfield& hf = map.terrain;
  const double u = (x + map.bounds) / hf.cell_size - 0.5;
  const double v = (z + map.bounds) / hf.cell_size - 0.5;
  return bilinear(hf, u, v);
}

double ground_height(const WorldMap& map, double x, double z) {
  if (!in_bounds(map, x, z)) throw std::domain_error("ground_height: point outside map bounds");
  return terrain_height_clamped(map, x, z);
}

bool is_lake(const WorldMap& map, double x, double z) {
  return in_bounds(map, x, z) && terrain_height_clamped(map, x, z) < kWaterLevel;
}

double terrain_max_over_disc(const WorldMap& map, double x, double z, double radius) {
  const Heightfield& hf = map.terrain;
  const double cs = hf.cell_size;
  const double b = map.bounds;
  double best = terrain_height_clamped(map, x, z);
  for (int k = 0; k < kRimSamples; ++k) {
    const double a = 2.0 * std::numbers::pi * k / kRimSamples;
    best = std::max(best, terrain_height_clamped(map, x + radius * std::cos(a), z + radius * std::sin(a)));
  }
  // The surface is harmonic inside each patch, so the disc maximum lies on the
  // rim, on a lattice node inside the disc, or where a lattice line crosses the rim.
  const double u_c = (x + b) / cs - 0.5, v_c = (z + b) / cs - 0.5;
  const double ru = radius / cs;
  const int i0 = static_cast<int>(std::ceil(u_c - ru)), i1 = static_cast<int>(std::floor(u_c + ru));
  const int j0 = static_cast<int>(std::ceil(v_c - ru)), j1 = static_cast<int>(std::floor(v_c + ru));
  for (int i = i0; i <= i1; ++i) {
    const double du = (i - u_c) * cs;
    const double half = std::sqrt(std::max(0.0, radius * radius - du * du));
    const double xi = x + du;
    best = std::max(best, terrain_height_clamped(map, xi, z + half));
    best = std::max(best, terrain_height_clamped(map, xi, z - half));
    for (int j = j0; j <= j1; ++j) {
      const double dv = (j - v_c) * cs;
      if (du * du + dv * dv <= radius * radius) best = std::max(best, double(hf.at(i, j)));
    }
  }
  for (int j = j0; j <= j1; ++j) {
    const double dv = (j - v_c) * cs;
    const double half = std::sqrt(std::max(0.0, radius * radius - dv * dv));
    best = std::max(best, terrain_height_clamped(map, x + half, z + dv));
    best = std::max(best, terrain_height_clamped(map, x - half, z + dv));
  }
  return best + map.scene().terrain_slope_bound() * radius * 0.01;
}

namespace {

DiscProbe probe_disc_with_terrain(const WorldMap& map, double x, double z, double radius, double y_max,
                                  double terrain) {
  DiscProbe probe;
  probe.center_over_lake = terrain_height_clamped(map, x, z) < kWaterLevel;
  if (terrain <= y_max) {
    probe.support = terrain;
  } else {
    probe.terrain_too_high = true;
  }
  map.scene().for_each_near(x, z, radius, [&](const Solid& s, std::uint32_t) {
    if (!s.overlaps_disc(x, z, radius)) return;
    const double top = s.max_top_over_disc(x, z, radius);
    if (top <= y_max) {
      probe.support = std::max(probe.support, top);
    } else {
      probe.obstruction_bottom = std::min(probe.obstruction_bottom, s.bounds.lo.y);
    }
  });
  return probe;
}

bool disc_out_of_bounds(const WorldMap& map, double x, double z, double radius) {
  return std::abs(x) + radius > map.bounds || std::abs(z) + radius > map.bounds;
}

}  // namespace

DiscProbe probe_disc(const WorldMap& map, double x, double z, double radius, double y_max) {
  if (disc_out_of_bounds(map, x, z, radius)) {
    DiscProbe probe;
    probe.out_of_bounds = true;
    return probe;
  }
  return probe_disc_with_terrain(map, x, z, radius, y_max, terrain_max_over_disc(map, x, z, radius));
}

double ceiling_over_disc(const WorldMap& map, double x, double z, double radius, double y_from) {
  double best = kInf;
  map.scene().for_each_near(x, z, radius, [&](const Solid& s, std::uint32_t) {
    if (s.bounds.lo.y >= y_from - 1e-9 && s.overlaps_disc(x, z, radius)) best = std::min(best, s.bounds.lo.y);
  });
  return best;
}

bool is_walkable(const WorldMap& map, const Vec3& p, double agent_radius, double agent_height) {
  const DiscProbe probe = probe_disc(map, p.x, p.z, agent_radius, p.y + 0.1);
  if (probe.out_of_bounds || probe.center_over_lake || probe.terrain_too_high) return false;
  if (!std::isfinite(probe.support) || p.y - probe.support > 0.1) return false;
  return probe.obstruction_bottom >= probe.support + agent_height - 1e-9;
}

double raycast_static(const WorldMap& map, const Vec3& origin, const Vec3& dir, double max_range) {
  const double t = raycast_terrain(map, origin, dir, max_range);
  return map.scene().raycast_solids(origin, dir, t);
}

bool segment_blocked(const WorldMap& map, const Vec3& a, const Vec3& b) {
  // Always cast from the lexicographically smaller endpoint so the predicate
  // is exactly symmetric.
  const bool swap = std::tie(b.x, b.y, b.z) < std::tie(a.x, a.y, a.z);
  const Vec3& from = swap ? b : a;
  const Vec3& to = swap ? a : b;
  const Vec3 d = to - from;
  const double len = length(d);
  if (len < 1e-9) return false;
  const double t = raycast_static(map, from, d * (1.0 / len), len);
  return t < len - 1e-7;
}

double snap_to_support(const WorldMap& map, double x, double z, double y_hint, double radius, double tolerance) {
  const DiscProbe probe = probe_disc(map, x, z, radius, y_hint + tolerance);
  if (std::isfinite(probe.support)) return probe.support;
  return terrain_max_over_disc(map, x, z, radius);
}

// --- reachability ----------------------------------------------------------

ReachabilityReport check_supply_reachability(const WorldMap& map, const WalkerShape& shape, double pickup_radius) {
  ReachabilityReport report;
  constexpr double kStep = 0.5;
  const double half_step = 0.5 * kStep;
  const double max_rise = half_step * std::tan(deg_to_rad(shape.max_slope_deg));
  const double lo = -map.bounds + kStep;
  const int cols = static_cast<int>(std::floor((2.0 * map.bounds - 2.0 * kStep) / kStep)) + 1;
  auto col_x = [&](int i) { return lo + i * kStep; };
  auto column_key = [&](int i, int j) { return static_cast<std::uint32_t>(j) * cols + i; };

  // Visited standing heights per lattice column.
  std::unordered_map<std::uint32_t, std::vector<float>> visited;
  struct Node {
    int i, j;
    double feet;
  };
  std::deque<Node> queue;

  auto try_visit = [&](int i, int j, double feet) {
    auto& list = visited[column_key(i, j)];
    for (float f : list)
      if (std::abs(f - feet) < 0.02) return;
    list.push_back(static_cast<float>(feet));
    queue.push_back({i, j, feet});
  };

  // Terrain maxima are independent of height, so they are cached per lattice
  // point and per edge midpoint.
  const std::size_t n_points = static_cast<std::size_t>(cols) * cols;
  std::vector<float> point_terrain(n_points, std::numeric_limits<float>::quiet_NaN());
  std::vector<float> hmid_terrain(n_points, std::numeric_limits<float>::quiet_NaN());
  std::vector<float> vmid_terrain(n_points, std::numeric_limits<float>::quiet_NaN());
  auto cached_terrain = [&](std::vector<float>& cache, std::size_t idx, double x, double z) {
    if (std::isnan(cache[idx])) cache[idx] = static_cast<float>(terrain_max_over_disc(map, x, z, shape.radius));
    return static_cast<double>(cache[idx]);
  };

  // A half-step move; returns the new standing height or NaN when blocked.
  auto half_move = [&](double x, double z, double feet, double terrain) {
    if (disc_out_of_bounds(map, x, z, shape.radius)) return std::numeric_limits<double>::quiet_NaN();
    const DiscProbe p =
        probe_disc_with_terrain(map, x, z, shape.radius, feet + std::min(shape.step_up, max_rise), terrain);
    if (p.out_of_bounds || p.terrain_too_high || p.center_over_lake || !std::isfinite(p.support))
      return std::numeric_limits<double>::quiet_NaN();
    const double new_feet = p.support;
    if (p.obstruction_bottom < std::max(new_feet, feet) + shape.height - 1e-9)
      return std::numeric_limits<double>::quiet_NaN();
    return new_feet;
  };

  if (map.spawn_regions.empty()) {
    for (const SupplyBox& box : map.supply_boxes) report.unreachable_boxes.push_back(box.id);
    return report;
  }
  {
    const Rect r = map.spawn_regions.front().rect.rect();
    const int i = std::clamp(static_cast<int>(std::lround((r.center_x() - lo) / kStep)), 0, cols - 1);
    const int j = std::clamp(static_cast<int>(std::lround((r.center_z() - lo) / kStep)), 0, cols - 1);
    const double feet = snap_to_support(map, col_x(i), col_x(j), terrain_height_clamped(map, col_x(i), col_x(j)),
                                        shape.radius);
    if (is_walkable(map, {col_x(i), feet, col_x(j)}, shape.radius, shape.height)) try_visit(i, j, feet);
  }

  constexpr int kDi[4] = {1, -1, 0, 0};
  constexpr int kDj[4] = {0, 0, 1, -1};
  while (!queue.empty()) {
    const Node n = queue.front();
    queue.pop_front();
    ++report.reachable_nodes;
    const double x = col_x(n.i), z = col_x(n.j);
    for (int k = 0; k < 4; ++k) {
      const int ni = n.i + kDi[k], nj = n.j + kDj[k];
      if (ni < 0 || nj < 0 || ni >= cols || nj >= cols) continue;
      const int ei = std::min(n.i, ni), ej = std::min(n.j, nj);
      const std::size_t edge = static_cast<std::size_t>(ej) * cols + ei;
      const double mx = x + kDi[k] * half_step, mz = z + kDj[k] * half_step;
      const double mid_terrain = cached_terrain(kDi[k] != 0 ? hmid_terrain : vmid_terrain, edge, mx, mz);
      const double mid = half_move(mx, mz, n.feet, mid_terrain);
      if (std::isnan(mid)) continue;
      const double end_terrain =
          cached_terrain(point_terrain, static_cast<std::size_t>(nj) * cols + ni, col_x(ni), col_x(nj));
      const double end = half_move(col_x(ni), col_x(nj), mid, end_terrain);
      if (std::isnan(end)) continue;
      try_visit(ni, nj, end);
    }
  }

  auto reached_near = [&](const Vec3& target) {
    const int ci = static_cast<int>(std::lround((target.x - lo) / kStep));
    const int cj = static_cast<int>(std::lround((target.z - lo) / kStep));
    const int span = static_cast<int>(std::ceil(pickup_radius / kStep));
    for (int j = cj - span; j <= cj + span; ++j) {
      for (int i = ci - span; i <= ci + span; ++i) {
        if (i < 0 || j < 0 || i >= cols || j >= cols) continue;
        auto it = visited.find(column_key(i, j));
        if (it == visited.end()) continue;
        for (float f : it->second)
          if (distance({col_x(i), f, col_x(j)}, target) <= pickup_radius) return true;
      }
    }
    return false;
  };

  for (const SupplyBox& box : map.supply_boxes)
    if (!reached_near(box.location.vec())) report.unreachable_boxes.push_back(box.id);
  return report;
}

// --- validation ------------------------------------------------------------

void validate_map(const WorldMap& map) {
  auto fail = [](const std::string& what) { throw ValidationError(what); };
  if (map.size != 100 && map.size != 200 && map.size != 500) fail("size not in {100, 200, 500}");
  if (map.bounds > kMaxBounds) fail("bounds > 300");
  if (map.bounds * 2 != map.size) fail("bounds != size / 2");
  const Heightfield& hf = map.terrain;
  if (hf.resolution < 2 || hf.heights.size() != static_cast<std::size_t>(hf.resolution) * hf.resolution)
    fail("heightfield dimensions inconsistent");
  if (std::abs(hf.resolution * static_cast<double>(hf.cell_size) - 2.0 * map.bounds) > 1e-3)
    fail("heightfield does not cover map bounds");
  for (float h : hf.heights) {
    if (!std::isfinite(h)) fail("heightfield value not finite");
    if (std::abs(h) > kMaxTerrainHeight) fail("|height| > 20");
  }
  const Rect world{-double(map.bounds), -double(map.bounds), double(map.bounds), double(map.bounds)};
  for (std::size_t i = 0; i < map.buildings.size(); ++i) {
    const Building& b = map.buildings[i];
    if (b.storeys > kMaxStoreys) fail("storeys > 4");
    if (b.storeys < 1) fail("storeys < 1");
    const Rect fp = b.footprint.rect();
    if (fp.x0 < world.x0 || fp.z0 < world.z0 || fp.x1 > world.x1 || fp.z1 > world.z1)
      fail("building footprint outside bounds");
    for (std::size_t j = 0; j < i; ++j)
      if (fp.overlaps(map.buildings[j].footprint.rect())) fail("building footprints overlap");
    bool has_door = false;
    for (const Wall& w : b.walls)
      for (const Opening& op : w.openings)
        if (op.bottom <= b.base_y + 1e-3 && op.top - op.bottom >= 1.8) has_door = true;
    if (!has_door) fail("building without ground-level door");
    for (int k = 1; k < b.storeys; ++k) {
      const bool linked = std::any_of(b.stairs.begin(), b.stairs.end(), [&](const Ramp& r) {
        return std::abs(r.y_low - b.storey_floor(k - 1)) < 1e-3 && std::abs(r.y_high - b.storey_floor(k)) < 1e-3;
      });
      if (!linked) fail("storey without stair ramp");
    }
  }
  for (const Obstacle& ob : map.obstacles)
    if (ob.radius < 0.3f || ob.radius > 2.0f) fail("obstacle radius outside [0.3, 2.0]");
  for (const SpawnRegion& s : map.spawn_regions) {
    const Rect r = s.rect.rect();
    if (r.x0 < world.x0 || r.z0 < world.z0 || r.x1 > world.x1 || r.z1 > world.z1)
      fail("spawn region outside bounds");
  }
  for (const SupplyBox& box : map.supply_boxes) {
    if (box.quantity < 1) fail("supply quantity < 1");
    if (map.has_scene() && !is_walkable(map, box.location.vec(), 0.5))
      fail("supply box " + std::to_string(box.id) + " not walkable");
  }
}

}  // namespace wildscav
