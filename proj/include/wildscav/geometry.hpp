#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

namespace wildscav {

// World frame is y-up; x and z are horizontal, units are meters.
struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr bool operator==(const Vec3&) const = default;
};

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double length(const Vec3& v) { return std::sqrt(dot(v, v)); }

inline double distance(const Vec3& a, const Vec3& b) { return length(a - b); }

inline double horizontal_distance(const Vec3& a, const Vec3& b) {
  return std::hypot(a.x - b.x, a.z - b.z);
}

inline Vec3 normalized(const Vec3& v) {
  const double n = length(v);
  return n > 0.0 ? v * (1.0 / n) : v;
}

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

// Maps any angle to [0, 360).
inline double normalize_degrees(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r < 0.0) r += 360.0;
  if (r >= 360.0) r -= 360.0;
  return r;
}

// Maps any angle to (-180, 180].
inline double wrap_degrees_signed(double deg) {
  double r = normalize_degrees(deg);
  return r > 180.0 ? r - 360.0 : r;
}

// Unit vector for a horizontal bearing (0 deg = +x, increasing toward +z)
// and an elevation above the horizontal plane.
inline Vec3 direction_from_angles(double bearing_deg, double elevation_deg) {
  const double b = deg_to_rad(bearing_deg);
  const double e = deg_to_rad(elevation_deg);
  return {std::cos(e) * std::cos(b), std::sin(e), std::cos(e) * std::sin(b)};
}

// Axis-aligned rectangle in the x/z plane.
struct Rect {
  double x0 = 0.0;
  double z0 = 0.0;
  double x1 = 0.0;
  double z1 = 0.0;

  double width() const { return x1 - x0; }
  double depth() const { return z1 - z0; }
  double center_x() const { return 0.5 * (x0 + x1); }
  double center_z() const { return 0.5 * (z0 + z1); }
  bool contains(double x, double z) const { return x >= x0 && x <= x1 && z >= z0 && z <= z1; }
  Rect expanded(double m) const { return {x0 - m, z0 - m, x1 + m, z1 + m}; }
  bool overlaps(const Rect& o) const {
    return x0 < o.x1 && o.x0 < x1 && z0 < o.z1 && o.z0 < z1;
  }
  bool operator==(const Rect&) const = default;
};

// Separation between two rectangles (0 when they touch or overlap).
inline double rect_gap(const Rect& a, const Rect& b) {
  const double dx = std::max({0.0, a.x0 - b.x1, b.x0 - a.x1});
  const double dz = std::max({0.0, a.z0 - b.z1, b.z0 - a.z1});
  return std::hypot(dx, dz);
}

// Squared distance from a point to a rectangle in the x/z plane.
inline double point_rect_dist2(double x, double z, const Rect& r) {
  const double dx = std::max({0.0, r.x0 - x, x - r.x1});
  const double dz = std::max({0.0, r.z0 - z, z - r.z1});
  return dx * dx + dz * dz;
}

struct Aabb {
  Vec3 lo;
  Vec3 hi;

  Rect footprint() const { return {lo.x, lo.z, hi.x, hi.z}; }
  bool contains(const Vec3& p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z && p.z <= hi.z;
  }
  bool operator==(const Aabb&) const = default;
};

// Euclidean distance from a point to a box (0 inside).
inline double point_box_distance(const Vec3& p, const Aabb& b) {
  const double dx = std::max({0.0, b.lo.x - p.x, p.x - b.hi.x});
  const double dy = std::max({0.0, b.lo.y - p.y, p.y - b.hi.y});
  const double dz = std::max({0.0, b.lo.z - p.z, p.z - b.hi.z});
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace wildscav
