#pragma once

#include <vector>

#include "wildscav/geometry.hpp"
#include "wildscav/world.hpp"

namespace wildscav {

enum class CameraMode : std::uint8_t { frustum = 0, panorama = 1, lidar = 2 };

struct CameraSpec {
  CameraMode mode = CameraMode::frustum;
  int width = 10;   // pixels; beam count in lidar mode
  int height = 10;  // pixels; forced to 1 in lidar mode
  double horizontal_fov = 90.0;
  double vertical_fov = 90.0;
  double max_range = 100.0;

  // Throws std::invalid_argument when the spec is unusable.
  void validate() const;
  bool operator==(const CameraSpec&) const = default;
};

// Camera pose; `position` is the eye point.
struct Pose {
  Vec3 position;
  double yaw = 0.0;    // degrees, 0 = +x, increasing toward +z
  double pitch = 0.0;  // degrees above the horizon

  // Normalizes yaw to [0, 360) and clamps pitch to [-89, 89].
  Pose normalized() const;
};

struct DepthMap {
  int rows = 0;
  int cols = 0;
  std::vector<float> values;  // row-major, row 0 at the top
  CameraSpec camera;
  Pose pose;

  float at(int row, int col) const { return values[static_cast<std::size_t>(row) * cols + col]; }
};

struct LidarScan {
  std::vector<float> ranges;
  std::vector<double> beam_azimuths;  // degrees
  double beam_elevation = 0.0;
};

// Distance to the first static hit along a unit direction, clamped to
// (0, max_range]; max_range means no hit.
double cast_ray(const WorldMap& map, const Vec3& origin, const Vec3& dir, double max_range);

// Camera basis: forward, right (image +column) and up (image -row).
void camera_basis(double yaw, double pitch, Vec3& forward, Vec3& right, Vec3& up);

// Unit ray direction through the center of pixel (row, col).
Vec3 pixel_direction(const CameraSpec& camera, const Pose& pose, int row, int col);

DepthMap render_depth(const WorldMap& map, const Pose& pose, const CameraSpec& camera);

LidarScan lidar_scan(const WorldMap& map, const Pose& pose, int beams, double max_range);

}  // namespace wildscav
