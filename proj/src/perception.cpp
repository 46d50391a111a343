#include "wildscav/perception.hpp"

#include <cmath>
#include <stdexcept>

namespace wildscav {

void CameraSpec::validate() const {
  if (width < 1 || height < 1) throw std::invalid_argument("camera width and height must be >= 1");
  if (mode == CameraMode::lidar && height != 1) throw std::invalid_argument("lidar camera height must be 1");
  if (mode == CameraMode::frustum && !(horizontal_fov > 0.0 && horizontal_fov < 180.0))
    throw std::invalid_argument("frustum horizontal_fov must lie in (0, 180)");
  if (mode != CameraMode::lidar && !(vertical_fov > 0.0 && vertical_fov < 180.0))
    throw std::invalid_argument("vertical_fov must lie in (0, 180)");
  if (!(max_range > 0.0) || !std::isfinite(max_range)) throw std::invalid_argument("max_range must be positive");
}

Pose Pose::normalized() const {
  Pose p = *this;
  p.yaw = normalize_degrees(yaw);
  p.pitch = std::clamp(pitch, -89.0, 89.0);
  return p;
}

double cast_ray(const WorldMap& map, const Vec3& origin, const Vec3& dir, double max_range) {
  const double t = raycast_static(map, origin, dir, max_range);
  return std::clamp(t, 1e-6, max_range);
}

void camera_basis(double yaw, double pitch, Vec3& forward, Vec3& right, Vec3& up) {
  forward = direction_from_angles(yaw, pitch);
  const double y = deg_to_rad(yaw);
  right = {std::sin(y), 0.0, -std::cos(y)};
  up = cross(forward, right);
}

Vec3 pixel_direction(const CameraSpec& camera, const Pose& pose, int row, int col) {
  switch (camera.mode) {
    case CameraMode::frustum: {
      Vec3 f, r, u;
      camera_basis(pose.yaw, pose.pitch, f, r, u);
      const double tx = std::tan(deg_to_rad(camera.horizontal_fov / 2.0));
      const double ty = std::tan(deg_to_rad(camera.vertical_fov / 2.0));
      const double px = (2.0 * (col + 0.5) / camera.width - 1.0) * tx;
      const double py = (1.0 - 2.0 * (row + 0.5) / camera.height) * ty;
      return normalized(f + r * px + u * py);
    }
    case CameraMode::panorama: {
      const double azimuth = pose.yaw + 360.0 * (col + 0.5) / camera.width;
      const double elevation = pose.pitch + camera.vertical_fov * (0.5 - (row + 0.5) / camera.height);
      return direction_from_angles(azimuth, elevation);
    }
    case CameraMode::lidar:
      return direction_from_angles(pose.yaw + 360.0 * col / camera.width, 0.0);
  }
  return direction_from_angles(pose.yaw, pose.pitch);
}

DepthMap render_depth(const WorldMap& map, const Pose& pose, const CameraSpec& camera) {
  camera.validate();
  DepthMap out;
  out.rows = camera.height;
  out.cols = camera.width;
  out.camera = camera;
  out.pose = pose.normalized();
  out.values.resize(static_cast<std::size_t>(out.rows) * out.cols);
  for (int i = 0; i < out.rows; ++i)
    for (int j = 0; j < out.cols; ++j)
      out.values[static_cast<std::size_t>(i) * out.cols + j] = static_cast<float>(
          cast_ray(map, out.pose.position, pixel_direction(camera, out.pose, i, j), camera.max_range));
  return out;
}

LidarScan lidar_scan(const WorldMap& map, const Pose& pose, int beams, double max_range) {
  if (beams < 1) throw std::invalid_argument("lidar beams must be >= 1");
  LidarScan scan;
  const Pose p = pose.normalized();
  for (int b = 0; b < beams; ++b) {
    const double azimuth = p.yaw + 360.0 * b / beams;
    scan.beam_azimuths.push_back(normalize_degrees(azimuth));
    scan.ranges.push_back(
        static_cast<float>(cast_ray(map, p.position, direction_from_angles(azimuth, 0.0), max_range)));
  }
  return scan;
}

}  // namespace wildscav
