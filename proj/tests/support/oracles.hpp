#pragma once

#include <optional>
#include <vector>

#include "wildscav/tasks.hpp"
#include "wildscav/world.hpp"

namespace oracle {

using namespace wildscav;

// Bilinear terrain surface from the raw samples, indices clamped.
double terrain_height(const WorldMap& map, double x, double z);

bool solid_contains(const Solid& s, const Vec3& p);

// Brute-force ray marcher: 1 mm steps, lengthened only where a conservative
// distance bound proves the step cannot cross geometry.
class RayMarcher {
 public:
  explicit RayMarcher(const WorldMap& map, double step = 1e-3);

  bool inside(const Vec3& p) const;
  double distance_bound(const Vec3& p) const;
  double march(const Vec3& origin, const Vec3& dir, double max_range) const;

 private:
  const std::vector<std::size_t>& bucket(int bx, int bz) const;

  const WorldMap& map_;
  double step_;
  double slope_factor_ = 1.0;  // sqrt(1 + L^2) for terrain Lipschitz bound L
  double origin_ = 0.0;
  int side_ = 0;
  std::vector<std::vector<std::size_t>> buckets_;
  std::vector<std::size_t> empty_;
};

inline constexpr double kBucket = 4.0;

// Per-tick reward replay written directly from the reward snippets.
class RewardReplay {
 public:
  RewardReplay(TaskType task, std::optional<Vec3> target, std::size_t agents);
  std::vector<int> step(const std::vector<Vec3>& positions, const std::vector<int>& supplies);

 private:
  TaskType task_;
  std::optional<Vec3> target_;
  std::vector<int> collected_;
};

// Largest depth by which a standing cylinder overlaps static geometry
// (<= 0 when clear). Boxes and cylinders are exact; ramps and terrain are
// sampled over the disc.
double penetration_depth(const WorldMap& map, const Vec3& feet, double radius, double height);

}  // namespace oracle
