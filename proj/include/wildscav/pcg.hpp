#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "wildscav/rng.hpp"
#include "wildscav/world.hpp"

namespace wildscav {

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kMaxPlacementAttempts = 10000;

enum class HouseDensity : std::uint8_t { low, high };
enum class ObstacleDensity : std::uint8_t { none, low, high };

struct IntRange {
  int lo = 0;
  int hi = 0;
  bool operator==(const IntRange&) const = default;
};

struct SupplyProfile {
  int outdoor_box_count = 0;
  int indoor_box_count = 0;
  IntRange outdoor_quantity_range{1, 3};
  IntRange indoor_quantity_range{5, 10};
  double radial_sigma_fraction = 0.5;
  bool operator==(const SupplyProfile&) const = default;
};

// Box counts scale with the map area; indoor boxes are dropped when there
// are no houses.
SupplyProfile default_supply_profile(int size, int house_count);

struct PcgConfig {
  std::uint32_t map_id = 0;
  int size = 100;
  int house_count = 0;
  HouseDensity house_density = HouseDensity::low;
  IntRange storey_range{1, 1};
  ObstacleDensity obstacle_density = ObstacleDensity::low;
  SupplyProfile supply_profile;
  std::uint64_t seed = 0;
  int lake_count = -1;  // -1: one lake on 500 m maps, none otherwise

  // Throws ConfigError on inconsistent values.
  void validate() const;
  bool operator==(const PcgConfig&) const = default;
};

PcgConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const PcgConfig& c);

enum class BuildingLayout : std::uint8_t { hall = 0, split = 1, two_door = 2 };

struct BuildingTemplate {
  std::uint8_t id = 0;  // layout index, stored as Building::template_id
  int storeys = 1;
  BuildingLayout layout = BuildingLayout::hall;
};

// Predetermined building templates, three layouts for each storey count.
class AssetPool {
 public:
  static const AssetPool& standard();

  const std::vector<BuildingTemplate>& templates() const { return templates_; }
  std::vector<BuildingTemplate> for_storeys(int storeys) const;

  // Footprint size limits used by the generator.
  static IntRange footprint_range(int storeys);

  // Builds walls, doors, partitions and stair ramps inside `footprint`.
  static Building instantiate(const BuildingTemplate& t, const Rectf& footprint, float base_y);

 private:
  std::vector<BuildingTemplate> templates_;
};

// Full generation; deterministic in the config (seed included).
WorldMap generate_map(const PcgConfig& config);

// Samples supply boxes into `map` (existing boxes are replaced). The map
// scene must be built.
WorldMap place_supplies(WorldMap map, const SupplyProfile& profile, Rng& rng);

int total_supply_quantity(const WorldMap& map);

// Point from a 2D Gaussian centered at the origin with deviation sigma,
// redrawn until both coordinates lie within [-limit, limit].
void sample_truncated_gaussian(Rng& rng, double sigma, double limit, double& x, double& z);

// The six benchmark maps: 008, 014, 101, 102, 103, 104.
std::vector<PcgConfig> benchmark_configs();
// Throws ConfigError for an unknown id.
PcgConfig benchmark_config(std::uint32_t map_id);

}  // namespace wildscav
