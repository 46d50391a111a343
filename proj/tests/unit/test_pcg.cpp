#include <cmath>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "wildscav/map_io.hpp"
#include "wildscav/pcg.hpp"

using namespace wildscav;

namespace {

struct Row {
  std::uint32_t id;
  int size, houses;
  HouseDensity density;
  int lo, hi;
};

// The benchmark map table.
const Row kTable[] = {
    {8, 500, 12, HouseDensity::low, 2, 3},   {14, 500, 15, HouseDensity::high, 2, 3},
    {101, 200, 4, HouseDensity::low, 1, 1},  {102, 200, 8, HouseDensity::high, 2, 3},
    {103, 100, 2, HouseDensity::low, 1, 1},  {104, 100, 4, HouseDensity::high, 2, 3},
};

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("benchmark configs match the map table") {
  const auto configs = benchmark_configs();
  REQUIRE(configs.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    const Row& r = kTable[i];
    const PcgConfig& c = configs[i];
    CAPTURE(r.id);
    CHECK(c.map_id == r.id);
    CHECK(c.size == r.size);
    CHECK(c.house_count == r.houses);
    CHECK(c.house_density == r.density);
    CHECK(c.storey_range == IntRange{r.lo, r.hi});
    CHECK(benchmark_config(r.id) == c);
  }
  CHECK(benchmark_config(14).house_count == 15);
  CHECK(benchmark_config(14).house_density == HouseDensity::high);
  CHECK(benchmark_config(101).storey_range == IntRange{1, 1});
  CHECK_THROWS_AS(benchmark_config(999), ConfigError);
}

TEST_CASE("map 103 has two one-storey buildings") {
  const WorldMap m = generate_map(benchmark_config(103));
  CHECK(m.size == 100);
  REQUIRE(m.buildings.size() == 2);
  for (const Building& b : m.buildings) CHECK(b.storeys == 1);
}

TEST_CASE("zero houses gives terrain and supplies only") {
  PcgConfig c = benchmark_config(103);
  c.house_count = 0;
  c.supply_profile = default_supply_profile(c.size, 0);
  const WorldMap m = generate_map(c);
  CHECK(m.buildings.empty());
  CHECK_FALSE(m.supply_boxes.empty());
  for (const SupplyBox& b : m.supply_boxes) CHECK_FALSE(b.indoor);
}

TEST_CASE("different seeds give different maps") {
  PcgConfig a = benchmark_config(104), b = a;
  a.seed = 7;
  b.seed = 8;
  const WorldMap ma = generate_map(a), mb = generate_map(b);
  CHECK_FALSE(ma == mb);
  bool moved = false;
  for (std::size_t i = 0; i < ma.buildings.size(); ++i)
    moved = moved || !(ma.buildings[i].footprint == mb.buildings[i].footprint);
  CHECK(moved);
}

TEST_CASE("generation is byte-deterministic") {
  for (const PcgConfig& c : benchmark_configs()) {
    CAPTURE(c.map_id);
    CHECK(encode_map(generate_map(c)) == encode_map(generate_map(c)));
  }
}

TEST_CASE("house density sets the minimum footprint gap") {
  for (const PcgConfig& base : benchmark_configs()) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      PcgConfig c = base;
      c.seed = seed;
      const WorldMap m = generate_map(c);
      const double gap = c.house_density == HouseDensity::low ? 8.0 : 2.0;
      for (std::size_t i = 0; i < m.buildings.size(); ++i)
        for (std::size_t j = i + 1; j < m.buildings.size(); ++j)
          CHECK(rect_gap(m.buildings[i].footprint.rect(), m.buildings[j].footprint.rect()) >= gap - 1e-4);
    }
  }
}

TEST_CASE("indoor boxes hold strictly more than outdoor ones") {
  for (const PcgConfig& c : benchmark_configs()) {
    const WorldMap m = generate_map(c);
    int max_out = 0, min_in = 1 << 30;
    for (const SupplyBox& b : m.supply_boxes) {
      if (b.indoor) {
        min_in = std::min<int>(min_in, b.quantity);
        CHECK(b.quantity >= c.supply_profile.indoor_quantity_range.lo);
        CHECK(b.quantity <= c.supply_profile.indoor_quantity_range.hi);
      } else {
        max_out = std::max<int>(max_out, b.quantity);
        CHECK(b.quantity >= c.supply_profile.outdoor_quantity_range.lo);
        CHECK(b.quantity <= c.supply_profile.outdoor_quantity_range.hi);
      }
    }
    if (c.house_count > 0) CHECK(min_in > max_out);
  }
}

TEST_CASE("map 101 holds more than 200 supplies") {
  CHECK(total_supply_quantity(generate_map(benchmark_config(101))) > 200);
}

TEST_CASE("place_supplies") {
  WorldMap m = generate_map(benchmark_config(103));
  SUBCASE("empty profile") {
    SupplyProfile p;
    Rng rng(1);
    CHECK(place_supplies(m, p, rng).supply_boxes.empty());
  }
  SUBCASE("indoor boxes need buildings") {
    SupplyProfile p;
    p.indoor_box_count = 3;
    Rng rng(1);
    CHECK_THROWS_AS(place_supplies(fixtures::flat_map(), p, rng), ConfigError);
  }
  SUBCASE("every box is walkable") {
    for (const SupplyBox& b : m.supply_boxes) CHECK(is_walkable(m, b.location.vec(), 0.3));
  }
}

TEST_CASE("truncated Gaussian matches its analytic central mass") {
  // 200 m map, sigma = 0.5 * 100: per axis P(|x| <= 50 | |x| <= 100).
  const double per_axis = (normal_cdf(1.0) - normal_cdf(-1.0)) / (normal_cdf(2.0) - normal_cdf(-2.0));
  const double expected = per_axis * per_axis;
  Rng rng(2024);
  int central = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    double x = 0, z = 0;
    sample_truncated_gaussian(rng, 50.0, 100.0, x, z);
    REQUIRE(std::abs(x) <= 100.0);
    REQUIRE(std::abs(z) <= 100.0);
    if (std::abs(x) <= 50.0 && std::abs(z) <= 50.0) ++central;
  }
  CHECK(expected == doctest::Approx(0.5117).epsilon(1e-3));
  CHECK(static_cast<double>(central) / n == doctest::Approx(expected).epsilon(0.04));
}

TEST_CASE("asset pool offers three templates per storey count") {
  for (int s = 1; s <= 4; ++s) {
    const auto ts = AssetPool::standard().for_storeys(s);
    CHECK(ts.size() >= 3);
    std::set<int> layouts;
    for (const BuildingTemplate& t : ts) {
      layouts.insert(static_cast<int>(t.layout));
      WorldMap m = fixtures::flat_map();
      m.buildings.push_back(AssetPool::instantiate(t, {-10.0f, -10.0f, 10.0f, 8.0f}, 0.0f));
      m.spawn_regions = {{{-45.0f, -45.0f, -35.0f, -35.0f}}};
      m.build_scene();
      CHECK_NOTHROW(validate_map(m));
    }
    CHECK(layouts.size() >= 3);
  }
}

TEST_CASE("placement failure is a generation error") {
  PcgConfig c = benchmark_config(103);
  c.house_count = 60;
  CHECK_THROWS_AS(generate_map(c), GenerationError);
}

TEST_CASE("config validation and JSON") {
  PcgConfig c = benchmark_config(102);
  CHECK(config_from_json(config_to_json(c)) == c);
  PcgConfig bad = c;
  bad.storey_range = {0, 2};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.size = 300;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.supply_profile.indoor_quantity_range = {2, 4};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"size", "big"}}), ConfigError);
}
