#include "fixtures.hpp"

namespace fixtures {

WorldMap flat_map(int size, float h, std::uint32_t map_id) {
  WorldMap m;
  m.map_id = map_id;
  m.size = size;
  m.bounds = size / 2;
  m.terrain.cell_size = 2.0f;
  m.terrain.resolution = size / 2;
  m.terrain.heights.assign(static_cast<std::size_t>(m.terrain.resolution) * m.terrain.resolution, h);
  m.spawn_regions.push_back({{-10.0f, -10.0f, 10.0f, 10.0f}});
  m.build_scene();
  return m;
}

void add_wall(WorldMap& map, Box3f box, std::vector<Opening> openings) {
  Building b;
  b.footprint = {box.x0, box.z0, box.x1, box.z1};
  b.base_y = -50.0f;  // the lone slab sits far below ground
  b.storeys = 0;
  b.walls.push_back({box, std::move(openings)});
  map.buildings.push_back(b);
  map.build_scene();
}

void add_tree(WorldMap& map, float cx, float cz, float radius, float height) {
  map.obstacles.push_back({ObstacleKind::tree, cx, cz, radius, height, -1.0f});
  map.build_scene();
}

void add_building(WorldMap& map, const Rectf& footprint, int storeys, BuildingLayout layout) {
  for (const BuildingTemplate& t : AssetPool::standard().for_storeys(storeys)) {
    if (t.layout != layout) continue;
    map.buildings.push_back(AssetPool::instantiate(t, footprint, 0.0f));
    map.build_scene();
    return;
  }
  throw std::logic_error("no template");
}

std::shared_ptr<const WorldMap> share(WorldMap map) { return std::make_shared<const WorldMap>(std::move(map)); }

std::unique_ptr<MapStore> store_with(WorldMap map) {
  auto store = std::make_unique<MapStore>();
  store->add(share(std::move(map)));
  return store;
}

}  // namespace fixtures
