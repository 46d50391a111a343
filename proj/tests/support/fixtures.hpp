#pragma once

#include <memory>

#include "wildscav/pcg.hpp"
#include "wildscav/tasks.hpp"
#include "wildscav/world.hpp"

namespace fixtures {

using namespace wildscav;

// Flat square map of the given size at height h, 2 m terrain cells, one
// spawn region around the origin. Scene built.
WorldMap flat_map(int size = 100, float h = 0.0f, std::uint32_t map_id = 900);

// Free-standing opaque slab (a storey-less building holding one wall).
void add_wall(WorldMap& map, Box3f box, std::vector<Opening> openings = {});

void add_tree(WorldMap& map, float cx, float cz, float radius, float height = 6.0f);

// Template building instantiated over `footprint`.
void add_building(WorldMap& map, const Rectf& footprint, int storeys, BuildingLayout layout = BuildingLayout::hall);

std::shared_ptr<const WorldMap> share(WorldMap map);

// Map store holding the fixture under its id (benchmark ids still resolve).
std::unique_ptr<MapStore> store_with(WorldMap map);

}  // namespace fixtures
