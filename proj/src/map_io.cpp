#include "wildscav/map_io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <iterator>

#include "wildscav/bytes.hpp"

namespace wildscav {

namespace {

using Reader = ByteReader<FormatError>;

void put_rect(ByteWriter& w, const Rectf& r) {
  w.put(r.x0);
  w.put(r.z0);
  w.put(r.x1);
  w.put(r.z1);
}

Rectf get_rect(Reader& r) {
  Rectf out;
  out.x0 = r.get<float>();
  out.z0 = r.get<float>();
  out.x1 = r.get<float>();
  out.z1 = r.get<float>();
  return out;
}

template <typename T>
T checked_count(std::size_t n, const char* what) {
  if (n > std::numeric_limits<T>::max()) throw ValidationError(std::string("too many ") + what);
  return static_cast<T>(n);
}

}  // namespace

std::vector<std::uint8_t> encode_map(const WorldMap& map) {
  ByteWriter w;
  w.put_bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>("WSCV"), 4));
  w.put(kMapFormatVersion);
  w.put(map.map_id);
  w.put(static_cast<std::uint16_t>(map.size));
  w.put(static_cast<std::uint16_t>(map.bounds));

  w.put(checked_count<std::uint16_t>(map.terrain.resolution, "heightfield cells"));
  w.put(map.terrain.cell_size);
  for (float h : map.terrain.heights) w.put(h);

  w.put(checked_count<std::uint16_t>(map.buildings.size(), "buildings"));
  for (const Building& b : map.buildings) {
    const auto rec = w.begin_record();
    put_rect(w, b.footprint);
    w.put(b.storeys);
    w.put(checked_count<std::uint16_t>(b.walls.size(), "walls"));
    for (const Wall& wall : b.walls) {
      const auto wrec = w.begin_record();
      const Box3f& bx = wall.box;
      for (float v : {bx.x0, bx.y0, bx.z0, bx.x1, bx.y1, bx.z1}) w.put(v);
      w.put(checked_count<std::uint16_t>(wall.openings.size(), "openings"));
      for (const Opening& op : wall.openings) {
        w.put(op.start);
        w.put(op.end);
        w.put(op.bottom);
        w.put(op.top);
      }
      w.finish_record(wrec);
    }
    w.put(checked_count<std::uint8_t>(b.stairs.size(), "stairs"));
    for (const Ramp& r : b.stairs) {
      const auto rrec = w.begin_record();
      put_rect(w, r.rect);
      w.put(r.axis);
      w.put(r.rise_dir);
      w.put(r.y_low);
      w.put(r.y_high);
      w.finish_record(rrec);
    }
    w.put(b.base_y);
    w.put(b.template_id);
    w.finish_record(rec);
  }

  w.put(checked_count<std::uint16_t>(map.obstacles.size(), "obstacles"));
  for (const Obstacle& ob : map.obstacles) {
    const auto rec = w.begin_record();
    w.put(static_cast<std::uint8_t>(ob.kind));
    w.put(ob.cx);
    w.put(ob.cz);
    w.put(ob.radius);
    w.put(ob.height);
    w.put(ob.base_y);
    w.finish_record(rec);
  }

  w.put(checked_count<std::uint16_t>(map.supply_boxes.size(), "supply boxes"));
  for (const SupplyBox& s : map.supply_boxes) {
    const auto rec = w.begin_record();
    w.put(s.location.x);
    w.put(s.location.y);
    w.put(s.location.z);
    w.put(s.quantity);
    w.put(static_cast<std::uint8_t>(s.indoor));
    w.finish_record(rec);
  }

  w.put(checked_count<std::uint8_t>(map.spawn_regions.size(), "spawn regions"));
  for (const SpawnRegion& s : map.spawn_regions) {
    const auto rec = w.begin_record();
    put_rect(w, s.rect);
    w.finish_record(rec);
  }

  const auto gen = w.begin_record();
  w.put(map.rng_algorithm);
  w.put(map.seed);
  w.finish_record(gen);
  return std::move(w.bytes());
}

WorldMap decode_map(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "WSCV", 4) != 0) throw FormatError("bad magic header");
  r.take(4);
  const auto version = r.get<std::uint16_t>();
  if (version != kMapFormatVersion) throw FormatError("unsupported map version " + std::to_string(version));

  WorldMap map;
  map.map_id = r.get<std::uint32_t>();
  map.size = r.get<std::uint16_t>();
  map.bounds = r.get<std::uint16_t>();

  map.terrain.resolution = r.get<std::uint16_t>();
  map.terrain.cell_size = r.get<float>();
  const std::size_t cells = static_cast<std::size_t>(map.terrain.resolution) * map.terrain.resolution;
  if (r.remaining() < cells * sizeof(float)) throw FormatError("truncated heightfield");
  map.terrain.heights.resize(cells);
  for (float& h : map.terrain.heights) h = r.get<float>();

  const auto n_buildings = r.get<std::uint16_t>();
  for (int i = 0; i < n_buildings; ++i) {
    Reader rec = r.record();
    Building b;
    b.footprint = get_rect(rec);
    b.storeys = rec.get<std::uint8_t>();
    const auto n_walls = rec.get<std::uint16_t>();
    for (int k = 0; k < n_walls; ++k) {
      Reader wr = rec.record();
      Wall wall;
      wall.box.x0 = wr.get<float>();
      wall.box.y0 = wr.get<float>();
      wall.box.z0 = wr.get<float>();
      wall.box.x1 = wr.get<float>();
      wall.box.y1 = wr.get<float>();
      wall.box.z1 = wr.get<float>();
      const auto n_open = wr.get<std::uint16_t>();
      for (int o = 0; o < n_open; ++o) {
        Opening op;
        op.start = wr.get<float>();
        op.end = wr.get<float>();
        op.bottom = wr.get<float>();
        op.top = wr.get<float>();
        wall.openings.push_back(op);
      }
      b.walls.push_back(std::move(wall));
    }
    const auto n_stairs = rec.get<std::uint8_t>();
    for (int k = 0; k < n_stairs; ++k) {
      Reader rr = rec.record();
      Ramp ramp;
      ramp.rect = get_rect(rr);
      ramp.axis = rr.get<std::uint8_t>();
      ramp.rise_dir = rr.get<std::int8_t>();
      ramp.y_low = rr.get<float>();
      ramp.y_high = rr.get<float>();
      if (ramp.axis > 1 || (ramp.rise_dir != 1 && ramp.rise_dir != -1)) throw FormatError("bad ramp orientation");
      b.stairs.push_back(ramp);
    }
    b.base_y = rec.get<float>();
    b.template_id = rec.get<std::uint8_t>();
    map.buildings.push_back(std::move(b));
  }

  const auto n_obstacles = r.get<std::uint16_t>();
  for (int i = 0; i < n_obstacles; ++i) {
    Reader rec = r.record();
    Obstacle ob;
    const auto kind = rec.get<std::uint8_t>();
    if (kind > 1) throw FormatError("bad obstacle kind");
    ob.kind = static_cast<ObstacleKind>(kind);
    ob.cx = rec.get<float>();
    ob.cz = rec.get<float>();
    ob.radius = rec.get<float>();
    ob.height = rec.get<float>();
    ob.base_y = rec.get<float>();
    map.obstacles.push_back(ob);
  }

  const auto n_supplies = r.get<std::uint16_t>();
  for (int i = 0; i < n_supplies; ++i) {
    Reader rec = r.record();
    SupplyBox s;
    s.id = static_cast<std::uint32_t>(i);
    s.location.x = rec.get<float>();
    s.location.y = rec.get<float>();
    s.location.z = rec.get<float>();
    s.quantity = rec.get<std::uint16_t>();
    s.indoor = rec.get<std::uint8_t>() != 0;
    map.supply_boxes.push_back(s);
  }

  const auto n_spawns = r.get<std::uint8_t>();
  for (int i = 0; i < n_spawns; ++i) {
    Reader rec = r.record();
    map.spawn_regions.push_back({get_rect(rec)});
  }

  if (!r.at_end()) {
    Reader gen = r.record();
    map.rng_algorithm = gen.get<std::uint8_t>();
    map.seed = gen.get<std::uint64_t>();
  }
  if (!r.at_end()) throw FormatError("trailing bytes after map data");

  for (const float h : map.terrain.heights)
    if (!std::isfinite(h)) throw ValidationError("heightfield value not finite");
  for (const Building& b : map.buildings)
    if (b.storeys > kMaxStoreys) throw ValidationError("storeys > 4");
  if (map.terrain.resolution < 2 || map.terrain.cell_size <= 0 || map.bounds <= 0)
    throw ValidationError("heightfield does not cover map bounds");
  map.build_scene();
  validate_map(map);
  return map;
}

void save_map(const WorldMap& map, const std::filesystem::path& path) {
  const auto bytes = encode_map(map);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

WorldMap load_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_map(bytes);
}

}  // namespace wildscav
