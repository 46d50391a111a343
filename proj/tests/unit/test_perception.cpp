#include <algorithm>
#include <chrono>
#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "wildscav/pcg.hpp"
#include "wildscav/perception.hpp"

using namespace wildscav;

TEST_CASE("cast_ray basics") {
  WorldMap m = fixtures::flat_map();
  fixtures::add_wall(m, {5.0f, 0.0f, -10.0f, 5.2f, 3.0f, 10.0f});
  SUBCASE("straight down from eye height") { CHECK(cast_ray(m, {-20.0, 1.6, 0.0}, {0, -1, 0}, 100.0) == doctest::Approx(1.6)); }
  SUBCASE("perpendicular wall 5 m away") { CHECK(cast_ray(m, {0.0, 1.6, 0.0}, {1, 0, 0}, 100.0) == doctest::Approx(5.0)); }
  SUBCASE("miss returns max_range") { CHECK(cast_ray(m, {0.0, 1.6, 0.0}, {0, 1, 0}, 37.0) == 37.0); }
  SUBCASE("result stays in (0, max_range]") {
    const double t = cast_ray(m, {0.0, 1.6, 0.0}, {1, 0, 0}, 2.0);
    CHECK(t == 2.0);
  }
}

TEST_CASE("render_depth examples") {
  WorldMap m = fixtures::flat_map();
  fixtures::add_wall(m, {4.0f, 0.0f, -30.0f, 4.2f, 10.0f, 30.0f});
  CameraSpec one;
  one.width = 1;
  one.height = 1;
  SUBCASE("1x1 camera facing a wall 4 m away") {
    const DepthMap d = render_depth(m, {{0.0, 1.6, 0.0}, 0.0, 0.0}, one);
    REQUIRE(d.values.size() == 1);
    CHECK(d.values[0] == doctest::Approx(4.0));
  }
  SUBCASE("open sky") {
    CameraSpec cam;
    const DepthMap d = render_depth(m, {{-20.0, 1.6, 0.0}, 180.0, 45.0}, cam);
    for (float v : d.values) CHECK(v == static_cast<float>(cam.max_range));
  }
}

TEST_CASE("render_depth equals per-pixel cast_ray") {
  WorldMap m = fixtures::flat_map();
  fixtures::add_building(m, {-5.0f, -5.0f, 5.0f, 5.0f}, 1);
  for (CameraMode mode : {CameraMode::frustum, CameraMode::panorama}) {
    CameraSpec cam;
    cam.mode = mode;
    cam.width = mode == CameraMode::panorama ? 36 : 10;
    cam.height = mode == CameraMode::panorama ? 6 : 10;
    const Pose pose{{0.5, 1.6, -1.0}, 30.0, -10.0};
    const DepthMap d = render_depth(m, pose, cam);
    REQUIRE(d.rows == cam.height);
    REQUIRE(d.cols == cam.width);
    for (int r = 0; r < d.rows; ++r)
      for (int c = 0; c < d.cols; ++c) {
        const Vec3 dir = pixel_direction(cam, pose.normalized(), r, c);
        CHECK(d.at(r, c) == static_cast<float>(cast_ray(m, pose.position, dir, cam.max_range)));
      }
  }
}

TEST_CASE("frustum pixel directions follow the pinhole model") {
  CameraSpec cam;
  const Pose pose{{0, 0, 0}, 0.0, 0.0};
  // Corner pixel centers sit at +-0.9 * tan(45 deg) on both image axes.
  const Vec3 tl = pixel_direction(cam, pose, 0, 0);
  CHECK(tl.z / tl.x == doctest::Approx(0.9));
  CHECK(tl.y / tl.x == doctest::Approx(0.9));
  const Vec3 br = pixel_direction(cam, pose, 9, 9);
  CHECK(br.z / br.x == doctest::Approx(-0.9));
  CHECK(br.y / br.x == doctest::Approx(-0.9));
}

TEST_CASE("panorama column azimuths span 360 degrees") {
  CameraSpec cam;
  cam.mode = CameraMode::panorama;
  cam.width = 8;
  cam.height = 1;
  const Pose pose{{0, 0, 0}, 10.0, 0.0};
  for (int c = 0; c < 8; ++c) {
    const Vec3 d = pixel_direction(cam, pose, 0, c);
    const double az = normalize_degrees(rad_to_deg(std::atan2(d.z, d.x)));
    CHECK(az == doctest::Approx(normalize_degrees(10.0 + 360.0 * (c + 0.5) / 8)));
  }
}

TEST_CASE("lidar_scan") {
  WorldMap m = fixtures::flat_map();
  SUBCASE("open field") {
    const LidarScan s = lidar_scan(m, {{0.0, 1.6, 0.0}, 0.0, 0.0}, 8, 50.0);
    REQUIRE(s.ranges.size() == 8);
    for (float r : s.ranges) CHECK(r == 50.0f);
  }
  SUBCASE("ring of obstacles at 10 m") {
    const int beams = 8;
    const double r = 0.5;
    for (int b = 0; b < beams; ++b) {
      const double a = deg_to_rad(360.0 * b / beams);
      fixtures::add_tree(m, static_cast<float>((10.0 + r) * std::cos(a)), static_cast<float>((10.0 + r) * std::sin(a)),
                         static_cast<float>(r));
    }
    const LidarScan s = lidar_scan(m, {{0.0, 1.6, 0.0}, 0.0, 0.0}, beams, 50.0);
    for (float v : s.ranges) CHECK(std::abs(v - 10.0) <= 2e-3);
  }
  SUBCASE("one beam equals cast_ray at yaw") {
    fixtures::add_wall(m, {-3.0f, 0.0f, 6.0f, 3.0f, 3.0f, 6.2f});
    const LidarScan s = lidar_scan(m, {{0.0, 1.6, 0.0}, 90.0, 0.0}, 1, 50.0);
    REQUIRE(s.ranges.size() == 1);
    CHECK(s.ranges[0] == static_cast<float>(cast_ray(m, {0.0, 1.6, 0.0}, direction_from_angles(90.0, 0.0), 50.0)));
    CHECK(s.ranges[0] == doctest::Approx(6.0));
  }
}

TEST_CASE("cast_ray agrees with the marching oracle on map 104") {
  const WorldMap m = generate_map(benchmark_config(104));
  const oracle::RayMarcher marcher(m);
  Rng rng(104);
  int checked = 0;
  while (checked < 1000) {
    const double x = rng.uniform(-50, 50), z = rng.uniform(-50, 50);
    const Vec3 o{x, terrain_height_clamped(m, x, z) + rng.uniform(0.2, 12.0), z};
    if (marcher.inside(o)) continue;
    Vec3 d{rng.normal(), rng.normal(), rng.normal()};
    d = normalized(d);
    const double got = cast_ray(m, o, d, 100.0);
    const double want = marcher.march(o, d, 100.0);
    CAPTURE(o.x);
    CAPTURE(o.y);
    CAPTURE(o.z);
    REQUIRE(std::abs(got - want) <= 2e-3);
    ++checked;
  }
}

TEST_CASE("panorama rotation permutes columns") {
  const WorldMap m = generate_map(benchmark_config(104));
  CameraSpec cam;
  cam.mode = CameraMode::panorama;
  cam.width = 24;
  cam.height = 4;
  const Vec3 eye{3.0, terrain_height_clamped(m, 3.0, 3.0) + 1.6, 3.0};
  const DepthMap a = render_depth(m, {eye, 20.0, 0.0}, cam);
  const DepthMap b = render_depth(m, {eye, 20.0 + 360.0 / 24 * 5, 0.0}, cam);
  for (int r = 0; r < cam.height; ++r)
    for (int c = 0; c < cam.width; ++c) CHECK(b.at(r, c) == doctest::Approx(a.at(r, (c + 5) % 24)).epsilon(1e-4));
}

TEST_CASE("adding geometry never increases depth") {
  WorldMap m = generate_map(benchmark_config(103));
  CameraSpec cam;
  cam.mode = CameraMode::panorama;
  cam.width = 36;
  cam.height = 9;
  const Vec3 eye{0.0, terrain_height_clamped(m, 0.0, 0.0) + 1.6, 0.0};
  const DepthMap before = render_depth(m, {eye, 0.0, 0.0}, cam);
  fixtures::add_tree(m, 4.0f, 1.0f, 1.0f);
  fixtures::add_wall(m, {-9.0f, -5.0f, -9.0f, 9.0f, 20.0f, -8.8f});
  const DepthMap after = render_depth(m, {eye, 0.0, 0.0}, cam);
  bool changed = false;
  for (std::size_t i = 0; i < before.values.size(); ++i) {
    CHECK(after.values[i] <= before.values[i]);
    changed = changed || after.values[i] < before.values[i];
  }
  CHECK(changed);
}

TEST_CASE("camera validation") {
  CameraSpec c;
  CHECK_NOTHROW(c.validate());
  c.width = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = CameraSpec{};
  c.horizontal_fov = 180.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = CameraSpec{};
  c.max_range = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("pose normalization") {
  const Pose p = Pose{{0, 0, 0}, -90.0, 120.0}.normalized();
  CHECK(p.yaw == doctest::Approx(270.0));
  CHECK(p.pitch == 89.0);
}

TEST_CASE("10x10 depth render on a 500 m map stays within 200 us") {
  const WorldMap m = generate_map(benchmark_config(8));
  CameraSpec cam;
  Rng rng(5);
  std::vector<Pose> poses;
  for (int i = 0; i < 200; ++i) {
    const double x = rng.uniform(-200, 200), z = rng.uniform(-200, 200);
    poses.push_back({{x, terrain_height_clamped(m, x, z) + 1.6, z}, rng.uniform(0, 360), rng.uniform(-20, 20)});
  }
  const auto t0 = std::chrono::steady_clock::now();
  float sink = 0;
  for (int rep = 0; rep < 5; ++rep)
    for (const Pose& p : poses) sink += render_depth(m, p, cam).values[0];
  const double us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count() / 1000.0;
  MESSAGE("mean render time " << us << " us");
  CHECK(sink > 0);
  CHECK(us <= 200.0);
}
