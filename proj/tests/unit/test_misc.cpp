#include <cmath>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "wildscav/bench.hpp"
#include "wildscav/rng.hpp"

using namespace wildscav;

TEST_CASE("rng") {
  Rng a(42), b(42), c(42, 1), d(43);
  bool stream_differs = false, seed_differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    stream_differs = stream_differs || x != c.next_u64();
    seed_differs = seed_differs || x != d.next_u64();
  }
  CHECK(stream_differs);
  CHECK(seed_differs);

  Rng r(7);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const auto k = r.uniform_int(-3, 3);
    REQUIRE(k >= -3);
    REQUIRE(k <= 3);
    const double z = r.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
  CHECK(r.uniform_int(5, 5) == 5);
}

TEST_CASE("throughput bench") {
  auto store = fixtures::store_with(fixtures::flat_map());
  BenchOptions o;
  o.map_id = 900;
  o.camera.width = 4;
  o.camera.height = 4;
  o.seconds = 0.0;
  CHECK(bench_throughput(*store, o).empty());

  o.seconds = 0.2;
  o.processes = {1, 2};
  o.agents = {1, 3};
  const auto rows = bench_throughput(*store, o);
  REQUIRE(rows.size() == 8);
  for (const BenchmarkResult& r : rows) {
    CHECK(r.total_fps > 0.0);
    CHECK(r.ticks > 0);
    CHECK(r.agent_steps_per_sec == doctest::Approx(r.instance_fps * r.agents));
    CHECK(r.total_fps == doctest::Approx(r.instance_fps * r.processes * r.agents).epsilon(1e-9));
  }
  std::istringstream csv(bench_csv(rows));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "processes,agents,total_fps,duration,mode,instance_fps,agent_steps_per_sec");
  int lines = 0;
  while (std::getline(csv, line)) lines += !line.empty();
  CHECK(lines == 8);
}
