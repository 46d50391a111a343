#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wildscav/tasks.hpp"

namespace wildscav {

enum class BenchMode : std::uint8_t { in_process, loopback };

const char* bench_mode_name(BenchMode m);

struct BenchmarkResult {
  BenchMode mode = BenchMode::in_process;
  int processes = 0;
  int agents = 0;
  double total_fps = 0.0;            // agent steps per second over all instances
  double duration = 0.0;             // wall seconds
  double instance_fps = 0.0;         // ticks per second of one instance, averaged
  double agent_steps_per_sec = 0.0;  // instance_fps * agents
  std::uint64_t ticks = 0;           // over all instances
};

struct BenchOptions {
  std::uint32_t map_id = 101;
  std::vector<int> processes{1, 2, 4, 6, 8, 10};
  std::vector<int> agents{1, 5, 10};
  double seconds = 30.0;  // per (processes, agents) pair and mode
  std::vector<BenchMode> modes{BenchMode::in_process, BenchMode::loopback};
  TaskType task = TaskType::supply_gather_max;
  CameraSpec camera;
  SimParams params;
};

// Each "process" is a thread running one independent instance driven by
// no-op actions, either in-process or through a loopback TCP server.
// Non-positive seconds gives an empty table.
std::vector<BenchmarkResult> bench_throughput(MapStore& maps, const BenchOptions& options);

std::string bench_csv(const std::vector<BenchmarkResult>& rows);

}  // namespace wildscav
