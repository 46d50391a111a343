#include "wildscav/bench.hpp"

#include <atomic>
#include <chrono>
#include <sstream>
#include <thread>

#include "wildscav/net.hpp"

namespace wildscav {

namespace {

using Clock = std::chrono::steady_clock;

TaskSpec bench_spec(const BenchOptions& o, int agents, int instance) {
  TaskSpec spec;
  spec.task_type = o.task;
  spec.map_id = o.map_id;
  spec.num_agents = agents;
  spec.camera = o.camera;
  spec.seed = static_cast<std::uint64_t>(instance) * 1000;
  return spec;
}

std::uint64_t run_in_process(MapStore& maps, const BenchOptions& o, int agents, int instance,
                             const std::atomic<bool>& stop) {
  const TaskSpec spec = bench_spec(o, agents, instance);
  const auto map = maps.get(spec.map_id);
  const std::vector<Action> noop(static_cast<std::size_t>(agents));
  std::uint64_t ticks = 0;
  for (std::uint64_t round = 0; !stop.load(std::memory_order_relaxed); ++round) {
    TaskSpec s = spec;
    s.seed += round;
    Episode ep(s, map, o.params);
    (void)ep.observations();
    while (!ep.done() && !stop.load(std::memory_order_relaxed)) {
      ep.step(noop);
      (void)ep.observations();
      ++ticks;
    }
  }
  return ticks;
}

std::uint64_t run_loopback(const Endpoint& ep, const BenchOptions& o, int agents, int instance,
                           const std::atomic<bool>& stop) {
  RemoteClient client(ep);
  RemoteEpisode remote(client, bench_spec(o, agents, instance));
  const std::vector<Action> noop(static_cast<std::size_t>(agents));
  std::uint64_t ticks = 0;
  while (!stop.load(std::memory_order_relaxed)) {
    if (remote.done()) remote.reset();
    remote.step(noop);
    ++ticks;
  }
  remote.close();
  return ticks;
}

BenchmarkResult run_pair(MapStore& maps, const BenchOptions& o, BenchMode mode, int processes, int agents) {
  std::unique_ptr<TcpServer> server;
  Endpoint endpoint;
  if (mode == BenchMode::loopback) {
    ServerOptions so;
    so.max_sessions = processes;
    so.params = o.params;
    server = std::make_unique<TcpServer>(maps, so);
    server->start(endpoint);
    endpoint.port = server->port();
  }
  maps.get(o.map_id);  // generate before the clock starts

  std::atomic<bool> stop{false};
  std::vector<std::uint64_t> ticks(static_cast<std::size_t>(processes), 0);
  std::vector<std::thread> threads;
  const auto t0 = Clock::now();
  for (int i = 0; i < processes; ++i) {
    threads.emplace_back([&, i] {
      ticks[static_cast<std::size_t>(i)] = mode == BenchMode::loopback
                                               ? run_loopback(endpoint, o, agents, i, stop)
                                               : run_in_process(maps, o, agents, i, stop);
    });
  }
  std::this_thread::sleep_for(std::chrono::duration<double>(o.seconds));
  stop = true;
  for (auto& t : threads) t.join();
  const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
  if (server) server->stop();

  BenchmarkResult r;
  r.mode = mode;
  r.processes = processes;
  r.agents = agents;
  r.duration = elapsed;
  for (std::uint64_t t : ticks) r.ticks += t;
  r.total_fps = static_cast<double>(r.ticks) * agents / elapsed;
  r.instance_fps = static_cast<double>(r.ticks) / processes / elapsed;
  r.agent_steps_per_sec = r.instance_fps * agents;
  return r;
}

}  // namespace

const char* bench_mode_name(BenchMode m) { return m == BenchMode::loopback ? "loopback" : "in_process"; }

std::vector<BenchmarkResult> bench_throughput(MapStore& maps, const BenchOptions& options) {
  std::vector<BenchmarkResult> out;
  if (!(options.seconds > 0.0)) return out;
  for (BenchMode mode : options.modes)
    for (int p : options.processes)
      for (int a : options.agents)
        if (p > 0 && a > 0) out.push_back(run_pair(maps, options, mode, p, a));
  return out;
}

std::string bench_csv(const std::vector<BenchmarkResult>& rows) {
  std::ostringstream s;
  s << "processes,agents,total_fps,duration,mode,instance_fps,agent_steps_per_sec\n";
  for (const BenchmarkResult& r : rows)
    s << r.processes << ',' << r.agents << ',' << r.total_fps << ',' << r.duration << ',' << bench_mode_name(r.mode)
      << ',' << r.instance_fps << ',' << r.agent_steps_per_sec << '\n';
  return s.str();
}

}  // namespace wildscav
