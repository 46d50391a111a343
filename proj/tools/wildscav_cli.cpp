#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "wildscav/bench.hpp"
#include "wildscav/bots.hpp"
#include "wildscav/map_io.hpp"
#include "wildscav/net.hpp"
#include "wildscav/pcg.hpp"

using namespace wildscav;

namespace {

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return nlohmann::json::parse(in);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::string map_file_name(std::uint32_t id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "map_%03u.wscv", id);
  return buf;
}

std::optional<std::filesystem::path> map_dir_or_env(const std::string& flag) {
  if (!flag.empty()) return std::filesystem::path(flag);
  if (const char* env = std::getenv("WSCAV_MAP_DIR"); env && *env) return std::filesystem::path(env);
  return std::nullopt;
}

std::unique_ptr<Policy> make_policy(const std::string& name) {
  if (name == "noop") return std::make_unique<NoopPolicy>();
  return std::make_unique<BotPolicy>(bot_kind_from_name(name));
}

void print_summary(const EvalSummary& s) {
  std::printf("episodes %d  length %.2f (%.2f)  success %.3f (%.3f)  supplies %.2f (%.2f)\n", s.episodes,
              s.episode_length.mean, s.episode_length.stddev, s.success.mean, s.success.stddev,
              s.supplies_total.mean, s.supplies_total.stddev);
}

int run_eval(const std::string& task_path, const std::string& policy_name, int episodes,
             std::optional<std::uint64_t> seed, std::optional<int> num_agents, const std::string& map_dir,
             const std::string& metrics_path) {
  TaskSpec spec = task_spec_from_json(read_json(task_path));
  if (seed) spec.seed = *seed;
  if (num_agents) spec.num_agents = *num_agents;
  spec.validate();
  MapStore maps(map_dir_or_env(map_dir));
  auto policy = make_policy(policy_name);
  const EvalSummary summary = evaluate(spec, maps, *policy, episodes);
  print_summary(summary);
  if (!metrics_path.empty()) write_text(metrics_path, summary.to_json().dump(2) + "\n");
  return 0;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(std::stoi(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wildscav: headless FPS environment server and tools"};
  app.require_subcommand(1);

  // generate-map
  std::string gen_config, gen_out;
  std::optional<std::uint64_t> gen_seed;
  auto* gen = app.add_subcommand("generate-map", "Generate one map from a PcgConfig JSON file");
  gen->add_option("--config", gen_config, "PcgConfig JSON")->required()->check(CLI::ExistingFile);
  gen->add_option("--seed", gen_seed, "Overrides the config seed");
  gen->add_option("--out", gen_out, "Output .wscv path")->required();

  // benchmark-maps
  std::string bm_dir;
  std::uint64_t bm_seed = 0;
  auto* bm = app.add_subcommand("benchmark-maps", "Write the six benchmark maps");
  bm->add_option("--out-dir", bm_dir)->required();
  bm->add_option("--seed", bm_seed);

  // serve
  std::string listen = "127.0.0.1:7000", serve_dir;
  int max_sessions = 64;
  auto* serve = app.add_subcommand("serve", "Run the protocol server until SIGINT/SIGTERM");
  serve->add_option("--listen", listen, "addr:port");
  serve->add_option("--max-sessions", max_sessions)->check(CLI::PositiveNumber);
  serve->add_option("--map-dir", serve_dir, "Map directory (default $WSCAV_MAP_DIR)");

  // bench
  std::uint32_t bench_map = 101;
  std::string bench_procs = "1,2,4,6,8,10", bench_agents = "1,5,10", bench_out, bench_mode = "both", bench_dir;
  double bench_seconds = 30.0;
  auto* bench = app.add_subcommand("bench", "Throughput table");
  bench->add_option("--map", bench_map);
  bench->add_option("--processes", bench_procs, "Comma-separated instance counts");
  bench->add_option("--agents", bench_agents, "Comma-separated agents per instance");
  bench->add_option("--seconds", bench_seconds, "Seconds per cell");
  bench->add_option("--mode", bench_mode)->check(CLI::IsMember({"in_process", "loopback", "both"}));
  bench->add_option("--map-dir", bench_dir);
  bench->add_option("--out", bench_out, "CSV path");

  // run-bot
  std::string rb_task, rb_bot = "nav", rb_metrics, rb_dir;
  int rb_episodes = 1;
  std::optional<std::uint64_t> rb_seed;
  std::optional<int> rb_agents;
  auto* rb = app.add_subcommand("run-bot", "Evaluate a scripted bot");
  rb->add_option("--task", rb_task, "TaskSpec JSON")->required()->check(CLI::ExistingFile);
  rb->add_option("--bot", rb_bot)->check(CLI::IsMember({"nav", "gather", "battle"}));
  rb->add_option("--episodes", rb_episodes)->check(CLI::PositiveNumber);
  rb->add_option("--seed", rb_seed);
  rb->add_option("--num-agents", rb_agents, "Overrides the spec's num_agents");
  rb->add_option("--map-dir", rb_dir);
  rb->add_option("--metrics", rb_metrics, "Metrics JSON output");

  // evaluate
  std::string ev_task, ev_policy = "noop", ev_metrics, ev_dir;
  int ev_episodes = 1, ev_agents = 4;
  std::optional<std::uint64_t> ev_seed;
  auto* ev = app.add_subcommand("evaluate", "Evaluate a policy over seeded episodes");
  ev->add_option("--task", ev_task, "TaskSpec JSON")->required()->check(CLI::ExistingFile);
  ev->add_option("--policy", ev_policy)->check(CLI::IsMember({"noop", "nav", "gather", "battle"}));
  ev->add_option("--episodes", ev_episodes)->check(CLI::PositiveNumber);
  ev->add_option("--num-agents", ev_agents)->check(CLI::Range(1, 64));
  ev->add_option("--seed", ev_seed);
  ev->add_option("--map-dir", ev_dir);
  ev->add_option("--metrics", ev_metrics);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      PcgConfig cfg = config_from_json(read_json(gen_config));
      if (gen_seed) cfg.seed = *gen_seed;
      const WorldMap map = generate_map(cfg);
      save_map(map, gen_out);
      std::printf("map %03u: %zu buildings, %d supplies -> %s\n", cfg.map_id, map.buildings.size(),
                  total_supply_quantity(map), gen_out.c_str());
    } else if (*bm) {
      std::filesystem::create_directories(bm_dir);
      for (PcgConfig cfg : benchmark_configs()) {
        cfg.seed = bm_seed;
        const WorldMap map = generate_map(cfg);
        const auto path = std::filesystem::path(bm_dir) / map_file_name(cfg.map_id);
        save_map(map, path);
        std::printf("map %03u: %zu buildings, %d supplies -> %s\n", cfg.map_id, map.buildings.size(),
                    total_supply_quantity(map), path.c_str());
      }
    } else if (*serve) {
      sigset_t set;
      sigemptyset(&set);
      sigaddset(&set, SIGINT);
      sigaddset(&set, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &set, nullptr);  // inherited by server threads
      MapStore maps(map_dir_or_env(serve_dir));
      ServerOptions options;
      options.max_sessions = max_sessions;
      TcpServer server(maps, options);
      server.start(parse_endpoint(listen));
      std::printf("listening on port %u\n", server.port());
      std::fflush(stdout);
      int sig = 0;
      sigwait(&set, &sig);
      server.stop();
    } else if (*bench) {
      BenchOptions o;
      o.map_id = bench_map;
      o.processes = parse_int_list(bench_procs);
      o.agents = parse_int_list(bench_agents);
      o.seconds = bench_seconds;
      if (bench_mode == "in_process") o.modes = {BenchMode::in_process};
      if (bench_mode == "loopback") o.modes = {BenchMode::loopback};
      MapStore maps(map_dir_or_env(bench_dir));
      const std::string csv = bench_csv(bench_throughput(maps, o));
      if (!bench_out.empty()) write_text(bench_out, csv);
      std::cout << csv;
    } else if (*rb) {
      return run_eval(rb_task, rb_bot, rb_episodes, rb_seed, rb_agents, rb_dir, rb_metrics);
    } else if (*ev) {
      return run_eval(ev_task, ev_policy, ev_episodes, ev_seed, ev_agents, ev_dir, ev_metrics);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
