#include <cmath>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "wildscav/tasks.hpp"

using namespace wildscav;

namespace {

TaskSpec flat_spec(TaskType type, std::vector<Vec3> starts, std::optional<Vec3> target = std::nullopt) {
  TaskSpec s;
  s.task_type = type;
  s.map_id = 900;
  s.num_agents = static_cast<int>(starts.size());
  s.start_locations = std::move(starts);
  s.target_location = target;
  s.camera.width = 2;
  s.camera.height = 2;
  return s;
}

Action walk(double dir, int speed) {
  Action a;
  a.walk_dir = static_cast<float>(dir);
  a.walk_speed = static_cast<std::uint8_t>(speed);
  return a;
}

// Scripted straight-line walker toward the target.
class StraightLine : public Policy {
 public:
  std::vector<Action> act(const Episode& ep, const std::vector<Observation>& obs) override {
    std::vector<Action> out;
    for (const Observation& o : obs) {
      const Vec3 d = *ep.target() - o.position;
      out.push_back(walk(rad_to_deg(std::atan2(d.z, d.x)), 10));
    }
    return out;
  }
};

}  // namespace

TEST_CASE("task names") {
  for (TaskType t : {TaskType::navigation, TaskType::supply_gather_max, TaskType::supply_gather_target,
                     TaskType::target_capture, TaskType::supply_battle})
    CHECK(task_type_from_name(task_type_name(t)) == t);
  CHECK_THROWS_AS(task_type_from_name("deathmatch"), ConfigError);
}

TEST_CASE("action masks follow the action table") {
  const ActionMask nav = action_mask_for(TaskType::navigation);
  CHECK_FALSE(nav.pickup);
  CHECK_FALSE(nav.shoot);
  CHECK_FALSE(nav.reload);
  const ActionMask gather = action_mask_for(TaskType::supply_gather_max);
  CHECK(gather.pickup);
  CHECK_FALSE(gather.shoot);
  CHECK_FALSE(gather.reload);
  const ActionMask battle = action_mask_for(TaskType::supply_battle);
  CHECK(battle.pickup);
  CHECK(battle.shoot);
  CHECK(battle.reload);

  Action a;
  a.shoot = true;
  try {
    check_action(a, gather);
    FAIL("expected a mask error");
  } catch (const ActionMaskError& e) {
    CHECK(e.field() == "shoot");
  }
  Action fast = walk(0, 11);
  CHECK_THROWS_AS(check_action(fast, battle), ActionMaskError);
  Action bad_dir = walk(361, 1);
  CHECK_THROWS_AS(check_action(bad_dir, battle), ActionMaskError);
  CHECK_NOTHROW(check_action(walk(360, 10), nav));
}

TEST_CASE("episode lengths") {
  TaskSpec s;
  CHECK(s.effective_max_steps() == 400);
  s.task_type = TaskType::target_capture;
  CHECK(s.effective_max_steps() == 400);
  s.task_type = TaskType::supply_gather_max;
  CHECK(s.effective_max_steps() == 600);
  s.task_type = TaskType::supply_battle;
  CHECK(s.effective_max_steps() == 600);
  s.timeout_seconds = 30.0;
  CHECK(s.effective_max_steps() == 100);
  s.max_steps = 50;
  CHECK(s.effective_max_steps() == 50);
  s.timeout_seconds.reset();
  CHECK(s.effective_max_steps() == 50);
}

TEST_CASE("a 600-tick gathering episode lasts 180 s") {
  auto store = fixtures::store_with(fixtures::flat_map());
  TaskSpec s = flat_spec(TaskType::supply_gather_max, {{0, 0, 0}});
  Episode ep(s, store->get(900));
  const std::vector<Action> noop(1);
  int ticks = 0;
  while (!ep.done()) {
    ep.step(noop);
    ++ticks;
  }
  CHECK(ticks == 600);
  CHECK(ep.metrics().episode_length == 600);
  CHECK(ep.simulated_seconds() == doctest::Approx(180.0));
  CHECK_THROWS_AS(ep.step(noop), std::logic_error);
}

TEST_CASE("reset") {
  auto store = fixtures::store_with(fixtures::flat_map());
  SUBCASE("explicit start snaps to the ground") {
    const TaskSpec s = flat_spec(TaskType::navigation, {{0, 1, 0}}, Vec3{5, 0, 3});
    Episode ep(s, store->get(900));
    const Vec3 p = ep.agents()[0].position;
    CHECK(p.x == 0.0);
    CHECK(p.z == 0.0);
    CHECK(p.y == doctest::Approx(0.0).epsilon(0.1));
    CHECK(ep.tick() == 0);
    CHECK(ep.observe(0).target == Vec3{5, 0, 3});
  }
  SUBCASE("unwalkable start is rejected") {
    WorldMap m = fixtures::flat_map();
    fixtures::add_wall(m, {-1.0f, 0.0f, -1.0f, 1.0f, 3.0f, 1.0f});
    auto walled = fixtures::store_with(m);
    CHECK_THROWS_AS(Episode(flat_spec(TaskType::navigation, {{0, 0, 0}}, Vec3{5, 0, 3}), walled->get(900)),
                    ValidationError);
    CHECK_THROWS_AS(Episode(flat_spec(TaskType::navigation, {{5, 0, 5}}, Vec3{0, 0, 0}), walled->get(900)),
                    ValidationError);
  }
  SUBCASE("same seed, same observations") {
    MapStore maps;
    TaskSpec s;
    s.map_id = 104;
    s.num_agents = 3;
    s.seed = 12;
    Episode a(s, maps.get(104)), b(s, maps.get(104));
    CHECK(a.observations() == b.observations());
    CHECK(a.target() == b.target());
  }
  SUBCASE("five agents on map 101 get distinct walkable starts") {
    MapStore maps;
    TaskSpec s;
    s.task_type = TaskType::supply_gather_max;
    s.map_id = 101;
    s.num_agents = 5;
    Episode ep(s, maps.get(101));
    std::set<std::pair<double, double>> seen;
    for (const AgentState& a : ep.agents()) {
      CHECK(is_walkable(ep.map(), a.position, 0.5));
      seen.insert({a.position.x, a.position.z});
    }
    CHECK(seen.size() == 5);
  }
}

TEST_CASE("navigation rewards") {
  auto store = fixtures::store_with(fixtures::flat_map());
  const std::vector<Action> noop(1);
  SUBCASE("reaching the target ends the episode with reward 1") {
    Episode ep(flat_spec(TaskType::navigation, {{0, 0, 0}}, Vec3{9, 0, 0}), store->get(900));
    const std::vector<Action> go{walk(0, 10)};
    ep.step(go);
    ep.step(go);
    CHECK(ep.last_rewards()[0] == 0);
    ep.step(go);
    CHECK(ep.last_rewards()[0] == 1);
    CHECK(ep.done());
    CHECK(ep.success());
    CHECK(ep.metrics().episode_length == 3);
  }
  SUBCASE("no-op runs out at T = 400") {
    Episode ep(flat_spec(TaskType::navigation, {{0, 0, 0}}, Vec3{20, 0, 0}), store->get(900));
    int total = 0;
    while (!ep.done()) total += ep.step(noop)[0];
    CHECK(ep.tick() == 400);
    CHECK_FALSE(ep.success());
    CHECK(total == 0);
  }
  for (const auto& [d, want] : {std::pair{0.5, 1}, std::pair{1.0, 1}, std::pair{1.000001, 0}}) {
    CAPTURE(d);
    Episode ep(flat_spec(TaskType::navigation, {{0, 0, 0}}, Vec3{d, 0, 0}), store->get(900));
    CHECK(ep.step(noop)[0] == want);
  }
}

TEST_CASE("target capture") {
  auto store = fixtures::store_with(fixtures::flat_map(500));
  SUBCASE("agent 2 captures at tick 57") {
    const TaskSpec s =
        flat_spec(TaskType::target_capture, {{-100, 0, 50}, {-100, 0, 60}, {0, 0, 0}, {-100, 0, 70}}, Vec3{170.5, 0, 0});
    Episode ep(s, store->get(900));
    std::vector<Action> acts(4);
    acts[2] = walk(0, 10);
    while (!ep.done()) ep.step(acts);
    CHECK(ep.last_rewards() == std::vector<int>{0, 0, 1, 0});
    CHECK(ep.metrics().episode_length == 57);
    CHECK(ep.success());
  }
  SUBCASE("ties go to the lowest id") {
    const TaskSpec s =
        flat_spec(TaskType::target_capture, {{-30, 0, 30}, {3.5, 0, 0}, {-30, 0, -30}, {-3.5, 0, 0}}, Vec3{0, 0, 0});
    Episode ep(s, store->get(900));
    std::vector<Action> acts(4);
    acts[1] = walk(180, 10);
    acts[3] = walk(0, 10);
    ep.step(acts);
    CHECK(ep.last_rewards() == std::vector<int>{0, 1, 0, 0});
    CHECK(ep.done());
  }
  SUBCASE("nobody arrives") {
    const TaskSpec s = flat_spec(TaskType::target_capture, {{0, 0, 0}, {5, 0, 5}}, Vec3{40, 0, 40});
    Episode ep(s, store->get(900));
    const std::vector<Action> noop(2);
    while (!ep.done()) ep.step(noop);
    CHECK(ep.tick() == 400);
    CHECK_FALSE(ep.success());
    CHECK(ep.metrics().reward_per_agent == std::vector<int>{0, 0});
  }
}

TEST_CASE("gathering rewards count pickup events") {
  WorldMap m = fixtures::flat_map();
  m.supply_boxes = {{0, {2.0f, 0.0f, 0.0f}, 3, false, false}, {1, {5.0f, 0.0f, 0.0f}, 2, false, false},
                    {2, {-15.0f, 0.0f, -15.0f}, 1, false, false}};
  auto store = fixtures::store_with(m);
  TaskSpec s = flat_spec(TaskType::supply_gather_max, {{0, 0, 0}});
  Episode ep(s, store->get(900));
  Action a = walk(0, 5);  // 1.5 m per tick
  a.pickup = true;
  ep.step({a});  // x = 1.5, box 0 within 0.5 m
  CHECK(ep.last_rewards()[0] == 1);
  CHECK(ep.agents()[0].supplies == 3);
  ep.step({a});  // x = 3.0, nothing in range
  CHECK(ep.last_rewards()[0] == 0);
  ep.step({a});  // x = 4.5, box 1
  CHECK(ep.last_rewards()[0] == 1);
  CHECK(ep.metrics().supplies_total == 5);
  CHECK(ep.metrics().reward_per_agent[0] == 2);
  const Observation o = ep.observe(0);
  REQUIRE(o.nearby_supplies.size() == 1);
  CHECK(o.nearby_supplies[0].box_id == 2);
}

TEST_CASE("masked fields are rejected by step") {
  auto store = fixtures::store_with(fixtures::flat_map());
  Episode ep(flat_spec(TaskType::navigation, {{0, 0, 0}}, Vec3{9, 0, 0}), store->get(900));
  Action a;
  a.pickup = true;
  try {
    ep.step({a});
    FAIL("expected a mask error");
  } catch (const ActionMaskError& e) {
    CHECK(e.field() == "pickup");
  }
  CHECK(ep.tick() == 0);
}

TEST_CASE("evaluate") {
  auto store = fixtures::store_with(fixtures::flat_map());
  SUBCASE("no-op navigation never succeeds") {
    NoopPolicy noop;
    const EvalSummary s = evaluate(flat_spec(TaskType::navigation, {{0, 0, 0}}, Vec3{20, 0, 0}), *store, noop, 3);
    CHECK(s.episodes == 3);
    CHECK(s.success.mean == 0.0);
    CHECK(s.episode_length.mean == 400.0);
    CHECK(s.episode_length.stddev == 0.0);
  }
  SUBCASE("straight line over 30 m takes 10 ticks") {
    StraightLine policy;
    const EvalSummary s = evaluate(flat_spec(TaskType::navigation, {{0, 0, 0}}, Vec3{30, 0, 0}), *store, policy, 2);
    CHECK(s.success.mean == 1.0);
    CHECK(s.episode_length.mean == 10.0);
    CHECK(static_cast<int>(std::ceil(30.0 / (10 * 0.3))) == 10);
  }
  SUBCASE("summary JSON") {
    NoopPolicy noop;
    const nlohmann::json j = evaluate(flat_spec(TaskType::supply_gather_max, {{0, 0, 0}}), *store, noop, 2).to_json();
    CHECK(j.at("episodes") == 2);
    CHECK(j.at("runs").size() == 2);
    CHECK(j.at("episode_length").at("mean") == 600.0);
  }
}

TEST_CASE("TaskSpec JSON") {
  const nlohmann::json j = {{"task_type", "navigation"}, {"map_id", 103},    {"timeout", 30},
                            {"start_location", {0, 1, 0}}, {"target_location", {5, 0, 3}}};
  const TaskSpec s = task_spec_from_json(j);
  CHECK(s.map_id == 103);
  CHECK(s.timeout_seconds == 30.0);
  REQUIRE(s.start_locations.size() == 1);
  CHECK(s.start_locations[0] == Vec3{0, 1, 0});
  CHECK(s.target_location == Vec3{5, 0, 3});
  CHECK(s.effective_max_steps() == 100);
  const TaskSpec back = task_spec_from_json(task_spec_to_json(s));
  CHECK(back.map_id == s.map_id);
  CHECK(back.target_location == s.target_location);
  CHECK(back.timeout_seconds == s.timeout_seconds);
  CHECK_THROWS(task_spec_from_json({{"num_agents", 0}}).validate());
  CHECK_THROWS(task_spec_from_json({{"task_type", "nope"}}));
}

TEST_CASE("rewards match the snippet replay and success implies arrival") {
  MapStore maps;
  Rng rng(31);
  for (TaskType t : {TaskType::navigation, TaskType::target_capture, TaskType::supply_gather_max,
                     TaskType::supply_gather_target, TaskType::supply_battle}) {
    for (int run = 0; run < 6; ++run) {
      TaskSpec s;
      s.task_type = t;
      s.map_id = 103;
      s.num_agents = 3;
      s.seed = static_cast<std::uint64_t>(run);
      s.camera.width = 1;
      s.camera.height = 1;
      Episode ep(s, maps.get(103));
      oracle::RewardReplay replay(t, ep.target(), 3);
      while (!ep.done()) {
        std::vector<Action> acts(3);
        for (std::size_t i = 0; i < 3; ++i) {
          const Vec3 goal = ep.target() ? *ep.target() : ep.agents()[i].position;
          const Vec3 d = goal - ep.agents()[i].position;
          acts[i] = walk(rng.bernoulli(0.7) ? normalize_degrees(rad_to_deg(std::atan2(d.z, d.x))) : rng.uniform(0, 360),
                         static_cast<int>(rng.uniform_int(0, 10)));
          acts[i].pickup = action_mask_for(t).pickup;
        }
        ep.step(acts);
        std::vector<Vec3> pos;
        std::vector<int> sup;
        for (const Observation& o : ep.observations()) {
          pos.push_back(o.position);
          sup.push_back(o.supplies);
        }
        REQUIRE(ep.last_rewards() == replay.step(pos, sup));
      }
      if (ep.success()) {
        bool arrived = false;
        for (const AgentState& a : ep.agents()) arrived = arrived || distance(a.position, *ep.target()) <= 1.0;
        CHECK(arrived);
      }
    }
  }
}
