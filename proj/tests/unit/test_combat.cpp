#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "wildscav/combat.hpp"
#include "wildscav/pcg.hpp"

using namespace wildscav;

namespace {

std::vector<AgentState> duel(double distance) {
  const WeaponSpec w;
  std::vector<AgentState> agents(2);
  for (std::uint32_t i = 0; i < 2; ++i) {
    agents[i].agent_id = i;
    respawn(agents[i], {i == 0 ? 0.0 : distance, 0.0, 0.0}, w);
  }
  agents[1].yaw = 180.0;
  return agents;
}

}  // namespace

TEST_CASE("resolve_shot") {
  WorldMap m = fixtures::flat_map();
  const WeaponSpec w;
  const SimParams p;
  auto agents = duel(10.0);
  SUBCASE("clear line hits for 25") {
    const ShotResult r = resolve_shot(m, agents, 0, w, p, 0);
    CHECK(r.outcome == ShotOutcome::fired);
    REQUIRE(r.hit);
    CHECK(r.hit->damage == 25);
    CHECK(r.hit->shooter_id == 0);
    CHECK(r.hit->target_id == 1);
    CHECK_FALSE(r.hit->lethal);
    CHECK(agents[1].health == 75);
    CHECK(agents[0].clip_ammo == w.clip_size - 1);
  }
  SUBCASE("a wall in between stops the shot") {
    fixtures::add_wall(m, {5.0f, 0.0f, -3.0f, 5.2f, 3.0f, 3.0f});
    const ShotResult r = resolve_shot(m, agents, 0, w, p, 0);
    CHECK(r.outcome == ShotOutcome::fired);
    CHECK_FALSE(r.hit);
    CHECK(agents[1].health == 100);
  }
  SUBCASE("fourth hit is lethal") {
    for (int t = 0; t < 4; ++t) {
      const ShotResult r = resolve_shot(m, agents, 0, w, p, t);
      REQUIRE(r.hit);
      CHECK(r.hit->lethal == (t == 3));
    }
    CHECK(agents[1].health == 0);
  }
  SUBCASE("cooldown") {
    CHECK(resolve_shot(m, agents, 0, w, p, 5).outcome == ShotOutcome::fired);
    CHECK(resolve_shot(m, agents, 0, w, p, 5).outcome == ShotOutcome::ignored);
    CHECK(resolve_shot(m, agents, 0, w, p, 6).outcome == ShotOutcome::fired);
  }
  SUBCASE("empty clip dry-fires") {
    agents[0].clip_ammo = 0;
    const ShotResult r = resolve_shot(m, agents, 0, w, p, 0);
    CHECK(r.outcome == ShotOutcome::empty_clip);
    CHECK_FALSE(r.hit);
  }
  SUBCASE("dead shooter does nothing") {
    agents[0].alive = false;
    CHECK(resolve_shot(m, agents, 0, w, p, 0).outcome == ShotOutcome::ignored);
  }
  SUBCASE("beyond hit range") {
    auto far = duel(120.0);
    WorldMap big = fixtures::flat_map(500);
    CHECK_FALSE(resolve_shot(big, far, 0, w, p, 0).hit);
  }
  SUBCASE("nearest of two targets in line") {
    agents.push_back(agents[1]);
    agents[2].agent_id = 2;
    agents[2].position.x = 6.0;
    const ShotResult r = resolve_shot(m, agents, 0, w, p, 0);
    REQUIRE(r.hit);
    CHECK(r.hit->target_id == 2);
  }
}

TEST_CASE("reload") {
  const WeaponSpec w;
  AgentState s;
  respawn(s, {}, w);
  SUBCASE("clip 5, spare 60") {
    s.clip_ammo = 5;
    REQUIRE(start_reload(s, w, 0) == ReloadOutcome::started);
    CHECK_FALSE(finish_reload(s, w, 2));
    CHECK(finish_reload(s, w, 3));
    CHECK(s.clip_ammo == 20);
    CHECK(s.spare_ammo == 45);
  }
  SUBCASE("clip 15, spare 3") {
    s.clip_ammo = 15;
    s.spare_ammo = 3;
    REQUIRE(start_reload(s, w, 0) == ReloadOutcome::started);
    CHECK(finish_reload(s, w, 3));
    CHECK(s.clip_ammo == 18);
    CHECK(s.spare_ammo == 0);
  }
  SUBCASE("no spare ammo") {
    s.clip_ammo = 3;
    s.spare_ammo = 0;
    CHECK(start_reload(s, w, 0) == ReloadOutcome::no_ammo);
    CHECK_FALSE(s.reloading());
  }
  SUBCASE("full clip") { CHECK(start_reload(s, w, 0) == ReloadOutcome::clip_full); }
  SUBCASE("shooting while reloading is ignored") {
    const WorldMap m = fixtures::flat_map();
    auto agents = duel(10.0);
    agents[0].clip_ammo = 5;
    REQUIRE(start_reload(agents[0], w, 0) == ReloadOutcome::started);
    CHECK(resolve_shot(m, agents, 0, w, {}, 1).outcome == ShotOutcome::ignored);
    CHECK(agents[1].health == 100);
    CHECK(start_reload(agents[0], w, 1) == ReloadOutcome::busy);
  }
}

TEST_CASE("on_death") {
  const WeaponSpec w;
  AgentState s;
  respawn(s, {3.0, 0.0, 4.0}, w);
  SUBCASE("seven supplies drop three") {
    s.supplies = 7;
    const DeathResult r = on_death(s, w, 42);
    CHECK(r.drop.dropped_quantity == 3);
    CHECK(s.supplies == 4);
    REQUIRE(r.box);
    CHECK(r.box->quantity == 3);
    CHECK(r.box->id == 42);
    CHECK(r.box->location.vec() == Vec3{3.0, 0.0, 4.0});
    CHECK_FALSE(s.alive);
    CHECK(s.respawn_timer == 10);
  }
  SUBCASE("nothing to drop") {
    s.supplies = 0;
    CHECK_FALSE(on_death(s, w, 1).box);
  }
  SUBCASE("one supply is kept") {
    s.supplies = 1;
    CHECK_FALSE(on_death(s, w, 1).box);
    CHECK(s.supplies == 1);
  }
}

TEST_CASE("killed agent respawns after ten ticks") {
  TaskSpec spec;
  spec.task_type = TaskType::supply_battle;
  spec.map_id = 900;
  spec.num_agents = 2;
  spec.start_locations = {{0.0, 0.0, 0.0}, {8.0, 0.0, 0.0}};
  auto store = fixtures::store_with(fixtures::flat_map());
  Episode ep(spec, store->get(900));
  std::vector<Action> acts(2);
  acts[0].shoot = true;
  int steps = 0;
  while (ep.agents()[1].alive) {
    acts[0].turn_lr_delta = static_cast<float>(-ep.agents()[0].yaw);
    ep.step(acts);
    REQUIRE(++steps <= 4);
  }
  CHECK(steps == 4);
  CHECK(ep.last_events().hits.back().lethal);
  CHECK(ep.metrics().kills[0] == 1);
  CHECK(ep.metrics().deaths[1] == 1);
  acts[0] = Action{};
  for (int t = 0; t < 9; ++t) ep.step(acts);
  CHECK_FALSE(ep.agents()[1].alive);
  ep.step(acts);
  const AgentState& back = ep.agents()[1];
  CHECK(back.alive);
  CHECK(back.health == 100);
  CHECK(back.clip_ammo == spec.weapon.clip_size);
  const Rectf& r = ep.map().spawn_regions[0].rect;
  CHECK(back.position.x >= r.x0);
  CHECK(back.position.x <= r.x1);
  CHECK(back.position.z >= r.z0);
  CHECK(back.position.z <= r.z1);
}

TEST_CASE("combat invariants under random play") {
  TaskSpec spec;
  spec.task_type = TaskType::supply_battle;
  spec.map_id = 104;
  spec.num_agents = 6;
  spec.camera.width = 2;
  spec.camera.height = 2;
  MapStore maps;
  const SimParams p;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    spec.seed = seed;
    Episode ep(spec, maps.get(104));
    Rng rng(seed + 100);
    std::vector<int> ammo_total;
    for (const AgentState& a : ep.agents()) ammo_total.push_back(a.clip_ammo + a.spare_ammo + a.shots_fired);
    while (!ep.done()) {
      std::vector<Action> acts(spec.num_agents);
      for (std::size_t i = 0; i < acts.size(); ++i) {
        // Face the next agent to provoke fights.
        const AgentState& me = ep.agents()[i];
        const AgentState& them = ep.agents()[(i + 1) % acts.size()];
        const Vec3 d = them.center(p) - me.eye(p);
        acts[i].turn_lr_delta = static_cast<float>(rad_to_deg(std::atan2(d.z, d.x)) - me.yaw + rng.normal() * 3);
        acts[i].look_ud_delta = static_cast<float>(rad_to_deg(std::atan2(d.y, std::hypot(d.x, d.z))) - me.pitch);
        acts[i].walk_dir = static_cast<float>(rng.uniform(0, 360));
        acts[i].walk_speed = static_cast<std::uint8_t>(rng.uniform_int(0, 10));
        acts[i].shoot = rng.bernoulli(0.7);
        acts[i].reload = rng.bernoulli(0.1);
        acts[i].pickup = true;
      }
      const std::vector<AgentState> before = ep.agents();
      ep.step(acts);
      for (std::size_t i = 0; i < acts.size(); ++i) {
        const AgentState& a = ep.agents()[i];
        REQUIRE(a.health >= 0);
        REQUIRE(a.health <= 100);
        if (a.alive) REQUIRE(a.health > 0);
        if (before[i].alive && a.alive)
          REQUIRE(a.clip_ammo + a.spare_ammo + a.shots_fired == ammo_total[i]);
        if (!before[i].alive && a.alive) ammo_total[i] = a.clip_ammo + a.spare_ammo + a.shots_fired;
      }
      for (const HitEvent& h : ep.last_events().hits) {
        REQUIRE(h.shooter_id != h.target_id);
        REQUIRE(h.damage > 0);
        REQUIRE_FALSE(segment_blocked(ep.map(), ep.agents()[h.shooter_id].eye(p), ep.agents()[h.target_id].center(p)));
      }
    }
  }
}
