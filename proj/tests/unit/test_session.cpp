#include "doctest.h"
#include "fixtures.hpp"
#include "wildscav/session.hpp"

using namespace wildscav;

namespace {

nlohmann::json spec_json(int agents = 1, const char* task = "navigation") {
  return {{"task_type", task},
          {"map_id", 900},
          {"num_agents", agents},
          {"seed", 3},
          {"camera", {{"width", 2}, {"height", 2}}}};
}

Frame create(const nlohmann::json& spec) {
  return json_frame(MsgType::control, 0, 0, {{"op", "create_session"}, {"spec", spec}});
}

Frame actions(std::uint32_t session, std::uint32_t tick, std::vector<AgentAction> acts) {
  return Frame{MsgType::action, session, tick, encode_actions(acts)};
}

int code_of(const Frame& f) {
  REQUIRE(f.type == MsgType::error);
  return parse_json_payload(f).at("code").get<int>();
}

struct Harness {
  std::unique_ptr<MapStore> maps = fixtures::store_with(fixtures::flat_map());
  ServerCore core;
  explicit Harness(int max_sessions = 64) : core(*maps, ServerOptions{max_sessions, {}}) {}

  std::uint32_t open(const nlohmann::json& spec) {
    const auto out = core.handle(create(spec));
    REQUIRE(out.front().type == MsgType::control);
    return parse_json_payload(out.front()).at("session_id").get<std::uint32_t>();
  }
};

}  // namespace

TEST_CASE("create_session answers with an ack and tick-0 observations") {
  Harness h;
  const auto out = h.core.handle(create(spec_json(3)));
  REQUIRE(out.size() == 4);
  const auto ack = parse_json_payload(out[0]);
  CHECK(ack.at("op") == "session_created");
  CHECK(ack.at("num_agents") == 3);
  CHECK(ack.at("max_steps") == 400);
  CHECK(ack.at("action_mask").at("shoot") == false);
  for (std::size_t i = 1; i < 4; ++i) {
    CHECK(out[i].type == MsgType::observation);
    CHECK(out[i].tick == 0);
    CHECK(decode_observation(out[i].payload).agent_id == i - 1);
  }
  CHECK(h.core.session_count() == 1);
}

TEST_CASE("lockstep") {
  Harness h;
  const std::uint32_t sid = h.open(spec_json(4));
  for (std::uint32_t tick = 0; tick < 3; ++tick) {
    for (std::uint32_t agent = 0; agent < 3; ++agent)
      CHECK(h.core.handle(actions(sid, tick, {{agent, {}}})).empty());
    CHECK(h.core.find(sid)->pending_count() == 3);
    const auto out = h.core.handle(actions(sid, tick, {{3, {}}}));
    REQUIRE(out.size() == 4);
    for (const Frame& f : out) {
      CHECK(f.type == MsgType::observation);
      CHECK(f.tick == tick + 1);
    }
  }
  CHECK(h.core.find(sid)->episode().tick() == 3);
}

TEST_CASE("sessions are independent") {
  Harness h;
  const std::uint32_t a = h.open(spec_json());
  const std::uint32_t b = h.open(spec_json());
  CHECK(a != b);
  Action go;
  go.walk_speed = 10;
  h.core.handle(actions(a, 0, {{0, go}}));
  h.core.handle(actions(a, 1, {{0, go}}));
  CHECK(h.core.find(a)->episode().tick() == 2);
  CHECK(h.core.find(b)->episode().tick() == 0);
  CHECK(h.core.find(a)->episode().agents()[0].position != h.core.find(b)->episode().agents()[0].position);
}

TEST_CASE("protocol violations") {
  Harness h(2);
  const std::uint32_t sid = h.open(spec_json(2));

  SUBCASE("wrong tick carries the expected tick") {
    const auto out = h.core.handle(actions(sid, 5, {{0, {}}}));
    REQUIRE(out.size() == 1);
    CHECK(code_of(out[0]) == 409);
    CHECK(parse_json_payload(out[0]).at("expected_tick") == 0);
  }
  SUBCASE("duplicate agent") {
    CHECK(h.core.handle(actions(sid, 0, {{0, {}}})).empty());
    CHECK(code_of(h.core.handle(actions(sid, 0, {{0, {}}}))[0]) == 409);
    CHECK(code_of(h.core.handle(actions(sid, 0, {{1, {}}, {1, {}}}))[0]) == 409);
    CHECK(h.core.find(sid)->pending_count() == 1);
  }
  SUBCASE("masked field names the field") {
    Action a;
    a.shoot = true;
    const auto out = h.core.handle(actions(sid, 0, {{0, a}}));
    CHECK(code_of(out[0]) == 422);
    CHECK(parse_json_payload(out[0]).at("field") == "shoot");
    CHECK(h.core.find(sid)->pending_count() == 0);
  }
  SUBCASE("agent out of range") {
    CHECK(code_of(h.core.handle(actions(sid, 0, {{2, {}}}))[0]) == 400);
  }
  SUBCASE("unknown session") {
    CHECK(code_of(h.core.handle(actions(sid + 100, 0, {{0, {}}}))[0]) == 404);
    const Frame reset = json_frame(MsgType::control, sid + 100, 0, {{"op", "reset"}});
    CHECK(code_of(h.core.handle(reset)[0]) == 404);
  }
  SUBCASE("unknown map") {
    nlohmann::json s = spec_json();
    s["map_id"] = 555;
    CHECK(code_of(h.core.handle(create(s))[0]) == 404);
  }
  SUBCASE("unwalkable start") {
    nlohmann::json s = spec_json();
    s["start_locations"] = {{1000, 0, 0}};
    CHECK(code_of(h.core.handle(create(s))[0]) == 422);
  }
  SUBCASE("bad spec") {
    nlohmann::json s = spec_json();
    s["task_type"] = "tag";
    CHECK(code_of(h.core.handle(create(s))[0]) == 400);
    CHECK(code_of(h.core.handle(json_frame(MsgType::control, 0, 0, {{"op", "create_session"}}))[0]) == 400);
  }
  SUBCASE("session limit") {
    h.open(spec_json());
    CHECK(code_of(h.core.handle(create(spec_json()))[0]) == 503);
  }
  SUBCASE("server-only frame types") {
    CHECK(code_of(h.core.handle(Frame{MsgType::observation, sid, 0, {}})[0]) == 400);
    CHECK(code_of(h.core.handle(json_frame(MsgType::control, sid, 0, {{"op", "fly"}}))[0]) == 400);
  }
  SUBCASE("garbage payloads never throw") {
    CHECK(code_of(h.core.handle(Frame{MsgType::control, 0, 0, {'{'}})[0]) == 400);
    CHECK(code_of(h.core.handle(Frame{MsgType::action, sid, 0, {1, 2, 3}})[0]) == 400);
  }
}

TEST_CASE("episode end, reset and close") {
  Harness h;
  nlohmann::json s = spec_json();
  s["max_steps"] = 3;
  const std::uint32_t sid = h.open(s);
  std::vector<Frame> out;
  for (std::uint32_t t = 0; t < 3; ++t) out = h.core.handle(actions(sid, t, {{0, {}}}));
  REQUIRE(out.size() == 2);
  CHECK(decode_observation(out[0].payload).done);
  const auto end = parse_json_payload(out[1]);
  CHECK(out[1].type == MsgType::event);
  CHECK(end.at("event") == "episode_end");
  CHECK(end.at("metrics").at("episode_length") == 3);

  const auto late = h.core.handle(actions(sid, 3, {{0, {}}}));
  CHECK(code_of(late[0]) == 409);
  CHECK(parse_json_payload(late[0]).at("message") == "episode finished");

  const auto again = h.core.handle(json_frame(MsgType::control, sid, 3, {{"op", "reset"}, {"seed", 9}}));
  REQUIRE(again.size() == 2);
  CHECK(parse_json_payload(again[0]).at("op") == "reset_done");
  CHECK(parse_json_payload(again[0]).at("seed") == 9);
  CHECK(again[1].tick == 0);
  CHECK(h.core.handle(actions(sid, 0, {{0, {}}})).size() == 1);

  const auto closed = h.core.handle(json_frame(MsgType::control, sid, 0, {{"op", "close_session"}}));
  CHECK(parse_json_payload(closed[0]).at("op") == "session_closed");
  CHECK(h.core.session_count() == 0);
  CHECK(code_of(h.core.handle(actions(sid, 1, {{0, {}}}))[0]) == 404);
}

TEST_CASE("battle events precede observations") {
  Harness h;
  nlohmann::json s = spec_json(2, "supply_battle");
  s["start_locations"] = {{0, 0, 0}, {6, 0, 0}};
  const std::uint32_t sid = h.open(s);
  const double yaw = h.core.find(sid)->episode().agents()[0].yaw;
  Action shoot;
  shoot.shoot = true;
  shoot.turn_lr_delta = static_cast<float>(-yaw);
  const auto out = h.core.handle(actions(sid, 0, {{0, shoot}, {1, {}}}));
  REQUIRE(out.size() == 3);
  CHECK(out[0].type == MsgType::event);
  const auto hit = parse_json_payload(out[0]);
  CHECK(hit.at("event") == "hit");
  CHECK(hit.at("shooter_id") == 0);
  CHECK(hit.at("target_id") == 1);
  CHECK(out[1].type == MsgType::observation);
}
