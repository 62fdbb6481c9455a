#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "rhtamp/sim.hpp"

using namespace rhtamp;

namespace {

GroundAction act_of(ActionKind k, std::vector<std::string> params) {
  GroundAction a;
  a.kind = k;
  a.params = std::move(params);
  return a;
}

Scene pick_scene() {
  Scene sc;
  sc.base = {{0, 0}, 0};
  sc.q = {2.0, -1.0, 0.5};
  sc.surfaces["t"] = {{0.2, -0.4, 1.3, 0.4}, ""};
  sc.objects["g"] = {0.03, {0.55, 0.0}, 0, "t", true};
  return sc;
}

}  // namespace

TEST_CASE("action application updates scene structure") {
  Binding b;
  Scene sc = pick_scene();
  sc.objects["r"] = {0.03, {0.55, 0.0}, 1, "g", true};

  SECTION("pick clears support, refuses riders and full grippers") {
    REQUIRE_THROWS_AS(apply_action(sc, act_of(ActionKind::pick, {"g", "t"}), b),
                      PreconditionError);  // r rides on g
    Scene ok = apply_action(sc, act_of(ActionKind::unstack, {"r", "g"}), b);
    REQUIRE(ok.held == "r");
    REQUIRE(!ok.objects.at("r").support);
    REQUIRE(ok.objects.at("r").tier == 0);
    REQUIRE_THROWS_AS(
        apply_action(ok, act_of(ActionKind::pick, {"g", "t"}), b),
        PreconditionError);  // gripper full
  }
  SECTION("place and stack set pose, support and tier") {
    Scene held = apply_action(sc, act_of(ActionKind::unstack, {"r", "g"}), b);
    Binding pb;
    pb.place_pos = {0.8, 0.2};
    Scene placed =
        apply_action(held, act_of(ActionKind::place, {"r", "t"}), pb);
    REQUIRE(!placed.held);
    REQUIRE(placed.objects.at("r").pos == Vec2{0.8, 0.2});
    REQUIRE(placed.objects.at("r").support == "t");
    REQUIRE(placed.objects.at("r").tier == 0);
    Binding sb;
    sb.place_pos = {0.55, 0.0};
    Scene stacked =
        apply_action(held, act_of(ActionKind::stack, {"r", "g"}), sb);
    REQUIRE(stacked.objects.at("r").tier == 1);
    REQUIRE(stacked.objects.at("r").support == "g");
    REQUIRE_THROWS_AS(
        apply_action(placed, act_of(ActionKind::place, {"r", "t"}), pb),
        PreconditionError);  // nothing held anymore
  }
  SECTION("tray transfer and navigation") {
    Scene held = apply_action(sc, act_of(ActionKind::unstack, {"r", "g"}), b);
    Scene loaded = apply_action(held, act_of(ActionKind::load, {"r"}), b);
    REQUIRE(!loaded.held);
    REQUIRE(loaded.tray == std::vector<ObjectId>{"r"});
    Scene back = apply_action(loaded, act_of(ActionKind::unload, {"r"}), b);
    REQUIRE(back.held == "r");
    REQUIRE(back.tray.empty());
    REQUIRE_THROWS_AS(apply_action(back, act_of(ActionKind::unload, {"r"}), b),
                      PreconditionError);
    REQUIRE_THROWS_AS(
        apply_action(sc, act_of(ActionKind::navigate, {"wa", "wb"}), b),
        PreconditionError);  // not mobile
    Scene mob = sc;
    mob.mobile = true;
    mob.base_radius = 0.18;
    Binding nb;
    nb.dock = {{2.0, 1.0}, 1.57};
    Scene moved =
        apply_action(mob, act_of(ActionKind::navigate, {"wa", "wb"}), nb);
    REQUIRE(moved.base.p == Vec2{2.0, 1.0});
    REQUIRE(moved.base.theta == 1.57);
  }
}

TEST_CASE("successful arm execution applies, times and counts the action") {
  RobotModel m;
  Scene truth = pick_scene();
  GroundAction pick = act_of(ActionKind::pick, {"g", "t"});
  ReasonStats rstats;
  auto feas = evaluate_action(truth, m, pick, 7, 0, rstats);
  REQUIRE(feas.feasible);
  auto ctx = action_collision_ctx(truth, pick);
  MotionStats mstats;
  auto plan =
      plan_motion(truth, m, truth.q, feas.binding.q, ctx, 10.0, 3, mstats);
  REQUIRE(plan.found);

  SimEnvironment env(truth, m, {}, 42);
  auto out = env.execute_arm(pick, feas.binding, plan.path, ctx);
  REQUIRE(out.ok);
  REQUIRE(env.truth().held == "g");
  REQUIRE(env.truth().q == plan.path.back());
  REQUIRE(out.seconds ==
          Catch::Approx(path_radians(plan.path) / 1.0 + 1.0));
  REQUIRE(env.executed() == 1);
  REQUIRE(out.events.empty());
}

TEST_CASE("a path that is stale in truth aborts without touching the world") {
  RobotModel m;
  Scene truth = pick_scene();
  truth.q = {-1.0, 0.5, 0.3};
  truth.objects["intruder"] = {0.06, {0.9, 0.0}, 0, "t", true};
  SimEnvironment env(truth, m, {}, 42);
  std::string before = scene_to_string(env.truth());

  GroundAction pick = act_of(ActionKind::pick, {"g", "t"});
  std::vector<JointConfig> path{{-1.0, 0.5, 0.3}, {1.0, -0.5, -0.3}};
  auto out = env.execute_arm(pick, {}, path, action_collision_ctx(truth, pick));
  REQUIRE(!out.ok);
  REQUIRE(out.reason == "stale path");
  REQUIRE(scene_to_string(env.truth()) == before);
  REQUIRE(env.executed() == 0);
}

TEST_CASE("a grasp aimed at a moved object misses") {
  RobotModel m;
  Scene believed = pick_scene();
  GroundAction pick = act_of(ActionKind::pick, {"g", "t"});
  ReasonStats rstats;
  auto feas = evaluate_action(believed, m, pick, 7, 0, rstats);
  REQUIRE(feas.feasible);
  auto ctx = action_collision_ctx(believed, pick);
  MotionStats mstats;
  auto plan = plan_motion(believed, m, believed.q, feas.binding.q, ctx, 10.0,
                          3, mstats);
  REQUIRE(plan.found);

  Scene truth = believed;
  truth.objects["g"].pos = {0.58, 0.0};  // 3cm from where the plan expects
  SimEnvironment env(truth, m, {}, 42);
  auto out = env.execute_arm(pick, feas.binding, plan.path, ctx);
  REQUIRE(!out.ok);
  REQUIRE(out.reason == "grasp misaligned");
  REQUIRE(!env.truth().held);
}

TEST_CASE("perturbation events fire at the configured rate") {
  RobotModel m;
  Scene truth = pick_scene();
  truth.held = "g";
  truth.objects.at("g").support.reset();
  truth.objects["other"] = {0.04, {1.0, -0.3}, 0, "t", true};
  PerturbSpec spec;
  spec.p = 0.2;
  SimEnvironment env(truth, m, spec, 4242);

  int fired = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    auto out = env.execute_gripper(
        act_of(i % 2 == 0 ? ActionKind::load : ActionKind::unload, {"g"}));
    REQUIRE(out.ok);
    if (!out.events.empty()) ++fired;
  }
  double rate = double(fired) / n;
  REQUIRE(rate > 0.19);
  REQUIRE(rate < 0.21);
  // Moves always hit the only movable candidate and keep it legal.
  const auto& other = env.truth().objects.at("other");
  REQUIRE(other.support == "t");
  REQUIRE(env.truth().surfaces.at("t").rect.contains(other.pos, other.radius));
}

TEST_CASE("a scripted drop releases the held object near the gripper") {
  RobotModel m;
  Scene truth = pick_scene();
  truth.q = {0, 0, 0};
  truth.objects.at("g").support.reset();
  truth.tray = {"g"};
  SimEnvironment env(truth, m, {}, 9);
  std::istringstream script("# slip\nafter 1 dropgrasp\n");
  env.set_script(parse_script(script, "s"));

  auto out = env.execute_gripper(act_of(ActionKind::unload, {"g"}));
  REQUIRE(out.ok);
  REQUIRE(out.events == std::vector<std::string>{"drop:g"});
  REQUIRE(!env.truth().held);
  const auto& g = env.truth().objects.at("g");
  REQUIRE(g.support == "t");
  REQUIRE(dist(g.pos, Vec2{1.05, 0.0}) <= 0.10 + 1e-9);
}

TEST_CASE("scripted moves teleport exactly and suppress random noise") {
  RobotModel m;
  Scene truth = pick_scene();
  PerturbSpec spec;
  spec.p = 1.0;  // would fire every action if the script did not override
  SimEnvironment env(truth, m, spec, 7);
  std::istringstream script("after 2 move g 0.9 -0.3\n");
  env.set_script(parse_script(script, "s"));

  GroundAction pick = act_of(ActionKind::pick, {"g", "t"});
  ReasonStats rstats;
  auto feas = evaluate_action(truth, m, pick, 7, 0, rstats);
  auto ctx = action_collision_ctx(truth, pick);
  MotionStats mstats;
  auto plan =
      plan_motion(truth, m, truth.q, feas.binding.q, ctx, 10.0, 3, mstats);
  auto first = env.execute_arm(pick, feas.binding, plan.path, ctx);
  REQUIRE(first.ok);
  REQUIRE(first.events.empty());  // script fires after action 2, not 1

  Binding pb;
  pb.place_pos = {0.5, 0.2};
  pb.q = env.truth().q;
  auto second = env.execute_arm(act_of(ActionKind::place, {"g", "t"}), pb,
                                {env.truth().q}, ctx);
  REQUIRE(second.ok);
  REQUIRE(second.events == std::vector<std::string>{"move:g"});
  REQUIRE(env.truth().objects.at("g").pos == Vec2{0.9, -0.3});
  REQUIRE(env.truth().objects.at("g").support == "t");
}

TEST_CASE("docking noise stays inside its radius") {
  RobotModel m;
  Scene truth;
  truth.mobile = true;
  truth.base_radius = 0.18;
  truth.base = {{0, 0}, 0};
  truth.surfaces["far"] = {{5, 5, 5.5, 5.5}, ""};
  PerturbSpec spec;
  spec.dock_noise = 0.03;
  SimEnvironment env(truth, m, spec, 11);

  Binding nb;
  nb.dock = {{2.0, 0.0}, 1.57};
  NavResult nav;
  nav.found = true;
  nav.waypoints = {{{0, 0}, 0}, {{2.0, 0.0}, 1.57}};
  nav.length = 2.0;
  auto out =
      env.execute_navigate(act_of(ActionKind::navigate, {"wa", "wb"}), nb, nav);
  REQUIRE(out.ok);
  REQUIRE(out.seconds == Catch::Approx(2.0 / 0.3));
  double err = dist(env.truth().base.p, Vec2{2.0, 0.0});
  REQUIRE(err <= 0.03 + 1e-12);
  REQUIRE(err > 0.0);
  REQUIRE(out.events == std::vector<std::string>{"dock-noise"});
}

TEST_CASE("observation noise is truncated and matches its density") {
  RobotModel m;
  Scene truth = pick_scene();
  PerturbSpec spec;
  spec.obs_noise = 0.001;
  SimEnvironment env(truth, m, spec, 123);

  double sum_abs = 0;
  int n = 0;
  for (int i = 0; i < 1000; ++i) {
    Scene obs = env.observe();
    for (const auto& [id, o] : obs.objects) {
      Vec2 d = o.pos - truth.objects.at(id).pos;
      REQUIRE(std::abs(d.x) <= 3 * spec.obs_noise + 1e-15);
      REQUIRE(std::abs(d.y) <= 3 * spec.obs_noise + 1e-15);
      sum_abs += std::abs(d.x) + std::abs(d.y);
      n += 2;
    }
  }
  // Numeric integration of E|X| for the 3-sigma truncated normal.
  double sigma = spec.obs_noise;
  auto density = [&](double x) {
    return std::exp(-x * x / (2 * sigma * sigma));
  };
  double z = 0, ex = 0;
  const int steps = 20000;
  double h = 6 * sigma / steps;
  for (int i = 0; i <= steps; ++i) {
    double x = -3 * sigma + i * h;
    double w = (i == 0 || i == steps) ? 0.5 : 1.0;
    z += w * density(x) * h;
    ex += w * std::abs(x) * density(x) * h;
  }
  double oracle = ex / z;
  double sample = sum_abs / n;
  REQUIRE(sample == Catch::Approx(oracle).epsilon(0.08));

  SECTION("zero sigma observes exactly") {
    SimEnvironment clean(truth, m, {}, 123);
    REQUIRE(scene_to_string(clean.observe()) == scene_to_string(truth));
  }
}

TEST_CASE("script parsing rejects malformed lines precisely") {
  auto bad = [](const std::string& text) {
    std::istringstream in(text);
    return parse_script(in, "p.script");
  };
  REQUIRE_THROWS_WITH(bad("after 1 wobble\n"),
                      Catch::Matchers::ContainsSubstring("p.script:1"));
  REQUIRE_THROWS_WITH(bad("# ok\nafter 0 dropgrasp\n"),
                      Catch::Matchers::ContainsSubstring("p.script:2"));
  REQUIRE_THROWS_AS(bad("after 1 move g 0.1\n"), ParseError);
  REQUIRE_THROWS_AS(bad("once 1 dropgrasp\n"), ParseError);
  auto ok = bad("after 3 move a 0.5 0.25\nafter 4 dropgrasp\n");
  REQUIRE(ok.events.size() == 2);
  REQUIRE(ok.events[0].obj == "a");
  REQUIRE(ok.events[0].to == Vec2{0.5, 0.25});
  REQUIRE(ok.events[1].drop);
  REQUIRE(ok.events[1].after == 4);
}
