#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "rhtamp/motion.hpp"

using namespace rhtamp;

namespace {

Scene open_scene() {
  Scene sc;
  sc.base = {{0, 0}, 0};
  sc.surfaces["t"] = {{-1.3, -1.3, 1.3, 1.3}, ""};
  return sc;
}

void add_obj(Scene& sc, const ObjectId& id, Vec2 pos, double r,
             bool movable = true) {
  sc.objects[id] = {r, pos, 0, "t", movable};
}

}  // namespace

TEST_CASE("configuration helpers") {
  JointConfig a{0, 0, 0}, b{0.5, -1.5, 1.0};
  REQUIRE(config_dist(a, b) == 1.5);
  REQUIRE(config_dist(a, a) == 0.0);
  JointConfig mid = config_lerp(a, b, 0.5);
  REQUIRE(mid[1] == -0.75);
  REQUIRE(path_radians({a, mid, b}) == Catch::Approx(1.5));
}

TEST_CASE("free space connects directly") {
  RobotModel m;
  Scene sc = open_scene();
  MotionStats stats;
  JointConfig start{-1.0, 0.5, 0.3}, goal{1.0, -0.5, -0.3};
  auto res = plan_motion(sc, m, start, goal, {}, 10.0, 5, stats);
  REQUIRE(res.found);
  REQUIRE(!res.timeout);
  REQUIRE(res.path.size() == 2);
  REQUIRE(res.path.front() == start);
  REQUIRE(res.path.back() == goal);
  REQUIRE(stats.charged(CostModel{}) > 0);
}

TEST_CASE("plans a detour around a blocking disc and survives revalidation") {
  RobotModel m;
  Scene sc = open_scene();
  add_obj(sc, "rock", {0.9, 0.0}, 0.05);
  JointConfig start{-1.2, 0.6, 0.4}, goal{1.2, -0.6, -0.4};

  // The straight joint-space edge passes through the stretched arm.
  MotionStats probe;
  REQUIRE(!detail::edge_clear(sc, m, start, goal, {}, 0.05, probe, nullptr));

  MotionStats stats;
  auto res = plan_motion(sc, m, start, goal, {}, 10.0, 5, stats);
  REQUIRE(res.found);
  REQUIRE(res.path.front() == start);
  REQUIRE(res.path.back() == goal);
  MotionStats vstats;
  auto rep = validate_path(sc, m, res.path, {}, 0.025, vstats);
  REQUIRE(rep.free);
}

TEST_CASE("planning is deterministic per seed") {
  RobotModel m;
  Scene sc = open_scene();
  add_obj(sc, "rock", {0.9, 0.0}, 0.05);
  JointConfig start{-1.2, 0.6, 0.4}, goal{1.2, -0.6, -0.4};
  MotionStats s1, s2;
  auto r1 = plan_motion(sc, m, start, goal, {}, 10.0, 99, s1);
  auto r2 = plan_motion(sc, m, start, goal, {}, 10.0, 99, s2);
  REQUIRE(r1.found);
  REQUIRE(r1.path == r2.path);
  REQUIRE(s1.config_checks == s2.config_checks);
  REQUIRE(s1.samples == s2.samples);
}

TEST_CASE("disconnected joint space times out and names the pinch points") {
  RobotModel m;
  Scene sc;
  sc.base = {{0, 0}, 0};
  sc.surfaces["shelf"] = {{-0.3, 0.2, 0.3, 0.45}, ""};
  // Two pillars at radius 0.3, straddling 90 degrees. Any path from q1=2.8
  // to q1=0 must sweep the first link through the band they seal off:
  // within 0.271 rad of either pillar the link clears by less than
  // 0.3*sin(0.271) = 0.08 = pillar radius + link radius, and the pillars
  // sit 0.4 rad apart, so the blocked bands overlap. Joint limits rule out
  // wrapping around the far side.
  sc.objects["p1"] = {0.05, dir(kPi / 2 - 0.2) * 0.3, 0, "shelf", false};
  sc.objects["p2"] = {0.05, dir(kPi / 2 + 0.2) * 0.3, 0, "shelf", false};

  JointConfig start{2.8, 0, 0}, goal{0, 0, 0};
  MotionStats stats;
  CostModel cost;
  auto res = plan_motion(sc, m, start, goal, {}, 2.0, 31, stats, cost);
  REQUIRE(!res.found);
  REQUIRE(res.timeout);
  REQUIRE(!res.blockers.empty());
  for (const auto& b : res.blockers) REQUIRE((b == "p1" || b == "p2"));
  REQUIRE(stats.charged(cost) >= 2.0);
  REQUIRE(stats.charged(cost) < 2.5);  // stops promptly after the budget
}

TEST_CASE("colliding endpoints are rejected up front") {
  RobotModel m;
  Scene sc = open_scene();
  add_obj(sc, "rock", {1.0, 0.0}, 0.05);
  JointConfig bad{0, 0, 0};  // stretched arm ends inside the rock
  JointConfig ok{2.0, 0.5, 0.5};
  MotionStats stats;
  REQUIRE_THROWS_AS(plan_motion(sc, m, bad, ok, {}, 1.0, 1, stats),
                    PreconditionError);
  REQUIRE_THROWS_AS(plan_motion(sc, m, ok, bad, {}, 1.0, 1, stats),
                    PreconditionError);
}

TEST_CASE("revalidation catches paths gone stale") {
  RobotModel m;
  Scene sc = open_scene();
  JointConfig start{-1.0, 0.5, 0.3}, goal{1.0, -0.5, -0.3};
  MotionStats stats;
  auto res = plan_motion(sc, m, start, goal, {}, 10.0, 5, stats);
  REQUIRE(res.found);
  add_obj(sc, "intruder", {0.9, 0.0}, 0.06);
  MotionStats vstats;
  auto rep = validate_path(sc, m, res.path, {}, 0.05, vstats);
  REQUIRE(!rep.free);
  REQUIRE(rep.blockers == std::set<ObjectId>{"intruder"});
}

TEST_CASE("base path on open floor is a straight pruned line") {
  Scene sc;
  sc.mobile = true;
  sc.base_radius = 0.18;
  sc.base = {{0, 0}, 0};
  sc.surfaces["far"] = {{5.0, 5.0, 5.5, 5.5}, ""};
  MotionStats stats;
  auto res = plan_base_path(sc, {{0, 0}, 0}, {{2.0, 0}, 1.57}, stats);
  REQUIRE(res.found);
  REQUIRE(res.waypoints.size() == 2);
  REQUIRE(res.waypoints.front().p == Vec2{0, 0});
  REQUIRE(res.waypoints.back().p == Vec2{2.0, 0});
  REQUIRE(res.waypoints.back().theta == 1.57);
  REQUIRE(res.length == Catch::Approx(2.0));
  REQUIRE(stats.samples > 0);
}

TEST_CASE("base path detours around an inflated table") {
  Scene sc;
  sc.mobile = true;
  sc.base_radius = 0.18;
  sc.base = {{0, 0}, 0};
  sc.surfaces["wall"] = {{0.8, -2.0, 1.2, 0.5}, ""};
  MotionStats stats;
  auto res = plan_base_path(sc, {{0, 0}, 0}, {{2.0, 0}, 0}, stats);
  REQUIRE(res.found);
  REQUIRE(res.length > 2.3);
  REQUIRE(res.length < 3.5);
  // Every point of the polyline keeps nearly the full inflation margin
  // (cell centres are conservative to half a diagonal).
  for (std::size_t i = 1; i < res.waypoints.size(); ++i) {
    Vec2 a = res.waypoints[i - 1].p, b = res.waypoints[i].p;
    int n = static_cast<int>(std::ceil(dist(a, b) / 0.01));
    for (int k = 0; k <= n; ++k) {
      Vec2 p{a.x + (b.x - a.x) * k / n, a.y + (b.y - a.y) * k / n};
      REQUIRE(point_rect_dist(p, sc.surfaces["wall"].rect) >
              sc.base_radius - 0.02);
    }
  }
}

TEST_CASE("blocked or enclosed docks are reported as unreachable") {
  Scene sc;
  sc.mobile = true;
  sc.base_radius = 0.18;
  sc.base = {{0, 0}, 0};
  sc.surfaces["wall"] = {{0.8, -2.0, 1.2, 0.5}, ""};
  MotionStats stats;

  SECTION("dock inside the inflated zone") {
    auto res = plan_base_path(sc, {{0, 0}, 0}, {{1.0, 0.6}, 0}, stats);
    REQUIRE(!res.found);
  }
  SECTION("start inside the inflated zone can escape") {
    auto res = plan_base_path(sc, {{1.0, 0.66}, 0}, {{2.0, 0}, 0}, stats);
    REQUIRE(res.found);
    REQUIRE(res.waypoints.front().p == Vec2{1.0, 0.66});
  }
  SECTION("sealed box around the dock") {
    Scene box;
    box.mobile = true;
    box.base_radius = 0.18;
    box.base = {{0, 0}, 0};
    box.surfaces["s"] = {{2.5, -0.7, 3.5, -0.5}, ""};
    box.surfaces["n"] = {{2.5, 0.5, 3.5, 0.7}, ""};
    box.surfaces["w"] = {{2.5, -0.5, 2.6, 0.5}, ""};
    box.surfaces["e"] = {{3.4, -0.5, 3.5, 0.5}, ""};
    validate_scene(box);
    auto res = plan_base_path(box, {{0, 0}, 0}, {{3.0, 0}, 0}, stats);
    REQUIRE(!res.found);
  }
}
