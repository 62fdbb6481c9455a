#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rhtamp/bench.hpp"

using namespace rhtamp;

namespace {

GroundAction ga(ActionKind k, std::vector<std::string> params) {
  GroundAction a;
  a.kind = k;
  a.params = std::move(params);
  return a;
}

// Hand-rolled manipulation enumerator: applicability read straight off the
// scene's support/held fields, not through the symbolic layer. Feasibility
// and scene succession still go through the geometric reasoner, which is
// the thing under test.
std::vector<GroundAction> hand_moves(const Scene& sc,
                                     const std::set<std::string>& movables) {
  std::vector<GroundAction> out;
  if (!sc.held) {
    for (const auto& id : movables) {
      const auto& o = sc.objects.at(id);
      if (!o.support) continue;
      bool topped = false;
      for (const auto& [oid, other] : sc.objects)
        topped = topped || (other.support && *other.support == id);
      if (topped) continue;
      if (sc.objects.count(*o.support))
        out.push_back(ga(ActionKind::unstack, {id, *o.support}));
      else
        out.push_back(ga(ActionKind::pick, {id, *o.support}));
    }
    return out;
  }
  for (const auto& [sid, s] : sc.surfaces)
    out.push_back(ga(ActionKind::place, {*sc.held, sid}));
  for (const auto& id : movables) {
    if (id == *sc.held || !sc.is_placed(id)) continue;
    bool topped = false;
    for (const auto& [oid, other] : sc.objects)
      topped = topped || (other.support && *other.support == id);
    if (!topped) out.push_back(ga(ActionKind::stack, {*sc.held, id}));
  }
  return out;
}

bool goal_met(const Scene& sc, const ProblemDef& def) {
  for (const Atom& g : def.goal) {
    if (g.pred != "on") return false;
    auto it = sc.objects.find(g.args[0]);
    if (it == sc.objects.end() || !it->second.support ||
        *it->second.support != g.args[1])
      return false;
  }
  return true;
}

// Exhaustive search over geometric action chains up to the given depth.
// Returns true when some chain reaches the goal.
bool chain_to_goal(const Scene& sc, const ProblemDef& def,
                   const std::set<std::string>& movables, int depth,
                   std::uint64_t seed) {
  if (goal_met(sc, def)) return true;
  if (depth == 0) return false;
  RobotModel model;
  for (const auto& act : hand_moves(sc, movables)) {
    ReasonStats st;
    auto res = evaluate_action(sc, model, act, seed, 0, st);
    if (!res.feasible) continue;
    Scene next = apply_action(sc, act, res.binding);
    if (chain_to_goal(next, def, movables, depth - 1, seed)) return true;
  }
  return false;
}

bool chain_feasible(const Scene& sc, const std::vector<GroundAction>& seq,
                    std::uint64_t seed) {
  Scene cur = sc;
  RobotModel model;
  for (const auto& act : seq) {
    ReasonStats st;
    auto res = evaluate_action(cur, model, act, seed, 0, st);
    if (!res.feasible) return false;
    cur = apply_action(cur, act, res.binding);
  }
  return true;
}

}  // namespace

TEST_CASE("clutter generation is deterministic and shape-correct") {
  Instance a = gen_clutter(5, 7);
  Instance b = gen_clutter(5, 7);
  REQUIRE(scene_to_string(a.scene) == scene_to_string(b.scene));
  REQUIRE(problem_to_string(a.def) == problem_to_string(b.def));

  REQUIRE(a.scene.objects.size() == 5);
  REQUIRE(a.scene.objects.count("red") == 1);
  REQUIRE(a.scene.surfaces.count("t") == 1);
  REQUIRE(a.def.goal == std::vector<Atom>{atom("inHand", "red")});
  for (const auto& [id, o] : a.scene.objects) {
    REQUIRE(o.movable);
    REQUIRE(o.support == "t");
    REQUIRE(o.pos.norm() <= 1.0);
  }
}

TEST_CASE("a single-object clutter instance is a one-action problem") {
  Instance inst = gen_clutter(1, 3);
  SimEnvironment env(inst.scene, {}, {}, 99);
  ExecutiveConfig cfg;
  cfg.horizon = 2;
  Executive ex(env, inst.scene, inst.def, cfg, 99);
  RunResult r = ex.run();
  REQUIRE(r.status == "success");
  REQUIRE(r.actions == 1);
}

TEST_CASE("generator argument validation") {
  REQUIRE_THROWS_AS(gen_clutter(0, 1), GeneratorError);
  REQUIRE_THROWS_AS(gen_clutter(41, 1), GeneratorError);
  REQUIRE_THROWS_AS(gen_non_monotonic(1, 2, 1), GeneratorError);
  REQUIRE_THROWS_AS(gen_non_monotonic(0, 0, 1), GeneratorError);
  REQUIRE_THROWS_AS(gen_non_monotonic(4, 4, 1), GeneratorError);
  REQUIRE_THROWS_AS(gen_sort_clutter(5, 2, 1), GeneratorError);
  REQUIRE_THROWS_AS(gen_sort_clutter(16, 2, 1), GeneratorError);
  REQUIRE_THROWS_AS(gen_sort_clutter(4, 0, 1), GeneratorError);
  REQUIRE_THROWS_AS(generate("bogus", 3, 1, 1), GeneratorError);
}

TEST_CASE("the corridor gadget needs six actions, not four") {
  Instance inst = gen_non_monotonic(1, 1, 3);
  std::set<std::string> ids;
  for (const auto& [id, o] : inst.scene.objects) ids.insert(id);
  REQUIRE(ids == std::set<std::string>{"blue1", "pad1", "red1", "flank_a1",
                                       "flank_b1"});
  REQUIRE(inst.scene.objects.at("red1").tier == 1);
  REQUIRE(inst.scene.objects.at("red1").support == "pad1");
  REQUIRE_FALSE(inst.scene.objects.at("flank_a1").movable);

  std::set<std::string> movables = {"blue1", "pad1", "red1"};
  // No four-step chain completes the gadget, whatever the order.
  REQUIRE_FALSE(chain_to_goal(inst.scene, inst.def, movables, 4, 3));
  // Parking the red cylinder on the buffer first does, in six.
  std::vector<GroundAction> six = {
      ga(ActionKind::pick, {"blue1", "src1"}),
      ga(ActionKind::place, {"blue1", "buffer"}),
      ga(ActionKind::unstack, {"red1", "pad1"}),
      ga(ActionKind::place, {"red1", "drop_red1"}),
      ga(ActionKind::pick, {"blue1", "buffer"}),
      ga(ActionKind::stack, {"blue1", "pad1"})};
  REQUIRE(chain_feasible(inst.scene, six, 3));
  Scene done = inst.scene;
  RobotModel model;
  for (const auto& act : six) {
    ReasonStats st;
    auto res = evaluate_action(done, model, act, 3, 0, st);
    done = apply_action(done, act, res.binding);
  }
  REQUIRE(goal_met(done, inst.def));
}

TEST_CASE("non-monotonic generation is deterministic") {
  Instance a = gen_non_monotonic(2, 2, 3);
  Instance b = gen_non_monotonic(2, 2, 3);
  REQUIRE(scene_to_string(a.scene) == scene_to_string(b.scene));
  REQUIRE(a.scene.objects.size() == 10);
  REQUIRE(a.def.goal.size() == 4);
}

TEST_CASE("sort-clutter builds a two-region transport world") {
  Instance inst = gen_sort_clutter(2, 2, 5);
  REQUIRE(inst.scene.mobile);
  REQUIRE(inst.scene.regions.count("wa") == 1);
  REQUIRE(inst.scene.regions.count("wb") == 1);
  REQUIRE(inst.def.table.tray_capacity == 2.0);
  REQUIRE(inst.scene.objects.count("red1") == 1);
  REQUIRE(inst.scene.objects.count("blue1") == 1);
  REQUIRE(inst.scene.surfaces.at("drop_red").region == "wb");

  // Certified at infinite horizon; a finite window must also get there.
  SimEnvironment env(inst.scene, {}, {}, 17);
  ExecutiveConfig cfg;
  cfg.horizon = 2;
  Executive ex(env, inst.scene, inst.def, cfg, 17);
  REQUIRE(ex.run().status == "success");
}

TEST_CASE("suite defaults match the benchmark protocol") {
  BenchmarkSpec spec;
  REQUIRE(spec.trials == 15);
  REQUIRE(spec.horizons ==
          std::vector<int>{2, 4, 6, 8, kInfiniteHorizon});
  REQUIRE(spec.baseline);
}

TEST_CASE("run_suite emits ordered rows and stable artifacts") {
  BenchmarkSpec spec;
  spec.problem = "clutter";
  spec.n = 2;
  spec.horizons = {2};
  spec.trials = 2;
  spec.seed = 11;
  SuiteResult res = run_suite(spec);

  REQUIRE(res.complete);
  REQUIRE(res.rows.size() == 4);  // 2 trials x (rh@2 + baseline)
  // Sorted: baseline block first (arm name order), trials ascending.
  REQUIRE(res.rows[0].arm == "baseline");
  REQUIRE(res.rows[1].arm == "baseline");
  REQUIRE(res.rows[2].arm == "rh");
  REQUIRE(res.rows[3].arm == "rh");
  REQUIRE(res.rows[0].trial == 0);
  REQUIRE(res.rows[1].trial == 1);

  int successes = 0;
  for (const auto& r : res.rows) {
    if (r.status == "success") ++successes;
    REQUIRE(r.time ==
            Catch::Approx(r.t_task + r.t_reason + r.t_motion + r.t_exec));
  }
  REQUIRE(successes == 4);

  std::istringstream csv(res.csv);
  std::string line;
  std::getline(csv, line);
  REQUIRE(line ==
          "problem,n,arm,horizon,trial,seed,status,time,actions,replans,"
          "t_task,t_reason,t_motion,t_exec");
  int data_lines = 0;
  while (std::getline(csv, line)) ++data_lines;
  REQUIRE(data_lines == 4);

  REQUIRE(res.summary.find("success_rate=100.0") != std::string::npos);
  REQUIRE(res.plot.find("module=exec") != std::string::npos);

  SuiteResult again = run_suite(spec);
  REQUIRE(res.csv == again.csv);
  REQUIRE(res.summary == again.summary);
  REQUIRE(res.plot == again.plot);
}
