// Minimal closed-loop recovery walkthrough: a scripted perturbation drops a
// cylinder onto the goal's destination pad right after the pick, forcing a
// mismatch, a knowledge-base reset, and a fresh, longer task plan.

#include <iostream>
#include <sstream>

#include "rhtamp/executive.hpp"

using namespace rhtamp;

int main() {
  Scene sc;
  sc.base = {{0, 0}, 0};
  sc.q = {2.0, -1.0, 0.5};
  sc.surfaces["table"] = {{0.2, -0.4, 1.3, 0.4}, ""};
  sc.surfaces["pad"] = {{-0.32, -0.06, -0.20, 0.06}, ""};
  sc.objects["goal_cyl"] = {0.03, {0.60, 0.0}, 0, "table", true};
  sc.objects["blocker"] = {0.03, {0.70, 0.10}, 0, "table", true};

  ProblemDef def;
  def.table.entries["goal_cyl"] = {.movable = true};
  def.table.entries["blocker"] = {.movable = true};
  def.table.entries["table"] = {.surface = true};
  def.table.entries["pad"] = {.surface = true};
  def.goal = {atom("on", "goal_cyl", "pad")};

  std::istringstream script_text("after 1 move blocker -0.26 0.0\n");
  SimEnvironment env(sc, {}, {}, 3);
  env.set_script(parse_script(script_text));

  ExecutiveConfig cfg;
  cfg.horizon = 2;
  Executive ex(env, sc, def, cfg, 3, &std::cout);
  RunResult r = ex.run();
  std::cout << "final: " << r.status << " after " << r.actions
            << " actions, " << r.replans << " replans\n";
  return r.status == "success" ? 0 : 1;
}
