// Generates a cluttered-table instance, runs the receding-horizon executive
// with a finite window, and prints the trace plus the result line.

#include <iostream>

#include "rhtamp/bench.hpp"

using namespace rhtamp;

int main() {
  Instance inst = gen_clutter(10, 42);
  std::cout << "--- scene ---\n" << scene_to_string(inst.scene);
  std::cout << "--- problem ---\n" << problem_to_string(inst.def);

  PerturbSpec perturb;
  perturb.p = 0.2;
  perturb.grasp_drop = true;
  SimEnvironment env(inst.scene, {}, perturb, 7);

  ExecutiveConfig cfg;
  cfg.horizon = 4;
  Executive ex(env, inst.scene, inst.def, cfg, 7, &std::cout);
  std::cout << "--- run (h=4, p=0.2) ---\n";
  RunResult r = ex.run();
  std::cout << "final: " << r.status << " after " << r.actions
            << " actions, " << r.replans << " replans\n";
  return r.status == "success" ? 0 : 1;
}
