// Single-instance solver: loads a scene and a problem file, runs the
// receding-horizon executive (or the baseline) against the simulator, and
// writes the execution trace.

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rhtamp/bench.hpp"

using namespace rhtamp;

int main(int argc, char** argv) {
  CLI::App app{"solve one instance closed loop"};
  std::string scene_path, problem_path, trace_path, script_path;
  std::string horizon = "inf";
  std::uint64_t seed = 0;
  double perturb = 0.0;
  bool baseline = false;

  app.add_option("--scene", scene_path, "scene file")->required();
  app.add_option("--problem", problem_path, "problem file")->required();
  app.add_option("--horizon", horizon, "actions horizon, integer or inf");
  app.add_option("--trace", trace_path, "write the execution trace here");
  app.add_option("--script", script_path, "scripted perturbation file");
  app.add_option("--seed", seed, "run seed");
  app.add_option("--perturb", perturb, "per-action perturbation probability");
  app.add_flag("--baseline", baseline, "plan everything up front");
  CLI11_PARSE(app, argc, argv);

  try {
    Scene scene = parse_scene_file(scene_path);
    ProblemDef def = parse_problem_file(problem_path);

    ExecutiveConfig cfg;
    cfg.horizon = horizon == "inf" ? kInfiniteHorizon : std::stoi(horizon);

    PerturbSpec spec;
    spec.p = perturb;
    SimEnvironment env(scene, {}, spec, seed);
    if (!script_path.empty()) {
      std::ifstream in(script_path);
      if (!in) throw std::runtime_error("cannot read " + script_path);
      env.set_script(parse_script(in, script_path));
    }

    std::ostringstream trace;
    Executive ex(env, scene, def, cfg, seed, &trace);
    RunResult r = baseline ? ex.run_baseline() : ex.run();

    if (!trace_path.empty()) {
      std::ofstream out(trace_path, std::ios::binary);
      out << trace.str();
      if (!out) throw std::runtime_error("cannot write " + trace_path);
    }
    std::cout << "status=" << r.status << " actions=" << r.actions
              << " replans=" << r.replans << '\n';
    return r.status == "success" ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "solve: " << e.what() << '\n';
    return 2;
  }
}
