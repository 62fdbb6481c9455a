#pragma once

#include <algorithm>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rhtamp/executive.hpp"

namespace rhtamp {

struct GeneratorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A generated benchmark problem: the scene plus the matching problem
// definition (object table, init atoms, goal).
struct Instance {
  Scene scene;
  ProblemDef def;
};

namespace detail {

inline Vec2 rot(Vec2 v, double th) {
  return {v.x * std::cos(th) - v.y * std::sin(th),
          v.x * std::sin(th) + v.y * std::cos(th)};
}

inline Rect square(Vec2 c, double half) {
  return {c.x - half, c.y - half, c.x + half, c.y + half};
}

// Solvability certification: an unbounded-horizon, perturbation-free run
// under the standard budgets must reach the goal.
inline bool certified(const Instance& inst, std::uint64_t seed) {
  SimEnvironment env(inst.scene, {}, {}, hash_mix(seed, 0xce47u));
  ExecutiveConfig cfg;
  cfg.horizon = kInfiniteHorizon;
  cfg.task_budget = 10.0;
  cfg.motion_budget = 10.0;
  cfg.max_replans = 3;
  cfg.total_budget = 600.0;
  Executive ex(env, inst.scene, inst.def, cfg, seed);
  return ex.run().status == "success";
}

inline GroundAction ground(ActionKind k, std::vector<std::string> params) {
  GroundAction a;
  a.kind = k;
  a.params = std::move(params);
  return a;
}

// True when the given pick/place sequence is geometrically feasible end to
// end on predicted scenes.
inline bool sequence_feasible(const Instance& inst,
                              const std::vector<GroundAction>& seq,
                              std::uint64_t seed) {
  Scene cur = inst.scene;
  RobotModel model;
  for (const auto& act : seq) {
    ReasonStats st;
    auto res = evaluate_action(cur, model, act, seed, 0, st);
    if (!res.feasible) return false;
    cur = apply_action(cur, act, res.binding);
  }
  return true;
}

}  // namespace detail

// Cluttered table: n cylinders on one table within arm reach, the target
// near the sector center with the rest scattered around it. Goal: get the
// target in hand. Certified solvable at generation; the seed chain retries
// deterministically when sampling or certification fails.
inline Instance gen_clutter(int n, std::uint64_t seed) {
  if (n < 1 || n > 40)
    throw GeneratorError("clutter size must be in [1, 40]");
  for (int attempt = 0; attempt < 32; ++attempt) {
    std::uint64_t s = hash_mix(seed, attempt);
    Rng rng(hash_mix(s, 0xc1a77e5ull));
    Scene sc;
    sc.base = {{0, 0}, 0};
    sc.q = {2.0, -1.0, 0.5};  // folded away from the sampling sector
    sc.surfaces["t"] = {{0.32, -0.55, 1.02, 0.55}, ""};
    auto polar = [&](double r0, double r1, double a0, double a1) {
      double rr = std::sqrt(rng.uniform(r0 * r0, r1 * r1));
      return dir(rng.uniform(a0, a1)) * rr;
    };
    std::vector<Vec2> placed;
    auto clear_of = [&](Vec2 p) {
      for (const auto& q : placed)
        if (dist(p, q) < 0.072) return false;
      return true;
    };
    Vec2 tgt = polar(0.58, 0.66, -0.12, 0.12);
    placed.push_back(tgt);
    sc.objects["red"] = {0.03, tgt, 0, "t", true};
    bool stuck = false;
    for (int i = 1; i < n && !stuck; ++i) {
      Vec2 p;
      int tries = 0;
      do {
        p = polar(0.42, 0.98, -0.55, 0.55);
        if (++tries > 4000) {
          stuck = true;
          break;
        }
      } while (!clear_of(p));
      if (stuck) break;
      placed.push_back(p);
      sc.objects["c" + std::to_string(i)] = {0.03, p, 0, "t", true};
    }
    if (stuck) continue;
    Instance inst;
    inst.scene = sc;
    for (const auto& [id, o] : sc.objects)
      inst.def.table.entries[id] = {.movable = true};
    inst.def.table.entries["t"] = {.surface = true};
    for (const auto& [id, o] : sc.objects)
      inst.def.init.push_back(atom("on", id, "t"));
    inst.def.goal = {atom("inHand", "red")};
    if (detail::certified(inst, s)) return inst;
  }
  throw GeneratorError("clutter generation failed after 32 seeds");
}

// Corridor gadget world: each blue cylinder is flanked by fixed cylinders
// so it is graspable only through one approach corridor, and the matching
// red cylinder's goal rectangle sits in that corridor. The blue cylinder's
// goal is the top of a pad cylinder that the red cylinder starts stacked
// on. Four actions can therefore never finish a gadget: red straight to
// its goal seals the corridor before blue is out, and blue cannot be
// stacked while red occupies the pad. Both orders are verified
// geometrically at generation.
inline Instance gen_non_monotonic(int k_red, int k_blue, std::uint64_t seed) {
  if (k_red != k_blue)
    throw GeneratorError("red and blue counts must match");
  int k = k_red;
  if (k < 1 || k > 3)
    throw GeneratorError("corridor construction supports 1 to 3 pairs");
  static const std::vector<std::vector<double>> kAzimuths = {
      {0.0}, {-0.35, 0.35}, {-0.6, 0.0, 0.6}};
  const auto& thetas = kAzimuths[k - 1];

  Instance inst;
  Scene& sc = inst.scene;
  sc.base = {{0, 0}, 0};
  sc.q = {2.0, -1.0, 0.5};
  sc.surfaces["buffer"] = {{-0.08, 0.30, 0.16, 0.54}, ""};
  inst.def.table.entries["buffer"] = {.surface = true};
  for (int i = 0; i < k; ++i) {
    double th = thetas[i];
    std::string t = std::to_string(i + 1);
    Vec2 blue = detail::rot({0.93, 0.0}, th);
    Vec2 fa = detail::rot({0.93, 0.09}, th);
    Vec2 fb = detail::rot({0.93, -0.09}, th);
    Vec2 dr = detail::rot({0.78, 0.0}, th);
    Vec2 gp = detail::rot({0.80, 0.22}, th);
    sc.surfaces["src" + t] = {detail::square(blue, 0.045), ""};
    sc.surfaces["mark" + t] = {detail::square(gp, 0.045), ""};
    sc.surfaces["drop_red" + t] = {detail::square(dr, 0.035), ""};
    sc.objects["blue" + t] = {0.03, blue, 0, "src" + t, true};
    sc.objects["pad" + t] = {0.035, gp, 0, "mark" + t, true};
    sc.objects["red" + t] = {0.03, gp, 1, "pad" + t, true};
    sc.objects["flank_a" + t] = {0.06, fa, 0, "src" + t, false};
    sc.objects["flank_b" + t] = {0.06, fb, 0, "src" + t, false};
    inst.def.table.entries["blue" + t] = {.movable = true};
    inst.def.table.entries["red" + t] = {.movable = true};
    inst.def.table.entries["pad" + t] = {.movable = true};
    inst.def.table.entries["flank_a" + t] = {};
    inst.def.table.entries["flank_b" + t] = {};
    inst.def.table.entries["src" + t] = {.surface = true};
    inst.def.table.entries["mark" + t] = {.surface = true};
    inst.def.table.entries["drop_red" + t] = {.surface = true, .drop = true};
    inst.def.init.push_back(atom("on", "blue" + t, "src" + t));
    inst.def.init.push_back(atom("on", "pad" + t, "mark" + t));
    inst.def.init.push_back(atom("on", "red" + t, "pad" + t));
    inst.def.goal.push_back(atom("on", "red" + t, "drop_red" + t));
    inst.def.goal.push_back(atom("on", "blue" + t, "pad" + t));
  }

  for (int i = 0; i < k; ++i) {
    std::string t = std::to_string(i + 1);
    using detail::ground;
    std::vector<GroundAction> red_first = {
        ground(ActionKind::unstack, {"red" + t, "pad" + t}),
        ground(ActionKind::place, {"red" + t, "drop_red" + t}),
        ground(ActionKind::pick, {"blue" + t, "src" + t}),
        ground(ActionKind::stack, {"blue" + t, "pad" + t})};
    std::vector<GroundAction> blue_first = {
        ground(ActionKind::pick, {"blue" + t, "src" + t}),
        ground(ActionKind::stack, {"blue" + t, "pad" + t}),
        ground(ActionKind::unstack, {"red" + t, "pad" + t}),
        ground(ActionKind::place, {"red" + t, "drop_red" + t})};
    if (detail::sequence_feasible(inst, red_first, seed) ||
        detail::sequence_feasible(inst, blue_first, seed))
      throw GeneratorError("gadget " + t + " admits a monotone solution");
  }
  if (!detail::certified(inst, seed))
    throw GeneratorError("corridor construction is not solvable");
  return inst;
}

// Two-table transport world: m mixed-color cylinders on a pick-only source
// table in one region, per-color drop zones on the destination table in the
// other, plus a buffer drop rectangle on the source side for temporary
// parking. Goal: every cylinder on its color zone.
inline Instance gen_sort_clutter(int m, int colors, std::uint64_t seed) {
  static const char* kColors[] = {"red", "blue", "green"};
  if (colors < 1 || colors > 3)
    throw GeneratorError("colors must be in [1, 3]");
  if (m < colors || m > 12 || m % colors != 0)
    throw GeneratorError("cylinder count must be a multiple of colors, at most 12");
  for (int attempt = 0; attempt < 32; ++attempt) {
    std::uint64_t s = hash_mix(seed, attempt);
    Rng rng(hash_mix(s, 0x50a7ull));
    Scene sc;
    sc.mobile = true;
    sc.base_radius = 0.15;
    sc.base = {{0, 0}, 0};
    sc.q = {2.0, -1.0, 0.5};
    sc.regions["wa"] = {{{{0, 0}, 0}}};
    sc.regions["wb"] = {{{{2.2, 0}, 0}}};
    sc.surfaces["src"] = {{0.42, -0.35, 0.98, 0.35}, "wa"};
    sc.surfaces["buffer"] = {{0.42, 0.45, 0.72, 0.65}, "wa"};
    std::vector<double> ys;
    if (colors == 1)
      ys = {0.0};
    else if (colors == 2)
      ys = {-0.22, 0.22};
    else
      ys = {-0.3, 0.0, 0.3};
    for (int c = 0; c < colors; ++c)
      sc.surfaces[std::string("drop_") + kColors[c]] = {
          {2.62, ys[c] - 0.12, 2.92, ys[c] + 0.12}, "wb"};

    std::vector<Vec2> placed;
    bool stuck = false;
    Instance inst;
    for (int i = 0; i < m && !stuck; ++i) {
      Vec2 p;
      int tries = 0;
      for (;;) {
        p = {rng.uniform(0.45, 0.95), rng.uniform(-0.32, 0.32)};
        double d = p.norm();
        bool ok = d >= 0.42 && d <= 1.0;
        for (const auto& q : placed)
          ok = ok && dist(p, q) >= 0.072;
        if (ok) break;
        if (++tries > 4000) {
          stuck = true;
          break;
        }
      }
      if (stuck) break;
      placed.push_back(p);
      std::string id =
          std::string(kColors[i % colors]) + std::to_string(i / colors + 1);
      sc.objects[id] = {0.03, p, 0, "src", true};
      inst.def.table.entries[id] = {.movable = true, .weight = 1.0};
      inst.def.init.push_back(atom("on", id, "src"));
      inst.def.goal.push_back(
          atom("on", id, std::string("drop_") + kColors[i % colors]));
    }
    if (stuck) continue;
    inst.scene = sc;
    inst.def.table.entries["src"] = {.surface = true, .region_of = "wa"};
    inst.def.table.entries["buffer"] = {
        .surface = true, .drop = true, .region_of = "wa"};
    for (int c = 0; c < colors; ++c)
      inst.def.table.entries[std::string("drop_") + kColors[c]] = {
          .surface = true, .drop = true, .region_of = "wb"};
    inst.def.table.entries["wa"] = {.region = true};
    inst.def.table.entries["wb"] = {.region = true};
    inst.def.table.tray_capacity = 2;
    if (detail::certified(inst, s)) return inst;
  }
  throw GeneratorError("sort-clutter generation failed after 32 seeds");
}

inline Instance generate(const std::string& problem, int n, int colors,
                         std::uint64_t seed) {
  if (problem == "clutter") return gen_clutter(n, seed);
  if (problem == "non-monotonic") return gen_non_monotonic(n, n, seed);
  if (problem == "sort-clutter") return gen_sort_clutter(n, colors, seed);
  throw GeneratorError("unknown problem kind '" + problem + "'");
}

// ---------- batch harness ----------

struct BenchmarkSpec {
  std::string problem = "clutter";
  int n = 15;      // objects (clutter/sort) or gadget pairs (non-monotonic)
  int colors = 2;  // sort-clutter only
  std::vector<int> horizons = {2, 4, 6, 8, kInfiniteHorizon};
  bool baseline = true;
  int trials = 15;
  std::uint64_t seed = 42;
  PerturbSpec perturb;
  ExecutiveConfig exec;
};

struct ResultRow {
  std::string problem;
  int n = 0;
  std::string arm;  // rh | baseline
  int horizon = 0;  // kInfiniteHorizon encodes inf; ignored for baseline
  int trial = 0;
  std::uint64_t seed = 0;
  std::string status;
  double time = 0;
  int actions = 0;
  int replans = 0;
  double t_task = 0, t_reason = 0, t_motion = 0, t_exec = 0;
};

struct SuiteResult {
  std::vector<ResultRow> rows;
  std::string csv;
  std::string summary;
  std::string plot;
  bool complete = true;  // every requested trial produced its rows
};

namespace detail {

inline std::string horizon_label(const std::string& arm, int h) {
  if (arm == "baseline") return "-";
  return h == kInfiniteHorizon ? "inf" : std::to_string(h);
}

inline ResultRow make_row(const BenchmarkSpec& spec, const std::string& arm,
                          int h, int trial, std::uint64_t trial_seed,
                          const RunResult& r) {
  ResultRow row;
  row.problem = spec.problem;
  row.n = spec.n;
  row.arm = arm;
  row.horizon = h;
  row.trial = trial;
  row.seed = trial_seed;
  row.status = r.status;
  row.time = r.total();
  row.actions = r.actions;
  row.replans = r.replans;
  row.t_task = r.t_task;
  row.t_reason = r.t_reason;
  row.t_motion = r.t_motion;
  row.t_exec = r.t_exec;
  return row;
}

}  // namespace detail

inline SuiteResult run_suite(const BenchmarkSpec& spec) {
  SuiteResult out;
  if (spec.trials < 1) throw GeneratorError("trials must be >= 1");
  for (int trial = 0; trial < spec.trials; ++trial) {
    std::uint64_t trial_seed = hash_mix(spec.seed, trial);
    Instance inst;
    try {
      inst = generate(spec.problem, spec.n, spec.colors, trial_seed);
    } catch (const GeneratorError&) {
      out.complete = false;
      continue;
    }
    auto run_arm = [&](const std::string& arm, int h) {
      SimEnvironment env(inst.scene, {}, spec.perturb,
                         hash_mix(trial_seed, 0xe4fu));
      ExecutiveConfig cfg = spec.exec;
      cfg.horizon = h;
      Executive ex(env, inst.scene, inst.def, cfg, trial_seed);
      RunResult r = arm == "baseline" ? ex.run_baseline() : ex.run();
      out.rows.push_back(
          detail::make_row(spec, arm, h, trial, trial_seed, r));
    };
    for (int h : spec.horizons) run_arm("rh", h);
    if (spec.baseline) run_arm("baseline", kInfiniteHorizon);
  }

  std::sort(out.rows.begin(), out.rows.end(),
            [](const ResultRow& a, const ResultRow& b) {
              auto key = [](const ResultRow& r) {
                return std::tuple(r.problem, r.n, r.arm,
                                  r.arm == "baseline" ? 0 : r.horizon,
                                  r.trial);
              };
              return key(a) < key(b);
            });

  std::ostringstream csv;
  csv << "problem,n,arm,horizon,trial,seed,status,time,actions,replans,"
         "t_task,t_reason,t_motion,t_exec\n";
  for (const auto& r : out.rows)
    csv << r.problem << ',' << r.n << ',' << r.arm << ','
        << detail::horizon_label(r.arm, r.horizon) << ',' << r.trial << ','
        << r.seed << ',' << r.status << ',' << detail::fmt_sec(r.time) << ','
        << r.actions << ',' << r.replans << ',' << detail::fmt_sec(r.t_task)
        << ',' << detail::fmt_sec(r.t_reason) << ','
        << detail::fmt_sec(r.t_motion) << ',' << detail::fmt_sec(r.t_exec)
        << '\n';
  out.csv = csv.str();

  // Per (arm, horizon) cell: success rate over all rows, means over the
  // successful ones.
  struct Cell {
    int rows = 0, wins = 0;
    double time = 0, task = 0, reason = 0, motion = 0, exec = 0;
    double actions = 0, replans = 0;
  };
  std::map<std::pair<std::string, int>, Cell> cells;
  for (const auto& r : out.rows) {
    Cell& c = cells[{r.arm, r.arm == "baseline" ? 0 : r.horizon}];
    ++c.rows;
    if (r.status == "success") {
      ++c.wins;
      c.time += r.time;
      c.task += r.t_task;
      c.reason += r.t_reason;
      c.motion += r.t_motion;
      c.exec += r.t_exec;
      c.actions += r.actions;
      c.replans += r.replans;
    }
  }
  double baseline_mean = -1;
  {
    auto it = cells.find({"baseline", 0});
    if (it != cells.end() && it->second.wins > 0)
      baseline_mean = it->second.time / it->second.wins;
  }
  std::ostringstream sum, plot;
  for (const auto& [key, c] : cells) {
    double rate = c.rows ? 100.0 * c.wins / c.rows : 0.0;
    sum << "problem=" << spec.problem << " n=" << spec.n
        << " arm=" << key.first
        << " horizon=" << detail::horizon_label(key.first, key.second)
        << " trials=" << c.rows << " success_rate=";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", rate);
    sum << buf;
    if (c.wins > 0) {
      double mt = c.time / c.wins;
      sum << " mean_time=" << detail::fmt_sec(mt)
          << " mean_actions=" << detail::fmt_sec(c.actions / c.wins)
          << " mean_replans=" << detail::fmt_sec(c.replans / c.wins);
      if (key.first == "rh" && baseline_mean > 0)
        sum << " time_ratio_vs_baseline=" << detail::fmt_sec(mt / baseline_mean);
      const char* mods[] = {"task", "reason", "motion", "exec"};
      double vals[] = {c.task / c.wins, c.reason / c.wins, c.motion / c.wins,
                       c.exec / c.wins};
      for (int i = 0; i < 4; ++i)
        plot << "arm=" << key.first
             << " horizon=" << detail::horizon_label(key.first, key.second)
             << " module=" << mods[i]
             << " seconds=" << detail::fmt_sec(vals[i]) << '\n';
    } else {
      sum << " mean_time=-";
    }
    sum << '\n';
  }
  out.summary = sum.str();
  out.plot = plot.str();
  return out;
}

}  // namespace rhtamp
