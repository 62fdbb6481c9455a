#pragma once

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rhtamp/sim.hpp"
#include "rhtamp/task_planner.hpp"

namespace rhtamp {

inline constexpr int kInfiniteHorizon = std::numeric_limits<int>::max();

namespace detail {

inline double env_seconds(const char* name, double fallback) {
  const char* v = std::getenv(name);
  if (!v || !*v) return fallback;
  char* end = nullptr;
  double d = std::strtod(v, &end);
  return end != v && d > 0 ? d : fallback;
}

inline int env_count(const char* name, int fallback) {
  const char* v = std::getenv(name);
  if (!v || !*v) return fallback;
  char* end = nullptr;
  long n = std::strtol(v, &end, 10);
  return end != v && n >= 0 ? static_cast<int>(n) : fallback;
}

inline std::string fmt_sec(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ' ' || c == '\n' || c == '=') c = '_';
  return s;
}

}  // namespace detail

struct ExecutiveConfig {
  int horizon = kInfiniteHorizon;  // actions previewed geometrically per cycle
  double task_budget = detail::env_seconds("RHTAMP_MAX_TASK_S", 10.0);
  double motion_budget = detail::env_seconds("RHTAMP_MAX_MOTION_S", 10.0);
  int max_replans = detail::env_count("RHTAMP_MAX_REPLANS", 3);
  double total_budget = detail::env_seconds("RHTAMP_TOTAL_S", 600.0);
  double mismatch_dist = 0.005;    // observed center drift that voids the plan
  double watch_staleness = 0.01;   // pose drift that retires injected facts
  CostModel cost{};
  ReasonerConfig reason{};
  MotionConfig motion{};
};

struct RunResult {
  std::string status;  // success, no_plan, replan_limit, timeout
  int actions = 0;     // successfully executed
  int replans = 0;     // task plans computed beyond the first
  double t_task = 0, t_reason = 0, t_motion = 0, t_exec = 0;

  double total() const { return t_task + t_reason + t_motion + t_exec; }
};

// Geometric failure feedback, kept alive only while the pose it was minted
// against still holds. obstructs() watches the blocker, unreachable()
// watches its target when that is an object; region unreachability is
// permanent. leaveClear() watches the object it is keyed to: it rides
// through grasps and tray trips, re-anchors wherever the object next
// settles, and retires once the object moves off that anchor.
class KnowledgeBase {
 public:
  void inject(const Atom& fact, const Scene& at) {
    const std::string* w = nullptr;
    bool carried_ok = false;
    if (fact.pred == "obstructs") {
      w = &fact.args[0];
    } else if (fact.pred == "leaveClear") {
      // A keep-clear hold stays in force while its keyed object rides in
      // the gripper or on the tray; it expires once the object settles
      // somewhere and later moves again.
      if (!at.objects.count(fact.args[1])) return;
      w = &fact.args[1];
      carried_ok = true;
    } else if (fact.pred == "unreachable" && at.objects.count(fact.args[0])) {
      w = &fact.args[0];
    }
    Entry e{fact, "", false, {}, false};
    if (w) {
      auto it = at.objects.find(*w);
      if (it == at.objects.end()) return;
      bool placed = at.is_placed(*w);
      if (!placed && !carried_ok) return;
      e.watched = *w;
      e.carried_ok = carried_ok;
      if (placed) {
        e.pose = it->second.pos;
        e.anchored = true;
      }
    }
    for (auto& old : entries_)
      if (old.fact == e.fact) {
        old = e;
        return;
      }
    entries_.push_back(std::move(e));
  }

  void refresh(const Scene& belief, double staleness) {
    std::erase_if(entries_, [&](Entry& e) {
      if (e.watched.empty()) return false;
      auto it = belief.objects.find(e.watched);
      if (it == belief.objects.end()) return true;
      if (!belief.is_placed(e.watched)) {
        if (!e.carried_ok) return true;
        e.anchored = false;
        return false;
      }
      if (!e.anchored) {
        e.pose = it->second.pos;
        e.anchored = true;
        return false;
      }
      return dist(it->second.pos, e.pose) > staleness;
    });
  }

  std::set<Atom> facts() const {
    std::set<Atom> out;
    for (const Entry& e : entries_) out.insert(e.fact);
    return out;
  }

  void clear() { entries_.clear(); }

  std::uint64_t fingerprint(std::uint64_t seed) const {
    std::uint64_t h = mix64(seed);
    for (const Atom& a : facts()) h = hash_str(h, a.str());
    return h;
  }

 private:
  struct Entry {
    Atom fact;
    ObjectId watched;  // empty: unconditional
    bool carried_ok = false;
    Vec2 pose{};
    bool anchored = false;
  };
  std::vector<Entry> entries_;
};

// Closed-loop plan-and-execute driver over a simulated environment.
//
// Each cycle: observe, void the plan if reality drifted from the predicted
// scene, replan the task if needed, geometrically instantiate the next
// `horizon` actions on predicted scenes, motion-plan and execute only the
// first, then advance the prediction. Geometric and motion failures feed
// obstruction facts back to the task planner; failures without an executed
// action in between are capped by max_replans.
//
// The baseline mode instead instantiates and motion-plans the entire plan
// up front, executes the stored paths open loop, and rebuilds everything
// from scratch whenever reality disagrees.
//
// One instance drives one run.
class Executive {
 public:
  Executive(SimEnvironment& env, Scene initial_belief, const ProblemDef& def,
            ExecutiveConfig cfg = {}, std::uint64_t seed = 0,
            std::ostream* trace = nullptr)
      : env_(env),
        m_(env.model()),
        cfg_(cfg),
        seed_(seed),
        trace_(trace),
        belief_(std::move(initial_belief)),
        goal_{std::set<Atom>(def.goal.begin(), def.goal.end())} {
    table_ = build_object_table(def, belief_);
    domain_ = ground_domain(
        *table_, belief_.mobile ? DomainKind::mobile : DomainKind::manipulator);
  }

  RunResult run() { return drive(false); }
  RunResult run_baseline() { return drive(true); }

 private:
  RunResult drive(bool baseline) {
    while (true) {
      kb_.refresh(belief_, cfg_.watch_staleness);
      SymbolicState s = symbolic_view();
      if (goal_.satisfied(s)) return finish("success");
      if (r_.total() > cfg_.total_budget) return finish("timeout");

      Scene obs = env_.observe();
      if (absorb_mismatch(obs)) {
        kb_.clear();  // accumulated failure facts described a vanished world
        invalidate();
        replan_streak_ = 0;
        continue;
      }
      belief_.base = obs.base;
      belief_.q = obs.q;

      if (need_plan_) {
        s = symbolic_view();
        if (goal_.satisfied(s)) return finish("success");
        if (!replan_task(s)) return finish(terminal_);
      }
      if (j_ >= plan_.size()) {  // plan exhausted, goal still unmet
        invalidate();
        continue;
      }

      if (baseline) {
        if (!prepared_ && !prepare_everything()) {
          if (replan_streak_ > cfg_.max_replans) return finish("replan_limit");
          continue;
        }
      } else {
        if (!preview_window()) {
          if (replan_streak_ > cfg_.max_replans) return finish("replan_limit");
          continue;
        }
        PreparedMotion pm;
        if (!prepare_motion(belief_, plan_[j_], bindings_[j_], pm)) {
          if (replan_streak_ > cfg_.max_replans) return finish("replan_limit");
          continue;
        }
        motions_[j_] = std::move(pm);
      }

      const GroundAction& act = plan_[j_];
      ExecOutcome out = dispatch(act, bindings_[j_], *motions_[j_]);
      r_.t_exec += out.seconds;
      trace_line("execute action=" + act.signature() +
                 " ok=" + (out.ok ? "1" : "0") +
                 " seconds=" + detail::fmt_sec(out.seconds) +
                 (out.ok ? "" : " reason=" + detail::sanitize(out.reason)));
      if (!out.events.empty()) trace_line("perturb events=" + join(out.events));
      if (!out.ok) {
        invalidate();
        if (!bump_failure()) return finish("replan_limit");
        continue;
      }
      belief_ = apply_action(belief_, act, bindings_[j_]);
      ++j_;
      ++r_.actions;
      replan_streak_ = 0;
    }
  }

  // ---------- perception ----------

  // Compares an observation against the predicted scene and, when they
  // disagree, adopts reality for the parts that drifted. Belief poses stay
  // anchored to exact predictions wherever possible so that bounded
  // observation noise alone can never look like a drift.
  bool absorb_mismatch(const Scene& obs) {
    std::vector<ObjectId> moved, appeared, vanished;
    for (const auto& [id, o] : obs.objects) {
      auto it = belief_.objects.find(id);
      if (it == belief_.objects.end()) {
        appeared.push_back(id);
        continue;
      }
      if (obs.is_placed(id) && belief_.is_placed(id) &&
          dist(o.pos, it->second.pos) > cfg_.mismatch_dist)
        moved.push_back(id);
    }
    for (const auto& [id, o] : belief_.objects)
      if (!obs.objects.count(id)) vanished.push_back(id);
    bool held_diff = obs.held != belief_.held;
    bool base_diff = dist(obs.base.p, belief_.base.p) > m_.dock_tolerance;
    if (moved.empty() && appeared.empty() && vanished.empty() && !held_diff &&
        !base_diff)
      return false;

    for (const auto& id : moved) belief_.objects.at(id) = obs.objects.at(id);
    for (const auto& id : appeared) belief_.objects[id] = obs.objects.at(id);
    for (const auto& id : vanished) belief_.objects.erase(id);
    belief_.held = obs.held;
    belief_.tray = obs.tray;
    belief_.base = obs.base;
    belief_.q = obs.q;
    std::string line = "mismatch";
    if (!moved.empty()) line += " moved=" + join(moved);
    if (!appeared.empty()) line += " appeared=" + join(appeared);
    if (!vanished.empty()) line += " vanished=" + join(vanished);
    if (held_diff) line += " held=1";
    if (base_diff) line += " base=1";
    trace_line(line);
    return true;
  }

  SymbolicState symbolic_view() {
    SymbolicState s = derive_symbolic(belief_, table_, m_.dock_tolerance);
    for (const Atom& a : kb_.facts()) s.atoms.insert(a);
    return s;
  }

  // ---------- planning ----------

  bool replan_task(const SymbolicState& s) {
    auto res = plan_task(s, goal_, domain_, cfg_.task_budget, cfg_.cost);
    r_.t_task += res.charged;
    const char* status = res.status == PlanStatus::found     ? "found"
                         : res.status == PlanStatus::timeout ? "timeout"
                                                             : "no_plan";
    trace_line("task_plan status=" + std::string(status) +
               " actions=" + std::to_string(res.plan.size()) +
               " expanded=" + std::to_string(res.expanded) +
               " t=" + detail::fmt_sec(res.charged));
    if (res.status != PlanStatus::found) {
      terminal_ = res.status == PlanStatus::timeout ? "timeout" : "no_plan";
      return false;
    }
    if (res.plan.empty()) {  // planner satisfied symbolically, world is not
      terminal_ = "no_plan";
      return false;
    }
    if (planned_once_) ++r_.replans;
    planned_once_ = true;
    plan_ = std::move(res.plan);
    bindings_.assign(plan_.size(), Binding{});
    motions_.assign(plan_.size(), std::nullopt);
    j_ = 0;
    need_plan_ = false;
    prepared_ = false;
    return true;
  }

  // Instantiates the next `horizon` actions against predicted scenes.
  bool preview_window() {
    std::size_t end = plan_.size();
    if (cfg_.horizon > 0 &&
        static_cast<std::size_t>(cfg_.horizon) < end - j_)
      end = j_ + cfg_.horizon;
    Scene pred = belief_;
    for (std::size_t i = j_; i < end; ++i) {
      if (!instantiate(pred, i)) return false;
      if (i + 1 < end) pred = apply_action(pred, plan_[i], bindings_[i]);
    }
    return true;
  }

  // Baseline path: geometric bindings and motion plans for the whole plan,
  // chained through predicted scenes.
  bool prepare_everything() {
    Scene pred = belief_;
    std::vector<Scene> at(plan_.size() - j_);
    for (std::size_t i = j_; i < plan_.size(); ++i) {
      at[i - j_] = pred;
      if (!instantiate(pred, i)) return false;
      pred = apply_action(pred, plan_[i], bindings_[i]);
    }
    for (std::size_t i = j_; i < plan_.size(); ++i) {
      PreparedMotion pm;
      if (!prepare_motion(at[i - j_], plan_[i], bindings_[i], pm))
        return false;
      motions_[i] = std::move(pm);
    }
    prepared_ = true;
    return true;
  }

  bool instantiate(const Scene& at, std::size_t i) {
    ReasonStats st;
    FeasibilityResult feas;
    bool applies = true;
    try {
      feas = evaluate_action(at, m_, plan_[i], seed_, salt(), st, &cache_,
                             cfg_.reason);
    } catch (const PreconditionError&) {
      applies = false;  // predicted scene no longer supports the action
    }
    r_.t_reason += st.charged(cfg_.cost);
    trace_line("reason_eval action=" + plan_[i].signature() +
               " ok=" + (feas.feasible ? "1" : "0") +
               (feas.feasible || feas.blockers.empty()
                    ? ""
                    : " blockers=" + join(feas.blockers)) +
               " t=" + detail::fmt_sec(st.charged(cfg_.cost)));
    if (!feas.feasible) {
      if (applies) feedback(at, plan_[i], feas);
      invalidate();
      bump_failure();
      return false;
    }
    bindings_[i] = feas.binding;
    return true;
  }

  struct PreparedMotion {
    std::vector<JointConfig> path;
    NavResult nav;
  };

  bool prepare_motion(const Scene& at, const GroundAction& act,
                      const Binding& b, PreparedMotion& out) {
    switch (act.kind) {
      case ActionKind::load:
      case ActionKind::unload:
        return true;
      case ActionKind::navigate: {
        MotionStats st;
        NavResult nav = plan_base_path(at, at.base, b.dock, st);
        r_.t_motion += st.charged(cfg_.cost);
        trace_line("motion_plan action=" + act.signature() +
                   " ok=" + (nav.found ? "1" : "0") +
                   " t=" + detail::fmt_sec(st.charged(cfg_.cost)));
        if (!nav.found) {
          feedback(at, act, FeasibilityResult{});  // -> unreachable(region)
          invalidate();
          bump_failure();
          return false;
        }
        out.nav = std::move(nav);
        return true;
      }
      default: {
        CollisionQuery ctx = arm_motion_ctx(at, act);
        MotionStats st;
        MotionResult res;
        bool start_ok = true;
        try {
          res = plan_motion(at, m_, at.q, b.q, ctx, cfg_.motion_budget,
                            motion_seed(), st, cfg_.cost, cfg_.motion);
        } catch (const PreconditionError&) {
          start_ok = false;  // transient: an endpoint is in collision
        }
        r_.t_motion += st.charged(cfg_.cost);
        trace_line("motion_plan action=" + act.signature() +
                   " ok=" + (res.found ? "1" : "0") +
                   (res.found || res.blockers.empty()
                        ? ""
                        : " blockers=" + join(res.blockers)) +
                   " t=" + detail::fmt_sec(st.charged(cfg_.cost)));
        if (!res.found) {
          if (start_ok) {
            FeasibilityResult f;
            f.blockers = res.blockers;
            feedback(at, act, f);
          }
          invalidate();
          bump_failure();
          return false;
        }
        out.path = std::move(res.path);
        return true;
      }
    }
  }

  // Start-of-motion contacts that must not veto the departure sweep: a
  // freshly grasped cylinder may still overlap whatever it was nested
  // against, and a freshly released cylinder still sits in the gripper
  // pocket.
  CollisionQuery arm_motion_ctx(const Scene& at, const GroundAction& act) const {
    CollisionQuery ctx = action_collision_ctx(at, act);
    EEPose ee = forward_kinematics(m_, at.base, at.q);
    if (ctx.carrying) {
      auto held = at.objects.find(*ctx.carrying);
      if (held != at.objects.end()) {
        Vec2 c = grasp_center(m_, ee, held->second.radius);
        for (const auto& [id, o] : at.objects) {
          if (!collision_relevant(at, id, o, ctx)) continue;
          if (dist(c, o.pos) <= held->second.radius + o.radius + kGeomSlack)
            ctx.ignore.insert(id);
        }
      }
    }
    if (auto seated = gripper_pocket_object(m_, at, ee)) {
      ctx.ignore.insert(*seated);
      // A release onto a stack leaves the gripper over the whole column:
      // anything sharing the seated cylinder's footprint was part of the
      // same contact and may not veto the departure either.
      Vec2 anchor = at.objects.at(*seated).pos;
      for (const auto& [id, o] : at.objects) {
        if (!at.is_placed(id) || id == *seated) continue;
        if (dist(o.pos, anchor) <= 1e-2) ctx.ignore.insert(id);
      }
    }
    return ctx;
  }

  // ---------- acting ----------

  ExecOutcome dispatch(const GroundAction& act, const Binding& b,
                       const PreparedMotion& pm) {
    try {
      switch (act.kind) {
        case ActionKind::load:
        case ActionKind::unload:
          return env_.execute_gripper(act);
        case ActionKind::navigate:
          return env_.execute_navigate(act, b, pm.nav);
        default:
          return env_.execute_arm(act, b, pm.path, arm_motion_ctx(belief_, act));
      }
    } catch (const PreconditionError& e) {
      ExecOutcome out;
      out.reason = e.what();
      return out;
    }
  }

  // ---------- bookkeeping ----------

  void feedback(const Scene& at, const GroundAction& act,
                const FeasibilityResult& res) {
    for (const Atom& a : failure_to_predicates(at, *table_, act, res))
      kb_.inject(a, at);
  }

  void invalidate() {
    need_plan_ = true;
    prepared_ = false;
  }

  bool bump_failure() {
    ++replan_streak_;
    return replan_streak_ <= cfg_.max_replans;
  }

  std::uint64_t salt() const {
    return hash_mix(kb_.fingerprint(seed_),
                    static_cast<std::uint64_t>(replan_streak_));
  }

  std::uint64_t motion_seed() {
    return hash_mix(hash_mix(seed_, 0x6d6f7665u), motion_calls_++);
  }

  RunResult finish(std::string status) {
    r_.status = std::move(status);
    trace_line("result status=" + r_.status +
               " actions=" + std::to_string(r_.actions) +
               " replans=" + std::to_string(r_.replans) +
               " t_task=" + detail::fmt_sec(r_.t_task) +
               " t_reason=" + detail::fmt_sec(r_.t_reason) +
               " t_motion=" + detail::fmt_sec(r_.t_motion) +
               " t_exec=" + detail::fmt_sec(r_.t_exec) +
               " total=" + detail::fmt_sec(r_.total()));
    return r_;
  }

  void trace_line(const std::string& line) {
    if (trace_) *trace_ << line << '\n';
  }

  template <typename C>
  static std::string join(const C& items) {
    std::string s;
    for (const auto& it : items) {
      if (!s.empty()) s += ';';
      s += it;
    }
    return s;
  }

  SimEnvironment& env_;
  RobotModel m_;
  ExecutiveConfig cfg_;
  std::uint64_t seed_;
  std::ostream* trace_;

  Scene belief_;
  Goal goal_;
  std::shared_ptr<const ObjectTable> table_;
  std::vector<GroundAction> domain_;
  KnowledgeBase kb_;
  ConfigCache cache_;

  std::vector<GroundAction> plan_;
  std::vector<Binding> bindings_;
  std::vector<std::optional<PreparedMotion>> motions_;
  std::size_t j_ = 0;
  bool need_plan_ = true;
  bool prepared_ = false;
  bool planned_once_ = false;
  int replan_streak_ = 0;
  std::uint64_t motion_calls_ = 0;
  std::string terminal_;
  RunResult r_;
};

}  // namespace rhtamp
