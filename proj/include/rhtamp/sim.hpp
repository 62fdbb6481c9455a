#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rhtamp/common.hpp"
#include "rhtamp/motion.hpp"
#include "rhtamp/reasoner.hpp"
#include "rhtamp/symbolic.hpp"
#include "rhtamp/world.hpp"

namespace rhtamp {

// Pure geometric state transition for an executed action. Throws
// PreconditionError when the scene cannot support the action.
inline Scene apply_action(const Scene& scene, const GroundAction& act,
                          const Binding& b) {
  Scene next = scene;
  const auto& p = act.params;
  auto need = [&](bool cond, const char* what) {
    if (!cond) throw PreconditionError(act.signature() + ": " + what);
  };
  switch (act.kind) {
    case ActionKind::pick:
    case ActionKind::unstack: {
      need(!scene.held.has_value(), "gripper already holds something");
      auto it = next.objects.find(p[0]);
      need(it != next.objects.end(), "no such object");
      need(scene.is_placed(p[0]), "object not placed");
      for (const auto& [oid, oo] : scene.objects)
        need(!(scene.is_placed(oid) && oo.support == p[0]),
             "something is stacked on it");
      next.held = p[0];
      it->second.support.reset();
      it->second.tier = 0;
      next.q = b.q;
      break;
    }
    case ActionKind::place: {
      need(scene.held == p[0], "not holding the object");
      auto& o = next.objects.at(p[0]);
      need(next.surfaces.count(p[1]) != 0, "no such surface");
      o.pos = b.place_pos;
      o.support = p[1];
      o.tier = 0;
      next.held.reset();
      next.q = b.q;
      break;
    }
    case ActionKind::stack: {
      need(scene.held == p[0], "not holding the object");
      auto under = next.objects.find(p[1]);
      need(under != next.objects.end(), "no such support object");
      need(scene.is_placed(p[1]), "support not placed");
      auto& o = next.objects.at(p[0]);
      o.pos = b.place_pos;
      o.support = p[1];
      o.tier = under->second.tier + 1;
      next.held.reset();
      next.q = b.q;
      break;
    }
    case ActionKind::navigate: {
      need(scene.mobile, "robot is not mobile");
      next.base = b.dock;
      break;
    }
    case ActionKind::load: {
      need(scene.held == p[0], "not holding the object");
      next.tray.push_back(p[0]);
      next.held.reset();
      break;
    }
    case ActionKind::unload: {
      bool in_tray = false;
      for (const auto& id : scene.tray) in_tray |= id == p[0];
      need(in_tray, "object not in tray");
      need(!scene.held.has_value(), "gripper already holds something");
      std::erase(next.tray, p[0]);
      next.held = p[0];
      break;
    }
  }
  return next;
}

// Collision context an action's arm motion operates under; mirrors what
// feasibility evaluation used.
inline CollisionQuery action_collision_ctx(const Scene& scene,
                                           const GroundAction& act) {
  CollisionQuery ctx;
  switch (act.kind) {
    case ActionKind::pick:
    case ActionKind::unstack: {
      auto it = scene.objects.find(act.params[0]);
      ctx.tier = it == scene.objects.end() ? 0 : it->second.tier;
      ctx.ignore = {act.params[0]};
      break;
    }
    case ActionKind::place:
      ctx.carrying = act.params[0];
      ctx.ignore = {act.params[0]};
      break;
    case ActionKind::stack: {
      ctx.carrying = act.params[0];
      ctx.ignore = {act.params[0]};
      auto it = scene.objects.find(act.params[1]);
      ctx.tier = it == scene.objects.end() ? 1 : it->second.tier + 1;
      break;
    }
    default:
      break;
  }
  return ctx;
}

// ---------- scripted perturbations ----------
//
//   after <k> move <obj> <x> <y>
//   after <k> dropgrasp

struct ScriptEvent {
  int after = 0;  // fires once the k-th successful action completes
  bool drop = false;
  ObjectId obj;
  Vec2 to{};
};

struct PerturbScript {
  std::vector<ScriptEvent> events;
};

inline PerturbScript parse_script(std::istream& in,
                                  const std::string& filename = "script") {
  PerturbScript script;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw ParseError(filename + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim_copy(line);
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word;
    ScriptEvent ev;
    if (!(ls >> word) || word != "after") fail("expected 'after'");
    if (!(ls >> ev.after) || ev.after < 1) fail("expected an action count");
    if (!(ls >> word)) fail("expected 'move' or 'dropgrasp'");
    if (word == "move") {
      if (!(ls >> ev.obj >> ev.to.x >> ev.to.y)) fail("move needs id x y");
    } else if (word == "dropgrasp") {
      ev.drop = true;
    } else {
      fail("unknown event '" + word + "'");
    }
    script.events.push_back(ev);
  }
  return script;
}

// ---------- environment ----------

struct PerturbSpec {
  double p = 0.0;          // chance of an object event per executed action
  bool grasp_drop = false; // mix drop events in (else moves only)
  double dock_noise = 0.0; // base error radius after navigate, meters
  double obs_noise = 0.0;  // per-axis truncated-normal sigma, meters
};

struct ExecOutcome {
  bool ok = false;
  double seconds = 0;                // charged execution time
  std::vector<std::string> events;  // perturbations that fired
  std::string reason;                // when !ok
};

// Ground-truth world. Validates commanded paths against the true scene,
// applies actions, and injects perturbations from a seeded stream or a
// fixed script.
class SimEnvironment {
 public:
  SimEnvironment(Scene truth, RobotModel model, PerturbSpec spec,
                 std::uint64_t seed, CostModel cost = {})
      : truth_(std::move(truth)),
        model_(model),
        spec_(spec),
        cost_(cost),
        rng_(hash_mix(seed, 0x5e45e4u)),
        obs_rng_(hash_mix(seed, 0x0b5e44u)) {}

  void set_script(PerturbScript script) { script_ = std::move(script); }

  const RobotModel& model() const { return model_; }
  const Scene& truth() const { return truth_; }
  int executed() const { return executed_; }

  // Noisy copy of the true scene. Joint and base state are exact; object
  // centers get independent per-axis truncated-normal error. Sigma zero
  // draws nothing, keeping the stream aligned across configurations.
  Scene observe() {
    Scene obs = truth_;
    if (spec_.obs_noise > 0)
      for (auto& [id, o] : obs.objects) {
        o.pos.x += obs_rng_.truncated_gaussian(spec_.obs_noise, 3.0);
        o.pos.y += obs_rng_.truncated_gaussian(spec_.obs_noise, 3.0);
      }
    return obs;
  }

  ExecOutcome execute_arm(const GroundAction& act, const Binding& b,
                          const std::vector<JointConfig>& path,
                          CollisionQuery ctx) {
    ExecOutcome out;
    if (path.empty() || config_dist(path.front(), truth_.q) > 1e-9)
      throw PreconditionError("path does not start at the current configuration");
    // Physics, not belief: if something is really in the gripper it moves
    // along the path no matter what the planner assumed.
    ctx.carrying = truth_.held;
    if (truth_.held) ctx.ignore.insert(*truth_.held);
    MotionStats vstats;
    auto rep = validate_path(truth_, model_, path, ctx, 0.05, vstats);
    if (!rep.free) {
      out.reason = "stale path";
      return out;
    }
    EEPose ee = forward_kinematics(model_, truth_.base, path.back());
    if (act.kind == ActionKind::pick || act.kind == ActionKind::unstack) {
      const auto& target = truth_.objects.at(act.params[0]);
      if (dist(grasp_center(model_, ee, target.radius), target.pos) > 0.01) {
        out.reason = "grasp misaligned";
        return out;
      }
    }
    try {
      truth_ = apply_action(truth_, act, b);
    } catch (const PreconditionError& e) {
      out.reason = e.what();
      return out;
    }
    truth_.q = path.back();
    if (act.kind == ActionKind::place || act.kind == ActionKind::stack) {
      // The cylinder lands where the gripper really is, not where the
      // planner believed the gripper would be.
      auto& o = truth_.objects.at(act.params[0]);
      EEPose release = forward_kinematics(model_, truth_.base, truth_.q);
      o.pos = grasp_center(model_, release, o.radius);
      if (act.kind == ActionKind::place &&
          !truth_.surfaces.at(act.params[1]).rect.contains(o.pos)) {
        if (auto sup = surface_under(o.pos, 0.0)) o.support = *sup;
      }
    }
    out.ok = true;
    out.seconds = path_radians(path) / cost_.joint_speed + cost_.gripper_act;
    finish(act, out);
    return out;
  }

  ExecOutcome execute_navigate(const GroundAction& act, const Binding& b,
                               const NavResult& nav) {
    ExecOutcome out;
    if (!nav.found || nav.waypoints.empty() ||
        dist(nav.waypoints.front().p, truth_.base.p) > 1e-9)
      throw PreconditionError("navigation does not start at the current base");
    try {
      truth_ = apply_action(truth_, act, b);
    } catch (const PreconditionError& e) {
      out.reason = e.what();
      return out;
    }
    if (spec_.dock_noise > 0 && !script_) {
      double ang = rng_.uniform(0, 2 * kPi);
      double rad = rng_.uniform(0, spec_.dock_noise);
      truth_.base.p = truth_.base.p + dir(ang) * rad;
      out.events.push_back("dock-noise");
    }
    out.ok = true;
    out.seconds = nav.length / cost_.base_speed;
    finish(act, out);
    return out;
  }

  ExecOutcome execute_gripper(const GroundAction& act) {
    ExecOutcome out;
    try {
      truth_ = apply_action(truth_, act, {});
    } catch (const PreconditionError& e) {
      out.reason = e.what();
      return out;
    }
    out.ok = true;
    out.seconds = cost_.gripper_act;
    finish(act, out);
    return out;
  }

 private:
  void finish(const GroundAction&, ExecOutcome& out) {
    ++executed_;
    if (script_) {
      for (const ScriptEvent& ev : script_->events)
        if (ev.after == executed_) apply_script_event(ev, out);
      return;
    }
    if (spec_.p > 0 && rng_.chance(spec_.p)) {
      bool drop = spec_.grasp_drop && truth_.held && rng_.chance(0.5);
      if (drop)
        do_drop(out);
      else
        do_move(out);
    }
  }

  void apply_script_event(const ScriptEvent& ev, ExecOutcome& out) {
    if (ev.drop) {
      do_drop(out);
      return;
    }
    auto it = truth_.objects.find(ev.obj);
    if (it == truth_.objects.end()) return;
    it->second.pos = ev.to;
    it->second.tier = 0;
    it->second.support.reset();
    for (const auto& [sid, s] : truth_.surfaces)
      if (s.rect.contains(ev.to, it->second.radius)) {
        it->second.support = sid;
        break;
      }
    out.events.push_back("move:" + ev.obj);
  }

  bool spot_clear(Vec2 p, double r, const ObjectId& self) const {
    for (const auto& [id, o] : truth_.objects) {
      if (id == self || !truth_.is_placed(id)) continue;
      bool in_tray = false;
      for (const auto& t : truth_.tray) in_tray |= t == id;
      if (in_tray) continue;
      if (dist(p, o.pos) <= r + o.radius + 0.002) return false;
    }
    auto pts = arm_points(model_, truth_.base, truth_.q);
    for (int link = 0; link < 3; ++link)
      if (point_segment_dist(p, pts[link], pts[link + 1]) <=
          r + model_.link_radius + 0.002)
        return false;
    if (truth_.held && *truth_.held != self) {
      const auto& held = truth_.objects.at(*truth_.held);
      EEPose ee = forward_kinematics(model_, truth_.base, truth_.q);
      if (dist(p, grasp_center(model_, ee, held.radius)) <=
          r + held.radius + 0.002)
        return false;
    }
    if (truth_.mobile &&
        dist(p, truth_.base.p) <= r + truth_.base_radius + 0.002)
      return false;
    return true;
  }

  std::optional<ObjectId> surface_under(Vec2 p, double r) const {
    for (const auto& [sid, s] : truth_.surfaces)
      if (s.rect.contains(p, r)) return sid;
    return std::nullopt;
  }

  // Teleports a rider-free movable object to a fresh clear spot on the
  // surface at the root of its support chain.
  void do_move(ExecOutcome& out) {
    std::set<ObjectId> supporting;
    for (const auto& [id, o] : truth_.objects)
      if (truth_.is_placed(id) && o.support) supporting.insert(*o.support);
    std::vector<ObjectId> candidates;
    for (const auto& [id, o] : truth_.objects) {
      if (!o.movable || !truth_.is_placed(id) || supporting.count(id))
        continue;
      bool in_tray = false;
      for (const auto& t : truth_.tray) in_tray |= t == id;
      if (in_tray || !o.support) continue;
      candidates.push_back(id);
    }
    if (candidates.empty()) return;
    const ObjectId& id = candidates[rng_.uniform_int(
        static_cast<int>(candidates.size()))];
    SceneObject& o = truth_.objects.at(id);
    const ObjectId* root = &*o.support;
    int guard = 0;
    while (truth_.objects.count(*root)) {
      const auto& sup = truth_.objects.at(*root).support;
      if (!sup) return;
      root = &*sup;
      if (++guard > static_cast<int>(truth_.objects.size())) return;
    }
    if (!truth_.surfaces.count(*root)) return;
    const Rect& rect = truth_.surfaces.at(*root).rect;
    if (rect.xmax - rect.xmin <= 2 * o.radius ||
        rect.ymax - rect.ymin <= 2 * o.radius)
      return;
    for (int attempt = 0; attempt < 100; ++attempt) {
      Vec2 p{rng_.uniform(rect.xmin + o.radius, rect.xmax - o.radius),
             rng_.uniform(rect.ymin + o.radius, rect.ymax - o.radius)};
      if (!spot_clear(p, o.radius, id)) continue;
      o.pos = p;
      o.support = *root;
      o.tier = 0;
      out.events.push_back("move:" + id);
      return;
    }
    out.events.push_back("move-skipped:" + id);
  }

  // The held object slips out of the gripper and lands nearby.
  void do_drop(ExecOutcome& out) {
    if (!truth_.held) return;
    ObjectId id = *truth_.held;
    SceneObject& o = truth_.objects.at(id);
    EEPose ee = forward_kinematics(model_, truth_.base, truth_.q);
    Vec2 from = grasp_center(model_, ee, o.radius);
    for (int attempt = 0; attempt < 100; ++attempt) {
      double ang = rng_.uniform(0, 2 * kPi);
      double rad = rng_.uniform(0, 0.10);
      Vec2 p = from + dir(ang) * rad;
      auto sup = surface_under(p, o.radius);
      if (!sup || !spot_clear(p, o.radius, id)) continue;
      truth_.held.reset();
      o.pos = p;
      o.support = *sup;
      o.tier = 0;
      out.events.push_back("drop:" + id);
      return;
    }
    out.events.push_back("drop-skipped:" + id);
  }

  Scene truth_;
  RobotModel model_;
  PerturbSpec spec_;
  CostModel cost_;
  Rng rng_;
  Rng obs_rng_;
  std::optional<PerturbScript> script_;
  int executed_ = 0;
};

}  // namespace rhtamp
