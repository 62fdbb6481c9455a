#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rhtamp/common.hpp"
#include "rhtamp/symbolic.hpp"
#include "rhtamp/world.hpp"

namespace rhtamp {

struct ReasonerConfig {
  int grasp_samples = 40;         // stratified approach angles
  int place_samples = 40;         // candidate landing positions
  int release_angle_samples = 8;  // approach angles tried per landing
};

// Geometric instantiation of one symbolic action.
struct Binding {
  JointConfig q{0, 0, 0};  // arm configuration at the grasp/release
  EEPose ee{};
  Vec2 place_pos{};  // landing center for place/stack
  Pose2 dock{};      // chosen dock for navigate
};

struct FeasibilityResult {
  bool feasible = false;
  Binding binding;
  std::set<ObjectId> blockers;  // every object observed blocking a sample
  bool kinematic = false;       // failed with no blocker to report
};

struct ReasonStats {
  long ik_calls = 0;
  long config_checks = 0;
  long samples = 0;
  long cache_hits = 0;
  long cache_misses = 0;

  double charged(const CostModel& c) const {
    return ik_calls * c.ik_call + config_checks * c.config_check +
           samples * c.sample_draw;
  }
};

// Feasible bindings keyed by (action, quantized scene, salt); entries are
// revalidated against the current scene before reuse.
struct ConfigCache {
  std::map<std::uint64_t, Binding> entries;
};

// Quantizes every pose that can influence arm feasibility to 1mm so that
// checks replayed on an unchanged scene share cache entries and random
// streams.
inline std::uint64_t scene_fingerprint(const Scene& scene,
                                       const RobotModel& m) {
  std::string key;
  auto put = [&key](long long v) {
    key += std::to_string(v);
    key += ',';
  };
  auto q = [](double v) { return std::llround(v * 1000.0); };
  put(q(scene.base.p.x));
  put(q(scene.base.p.y));
  put(q(scene.base.theta));
  key += scene.held ? *scene.held : "-";
  key += ';';
  for (const auto& [id, o] : scene.objects) {
    if (dist(o.pos, scene.base.p) > m.reach() + o.radius + 0.2) continue;
    key += id;
    put(q(o.pos.x));
    put(q(o.pos.y));
    put(o.tier);
  }
  for (const auto& id : scene.tray) {
    key += id;
    key += '+';
  }
  return hash_str(0x5ce9e5f1u, key);
}

namespace detail {

inline double stratified_angle(Rng& rng, int k, int n) {
  return -kPi + 2.0 * kPi * (k + rng.uniform()) / n;
}

inline void merge_blockers(std::set<ObjectId>& into, const CollisionReport& rep,
                           const GroundAction& act) {
  for (const auto& id : rep.blockers)
    if (id != act.params[0]) into.insert(id);
}

// Collision + approach-corridor test for a grasp configuration.
inline bool grasp_binding_ok(const Scene& scene, const RobotModel& m,
                             const GroundAction& act, int tier,
                             const JointConfig& q, const EEPose& ee,
                             std::set<ObjectId>& blockers, ReasonStats& stats) {
  CollisionQuery ctx;
  ctx.tier = tier;
  ctx.ignore = {act.params[0]};
  ++stats.config_checks;
  auto rep = collision_free(scene, m, q, ctx);
  if (!rep.free) {
    merge_blockers(blockers, rep, act);
    return false;
  }
  ++stats.config_checks;
  auto sweep = segment_clear(scene, ee.pos - dir(ee.heading) * m.approach_len,
                             ee.pos, m.link_radius, ctx);
  if (!sweep.free) {
    merge_blockers(blockers, sweep, act);
    return false;
  }
  return true;
}

// Landing + collision + corridor test for a release configuration while
// carrying act.params[0].
inline bool release_binding_ok(const Scene& scene, const RobotModel& m,
                               const GroundAction& act, int tier, Vec2 land,
                               double held_radius, const JointConfig& q,
                               const EEPose& ee, std::set<ObjectId>& blockers,
                               ReasonStats& stats) {
  ++stats.config_checks;
  bool clear = true;
  for (const auto& [id, o] : scene.objects) {
    if (!scene.is_placed(id) || o.tier < tier || id == act.params[0]) continue;
    if (dist(land, o.pos) <= held_radius + o.radius + kGeomSlack) {
      blockers.insert(id);
      clear = false;
    }
  }
  if (!clear) return false;
  CollisionQuery ctx;
  ctx.carrying = act.params[0];
  ctx.tier = tier;
  ctx.ignore = {act.params[0]};
  ++stats.config_checks;
  auto rep = collision_free(scene, m, q, ctx);
  if (!rep.free) {
    merge_blockers(blockers, rep, act);
    return false;
  }
  ++stats.config_checks;
  auto sweep = segment_clear(scene, ee.pos - dir(ee.heading) * m.approach_len,
                             ee.pos, m.link_radius, ctx);
  if (!sweep.free) {
    merge_blockers(blockers, sweep, act);
    return false;
  }
  return true;
}

inline FeasibilityResult evaluate_grasp(const Scene& scene,
                                        const RobotModel& m,
                                        const GroundAction& act,
                                        const ReasonerConfig& cfg, Rng& rng,
                                        ReasonStats& stats) {
  FeasibilityResult res;
  const SceneObject& target = scene.objects.at(act.params[0]);
  for (int k = 0; k < cfg.grasp_samples; ++k) {
    ++stats.samples;
    double a = stratified_angle(rng, k, cfg.grasp_samples);
    EEPose ee = ee_for_grasp(m, target.pos, target.radius, a);
    ++stats.ik_calls;
    for (const JointConfig& q : ik_solve(m, scene.base, ee)) {
      if (grasp_binding_ok(scene, m, act, target.tier, q, ee, res.blockers,
                           stats)) {
        res.feasible = true;
        res.binding.q = q;
        res.binding.ee = ee;
        return res;
      }
    }
  }
  res.kinematic = res.blockers.empty();
  return res;
}

inline FeasibilityResult evaluate_release(const Scene& scene,
                                          const RobotModel& m,
                                          const GroundAction& act,
                                          const ReasonerConfig& cfg, Rng& rng,
                                          ReasonStats& stats) {
  FeasibilityResult res;
  const ObjectId& held = act.params[0];
  double r = scene.objects.at(held).radius;
  bool onto_object = act.kind == ActionKind::stack;
  int tier = 0;
  Rect area{};
  Vec2 fixed_land{};
  if (onto_object) {
    const SceneObject& under = scene.objects.at(act.params[1]);
    tier = under.tier + 1;
    fixed_land = under.pos;
  } else {
    area = scene.surfaces.at(act.params[1]).rect;
    if (area.xmax - area.xmin <= 2 * r || area.ymax - area.ymin <= 2 * r) {
      res.kinematic = true;
      return res;
    }
  }
  int positions = onto_object ? 1 : cfg.place_samples;
  int angles = onto_object ? cfg.grasp_samples : cfg.release_angle_samples;
  for (int k = 0; k < positions; ++k) {
    Vec2 land = fixed_land;
    if (!onto_object) {
      ++stats.samples;
      land = {rng.uniform(area.xmin + r, area.xmax - r),
              rng.uniform(area.ymin + r, area.ymax - r)};
    }
    for (int j = 0; j < angles; ++j) {
      ++stats.samples;
      double b = stratified_angle(rng, j, angles);
      EEPose ee = ee_for_grasp(m, land, r, b);
      ++stats.ik_calls;
      for (const JointConfig& q : ik_solve(m, scene.base, ee)) {
        if (release_binding_ok(scene, m, act, tier, land, r, q, ee,
                               res.blockers, stats)) {
          res.feasible = true;
          res.binding.q = q;
          res.binding.ee = ee;
          res.binding.place_pos = land;
          return res;
        }
      }
    }
  }
  res.kinematic = res.blockers.empty();
  return res;
}

inline FeasibilityResult evaluate_navigate(const Scene& scene,
                                           const GroundAction& act,
                                           ReasonStats& stats) {
  FeasibilityResult res;
  auto it = scene.regions.find(act.params[1]);
  if (it == scene.regions.end()) {
    res.kinematic = true;
    return res;
  }
  for (const Pose2& dock : it->second.docks) {
    ++stats.config_checks;
    bool clear = true;
    for (const auto& [id, s] : scene.surfaces)
      if (point_rect_dist(dock.p, s.rect) <= scene.base_radius + kGeomSlack)
        clear = false;
    if (clear) {
      res.feasible = true;
      res.binding.dock = dock;
      return res;
    }
  }
  res.kinematic = true;
  return res;
}

}  // namespace detail

// Deterministic geometric evaluation of one ground action against a scene.
// The random stream is keyed on (seed, action, quantized scene, salt), so
// the same query replays identically and a changed salt resamples.
inline FeasibilityResult evaluate_action(const Scene& scene,
                                         const RobotModel& m,
                                         const GroundAction& act,
                                         std::uint64_t seed, std::uint64_t salt,
                                         ReasonStats& stats,
                                         ConfigCache* cache = nullptr,
                                         const ReasonerConfig& cfg = {}) {
  if (act.kind == ActionKind::load || act.kind == ActionKind::unload) {
    FeasibilityResult res;
    res.feasible = true;
    return res;
  }
  if (act.kind == ActionKind::navigate)
    return detail::evaluate_navigate(scene, act, stats);

  std::uint64_t fp = scene_fingerprint(scene, m);
  std::uint64_t sig = hash_str(0x51f7a11eu, act.signature());
  std::uint64_t key = hash_mix(hash_mix(sig, fp), salt);
  bool grasp = act.kind == ActionKind::pick || act.kind == ActionKind::unstack;

  if (cache) {
    auto it = cache->entries.find(key);
    if (it != cache->entries.end()) {
      FeasibilityResult res;
      std::set<ObjectId> scratch;
      bool ok;
      if (grasp) {
        int tier = scene.objects.at(act.params[0]).tier;
        ok = detail::grasp_binding_ok(scene, m, act, tier, it->second.q,
                                      it->second.ee, scratch, stats);
      } else {
        int tier = act.kind == ActionKind::stack
                       ? scene.objects.at(act.params[1]).tier + 1
                       : 0;
        double r = scene.objects.at(act.params[0]).radius;
        ok = detail::release_binding_ok(scene, m, act, tier,
                                        it->second.place_pos, r, it->second.q,
                                        it->second.ee, scratch, stats);
      }
      if (ok) {
        ++stats.cache_hits;
        FeasibilityResult hit;
        hit.feasible = true;
        hit.binding = it->second;
        return hit;
      }
      cache->entries.erase(it);
    }
    ++stats.cache_misses;
  }

  Rng rng(hash_mix(hash_mix(hash_mix(seed, sig), fp), salt));
  FeasibilityResult res =
      grasp ? detail::evaluate_grasp(scene, m, act, cfg, rng, stats)
            : detail::evaluate_release(scene, m, act, cfg, rng, stats);
  if (res.feasible && cache) cache->entries[key] = res.binding;
  return res;
}

// Translates a geometric failure into planner feedback. Movable blockers
// become obstructs() plus a keep-clear hold on the surface they sit on,
// keyed to the manipulated object so picking it lifts the hold. The hold is
// what stops the planner from parking a cleared blocker straight back onto
// the surface it was evicted from. Failures with no movable story mark the
// target unreachable.
inline std::vector<Atom> failure_to_predicates(const Scene& scene,
                                               const ObjectTable& table,
                                               const GroundAction& act,
                                               const FeasibilityResult& res) {
  std::vector<Atom> out;
  if (res.feasible) return out;
  const ObjectId& target = action_target(act);
  const ObjectId& moved = act.params[0];
  bool moved_obj = table.has(moved) && table.at(moved).movable;
  std::set<Atom> seen;
  auto push = [&](Atom a) {
    if (seen.insert(a).second) out.push_back(std::move(a));
  };
  bool any_movable = false;
  for (const ObjectId& b : res.blockers) {
    // An action's own operands (target, carried object) are never feedback.
    if (std::find(act.params.begin(), act.params.end(), b) !=
        act.params.end())
      continue;
    if (!table.has(b) || !table.at(b).movable) continue;
    any_movable = true;
    push(atom("obstructs", b, target));
    auto it = scene.objects.find(b);
    if (moved_obj && it != scene.objects.end() && it->second.support &&
        *it->second.support != moved)
      push(atom("leaveClear", *it->second.support, moved));
  }
  if (!any_movable) push(atom("unreachable", target));
  return out;
}

}  // namespace rhtamp
