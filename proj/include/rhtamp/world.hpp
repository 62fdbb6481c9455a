#pragma once

#include <array>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rhtamp/geometry.hpp"
#include "rhtamp/problem.hpp"
#include "rhtamp/symbolic.hpp"

namespace rhtamp {

// Planar arm: three revolute joints, links modelled as capsules. Side
// grasps only; the gripper holds a cylinder at grasp_offset in front of the
// last link's tip.
struct RobotModel {
  std::array<double, 3> link_len{0.40, 0.35, 0.25};
  double joint_min = -2.9;
  double joint_max = 2.9;
  double link_radius = 0.03;
  double grasp_offset = 0.02;
  double approach_len = 0.10;
  double dock_tolerance = 0.15;

  double reach() const { return link_len[0] + link_len[1] + link_len[2]; }
};

using JointConfig = std::array<double, 3>;

struct EEPose {
  Vec2 pos{};
  double heading = 0;
};

struct SceneObject {
  double radius = 0;
  Vec2 pos{};
  int tier = 0;
  std::optional<ObjectId> support;  // surface or object it rests on
  bool movable = true;
};

struct SceneSurface {
  Rect rect;
  std::string region;  // empty when not in any region
};

struct SceneRegion {
  std::vector<Pose2> docks;
};

struct Scene {
  std::map<ObjectId, SceneObject> objects;
  std::map<ObjectId, SceneSurface> surfaces;
  std::map<ObjectId, SceneRegion> regions;
  Pose2 base{};
  JointConfig q{0, 0, 0};
  bool mobile = false;
  double base_radius = 0;
  std::optional<ObjectId> held;
  std::vector<ObjectId> tray;

  // Held and loaded objects travel with the robot; the pos field is stale
  // for them and they never act as world obstacles.
  bool is_placed(const ObjectId& id) const {
    if (held && *held == id) return false;
    for (const auto& t : tray)
      if (t == id) return false;
    return true;
  }
};

// ---------- kinematics ----------

inline std::array<Vec2, 4> arm_points(const RobotModel& m, const Pose2& base,
                                      const JointConfig& q) {
  std::array<Vec2, 4> pts;
  pts[0] = base.p;
  double a = base.theta;
  for (int i = 0; i < 3; ++i) {
    a += q[i];
    pts[i + 1] = pts[i] + dir(a) * m.link_len[i];
  }
  return pts;
}

inline EEPose forward_kinematics(const RobotModel& m, const Pose2& base,
                                 const JointConfig& q) {
  auto pts = arm_points(m, base, q);
  return {pts[3], wrap_angle(base.theta + q[0] + q[1] + q[2])};
}

// Analytic inverse kinematics: up to two joint-limit-respecting solutions
// (elbow up/down). Every returned solution is verified to reproduce the
// target through forward kinematics to within 1e-9.
inline std::vector<JointConfig> ik_solve(const RobotModel& m,
                                         const Pose2& base,
                                         const EEPose& target) {
  std::vector<JointConfig> out;
  const double l1 = m.link_len[0], l2 = m.link_len[1], l3 = m.link_len[2];
  Vec2 wrist = target.pos - dir(target.heading) * l3;
  Vec2 d = wrist - base.p;
  double r2 = d.norm2();
  double c2 = (r2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
  if (c2 < -1.0 - 1e-9 || c2 > 1.0 + 1e-9) return out;
  c2 = std::clamp(c2, -1.0, 1.0);
  double elbow = std::acos(c2);
  double phi = std::atan2(d.y, d.x);
  int n = elbow < 1e-12 ? 1 : 2;
  for (int i = 0; i < n; ++i) {
    double q2 = i == 0 ? elbow : -elbow;
    double psi = std::atan2(l2 * std::sin(q2), l1 + l2 * std::cos(q2));
    double a1 = phi - psi;
    JointConfig q;
    q[0] = wrap_angle(a1 - base.theta);
    q[1] = wrap_angle(q2);
    q[2] = wrap_angle(target.heading - a1 - q2);
    bool ok = true;
    for (double v : q)
      if (v < m.joint_min || v > m.joint_max) ok = false;
    if (!ok) continue;
    EEPose back = forward_kinematics(m, base, q);
    if (dist(back.pos, target.pos) > 1e-9 ||
        std::abs(wrap_angle(back.heading - target.heading)) > 1e-9)
      continue;
    out.push_back(q);
  }
  return out;
}

// Center of a cylinder of radius r held with end-effector pose ee.
inline Vec2 grasp_center(const RobotModel& m, const EEPose& ee, double r) {
  return ee.pos + dir(ee.heading) * (m.grasp_offset + r);
}

// End-effector pose that grasps a cylinder at center from direction angle
// (the gripper points along `angle` toward the center).
inline EEPose ee_for_grasp(const RobotModel& m, Vec2 center, double r,
                           double angle) {
  return {center - dir(angle) * (m.grasp_offset + r), angle};
}

// A placed cylinder still seated in the gripper pocket, i.e. exactly where
// opening the gripper leaves it. It is a departure contact for the next arm
// motion, not an obstacle: with d_grasp smaller than the link radius the
// release configuration always overlaps the released cylinder.
inline std::optional<ObjectId> gripper_pocket_object(const RobotModel& m,
                                                     const Scene& sc,
                                                     const EEPose& ee,
                                                     double tol = 0.005) {
  for (const auto& [id, o] : sc.objects) {
    if (!sc.is_placed(id)) continue;
    if (dist(o.pos, grasp_center(m, ee, o.radius)) <= tol) return id;
  }
  return std::nullopt;
}

// ---------- collision ----------

struct CollisionQuery {
  std::optional<ObjectId> carrying;
  int tier = 0;                // objects strictly below this tier are ignored
  std::set<ObjectId> ignore;
};

struct CollisionReport {
  bool free = true;
  std::set<ObjectId> blockers;
  bool self_collision = false;
  bool limit_violation = false;
};

inline bool collision_relevant(const Scene& scene, const ObjectId& id,
                               const SceneObject& o, const CollisionQuery& ctx) {
  if (!scene.is_placed(id)) return false;
  if (o.tier < ctx.tier) return false;
  if (ctx.ignore.count(id)) return false;
  if (ctx.carrying && *ctx.carrying == id) return false;
  return true;
}

// Full collision query for one arm configuration: joint limits, link
// capsules against object discs at or above the operating tier, the carried
// disc against the same set, and non-adjacent link self-collision. Reports
// every involved object id.
inline CollisionReport collision_free(const Scene& scene, const RobotModel& m,
                                      const JointConfig& q,
                                      const CollisionQuery& ctx = {}) {
  CollisionReport rep;
  for (double v : q)
    if (v < m.joint_min || v > m.joint_max) {
      rep.free = false;
      rep.limit_violation = true;
      return rep;
    }
  auto pts = arm_points(m, scene.base, q);
  if (segment_segment_dist(pts[0], pts[1], pts[2], pts[3]) <=
      2.0 * m.link_radius + kGeomSlack) {
    rep.free = false;
    rep.self_collision = true;
  }
  std::optional<Vec2> carried_center;
  double carried_radius = 0;
  if (ctx.carrying) {
    auto it = scene.objects.find(*ctx.carrying);
    if (it != scene.objects.end()) {
      EEPose ee{pts[3], wrap_angle(scene.base.theta + q[0] + q[1] + q[2])};
      carried_center = grasp_center(m, ee, it->second.radius);
      carried_radius = it->second.radius;
    }
  }
  for (const auto& [id, o] : scene.objects) {
    if (!collision_relevant(scene, id, o, ctx)) continue;
    for (int link = 0; link < 3; ++link) {
      if (point_segment_dist(o.pos, pts[link], pts[link + 1]) <=
          o.radius + m.link_radius + kGeomSlack) {
        rep.free = false;
        rep.blockers.insert(id);
        break;
      }
    }
    if (carried_center &&
        dist(*carried_center, o.pos) <= carried_radius + o.radius + kGeomSlack) {
      rep.free = false;
      rep.blockers.insert(id);
      rep.blockers.insert(*ctx.carrying);
    }
  }
  if (rep.self_collision) rep.free = false;
  return rep;
}

// Capsule sweep between two points (gripper approach corridor).
inline CollisionReport segment_clear(const Scene& scene, Vec2 from, Vec2 to,
                                     double clearance,
                                     const CollisionQuery& ctx = {}) {
  CollisionReport rep;
  for (const auto& [id, o] : scene.objects) {
    if (!collision_relevant(scene, id, o, ctx)) continue;
    if (point_segment_dist(o.pos, from, to) <=
        clearance + o.radius + kGeomSlack) {
      rep.free = false;
      rep.blockers.insert(id);
    }
  }
  return rep;
}

// ---------- scene validation and symbolic projection ----------

inline void validate_scene(const Scene& scene) {
  for (const auto& [id, s] : scene.surfaces) {
    if (!s.rect.valid()) throw SceneError("degenerate surface " + id);
    if (!s.region.empty() && !scene.regions.count(s.region))
      throw SceneError("surface " + id + " references unknown region " +
                       s.region);
  }
  for (auto it = scene.surfaces.begin(); it != scene.surfaces.end(); ++it)
    for (auto jt = std::next(it); jt != scene.surfaces.end(); ++jt)
      if (it->second.rect.overlaps(jt->second.rect))
        throw SceneError("surfaces " + it->first + " and " + jt->first +
                         " overlap");
  for (const auto& [id, r] : scene.regions)
    if (r.docks.empty()) throw SceneError("region " + id + " has no dock");
  for (const auto& [id, o] : scene.objects) {
    if (o.radius <= 0) throw SceneError("object " + id + " has no radius");
    if (o.support) {
      if (!scene.surfaces.count(*o.support) && !scene.objects.count(*o.support))
        throw SceneError("object " + id + " rests on unknown " + *o.support);
      int depth = 0;
      const SceneObject* cur = &o;
      while (cur->support && scene.objects.count(*cur->support)) {
        cur = &scene.objects.at(*cur->support);
        if (++depth > static_cast<int>(scene.objects.size()))
          throw SceneError("support cycle at " + id);
      }
    }
  }
  if (scene.held && !scene.objects.count(*scene.held))
    throw SceneError("held object " + *scene.held + " missing");
  for (const auto& id : scene.tray)
    if (!scene.objects.count(id)) throw SceneError("tray object " + id + " missing");
  if (scene.mobile && scene.base_radius <= 0)
    throw SceneError("mobile robot needs a base radius");
}

// Geometric state -> symbolic state. Placement comes from the support
// fields; a placed object with no support is an orphan. Region membership
// is emitted for objects directly on a region's surface, and near() from
// the base pose against region docks.
inline SymbolicState derive_symbolic(
    const Scene& scene, std::shared_ptr<const ObjectTable> table = nullptr,
    double dock_tolerance = 0.15) {
  SymbolicState s;
  if (!table) {
    auto t = std::make_shared<ObjectTable>();
    for (const auto& [id, o] : scene.objects)
      t->entries[id] = {.movable = o.movable};
    for (const auto& [id, surf] : scene.surfaces)
      t->entries[id] = {.surface = true, .region_of = surf.region};
    for (const auto& [id, r] : scene.regions) t->entries[id] = {.region = true};
    table = t;
  }
  s.objects = table;
  const char* hand = scene.mobile ? "holding" : "inHand";
  for (const auto& [id, o] : scene.objects) {
    if (scene.held && *scene.held == id) {
      s.atoms.insert(atom(hand, id));
      continue;
    }
    bool in_tray = false;
    for (const auto& t : scene.tray) in_tray |= t == id;
    if (in_tray) {
      s.atoms.insert(atom("loaded", id));
      s.tray_load += table->has(id) ? table->at(id).weight : 1.0;
      continue;
    }
    if (!o.support)
      throw SceneError("orphan object " + id + " rests on nothing");
    s.atoms.insert(atom("on", id, *o.support));
    auto surf = scene.surfaces.find(*o.support);
    if (surf != scene.surfaces.end() && !surf->second.region.empty())
      s.atoms.insert(atom("in", id, surf->second.region));
  }
  for (const auto& [id, r] : scene.regions)
    for (const Pose2& dock : r.docks)
      if (dist(dock.p, scene.base.p) <= dock_tolerance) {
        s.atoms.insert(atom("near", id));
        break;
      }
  return s;
}

// Merges declared capabilities with scene structure: flags and weights from
// the problem, surface-to-region links from the scene. Scene items never
// declared in the problem come in with their scene-level capabilities.
inline std::shared_ptr<ObjectTable> build_object_table(const ProblemDef& def,
                                                       const Scene& scene) {
  auto table = std::make_shared<ObjectTable>(def.table);
  for (const auto& [id, o] : scene.objects)
    if (!table->has(id)) table->entries[id] = {.movable = o.movable};
  for (const auto& [id, surf] : scene.surfaces) {
    auto& e = table->entries[id];
    e.surface = true;
    e.region_of = surf.region;
  }
  for (const auto& [id, r] : scene.regions) table->entries[id].region = true;
  return table;
}

// ---------- scene file format ----------
//
//   surface <id> <xmin> <ymin> <xmax> <ymax> [region <id>]
//   region <id> dock <x> <y> <theta> [dock <x> <y> <theta> ...]
//   cyl <id> <x> <y> <radius> [on <id>] [fixed]
//   robot <x> <y> <theta> [mobile <base-radius>]
//   arm <q1> <q2> <q3>
//   held <id>
//   tray <id>

inline Scene parse_scene(std::istream& in,
                         const std::string& filename = "scene") {
  Scene scene;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw ParseError(filename + ":" + std::to_string(lineno) + ": " + msg);
  };
  auto num = [&](std::istringstream& ls, const char* what) {
    double v;
    if (!(ls >> v)) fail(std::string("expected ") + what);
    return v;
  };
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim_copy(line);
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "surface") {
      std::string id;
      ls >> id;
      if (id.empty()) fail("surface needs an id");
      SceneSurface s;
      s.rect.xmin = num(ls, "xmin");
      s.rect.ymin = num(ls, "ymin");
      s.rect.xmax = num(ls, "xmax");
      s.rect.ymax = num(ls, "ymax");
      std::string tok;
      if (ls >> tok) {
        if (tok != "region") fail("unexpected token '" + tok + "'");
        if (!(ls >> s.region)) fail("region needs an id");
      }
      scene.surfaces[id] = s;
    } else if (kind == "region") {
      std::string id;
      ls >> id;
      if (id.empty()) fail("region needs an id");
      SceneRegion r;
      std::string tok;
      while (ls >> tok) {
        if (tok != "dock") fail("unexpected token '" + tok + "'");
        Pose2 d;
        d.p.x = num(ls, "dock x");
        d.p.y = num(ls, "dock y");
        d.theta = num(ls, "dock theta");
        r.docks.push_back(d);
      }
      scene.regions[id] = r;
    } else if (kind == "cyl") {
      std::string id;
      ls >> id;
      if (id.empty()) fail("cyl needs an id");
      SceneObject o;
      o.pos.x = num(ls, "x");
      o.pos.y = num(ls, "y");
      o.radius = num(ls, "radius");
      std::string tok;
      while (ls >> tok) {
        if (tok == "on") {
          std::string sup;
          if (!(ls >> sup)) fail("on needs an id");
          o.support = sup;
        } else if (tok == "fixed") {
          o.movable = false;
        } else {
          fail("unexpected token '" + tok + "'");
        }
      }
      scene.objects[id] = o;
    } else if (kind == "robot") {
      scene.base.p.x = num(ls, "x");
      scene.base.p.y = num(ls, "y");
      scene.base.theta = num(ls, "theta");
      std::string tok;
      if (ls >> tok) {
        if (tok != "mobile") fail("unexpected token '" + tok + "'");
        scene.mobile = true;
        scene.base_radius = num(ls, "base radius");
      }
    } else if (kind == "arm") {
      scene.q[0] = num(ls, "q1");
      scene.q[1] = num(ls, "q2");
      scene.q[2] = num(ls, "q3");
    } else if (kind == "held") {
      std::string id;
      if (!(ls >> id)) fail("held needs an id");
      scene.held = id;
    } else if (kind == "tray") {
      std::string id;
      if (!(ls >> id)) fail("tray needs an id");
      scene.tray.push_back(id);
    } else {
      fail("unknown directive '" + kind + "'");
    }
  }
  // Resolve implicit supports by containment, innermost surface wins by
  // first match; explicit stacking must use `on`.
  for (auto& [id, o] : scene.objects) {
    if (o.support || (scene.held && *scene.held == id)) continue;
    bool in_tray = false;
    for (const auto& t : scene.tray) in_tray |= t == id;
    if (in_tray) continue;
    for (const auto& [sid, surf] : scene.surfaces)
      if (surf.rect.contains(o.pos)) {
        o.support = sid;
        break;
      }
  }
  // Tier from support chains.
  for (auto& [id, o] : scene.objects) {
    int tier = 0;
    const SceneObject* cur = &o;
    int guard = 0;
    while (cur->support && scene.objects.count(*cur->support)) {
      ++tier;
      cur = &scene.objects.at(*cur->support);
      if (++guard > static_cast<int>(scene.objects.size()))
        throw ParseError(filename + ": support cycle at " + id);
    }
    o.tier = tier;
  }
  if (scene.held && scene.objects.count(*scene.held))
    scene.objects.at(*scene.held).support.reset();
  validate_scene(scene);
  return scene;
}

inline Scene parse_scene_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return parse_scene(in, path);
}

namespace detail {

// Shortest decimal form that parses back to the same double.
inline std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  if (std::stod(buf) != v) std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::string scene_to_string(const Scene& scene) {
  std::ostringstream out;
  auto n = detail::fmt_num;
  for (const auto& [id, s] : scene.surfaces) {
    out << "surface " << id << ' ' << n(s.rect.xmin) << ' ' << n(s.rect.ymin)
        << ' ' << n(s.rect.xmax) << ' ' << n(s.rect.ymax);
    if (!s.region.empty()) out << " region " << s.region;
    out << '\n';
  }
  for (const auto& [id, r] : scene.regions) {
    out << "region " << id;
    for (const Pose2& d : r.docks)
      out << " dock " << n(d.p.x) << ' ' << n(d.p.y) << ' ' << n(d.theta);
    out << '\n';
  }
  for (const auto& [id, o] : scene.objects) {
    out << "cyl " << id << ' ' << n(o.pos.x) << ' ' << n(o.pos.y) << ' '
        << n(o.radius);
    if (o.support) out << " on " << *o.support;
    if (!o.movable) out << " fixed";
    out << '\n';
  }
  out << "robot " << n(scene.base.p.x) << ' ' << n(scene.base.p.y) << ' '
      << n(scene.base.theta);
  if (scene.mobile) out << " mobile " << n(scene.base_radius);
  out << '\n';
  out << "arm " << n(scene.q[0]) << ' ' << n(scene.q[1]) << ' '
      << n(scene.q[2]) << '\n';
  if (scene.held) out << "held " << *scene.held << '\n';
  for (const auto& id : scene.tray) out << "tray " << id << '\n';
  return out.str();
}

}  // namespace rhtamp
