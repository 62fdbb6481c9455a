#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <set>
#include <vector>

#include "rhtamp/common.hpp"
#include "rhtamp/world.hpp"

namespace rhtamp {

struct MotionConfig {
  double step = 0.3;              // extension step, max-norm radians
  double edge_resolution = 0.05;  // collision spacing along edges
  int shortcut_passes = 40;
};

struct MotionStats {
  long config_checks = 0;
  long samples = 0;

  double charged(const CostModel& c) const {
    return config_checks * c.config_check + samples * c.sample_draw;
  }
};

struct MotionResult {
  bool found = false;
  bool timeout = false;
  std::vector<JointConfig> path;  // start..goal inclusive when found
  std::set<ObjectId> blockers;    // best-effort attribution otherwise
};

inline double config_dist(const JointConfig& a, const JointConfig& b) {
  double d = 0;
  for (int i = 0; i < 3; ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

inline JointConfig config_lerp(const JointConfig& a, const JointConfig& b,
                               double t) {
  return {a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t,
          a[2] + (b[2] - a[2]) * t};
}

// Arm motion duration under the constant joint-speed model.
inline double path_radians(const std::vector<JointConfig>& path) {
  double r = 0;
  for (std::size_t i = 1; i < path.size(); ++i)
    r += config_dist(path[i - 1], path[i]);
  return r;
}

namespace detail {

// Checks the open-start edge (a, b]: every interpolated configuration at
// spacing <= resolution plus the far endpoint.
inline bool edge_clear(const Scene& scene, const RobotModel& m,
                       const JointConfig& a, const JointConfig& b,
                       const CollisionQuery& ctx, double resolution,
                       MotionStats& stats, std::set<ObjectId>* blockers) {
  int n = std::max(1, static_cast<int>(std::ceil(config_dist(a, b) / resolution)));
  for (int i = 1; i <= n; ++i) {
    ++stats.config_checks;
    auto rep = collision_free(scene, m, config_lerp(a, b, double(i) / n), ctx);
    if (!rep.free) {
      if (blockers)
        blockers->insert(rep.blockers.begin(), rep.blockers.end());
      return false;
    }
  }
  return true;
}

}  // namespace detail

// Re-checks a finished path at the given resolution, including the start
// configuration. Used by the executor against ground truth and by
// conformance checks at finer spacing than planning used.
inline CollisionReport validate_path(const Scene& scene, const RobotModel& m,
                                     const std::vector<JointConfig>& path,
                                     const CollisionQuery& ctx,
                                     double resolution, MotionStats& stats) {
  CollisionReport out;
  if (path.empty()) return out;
  ++stats.config_checks;
  out = collision_free(scene, m, path.front(), ctx);
  if (!out.free) return out;
  std::set<ObjectId> hit;
  for (std::size_t i = 1; i < path.size(); ++i)
    if (!detail::edge_clear(scene, m, path[i - 1], path[i], ctx, resolution,
                            stats, &hit)) {
      out.free = false;
      out.blockers = hit;
      return out;
    }
  return out;
}

// Bidirectional RRT-Connect over the three joints with greedy connect and
// shortcut smoothing. Deterministic for a given seed; spends only charged
// model time against the budget.
inline MotionResult plan_motion(const Scene& scene, const RobotModel& m,
                                const JointConfig& start,
                                const JointConfig& goal,
                                const CollisionQuery& ctx, double budget,
                                std::uint64_t seed, MotionStats& stats,
                                const CostModel& cost = {},
                                const MotionConfig& cfg = {}) {
  MotionResult res;
  ++stats.config_checks;
  if (!collision_free(scene, m, start, ctx).free)
    throw PreconditionError("motion start configuration in collision");
  ++stats.config_checks;
  if (!collision_free(scene, m, goal, ctx).free)
    throw PreconditionError("motion goal configuration in collision");

  double base_charge = stats.charged(cost);
  auto spent = [&] { return stats.charged(cost) - base_charge; };
  Rng rng(hash_mix(seed, 0x4d6f74696fu));

  // Tree nodes store a parent index; tree A roots at start, B at goal.
  struct Node {
    JointConfig q;
    int parent;
  };
  std::vector<Node> ta{{start, -1}}, tb{{goal, -1}};
  bool a_is_start = true;
  int meet_a = -1, meet_b = -1;

  std::set<ObjectId> best_blockers;
  double best_goal_dist = std::numeric_limits<double>::infinity();
  auto note_failure = [&](const JointConfig& from,
                          const std::set<ObjectId>& hit) {
    double d = config_dist(from, goal);
    if (d < best_goal_dist && !hit.empty()) {
      best_goal_dist = d;
      best_blockers = hit;
    }
  };

  auto nearest = [](const std::vector<Node>& tree, const JointConfig& q) {
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < tree.size(); ++i) {
      double d = config_dist(tree[i].q, q);
      if (d < bd) {
        bd = d;
        best = static_cast<int>(i);
      }
    }
    return best;
  };

  // Steps `tree` toward q until reached or blocked; returns the index of
  // the last node added, or -1 if no progress at all.
  auto connect = [&](std::vector<Node>& tree, const JointConfig& q) {
    int cur = nearest(tree, q);
    int added = -1;
    while (true) {
      double d = config_dist(tree[cur].q, q);
      bool last = d <= cfg.step;
      JointConfig next = last ? q : config_lerp(tree[cur].q, q, cfg.step / d);
      std::set<ObjectId> hit;
      if (!detail::edge_clear(scene, m, tree[cur].q, next, ctx,
                              cfg.edge_resolution, stats, &hit)) {
        note_failure(tree[cur].q, hit);
        return added;
      }
      tree.push_back({next, cur});
      cur = static_cast<int>(tree.size()) - 1;
      added = cur;
      if (last) return cur;
    }
  };

  // Try the straight edge first.
  {
    std::set<ObjectId> hit;
    if (detail::edge_clear(scene, m, start, goal, ctx, cfg.edge_resolution,
                           stats, &hit)) {
      res.found = true;
      res.path = {start, goal};
      return res;
    }
    note_failure(start, hit);
  }

  while (spent() < budget) {
    JointConfig sample;
    ++stats.samples;
    for (double& v : sample) v = rng.uniform(m.joint_min, m.joint_max);
    int na = connect(ta, sample);
    if (na >= 0) {
      int nb = connect(tb, ta[na].q);
      if (nb >= 0 && config_dist(tb[nb].q, ta[na].q) == 0) {
        meet_a = na;
        meet_b = nb;
        break;
      }
    }
    std::swap(ta, tb);
    a_is_start = !a_is_start;
  }

  if (meet_a < 0) {
    res.timeout = true;
    res.blockers = best_blockers;
    return res;
  }

  std::vector<JointConfig> half_a, half_b;
  for (int i = meet_a; i >= 0; i = ta[i].parent) half_a.push_back(ta[i].q);
  for (int i = meet_b; i >= 0; i = tb[i].parent) half_b.push_back(tb[i].q);
  if (!a_is_start) std::swap(half_a, half_b);
  // half_a now leads back from the meeting point to start.
  std::vector<JointConfig>& path = res.path;
  path.assign(half_a.rbegin(), half_a.rend());
  // Meeting configuration is identical in both trees; skip the duplicate.
  path.insert(path.end(), half_b.begin() + 1, half_b.end());
  res.found = true;

  for (int pass = 0; pass < cfg.shortcut_passes && path.size() > 2; ++pass) {
    if (spent() >= budget) break;
    ++stats.samples;
    std::size_t i = rng.uniform_int(static_cast<int>(path.size()) - 2);
    std::size_t j = i + 2 + rng.uniform_int(static_cast<int>(path.size() - i) - 2);
    if (j >= path.size()) continue;
    if (detail::edge_clear(scene, m, path[i], path[j], ctx,
                           cfg.edge_resolution, stats, nullptr))
      path.erase(path.begin() + i + 1, path.begin() + j);
  }
  return res;
}

// ---------- base navigation ----------

struct NavResult {
  bool found = false;
  std::vector<Pose2> waypoints;  // exact start first, exact dock last
  double length = 0;             // meters along the polyline
};

namespace detail {

struct NavGrid {
  Rect bounds;
  double cell = 0.05;
  int nx = 0, ny = 0;
  std::vector<std::uint8_t> blocked_cells;

  bool blocked(int ix, int iy) const {
    if (ix < 0 || iy < 0 || ix >= nx || iy >= ny) return true;
    return blocked_cells[static_cast<std::size_t>(iy) * nx + ix] != 0;
  }
  Vec2 center(int ix, int iy) const {
    return {bounds.xmin + (ix + 0.5) * cell, bounds.ymin + (iy + 0.5) * cell};
  }
  int cx(double x) const {
    return static_cast<int>(std::floor((x - bounds.xmin) / cell));
  }
  int cy(double y) const {
    return static_cast<int>(std::floor((y - bounds.ymin) / cell));
  }
};

inline bool base_point_clear(const Scene& scene, Vec2 p, double radius) {
  for (const auto& [id, s] : scene.surfaces)
    if (point_rect_dist(p, s.rect) <= radius + kGeomSlack) return false;
  return true;
}

inline NavGrid build_nav_grid(const Scene& scene, Vec2 from, Vec2 to,
                              MotionStats& stats) {
  NavGrid g;
  double x0 = std::min(from.x, to.x), x1 = std::max(from.x, to.x);
  double y0 = std::min(from.y, to.y), y1 = std::max(from.y, to.y);
  for (const auto& [id, s] : scene.surfaces) {
    x0 = std::min(x0, s.rect.xmin);
    x1 = std::max(x1, s.rect.xmax);
    y0 = std::min(y0, s.rect.ymin);
    y1 = std::max(y1, s.rect.ymax);
  }
  double pad = scene.base_radius + 0.6;
  g.bounds = {x0 - pad, y0 - pad, x1 + pad, y1 + pad};
  g.nx = static_cast<int>(std::ceil((g.bounds.xmax - g.bounds.xmin) / g.cell));
  g.ny = static_cast<int>(std::ceil((g.bounds.ymax - g.bounds.ymin) / g.cell));
  g.blocked_cells.assign(static_cast<std::size_t>(g.nx) * g.ny, 0);
  // Cell probes are cheap point tests, charged at sampling rate.
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      ++stats.samples;
      if (!base_point_clear(scene, g.center(ix, iy), scene.base_radius))
        g.blocked_cells[static_cast<std::size_t>(iy) * g.nx + ix] = 1;
    }
  return g;
}

inline bool base_segment_clear(const Scene& scene, Vec2 a, Vec2 b,
                               double radius, MotionStats& stats) {
  double len = dist(a, b);
  int n = std::max(1, static_cast<int>(std::ceil(len / 0.025)));
  for (int i = 0; i <= n; ++i) {
    ++stats.samples;
    Vec2 p{a.x + (b.x - a.x) * i / n, a.y + (b.y - a.y) * i / n};
    if (!base_point_clear(scene, p, radius)) return false;
  }
  return true;
}

}  // namespace detail

// Grid path for the mobile base: Dijkstra on an 8-connected occupancy grid
// of surface rectangles inflated by the base radius, then line-of-sight
// pruning. The start cell is usable even when inside the inflated zone so
// a slightly mis-docked robot can escape.
inline NavResult plan_base_path(const Scene& scene, Pose2 from, Pose2 to,
                                MotionStats& stats) {
  NavResult res;
  detail::NavGrid g = detail::build_nav_grid(scene, from.p, to.p, stats);
  int sx = g.cx(from.p.x), sy = g.cy(from.p.y);
  int gx = g.cx(to.p.x), gy = g.cy(to.p.y);
  if (g.blocked(gx, gy)) return res;

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> cost_to(static_cast<std::size_t>(g.nx) * g.ny, inf);
  std::vector<int> prev(cost_to.size(), -1);
  auto id_of = [&](int x, int y) { return y * g.nx + x; };
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  cost_to[id_of(sx, sy)] = 0;
  open.push({0, id_of(sx, sy)});
  const int dx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  const int dy[8] = {0, 0, 1, -1, 1, -1, 1, -1};
  while (!open.empty()) {
    auto [c, id] = open.top();
    open.pop();
    if (c > cost_to[id]) continue;
    if (id == id_of(gx, gy)) break;
    int x = id % g.nx, y = id / g.nx;
    for (int k = 0; k < 8; ++k) {
      int nxk = x + dx[k], nyk = y + dy[k];
      if (g.blocked(nxk, nyk)) continue;
      // No corner cutting between two blocked orthogonal neighbours.
      if (k >= 4 && (g.blocked(x + dx[k], y) || g.blocked(x, y + dy[k])))
        continue;
      double step = g.cell * (k >= 4 ? std::sqrt(2.0) : 1.0);
      int nid = id_of(nxk, nyk);
      if (c + step < cost_to[nid]) {
        cost_to[nid] = c + step;
        prev[nid] = id;
        open.push({c + step, nid});
      }
    }
  }
  if (cost_to[id_of(gx, gy)] == inf) return res;

  std::vector<Vec2> cells;
  for (int id = id_of(gx, gy); id != -1; id = prev[id])
    cells.push_back(g.center(id % g.nx, id / g.nx));
  std::reverse(cells.begin(), cells.end());
  cells.front() = from.p;
  cells.back() = to.p;

  // Line-of-sight pruning, keeping exact endpoints.
  std::vector<Vec2> pruned{cells.front()};
  std::size_t i = 0;
  while (i + 1 < cells.size()) {
    std::size_t j = cells.size() - 1;
    for (; j > i + 1; --j)
      if (detail::base_segment_clear(scene, cells[i], cells[j],
                                     scene.base_radius, stats))
        break;
    pruned.push_back(cells[j]);
    i = j;
  }

  res.found = true;
  for (std::size_t k = 0; k < pruned.size(); ++k) {
    double heading = to.theta;
    if (k + 1 < pruned.size())
      heading = std::atan2(pruned[k + 1].y - pruned[k].y,
                           pruned[k + 1].x - pruned[k].x);
    res.waypoints.push_back({pruned[k], heading});
    if (k) res.length += dist(pruned[k - 1], pruned[k]);
  }
  res.waypoints.back().theta = to.theta;
  return res;
}

}  // namespace rhtamp
