#pragma once

#include <map>
#include <optional>
#include <queue>
#include <string>
#include <tuple>
#include <unordered_set>
#include <vector>

#include "rhtamp/symbolic.hpp"

namespace rhtamp {

enum class PlanStatus { found, timeout, no_plan };

struct TaskPlanResult {
  PlanStatus status = PlanStatus::no_plan;
  std::vector<GroundAction> plan;
  double charged = 0;  // seconds on the deterministic clock
  std::size_t expanded = 0;
};

namespace detail {

// Interned representation shared by the heuristic and the search. The atom
// universe is everything reachable by addition: the initial atoms plus all
// add effects. Negative-precondition atoms outside the universe can never
// hold and are dropped; positive preconditions outside it kill the action.
struct TaskContext {
  struct Act {
    std::vector<int> pp, pn, ea, ed;
    double delta = 0;
    bool dead = false;
  };

  std::map<Atom, int> ids;
  std::vector<Act> acts;
  std::vector<int> goal_ids;
  bool goal_reachable = true;
  double capacity = 0;

  // heuristic workspace, sized once
  std::vector<signed char> added, initially, deletable, applied;
  std::vector<int> added_layer, first_adder, first_deleter, act_layer;
  std::vector<signed char> marked;

  TaskContext(const SymbolicState& init, const Goal& goal,
              const std::vector<GroundAction>& actions) {
    capacity = init.objects ? init.objects->tray_capacity : 0;
    auto intern = [&](const Atom& a) {
      auto [it, fresh] = ids.try_emplace(a, static_cast<int>(ids.size()));
      (void)fresh;
      return it->second;
    };
    for (const Atom& a : init.atoms) intern(a);
    for (const GroundAction& g : actions)
      for (const Atom& a : g.eff_add) intern(a);

    auto find = [&](const Atom& a) -> std::optional<int> {
      auto it = ids.find(a);
      if (it == ids.end()) return std::nullopt;
      return it->second;
    };
    acts.reserve(actions.size());
    for (const GroundAction& g : actions) {
      Act act;
      act.delta = g.tray_delta;
      for (const Atom& a : g.pre_pos) {
        if (auto id = find(a))
          act.pp.push_back(*id);
        else
          act.dead = true;
      }
      for (const Atom& a : g.pre_neg)
        if (auto id = find(a)) act.pn.push_back(*id);
      for (const Atom& a : g.eff_add) act.ea.push_back(ids.at(a));
      for (const Atom& a : g.eff_del)
        if (auto id = find(a)) act.ed.push_back(*id);
      std::sort(act.pp.begin(), act.pp.end());
      std::sort(act.pn.begin(), act.pn.end());
      std::sort(act.ea.begin(), act.ea.end());
      std::sort(act.ed.begin(), act.ed.end());
      acts.push_back(std::move(act));
    }
    for (const Atom& a : goal.required) {
      if (auto id = find(a))
        goal_ids.push_back(*id);
      else
        goal_reachable = false;
    }
    std::sort(goal_ids.begin(), goal_ids.end());

    std::size_t n = ids.size();
    added.assign(n, 0);
    initially.assign(n, 0);
    deletable.assign(n, 0);
    added_layer.assign(n, -1);
    first_adder.assign(n, -1);
    first_deleter.assign(n, -1);
    marked.assign(acts.size(), 0);
    applied.assign(acts.size(), 0);
    act_layer.assign(acts.size(), -1);
  }

  std::vector<int> intern_state(const SymbolicState& s) const {
    std::vector<int> out;
    out.reserve(s.atoms.size());
    for (const Atom& a : s.atoms) {
      auto it = ids.find(a);
      if (it != ids.end()) out.push_back(it->second);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  bool holds_goal(const std::vector<int>& atoms) const {
    return std::includes(atoms.begin(), atoms.end(), goal_ids.begin(),
                         goal_ids.end());
  }

  bool applicable(const std::vector<int>& atoms, double tray,
                  const Act& a) const {
    if (a.dead) return false;
    if (!std::includes(atoms.begin(), atoms.end(), a.pp.begin(), a.pp.end()))
      return false;
    for (int p : a.pn)
      if (std::binary_search(atoms.begin(), atoms.end(), p)) return false;
    if (a.delta > 0 && capacity > 0 && tray + a.delta > capacity + 1e-9)
      return false;
    return true;
  }

  std::vector<int> successor(const std::vector<int>& atoms,
                             const Act& a) const {
    std::vector<int> kept;
    kept.reserve(atoms.size() + a.ea.size());
    std::set_difference(atoms.begin(), atoms.end(), a.ed.begin(), a.ed.end(),
                        std::back_inserter(kept));
    std::vector<int> out;
    out.reserve(kept.size() + a.ea.size());
    std::set_union(kept.begin(), kept.end(), a.ea.begin(), a.ea.end(),
                   std::back_inserter(out));
    return out;
  }

  // Relaxed-plan size. Addition is relaxed as usual; a negative
  // precondition only blocks while its atom is true in the evaluated state
  // and no applied action deletes it. Atoms added along the way never block
  // (the relaxation may simply not execute their adder), which keeps
  // relaxed reachability a superset of real reachability. The tray guard is
  // ignored here, which only widens reachability further.
  std::optional<int> relaxed(const std::vector<int>& atoms) {
    if (!goal_reachable) return std::nullopt;
    std::fill(added.begin(), added.end(), 0);
    std::fill(initially.begin(), initially.end(), 0);
    std::fill(deletable.begin(), deletable.end(), 0);
    std::fill(added_layer.begin(), added_layer.end(), -1);
    std::fill(first_adder.begin(), first_adder.end(), -1);
    std::fill(first_deleter.begin(), first_deleter.end(), -1);
    std::fill(applied.begin(), applied.end(), 0);
    std::fill(act_layer.begin(), act_layer.end(), -1);
    for (int p : atoms) {
      added[p] = 1;
      initially[p] = 1;
      added_layer[p] = 0;
    }
    auto goal_added = [&] {
      for (int g : goal_ids)
        if (!added[g]) return false;
      return true;
    };
    int layer = 0;
    while (!goal_added()) {
      ++layer;
      std::vector<int> fired;
      for (std::size_t i = 0; i < acts.size(); ++i) {
        if (applied[i] || acts[i].dead) continue;
        const Act& a = acts[i];
        bool ok = true;
        for (int p : a.pp)
          if (!added[p]) {
            ok = false;
            break;
          }
        if (ok)
          for (int p : a.pn)
            if (initially[p] && !deletable[p]) {
              ok = false;
              break;
            }
        if (ok) fired.push_back(static_cast<int>(i));
      }
      if (fired.empty()) return std::nullopt;
      for (int i : fired) {
        applied[i] = 1;
        act_layer[i] = layer;
      }
      for (int i : fired) {
        for (int p : acts[i].ea)
          if (!added[p]) {
            added[p] = 1;
            added_layer[p] = layer;
            first_adder[p] = i;
          }
        for (int p : acts[i].ed)
          if (!deletable[p]) {
            deletable[p] = 1;
            first_deleter[p] = i;
          }
      }
    }

    // Extraction. Positive preconditions pull in first-achievers. A negative
    // precondition needs a delete witness only when its atom is actually
    // there: initially true, or added by an action that itself ended up in
    // the extracted set (layer junk that nobody selected does not block).
    // Marking a witness can create new obligations, hence the fixpoint. An
    // obligation with no recorded deleter is waived; the graph ordering is
    // advisory, the count is a heuristic.
    std::fill(marked.begin(), marked.end(), 0);
    int count = 0;
    std::vector<int> work;
    auto mark = [&](int i) {
      if (i >= 0 && !marked[i]) {
        marked[i] = 1;
        ++count;
        work.push_back(i);
      }
    };
    for (int g : goal_ids)
      if (added_layer[g] > 0) mark(first_adder[g]);
    bool changed = true;
    while (changed) {
      while (!work.empty()) {
        int i = work.back();
        work.pop_back();
        for (int p : acts[i].pp)
          if (added_layer[p] > 0) mark(first_adder[p]);
      }
      changed = false;
      for (std::size_t i = 0; i < acts.size(); ++i) {
        if (!marked[i]) continue;
        for (int p : acts[i].pn) {
          bool present =
              added_layer[p] == 0 ||
              (added_layer[p] > 0 && added_layer[p] < act_layer[i] &&
               marked[first_adder[p]]);
          if (!present) continue;
          int d = first_deleter[p];
          if (d >= 0 && !marked[d]) {
            mark(d);
            changed = true;
          }
        }
      }
    }
    return count;
  }
};

}  // namespace detail

inline std::optional<int> relaxed_plan_heuristic(
    const SymbolicState& s, const Goal& goal,
    const std::vector<GroundAction>& actions) {
  detail::TaskContext ctx(s, goal, actions);
  return ctx.relaxed(ctx.intern_state(s));
}

// Greedy best-first search under the relaxed-plan heuristic. Ties break by
// insertion order, so the result is a pure function of its arguments. The
// budget is charged per expanded node.
inline TaskPlanResult plan_task(const SymbolicState& init, const Goal& goal,
                                const std::vector<GroundAction>& actions,
                                double budget_s, const CostModel& costs = {}) {
  TaskPlanResult res;
  detail::TaskContext ctx(init, goal, actions);

  struct Node {
    std::vector<int> atoms;
    double tray;
    int parent;
    int act;
  };
  std::vector<Node> nodes;
  using Entry = std::tuple<int, std::size_t, std::size_t>;  // h, tick, node
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::unordered_set<std::string> closed;
  auto key_of = [](const std::vector<int>& atoms) {
    return std::string(reinterpret_cast<const char*>(atoms.data()),
                       atoms.size() * sizeof(int));
  };

  std::vector<int> init_atoms = ctx.intern_state(init);
  auto h0 = ctx.relaxed(init_atoms);
  if (!h0) {
    res.status = PlanStatus::no_plan;
    return res;
  }
  nodes.push_back({std::move(init_atoms), init.tray_load, -1, -1});
  std::size_t tick = 0;
  open.emplace(*h0, tick++, 0);

  while (!open.empty()) {
    auto [h, _, idx] = open.top();
    open.pop();
    std::string key = key_of(nodes[idx].atoms);
    if (!closed.insert(key).second) continue;
    ++res.expanded;
    res.charged = static_cast<double>(res.expanded) * costs.task_expand;
    if (ctx.holds_goal(nodes[idx].atoms)) {
      std::vector<int> chain;
      for (int at = static_cast<int>(idx); nodes[at].act >= 0;
           at = nodes[at].parent)
        chain.push_back(nodes[at].act);
      for (auto it = chain.rbegin(); it != chain.rend(); ++it)
        res.plan.push_back(actions[*it]);
      res.status = PlanStatus::found;
      return res;
    }
    if (res.charged > budget_s) {
      res.status = PlanStatus::timeout;
      return res;
    }
    for (std::size_t ai = 0; ai < ctx.acts.size(); ++ai) {
      const auto& act = ctx.acts[ai];
      if (!ctx.applicable(nodes[idx].atoms, nodes[idx].tray, act)) continue;
      std::vector<int> succ = ctx.successor(nodes[idx].atoms, act);
      if (closed.count(key_of(succ))) continue;
      auto h2 = ctx.relaxed(succ);
      if (!h2) continue;
      nodes.push_back({std::move(succ), nodes[idx].tray + act.delta,
                       static_cast<int>(idx), static_cast<int>(ai)});
      open.emplace(*h2, tick++, nodes.size() - 1);
    }
  }
  res.status = PlanStatus::no_plan;
  return res;
}

// Replays a plan through gamma and checks the goal at the end.
inline bool plan_valid(const SymbolicState& init, const Goal& goal,
                       const std::vector<GroundAction>& plan) {
  SymbolicState s = init;
  for (const GroundAction& a : plan) {
    if (!applicable(s, a)) return false;
    s = gamma(s, a);
  }
  return goal.satisfied(s);
}

}  // namespace rhtamp
