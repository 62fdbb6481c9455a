#pragma once

// Random symbolic instances for cross-checking the task planner against the
// breadth-first oracle. Sizes are tuned so unsolvable instances stay small
// enough for exhaustive search.

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "rhtamp/common.hpp"
#include "rhtamp/symbolic.hpp"

namespace testgen {

using namespace rhtamp;

struct TaskInstance {
  SymbolicState init;
  Goal goal;
  std::vector<GroundAction> actions;
};

inline TaskInstance random_task_instance(std::uint64_t seed) {
  Rng rng(seed);
  TaskInstance inst;
  auto table = std::make_shared<ObjectTable>();

  const bool mobile = rng.chance(0.2);
  const bool big = rng.chance(0.2);
  const int n_mov = big ? 6 + rng.uniform_int(3) : 2 + rng.uniform_int(4);
  const int n_fixed = rng.chance(0.3) ? 1 : 0;
  const int n_surf = mobile ? 2 + rng.uniform_int(2) : 1 + rng.uniform_int(2);

  std::vector<std::string> movs, surfs, regions;
  for (int i = 0; i < n_mov; ++i) {
    std::string name = "m" + std::to_string(i);
    table->entries[name] = {.movable = true};
    movs.push_back(name);
  }
  for (int i = 0; i < n_fixed; ++i)
    table->entries["f" + std::to_string(i)] = {};
  if (mobile) {
    regions = {"wa", "wb"};
    for (const auto& w : regions) table->entries[w] = {.region = true};
    table->tray_capacity = 1 + rng.uniform_int(2);
  }
  for (int i = 0; i < n_surf; ++i) {
    std::string name = "t" + std::to_string(i);
    ObjectEntry e{.surface = true};
    if (mobile) {
      e.region_of = regions[i % 2];
      e.drop = i > 0;
    }
    table->entries[name] = e;
    surfs.push_back(name);
  }

  inst.init.objects = table;
  inst.actions = ground_domain(*table, mobile ? DomainKind::mobile
                                              : DomainKind::manipulator);

  // Placement forest: each movable sits on a surface or, in the manipulator
  // domain, possibly on a not-yet-loaded earlier movable (chains only).
  std::vector<bool> has_rider(n_mov, false);
  int held = (!mobile && rng.chance(0.25)) ? rng.uniform_int(n_mov) : -1;
  if (mobile && rng.chance(0.3)) held = rng.uniform_int(n_mov);
  for (int i = 0; i < n_mov; ++i) {
    if (i == held) {
      inst.init.atoms.insert(atom(mobile ? "holding" : "inHand", movs[i]));
      continue;
    }
    bool stacked = false;
    if (!mobile && i > 0 && rng.chance(0.3)) {
      for (int tries = 0; tries < 3 && !stacked; ++tries) {
        int below = rng.uniform_int(i);
        if (below != held && !has_rider[below]) {
          inst.init.atoms.insert(atom("on", movs[i], movs[below]));
          has_rider[below] = true;
          stacked = true;
        }
      }
    }
    if (!stacked) {
      const std::string& s = surfs[rng.uniform_int(n_surf)];
      inst.init.atoms.insert(atom("on", movs[i], s));
      if (mobile) {
        const std::string& w = table->at(s).region_of;
        inst.init.atoms.insert(atom("in", movs[i], w));
      }
    }
  }
  if (mobile) inst.init.atoms.insert(atom("near", regions[0]));

  // Feedback-style facts: blockers on objects or surfaces, occasional
  // keep-clear and unreachable marks. Fixed blockers make goals genuinely
  // unsolvable, which is what the exhaustive-search comparison wants.
  auto any_obj = [&]() -> std::string {
    int k = rng.uniform_int(n_mov + n_surf);
    return k < n_mov ? movs[k] : surfs[k - n_mov];
  };
  int n_obstructs = big ? rng.uniform_int(2) : rng.uniform_int(3);
  for (int i = 0; i < n_obstructs; ++i) {
    std::string blocker = (n_fixed && rng.chance(0.3) && !big)
                              ? "f0"
                              : movs[rng.uniform_int(n_mov)];
    std::string target = any_obj();
    if (blocker != target)
      inst.init.atoms.insert(atom("obstructs", blocker, target));
  }
  if (!big && rng.chance(0.25))
    inst.init.atoms.insert(
        atom("leaveClear", surfs[rng.uniform_int(n_surf)], movs[rng.uniform_int(n_mov)]));
  if (!big && rng.chance(0.15))
    inst.init.atoms.insert(atom("unreachable", movs[rng.uniform_int(n_mov)]));

  // Goals: either a handful of placements or grabbing something; rarely a
  // deliberately impossible pair of simultaneous holds.
  if (!big && rng.chance(0.1)) {
    inst.goal.required.insert(atom(mobile ? "holding" : "inHand", movs[0]));
    if (n_mov > 1)
      inst.goal.required.insert(
          atom(mobile ? "holding" : "inHand", movs[1]));
    return inst;
  }
  int n_goal = 1 + rng.uniform_int(big ? 2 : 3);
  std::set<std::string> used;
  for (int i = 0; i < n_goal; ++i) {
    const std::string& obj = movs[rng.uniform_int(n_mov)];
    if (!used.insert(obj).second) continue;
    if (mobile) {
      auto drops = table->drop_surfaces();
      inst.goal.required.insert(
          atom("on", obj, drops[rng.uniform_int(static_cast<int>(drops.size()))]));
    } else if (rng.chance(0.25) && n_mov > 1) {
      const std::string& other = movs[rng.uniform_int(n_mov)];
      if (other != obj) inst.goal.required.insert(atom("on", obj, other));
    } else if (rng.chance(0.2)) {
      inst.goal.required.insert(atom("inHand", obj));
    } else {
      inst.goal.required.insert(
          atom("on", obj, surfs[rng.uniform_int(n_surf)]));
    }
  }
  return inst;
}

}  // namespace testgen
