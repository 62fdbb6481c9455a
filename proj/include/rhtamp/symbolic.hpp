#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rhtamp/common.hpp"

namespace rhtamp {

struct Atom {
  std::string pred;
  std::vector<std::string> args;

  auto operator<=>(const Atom&) const = default;

  std::string str() const {
    if (args.empty()) return pred;
    std::string s = pred;
    s += '(';
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (i) s += ',';
      s += args[i];
    }
    s += ')';
    return s;
  }
};

inline Atom atom(std::string pred, std::string a) {
  return {std::move(pred), {std::move(a)}};
}
inline Atom atom(std::string pred, std::string a, std::string b) {
  return {std::move(pred), {std::move(a), std::move(b)}};
}

// Predicate vocabulary with arities. unreachable is internal feedback from
// the geometric layer and never appears in goals.
inline const std::map<std::string, int>& predicate_arities() {
  static const std::map<std::string, int> arities = {
      {"on", 2},      {"inHand", 1},     {"holding", 1},
      {"near", 1},    {"in", 2},         {"loaded", 1},
      {"obstructs", 2}, {"leaveClear", 2}, {"unreachable", 1}};
  return arities;
}

inline Atom parse_atom(std::string_view text) {
  auto trim = [](std::string_view v) {
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front()))) v.remove_prefix(1);
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.remove_suffix(1);
    return v;
  };
  text = trim(text);
  Atom a;
  auto open = text.find('(');
  if (open == std::string_view::npos) {
    a.pred = std::string(text);
  } else {
    if (text.back() != ')')
      throw ParseError("malformed atom '" + std::string(text) + "'");
    a.pred = std::string(trim(text.substr(0, open)));
    std::string_view inner = text.substr(open + 1, text.size() - open - 2);
    while (!inner.empty()) {
      auto comma = inner.find(',');
      std::string_view arg = comma == std::string_view::npos ? inner : inner.substr(0, comma);
      arg = trim(arg);
      if (arg.empty())
        throw ParseError("malformed atom '" + std::string(text) + "'");
      a.args.emplace_back(arg);
      if (comma == std::string_view::npos) break;
      inner.remove_prefix(comma + 1);
    }
  }
  auto it = predicate_arities().find(a.pred);
  if (it == predicate_arities().end())
    throw ParseError("unknown predicate '" + a.pred + "'");
  if (static_cast<int>(a.args.size()) != it->second)
    throw ParseError("predicate '" + a.pred + "' expects " +
                     std::to_string(it->second) + " arguments");
  return a;
}

struct ObjectEntry {
  bool movable = false;
  bool surface = false;
  bool region = false;
  bool drop = false;
  double weight = 1.0;
  std::string region_of;  // surfaces: owning region id, empty if none
};

struct ObjectTable {
  std::map<std::string, ObjectEntry> entries;
  double tray_capacity = 0;

  bool has(const std::string& name) const { return entries.count(name) != 0; }
  const ObjectEntry& at(const std::string& name) const { return entries.at(name); }

  std::vector<std::string> movables() const { return select([](const ObjectEntry& e) { return e.movable; }); }
  std::vector<std::string> surfaces() const { return select([](const ObjectEntry& e) { return e.surface; }); }
  std::vector<std::string> regions() const { return select([](const ObjectEntry& e) { return e.region; }); }
  std::vector<std::string> drop_surfaces() const {
    return select([](const ObjectEntry& e) { return e.surface && e.drop; });
  }

 private:
  template <class F>
  std::vector<std::string> select(F pred) const {
    std::vector<std::string> out;
    for (const auto& [name, e] : entries)
      if (pred(e)) out.push_back(name);
    return out;
  }
};

struct SymbolicState {
  std::set<Atom> atoms;
  double tray_load = 0;
  std::shared_ptr<const ObjectTable> objects;

  bool contains(const Atom& a) const { return atoms.count(a) != 0; }
};

// Invariant check used by tests and the problem parser; returns a
// description of the first violation or nullopt.
inline std::optional<std::string> state_violation(const SymbolicState& s) {
  std::vector<std::string> held;
  for (const Atom& a : s.atoms)
    if (a.pred == "inHand" || a.pred == "holding") held.push_back(a.args[0]);
  if (held.size() > 1) return "more than one object in hand";
  if (!held.empty()) {
    for (const Atom& a : s.atoms)
      if (a.pred == "on" && a.args[0] == held[0])
        return "object " + held[0] + " both in hand and placed";
  }
  if (s.objects && s.objects->tray_capacity > 0 &&
      s.tray_load > s.objects->tray_capacity + 1e-9)
    return "tray over capacity";
  return std::nullopt;
}

enum class ActionKind { pick, place, stack, unstack, navigate, load, unload };

inline std::string_view kind_name(ActionKind k) {
  switch (k) {
    case ActionKind::pick: return "pick";
    case ActionKind::place: return "place";
    case ActionKind::stack: return "stack";
    case ActionKind::unstack: return "unstack";
    case ActionKind::navigate: return "navigate";
    case ActionKind::load: return "load";
    case ActionKind::unload: return "unload";
  }
  return "?";
}

struct GroundAction {
  ActionKind kind{};
  std::vector<std::string> params;
  std::set<Atom> pre_pos, pre_neg, eff_add, eff_del;
  double tray_delta = 0;

  std::string signature() const {
    std::string s{kind_name(kind)};
    s += '(';
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (i) s += ',';
      s += params[i];
    }
    s += ')';
    return s;
  }
};

// The entity whose reachability the action depends on.
inline const std::string& action_target(const GroundAction& a) {
  switch (a.kind) {
    case ActionKind::pick:
    case ActionKind::unstack:
    case ActionKind::load:
    case ActionKind::unload:
      return a.params[0];
    case ActionKind::place:
    case ActionKind::stack:
    case ActionKind::navigate:
      return a.params[1];
  }
  return a.params[0];
}

struct Goal {
  std::set<Atom> required;

  bool satisfied(const SymbolicState& s) const {
    return std::includes(s.atoms.begin(), s.atoms.end(), required.begin(),
                         required.end());
  }
};

enum class DomainKind { manipulator, mobile };

namespace detail {

inline void add_all(std::set<Atom>& dst, const std::string& pred,
                    const std::vector<std::string>& firsts,
                    const std::string& second,
                    const std::string& skip = "") {
  for (const auto& f : firsts)
    if (f != skip) dst.insert(atom(pred, f, second));
}

}  // namespace detail

// Expands the action schemas over the object table. Quantified conditions
// and effects become explicit atom sets; the existential region condition
// of the mobile schemas is resolved statically through region_of.
inline std::vector<GroundAction> ground_domain(const ObjectTable& table,
                                               DomainKind kind) {
  std::vector<GroundAction> out;
  const auto movables = table.movables();
  const auto surfaces = table.surfaces();
  std::vector<std::string> supports;  // movables + surfaces
  supports.insert(supports.end(), movables.begin(), movables.end());
  supports.insert(supports.end(), surfaces.begin(), surfaces.end());
  std::sort(supports.begin(), supports.end());

  auto no_hand = [&](std::set<Atom>& dst, const char* pred) {
    for (const auto& m : movables) dst.insert(atom(pred, m));
  };

  if (kind == DomainKind::manipulator) {
    for (const auto& a : movables)
      for (const auto& s : surfaces) {
        GroundAction g;
        g.kind = ActionKind::pick;
        g.params = {a, s};
        g.pre_pos.insert(atom("on", a, s));
        no_hand(g.pre_neg, "inHand");
        detail::add_all(g.pre_neg, "obstructs", movables, a, a);
        detail::add_all(g.pre_neg, "on", movables, a, a);
        g.pre_neg.insert(atom("unreachable", a));
        g.eff_add.insert(atom("inHand", a));
        g.eff_del.insert(atom("on", a, s));
        for (const auto& o : supports)
          if (o != a) g.eff_del.insert(atom("obstructs", a, o));
        detail::add_all(g.eff_del, "leaveClear", supports, a, a);
        out.push_back(std::move(g));
      }
    for (const auto& a : movables)
      for (const auto& s : surfaces) {
        GroundAction g;
        g.kind = ActionKind::place;
        g.params = {a, s};
        g.pre_pos.insert(atom("inHand", a));
        detail::add_all(g.pre_neg, "obstructs", movables, s, a);
        for (const auto& m : movables) g.pre_neg.insert(atom("leaveClear", s, m));
        g.pre_neg.insert(atom("unreachable", s));
        g.eff_add.insert(atom("on", a, s));
        g.eff_del.insert(atom("inHand", a));
        out.push_back(std::move(g));
      }
    for (const auto& a : movables)
      for (const auto& b : movables) {
        if (a == b) continue;
        GroundAction g;
        g.kind = ActionKind::stack;
        g.params = {a, b};
        g.pre_pos.insert(atom("inHand", a));
        detail::add_all(g.pre_neg, "on", movables, b, a);
        for (const auto& m : movables) g.pre_neg.insert(atom("leaveClear", b, m));
        detail::add_all(g.pre_neg, "obstructs", movables, b, a);
        g.pre_neg.insert(atom("unreachable", b));
        g.eff_add.insert(atom("on", a, b));
        g.eff_del.insert(atom("inHand", a));
        out.push_back(std::move(g));
      }
    for (const auto& a : movables)
      for (const auto& b : movables) {
        if (a == b) continue;
        GroundAction g;
        g.kind = ActionKind::unstack;
        g.params = {a, b};
        g.pre_pos.insert(atom("on", a, b));
        no_hand(g.pre_neg, "inHand");
        detail::add_all(g.pre_neg, "obstructs", movables, a, a);
        for (const auto& m : movables)
          if (m != a && m != b) g.pre_neg.insert(atom("on", m, a));
        g.pre_neg.insert(atom("unreachable", a));
        g.eff_add.insert(atom("inHand", a));
        g.eff_del.insert(atom("on", a, b));
        for (const auto& o : supports)
          if (o != a) g.eff_del.insert(atom("obstructs", a, o));
        detail::add_all(g.eff_del, "leaveClear", supports, a, a);
        out.push_back(std::move(g));
      }
    return out;
  }

  // Mobile family.
  const auto regions = table.regions();
  for (const auto& m : movables)
    for (const auto& s : surfaces) {
      const std::string& w = table.at(s).region_of;
      if (w.empty()) continue;
      GroundAction g;
      g.kind = ActionKind::pick;
      g.params = {m, s};
      g.pre_pos.insert(atom("on", m, s));
      g.pre_pos.insert(atom("near", w));
      no_hand(g.pre_neg, "holding");
      detail::add_all(g.pre_neg, "obstructs", movables, m, m);
      detail::add_all(g.pre_neg, "on", movables, m, m);
      g.pre_neg.insert(atom("unreachable", m));
      g.eff_add.insert(atom("holding", m));
      g.eff_del.insert(atom("on", m, s));
      for (const auto& o : supports)
        if (o != m) g.eff_del.insert(atom("obstructs", m, o));
      detail::add_all(g.eff_del, "leaveClear", supports, m, m);
      for (const auto& w2 : regions) g.eff_del.insert(atom("in", m, w2));
      out.push_back(std::move(g));
    }
  for (const auto& m : movables)
    for (const auto& d : table.drop_surfaces()) {
      const std::string& w = table.at(d).region_of;
      if (w.empty()) continue;
      GroundAction g;
      g.kind = ActionKind::place;
      g.params = {m, d};
      g.pre_pos.insert(atom("holding", m));
      g.pre_pos.insert(atom("near", w));
      detail::add_all(g.pre_neg, "obstructs", movables, d, m);
      for (const auto& c : movables) g.pre_neg.insert(atom("leaveClear", d, c));
      g.pre_neg.insert(atom("unreachable", d));
      g.eff_add.insert(atom("on", m, d));
      g.eff_add.insert(atom("in", m, w));
      g.eff_del.insert(atom("holding", m));
      out.push_back(std::move(g));
    }
  for (const auto& m : movables) {
    GroundAction g;
    g.kind = ActionKind::load;
    g.params = {m};
    g.pre_pos.insert(atom("holding", m));
    g.eff_add.insert(atom("loaded", m));
    g.eff_del.insert(atom("holding", m));
    g.tray_delta = table.at(m).weight;
    out.push_back(std::move(g));
  }
  for (const auto& m : movables) {
    GroundAction g;
    g.kind = ActionKind::unload;
    g.params = {m};
    g.pre_pos.insert(atom("loaded", m));
    no_hand(g.pre_neg, "holding");
    g.eff_add.insert(atom("holding", m));
    g.eff_del.insert(atom("loaded", m));
    g.tray_delta = -table.at(m).weight;
    out.push_back(std::move(g));
  }
  for (const auto& x : regions)
    for (const auto& y : regions) {
      if (x == y) continue;
      GroundAction g;
      g.kind = ActionKind::navigate;
      g.params = {x, y};
      g.pre_pos.insert(atom("near", x));
      no_hand(g.pre_neg, "holding");
      detail::add_all(g.pre_neg, "obstructs", movables, y);
      g.pre_neg.insert(atom("unreachable", y));
      g.eff_add.insert(atom("near", y));
      g.eff_del.insert(atom("near", x));
      out.push_back(std::move(g));
    }
  return out;
}

inline bool applicable(const SymbolicState& s, const GroundAction& a) {
  for (const Atom& p : a.pre_pos)
    if (!s.contains(p)) return false;
  for (const Atom& p : a.pre_neg)
    if (s.contains(p)) return false;
  if (a.tray_delta > 0 && s.objects &&
      s.tray_load + a.tray_delta > s.objects->tray_capacity + 1e-9)
    return false;
  return true;
}

inline SymbolicState gamma(const SymbolicState& s, const GroundAction& a) {
  if (!applicable(s, a))
    throw PreconditionError("action " + a.signature() + " not applicable");
  SymbolicState next = s;
  for (const Atom& p : a.eff_del) next.atoms.erase(p);
  for (const Atom& p : a.eff_add) next.atoms.insert(p);
  next.tray_load += a.tray_delta;
  return next;
}

}  // namespace rhtamp
