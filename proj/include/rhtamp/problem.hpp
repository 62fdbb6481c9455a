#pragma once

#include <fstream>
#include <istream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "rhtamp/symbolic.hpp"

namespace rhtamp {

// Text format, one directive per line, '#' comments:
//   object <name> <flags>     flags: comma list of movable,surface,region,drop,fixed
//   init <atom>
//   goal <atom>
//   tray-capacity <number>
//   weight <object> <number>
struct ProblemDef {
  ObjectTable table;
  std::vector<Atom> init;
  std::vector<Atom> goal;
};

namespace detail {

inline std::string trim_copy(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim_copy(item));
  return out;
}

}  // namespace detail

inline ProblemDef parse_problem(std::istream& in,
                                const std::string& filename = "problem") {
  ProblemDef def;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw ParseError(filename + ":" + std::to_string(lineno) + ": " + msg);
  };
  auto check_declared = [&](const Atom& a) {
    for (const auto& arg : a.args)
      if (!def.table.has(arg)) fail("undeclared object '" + arg + "'");
  };
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim_copy(line);
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string directive;
    ls >> directive;
    std::string rest;
    std::getline(ls, rest);
    rest = detail::trim_copy(rest);
    if (directive == "object") {
      std::istringstream rs(rest);
      std::string name, flags;
      rs >> name >> flags;
      if (name.empty() || flags.empty()) fail("object needs a name and flags");
      if (def.table.has(name)) fail("duplicate object '" + name + "'");
      ObjectEntry e;
      for (const auto& f : detail::split(flags, ',')) {
        if (f == "movable") e.movable = true;
        else if (f == "surface") e.surface = true;
        else if (f == "region") e.region = true;
        else if (f == "drop") e.drop = true;
        else if (f == "fixed") { /* declared, no capabilities */ }
        else fail("unknown flag '" + f + "'");
      }
      if (e.drop && !e.surface) fail("drop requires surface");
      def.table.entries[name] = e;
    } else if (directive == "init" || directive == "goal") {
      Atom a;
      try {
        a = parse_atom(rest);
      } catch (const ParseError& e) {
        fail(e.what());
      }
      check_declared(a);
      if (directive == "goal" && a.pred == "unreachable")
        fail("unreachable cannot be a goal");
      (directive == "init" ? def.init : def.goal).push_back(a);
    } else if (directive == "tray-capacity") {
      try {
        def.table.tray_capacity = std::stod(rest);
      } catch (...) {
        fail("bad tray capacity '" + rest + "'");
      }
    } else if (directive == "weight") {
      std::istringstream rs(rest);
      std::string name;
      double w;
      if (!(rs >> name >> w)) fail("weight needs an object and a number");
      if (!def.table.has(name)) fail("undeclared object '" + name + "'");
      def.table.entries[name].weight = w;
    } else {
      fail("unknown directive '" + directive + "'");
    }
  }
  SymbolicState probe;
  probe.objects = std::make_shared<ObjectTable>(def.table);
  for (const Atom& a : def.init) {
    probe.atoms.insert(a);
    if (a.pred == "loaded") probe.tray_load += def.table.at(a.args[0]).weight;
  }
  if (auto why = state_violation(probe))
    throw ParseError(filename + ": inconsistent init: " + *why);
  return def;
}

inline ProblemDef parse_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return parse_problem(in, path);
}

inline std::string problem_to_string(const ProblemDef& def) {
  std::ostringstream out;
  for (const auto& [name, e] : def.table.entries) {
    std::vector<std::string> flags;
    if (e.movable) flags.push_back("movable");
    if (e.surface) flags.push_back("surface");
    if (e.region) flags.push_back("region");
    if (e.drop) flags.push_back("drop");
    if (flags.empty()) flags.push_back("fixed");
    out << "object " << name << ' ';
    for (std::size_t i = 0; i < flags.size(); ++i) {
      if (i) out << ',';
      out << flags[i];
    }
    out << '\n';
  }
  if (def.table.tray_capacity > 0)
    out << "tray-capacity " << def.table.tray_capacity << '\n';
  for (const auto& [name, e] : def.table.entries)
    if (e.movable && e.weight != 1.0)
      out << "weight " << name << ' ' << e.weight << '\n';
  for (const Atom& a : def.init) out << "init " << a.str() << '\n';
  for (const Atom& a : def.goal) out << "goal " << a.str() << '\n';
  return out.str();
}

inline DomainKind infer_domain(const ObjectTable& table) {
  return table.regions().empty() ? DomainKind::manipulator : DomainKind::mobile;
}

inline SymbolicState initial_state(const ProblemDef& def) {
  SymbolicState s;
  auto table = std::make_shared<ObjectTable>(def.table);
  s.objects = table;
  for (const Atom& a : def.init) {
    s.atoms.insert(a);
    if (a.pred == "loaded") s.tray_load += table->at(a.args[0]).weight;
  }
  if (auto why = state_violation(s))
    throw ParseError("inconsistent init: " + *why);
  return s;
}

}  // namespace rhtamp
