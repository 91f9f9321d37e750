#pragma once

// Run configuration: TOML text with one table per module. Unknown keys are errors.

#include <toml.hpp>

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wcsk/identity_suite.hpp"
#include "wcsk/sphere_solver.hpp"

namespace wcsk {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Command { Verify, Solve, Audit };

inline std::string to_string(Command c) {
  switch (c) {
    case Command::Verify: return "verify";
    case Command::Solve: return "solve";
    case Command::Audit: return "audit";
  }
  return "?";
}

inline std::optional<Command> parse_command(const std::string& s) {
  for (auto c : {Command::Verify, Command::Solve, Command::Audit})
    if (to_string(c) == s) return c;
  return std::nullopt;
}

struct RosterEntry {
  std::string name;
  std::string v, w;  // prefix notation
  int rank = 1;
  WeightPair pair;
};

struct VerifyConfig {
  std::vector<ChartFamily> charts{ChartFamily::Sphere, ChartFamily::Product, ChartFamily::Partial};
  int potentials = 10;
  int points = 20;
  std::vector<double> amplitudes{0.002, 0.005, 0.01};
  double delta = 0.1;
  int max_tries = 1000;
  int degree = 3;
  double K = 1.0;
  std::vector<std::string> checks;
};

struct ToleranceConfig {
  double identity = 1e-7;
  double divided_difference = 1e-6;
  double oracle = 1e-6;
  double scal = 1e-6;
  double duistermaat_heckman = 1e-6;
  double self_adjoint = 1e-6;
  double leibniz = 1e-8;
};

struct AuditConfig {
  double eps = 0.5;
  std::optional<double> A;  // default 2 A0 + 1
  int family_members = 20;
  double s_max = 1.9;
  int sample_points = 64;
};

struct RunConfig {
  Command command = Command::Verify;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  int threads = 1;
  std::vector<RosterEntry> roster;  // empty: built-in roster of the command
  VerifyConfig verify;
  sphere::NewtonOptions solver;
  AuditConfig audit;
  ToleranceConfig tol;
};

namespace detail {

inline void reject_unknown(const toml::table& t, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [k, v] : t)
    if (!allowed.count(std::string(k.str())))
      throw ConfigError("unknown field '" + std::string(k.str()) + "' in " + where);
}

inline std::string where_of(const toml::node& n) {
  std::ostringstream os;
  os << n.source().begin;
  return os.str();
}

template <class T>
void read(const toml::table& t, const char* key, T& out, const std::string& where) {
  const toml::node* n = t.get(key);
  if (!n) return;
  if constexpr (std::is_same_v<T, double>) {
    if (auto v = n->value<double>()) {
      out = *v;
      return;
    }
  } else if constexpr (std::is_same_v<T, bool>) {
    if (auto v = n->value_exact<bool>()) {
      out = *v;
      return;
    }
  } else if constexpr (std::is_integral_v<T>) {
    if (auto v = n->value_exact<int64_t>()) {
      out = static_cast<T>(*v);
      return;
    }
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (auto v = n->value_exact<std::string>()) {
      out = *v;
      return;
    }
  }
  throw ConfigError("field '" + std::string(key) + "' in " + where + " has the wrong type (" + where_of(*n) + ")");
}

inline std::vector<double> read_doubles(const toml::node& n, const std::string& what) {
  const toml::array* a = n.as_array();
  if (!a) throw ConfigError(what + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : *a) {
    auto v = e.value<double>();
    if (!v) throw ConfigError(what + " must be an array of numbers");
    out.push_back(*v);
  }
  return out;
}

inline std::vector<std::string> read_strings(const toml::node& n, const std::string& what) {
  const toml::array* a = n.as_array();
  if (!a) throw ConfigError(what + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& e : *a) {
    auto v = e.value_exact<std::string>();
    if (!v) throw ConfigError(what + " must be an array of strings");
    out.push_back(*v);
  }
  return out;
}

inline void positive(double v, const std::string& name) {
  if (!(v > 0.0)) throw ConfigError(name + " must be > 0");
}

}  // namespace detail

// Parses weights and certifies v > 0 on [-1, 1]^rank; InvalidWeight surfaces as a config error.
inline WeightPair make_pair(const RosterEntry& e) {
  WeightPair p;
  p.name = e.name;
  try {
    p.v = parse_expr(e.v);
    p.w = parse_expr(e.w);
  } catch (const ParseError& err) {
    throw ConfigError("roster entry '" + e.name + "': " + err.what());
  }
  const Polytope box = Polytope::box(std::vector<double>(e.rank, -1.0), std::vector<double>(e.rank, 1.0));
  try {
    p.bounds = certify_bounds(p, box);
  } catch (const InvalidWeight& err) {
    throw ConfigError("roster entry '" + e.name + "': " + err.what());
  } catch (const DomainError& err) {
    throw ConfigError("roster entry '" + e.name + "': " + err.what());
  }
  return p;
}

// `expected` is the subcommand given on the command line; a config naming another command is an error.
inline RunConfig parse_config(const std::string& text, const std::string& source = "config",
                              std::optional<Command> expected = std::nullopt) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << source << ": " << e.description() << " (" << e.source().begin << ")";
    throw ConfigError(os.str());
  }
  using detail::read;
  RunConfig c;
  detail::reject_unknown(root, {"command", "seed", "out", "threads", "roster", "verify", "solver", "audit", "tolerances"},
                         "top level");
  std::string cmd = expected ? to_string(*expected) : "verify";
  read(root, "command", cmd, "top level");
  if (auto k = parse_command(cmd)) c.command = *k;
  else throw ConfigError("command must be verify, solve or audit, got '" + cmd + "'");
  if (expected && c.command != *expected)
    throw ConfigError("config is for '" + cmd + "' but the command line asks for '" + to_string(*expected) + "'");
  if (const toml::node* s = root.get("seed")) {
    auto v = s->value_exact<int64_t>();
    if (!v || *v < 0) throw ConfigError("seed must be a non-negative integer");
    c.seed = static_cast<std::uint64_t>(*v);
  }
  read(root, "out", c.out, "top level");
  read(root, "threads", c.threads, "top level");
  if (c.threads < 1) throw ConfigError("threads must be >= 1");

  if (const toml::node* r = root.get("roster")) {
    const toml::array* arr = r->as_array();
    if (!arr) throw ConfigError("roster must be an array of tables ([[roster]])");
    for (const auto& e : *arr) {
      const toml::table* t = e.as_table();
      if (!t) throw ConfigError("roster must be an array of tables ([[roster]])");
      detail::reject_unknown(*t, {"name", "v", "w", "rank"}, "[[roster]]");
      RosterEntry re;
      read(*t, "name", re.name, "[[roster]]");
      read(*t, "v", re.v, "[[roster]]");
      read(*t, "w", re.w, "[[roster]]");
      read(*t, "rank", re.rank, "[[roster]]");
      if (re.name.empty() || re.v.empty() || re.w.empty())
        throw ConfigError("[[roster]] entries need name, v and w");
      if (re.rank != 1 && re.rank != 2) throw ConfigError("roster entry '" + re.name + "': rank must be 1 or 2");
      re.pair = make_pair(re);
      c.roster.push_back(std::move(re));
    }
  }

  if (const toml::node* n = root.get("verify")) {
    const toml::table* t = n->as_table();
    if (!t) throw ConfigError("[verify] must be a table");
    detail::reject_unknown(*t, {"charts", "potentials", "points", "amplitudes", "delta", "max_tries", "degree", "K",
                                "checks"},
                           "[verify]");
    auto& v = c.verify;
    if (const toml::node* ch = t->get("charts")) {
      v.charts.clear();
      for (const auto& s : detail::read_strings(*ch, "verify.charts")) {
        auto f = parse_family(s);
        if (!f) throw ConfigError("unknown chart family '" + s + "'");
        v.charts.push_back(*f);
      }
      if (v.charts.empty()) throw ConfigError("verify.charts is empty");
    }
    read(*t, "potentials", v.potentials, "[verify]");
    read(*t, "points", v.points, "[verify]");
    if (const toml::node* a = t->get("amplitudes")) v.amplitudes = detail::read_doubles(*a, "verify.amplitudes");
    read(*t, "delta", v.delta, "[verify]");
    read(*t, "max_tries", v.max_tries, "[verify]");
    read(*t, "degree", v.degree, "[verify]");
    read(*t, "K", v.K, "[verify]");
    if (const toml::node* k = t->get("checks")) v.checks = detail::read_strings(*k, "verify.checks");
    if (v.potentials < 1 || v.points < 1) throw ConfigError("verify.potentials and verify.points must be >= 1");
    if (v.amplitudes.empty()) throw ConfigError("verify.amplitudes is empty");
    for (double a : v.amplitudes)
      if (!(a >= 0.0)) throw ConfigError("verify.amplitudes must be >= 0");
    detail::positive(v.delta, "verify.delta");
    detail::positive(v.K, "verify.K");
    if (v.max_tries < 1 || v.degree < 1) throw ConfigError("verify.max_tries and verify.degree must be >= 1");
    for (const auto& id : v.checks) {
      bool known = false;
      for (const auto& info : check_table()) known = known || id == info.id;
      if (!known) throw ConfigError("unknown check '" + id + "'");
    }
  }

  if (const toml::node* n = root.get("solver")) {
    const toml::table* t = n->as_table();
    if (!t) throw ConfigError("[solver] must be a table");
    detail::reject_unknown(*t, {"nodes", "max_nodes", "tol", "max_iter", "damping", "max_backtracks", "continuation",
                                "path_tol"},
                           "[solver]");
    auto& s = c.solver;
    read(*t, "nodes", s.nodes, "[solver]");
    read(*t, "max_nodes", s.max_nodes, "[solver]");
    read(*t, "tol", s.tol, "[solver]");
    read(*t, "max_iter", s.max_iter, "[solver]");
    read(*t, "damping", s.damping, "[solver]");
    read(*t, "max_backtracks", s.max_backtracks, "[solver]");
    read(*t, "continuation", s.continuation, "[solver]");
    read(*t, "path_tol", s.path_tol, "[solver]");
    if (s.nodes < 9 || s.nodes % 2 == 0) throw ConfigError("solver.nodes must be odd and >= 9");
    if (s.max_nodes < s.nodes) throw ConfigError("solver.max_nodes must be >= solver.nodes");
    detail::positive(s.tol, "solver.tol");
    detail::positive(s.path_tol, "solver.path_tol");
    if (!(s.damping > 0.0 && s.damping < 1.0)) throw ConfigError("solver.damping must lie in (0, 1)");
    if (s.max_iter < 1 || s.max_backtracks < 0) throw ConfigError("solver.max_iter must be >= 1");
  }

  if (const toml::node* n = root.get("audit")) {
    const toml::table* t = n->as_table();
    if (!t) throw ConfigError("[audit] must be a table");
    detail::reject_unknown(*t, {"eps", "A", "family_members", "s_max", "sample_points"}, "[audit]");
    auto& a = c.audit;
    read(*t, "eps", a.eps, "[audit]");
    if (t->get("A")) {
      double A = 0;
      read(*t, "A", A, "[audit]");
      a.A = A;
    }
    read(*t, "family_members", a.family_members, "[audit]");
    read(*t, "s_max", a.s_max, "[audit]");
    read(*t, "sample_points", a.sample_points, "[audit]");
    detail::positive(a.eps, "audit.eps");
    if (a.A) detail::positive(*a.A, "audit.A");
    detail::positive(a.s_max, "audit.s_max");
    if (a.family_members < 2 || a.sample_points < 1) throw ConfigError("audit.family_members must be >= 2");
  }

  if (const toml::node* n = root.get("tolerances")) {
    const toml::table* t = n->as_table();
    if (!t) throw ConfigError("[tolerances] must be a table");
    detail::reject_unknown(*t, {"identity", "divided_difference", "oracle", "scal", "duistermaat_heckman",
                                "self_adjoint", "leibniz"},
                           "[tolerances]");
    auto& tl = c.tol;
    read(*t, "identity", tl.identity, "[tolerances]");
    read(*t, "divided_difference", tl.divided_difference, "[tolerances]");
    read(*t, "oracle", tl.oracle, "[tolerances]");
    read(*t, "scal", tl.scal, "[tolerances]");
    read(*t, "duistermaat_heckman", tl.duistermaat_heckman, "[tolerances]");
    read(*t, "self_adjoint", tl.self_adjoint, "[tolerances]");
    read(*t, "leibniz", tl.leibniz, "[tolerances]");
    for (double v : {tl.identity, tl.divided_difference, tl.oracle, tl.scal, tl.duistermaat_heckman, tl.self_adjoint,
                     tl.leibniz})
      detail::positive(v, "every tolerance");
  }

  if (c.command == Command::Verify && !c.seed) throw ConfigError("seed is mandatory for verify");
  if (c.command != Command::Verify)
    for (const auto& e : c.roster)
      if (e.rank != 1) throw ConfigError("roster entry '" + e.name + "': solve and audit need rank 1 weights");
  return c;
}

inline RunConfig load_config(const std::string& path, std::optional<Command> expected = std::nullopt) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read config file " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return parse_config(os.str(), path, expected);
}

// Config reference for --help, printed from the default-constructed structs.
inline std::string config_help() {
  const RunConfig c;
  std::ostringstream os;
  auto list = [](const auto& xs) {
    std::ostringstream l;
    l << "[";
    for (std::size_t i = 0; i < xs.size(); ++i) l << (i ? ", " : "") << xs[i];
    l << "]";
    return l.str();
  };
  std::vector<std::string> charts;
  for (ChartFamily f : c.verify.charts) charts.push_back(to_string(f));
  os << "Config file (TOML). Unknown keys are errors. Defaults in parentheses.\n"
     << "  command              verify | solve | audit, must match the subcommand\n"
     << "  seed                 non-negative integer, required for verify\n"
     << "  out                  output directory (" << c.out << "), --out overrides\n"
     << "  threads              worker cap (" << c.threads << "), --threads overrides\n"
     << "  [[roster]]           name, v, w in prefix notation over x0 x1, rank 1 or 2 (1)\n"
     << "                       e.g. v = \"(exp (mul 0.5 x0))\"; omitted: built-in five-pair roster\n"
     << "  [verify]   charts (" << list(charts) << "), potentials (" << c.verify.potentials << "), points ("
     << c.verify.points << "),\n"
     << "             amplitudes (" << list(c.verify.amplitudes) << "), delta (" << c.verify.delta << "), max_tries ("
     << c.verify.max_tries << "), degree (" << c.verify.degree << "), K (" << c.verify.K << "),\n"
     << "             checks (all of I1-I8, K1-K4, C1, A1-A6)\n"
     << "  [solver]   nodes (" << c.solver.nodes << "), max_nodes (" << c.solver.max_nodes << "), tol (" << c.solver.tol
     << "), max_iter (" << c.solver.max_iter << "), damping (" << c.solver.damping << "),\n"
     << "             max_backtracks (" << c.solver.max_backtracks << "), continuation ("
     << (c.solver.continuation ? "true" : "false") << "), path_tol (" << c.solver.path_tol << ")\n"
     << "  [audit]    eps (" << c.audit.eps << "), A (2 A0 + 1), family_members (" << c.audit.family_members
     << "), s_max (" << c.audit.s_max << "), sample_points (" << c.audit.sample_points << ")\n"
     << "  [tolerances] identity (" << c.tol.identity << "), divided_difference (" << c.tol.divided_difference
     << "), oracle (" << c.tol.oracle << "), scal (" << c.tol.scal << "),\n"
     << "             duistermaat_heckman (" << c.tol.duistermaat_heckman << "), self_adjoint (" << c.tol.self_adjoint
     << "), leibniz (" << c.tol.leibniz << ")\n"
     << "Exit codes: 0 pass, 1 a check failed, 2 config or weight error.";
  return os.str();
}

}  // namespace wcsk
