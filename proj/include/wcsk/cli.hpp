#pragma once

// Command-line entry point: wcsk verify|solve|audit --config <path> [--threads N] [--out DIR].
// Exit status 0 when every check passes, 1 on a failed check or solve, 2 on a config error.
// summary.json is written to the output directory in every case where it can be created.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "wcsk/config.hpp"
#include "wcsk/identity_suite.hpp"
#include "wcsk/parallel.hpp"
#include "wcsk/random.hpp"
#include "wcsk/report.hpp"
#include "wcsk/sphere_solver.hpp"

namespace wcsk {

enum ExitCode { kExitPass = 0, kExitFail = 1, kExitConfig = 2 };

struct RunResult {
  int code = kExitPass;
  std::vector<std::string> failures;
  std::vector<std::string> artifacts;
};

namespace detail {

inline std::vector<WeightPair> roster_for(const RunConfig& c, int rank, const std::vector<WeightPair>& fallback) {
  if (c.roster.empty()) return fallback;
  std::vector<WeightPair> out;
  for (const auto& e : c.roster)
    if (e.rank == rank) out.push_back(e.pair);
  return out;
}

inline RunResult run_verify(const RunConfig& c, const std::filesystem::path& out, int threads) {
  RunResult r;
  Json reports = Json::array();
  bool pass = true;
  for (ChartFamily fam : c.verify.charts) {
    const int rank = family_rank(fam);
    SamplePlan plan;
    plan.chart = fam;
    plan.potentials = c.verify.potentials;
    plan.points = c.verify.points;
    plan.amplitudes = c.verify.amplitudes;
    plan.seed = *c.seed;
    plan.delta = c.verify.delta;
    plan.max_tries = c.verify.max_tries;
    plan.degree = c.verify.degree;
    plan.K = c.verify.K;
    plan.checks = c.verify.checks;
    plan.tol_identity = c.tol.identity;
    plan.tol_divided = c.tol.divided_difference;
    plan.threads = threads;
    plan.roster = roster_for(c, rank, default_roster(rank));
    if (plan.roster.empty())
      throw ConfigError("no rank " + std::to_string(rank) + " roster entry for chart '" + to_string(fam) + "'");
    const AuditReport rep = run_plan(plan);
    for (const auto& ch : rep.checks)
      if (!ch.pass) r.failures.push_back(to_string(fam) + " " + ch.id + ": " + ch.name);
    for (const auto& e : rep.errors) r.failures.push_back(to_string(fam) + ": " + e);
    pass = pass && rep.pass;
    reports.push_back(to_json(rep));
  }
  const auto path = out / "verify.json";
  write_file(path.string(), dump_json({{"command", "verify"}, {"seed", *c.seed}, {"reports", reports}, {"pass", pass}}));
  r.artifacts.push_back(path.filename().string());
  r.code = pass ? kExitPass : kExitFail;
  return r;
}

// Adjusts w_0 by the affine correction fixed by the endpoint constraints, then solves.
struct PairSolve {
  WeightPair pair;
  sphere::OracleSolution oracle;
  sphere::GlobalSolution sol;
  std::string error;
};

inline PairSolve solve_pair(const WeightPair& p, const sphere::NewtonOptions& opt) {
  PairSolve s;
  s.pair = p;
  try {
    s.oracle = sphere::solve_quadrature(p.v, p.w);
  } catch (const InvalidWeight& e) {
    throw ConfigError("roster entry '" + p.name + "': " + e.what());
  } catch (const sphere::NonpositiveProfile& e) {
    s.error = e.what();
    return s;
  }
  s.sol = sphere::solve_newton(p.v, s.oracle.w, opt);
  if (!s.sol.converged) s.error = s.sol.message;
  return s;
}

inline Json adjusted_json(const PairSolve& s) {
  return {{"a", s.oracle.a}, {"b", s.oracle.b}, {"w", s.oracle.w.str()}};
}

inline RunResult run_solve(const RunConfig& c, const std::filesystem::path& out, int threads) {
  RunResult r;
  const auto roster = roster_for(c, 1, sphere::default_roster());
  std::vector<PairSolve> res(roster.size());
  parallel_for(static_cast<int>(roster.size()), threads, [&](int i) { res[i] = solve_pair(roster[i], c.solver); });
  Json pairs = Json::array();
  bool pass = true;
  for (const auto& s : res) {
    Json j{{"name", s.pair.name}, {"v", s.pair.v.str()}, {"w0", s.pair.w.str()}};
    if (s.error.empty() || s.sol.nodes > 0) {
      j["adjusted"] = adjusted_json(s);
      j["solution"] = sphere::summary_json(s.sol);
      const auto csv = out / ("solution_" + s.pair.name + ".csv");
      const auto trace = out / ("trace_" + s.pair.name + ".csv");
      if (s.sol.nodes > 0) {
        write_file(csv.string(), sphere::solution_csv(s.sol));
        r.artifacts.push_back(csv.filename().string());
      }
      write_file(trace.string(), sphere::trace_csv(s.sol));
      r.artifacts.push_back(trace.filename().string());
    }
    const bool ok = s.error.empty() && s.sol.converged;
    if (!ok) r.failures.push_back(s.pair.name + ": " + (s.error.empty() ? s.sol.message : s.error));
    j["pass"] = ok;
    pass = pass && ok;
    pairs.push_back(j);
  }
  const auto path = out / "solve.json";
  write_file(path.string(), dump_json({{"command", "solve"},
                                       {"solver",
                                        {{"nodes", c.solver.nodes},
                                         {"max_nodes", c.solver.max_nodes},
                                         {"tol", c.solver.tol},
                                         {"max_iter", c.solver.max_iter},
                                         {"damping", c.solver.damping},
                                         {"max_backtracks", c.solver.max_backtracks},
                                         {"continuation", c.solver.continuation}}},
                                       {"pairs", pairs},
                                       {"pass", pass}}));
  r.artifacts.push_back(path.filename().string());
  r.code = pass ? kExitPass : kExitFail;
  return r;
}

inline RunResult run_audit(const RunConfig& c, const std::filesystem::path& out, int threads) {
  RunResult r;
  const auto roster = roster_for(c, 1, sphere::default_roster());
  std::vector<Json> slots(roster.size());
  std::vector<std::vector<std::string>> fails(roster.size());
  const std::uint64_t seed = c.seed.value_or(42);
  parallel_for(static_cast<int>(roster.size()), threads, [&](int i) {
    const PairSolve s = solve_pair(roster[i], c.solver);
    Json j{{"name", s.pair.name}, {"v", s.pair.v.str()}, {"w0", s.pair.w.str()}};
    auto& f = fails[i];
    if (!s.error.empty() && s.sol.nodes == 0) {
      f.push_back(s.pair.name + ": " + s.error);
      j["error"] = s.error;
      j["pass"] = false;
      slots[i] = j;
      return;
    }
    j["adjusted"] = adjusted_json(s);
    j["solution"] = sphere::summary_json(s.sol);
    const WeightBounds wb = certify_bounds({s.pair.name, s.pair.v, s.oracle.w, {}}, Polytope::interval(-1.0, 1.0));
    j["bounds"] = to_json(wb);

    const double dist = sphere::oracle_distance(s.sol, s.oracle);
    const bool oracle_ok = s.sol.converged && dist <= c.tol.oracle;
    const auto rr = sphere::reconstructed_residual(s.sol, sphere::sample_points(c.audit.sample_points));
    const bool scal_ok = rr.scal <= c.tol.scal;
    const sphere::SphereField field = sphere::field_of(s.sol);
    const auto est = c.audit.A ? sphere::compute_estimates(field, wb, c.audit.eps, *c.audit.A)
                               : sphere::compute_estimates(field, wb, c.audit.eps);
    const auto fam = sphere::entropy_family(s.pair.v, wb, c.audit.family_members, c.audit.s_max);
    bool chain_ok = true;
    Json members = Json::array();
    for (const auto& m : fam) {
      chain_ok = chain_ok && m.forward_ok && m.converse_ok;
      members.push_back(sphere::to_json(m));
    }
    const double dh = sphere::duistermaat_heckman_chi2(field);
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    Eigen::VectorXd fc(6), hc(6);
    for (int k = 0; k < 6; ++k) {
      fc(k) = rng.normal();
      hc(k) = rng.normal();
    }
    const auto lc = sphere::laplacian_checks(s.sol, fc, hc);

    j["oracle_equivalence"] = {{"sup_theta_distance", dist}, {"tolerance", c.tol.oracle}, {"pass", oracle_ok}};
    j["reconstruction"] = {{"sup_scal_minus_w", rr.scal},
                           {"sup_scal_minus_w_series", rr.scal_series},
                           {"sup_R1", rr.R1},
                           {"moment", rr.moment},
                           {"tolerance", c.tol.scal},
                           {"pass", scal_ok}};
    j["estimates"] = sphere::to_json(est);
    j["entropy_family"] = {{"members", members}, {"pass", chain_ok}};
    j["duistermaat_heckman_chi2"] = {{"value", dh}, {"tolerance", c.tol.duistermaat_heckman},
                                     {"pass", dh <= c.tol.duistermaat_heckman}};
    j["laplacian"] = {{"self_adjoint", lc.self_adjoint},
                      {"leibniz", lc.leibniz},
                      {"pass", lc.self_adjoint <= c.tol.self_adjoint && lc.leibniz <= c.tol.leibniz}};
    // hard invariants decide the exit status
    const bool hard = est.jensen && est.b_ok && chain_ok && oracle_ok;
    if (!est.jensen) f.push_back(s.pair.name + ": Jensen inequality Ent_v >= 0 fails");
    if (!est.b_ok) f.push_back(s.pair.name + ": b bound fails");
    if (!chain_ok) f.push_back(s.pair.name + ": entropy comparison fails");
    if (!oracle_ok) f.push_back(s.pair.name + ": oracle equivalence fails (" + s.sol.message + ")");
    j["hard_invariants_pass"] = hard;
    j["pass"] = hard;
    slots[i] = j;
  });
  Json pairs = Json::array();
  bool pass = true;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    pass = pass && slots[i]["pass"].get<bool>();
    pairs.push_back(slots[i]);
    r.failures.insert(r.failures.end(), fails[i].begin(), fails[i].end());
  }
  const auto path = out / "audit.json";
  write_file(path.string(),
             dump_json({{"command", "audit"},
                        {"eps", c.audit.eps},
                        {"A", c.audit.A ? *c.audit.A : 2 * sphere::kA0 + 1},
                        {"pairs", pairs},
                        {"pass", pass}}));
  r.artifacts.push_back(path.filename().string());
  r.code = pass ? kExitPass : kExitFail;
  return r;
}

inline std::string status_name(int code) {
  return code == kExitPass ? "pass" : code == kExitFail ? "fail" : "config_error";
}

inline void write_summary(const std::filesystem::path& out, Command cmd, const RunResult& r) {
  write_file((out / "summary.json").string(), dump_json({{"command", to_string(cmd)},
                                                        {"status", status_name(r.code)},
                                                        {"exit_code", r.code},
                                                        {"failures", r.failures},
                                                        {"artifacts", r.artifacts}}));
}

}  // namespace detail

// Runs a parsed configuration. ConfigError (including invalid weights) maps to exit 2.
inline RunResult run(const RunConfig& c, const std::filesystem::path& out, int threads) {
  std::filesystem::create_directories(out);
  RunResult r;
  try {
    switch (c.command) {
      case Command::Verify: r = detail::run_verify(c, out, threads); break;
      case Command::Solve: r = detail::run_solve(c, out, threads); break;
      case Command::Audit: r = detail::run_audit(c, out, threads); break;
    }
  } catch (const ConfigError& e) {
    r = {kExitConfig, {e.what()}, {}};
  } catch (const std::exception& e) {
    r = {kExitFail, {std::string("error: ") + e.what()}, {}};
  }
  detail::write_summary(out, c.command, r);
  return r;
}

inline int cli_main(int argc, char** argv) {
  CLI::App app{"Weighted cscK verification, sphere solver and estimate audits"};
  app.require_subcommand(1);
  app.footer(config_help());
  std::string config, out_dir;
  int threads = 0;
  std::vector<CLI::App*> subs;
  for (const char* name : {"verify", "solve", "audit"}) {
    CLI::App* s = app.add_subcommand(name, std::string(name) == "verify" ? "run the identity battery and audits"
                                           : std::string(name) == "solve" ? "solve the sphere system for each pair"
                                                                          : "solve and audit the a priori estimates");
    s->add_option("--config", config, "TOML config file")->required();
    s->add_option("--threads", threads, "worker cap (default: config value, else 1)")->check(CLI::PositiveNumber);
    s->add_option("--out", out_dir, "output directory (default: config value, else ./out)");
    subs.push_back(s);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }
  Command cmd = Command::Verify;
  for (CLI::App* s : subs)
    if (s->parsed()) cmd = *parse_command(s->get_name());

  RunConfig c;
  try {
    c = load_config(config, cmd);
  } catch (const ConfigError& e) {
    const std::filesystem::path out = out_dir.empty() ? std::filesystem::path("out") : std::filesystem::path(out_dir);
    std::cerr << "config error: " << e.what() << "\n";
    try {
      std::filesystem::create_directories(out);
      detail::write_summary(out, cmd, {kExitConfig, {e.what()}, {}});
    } catch (const std::exception& w) {
      std::cerr << "cannot write summary: " << w.what() << "\n";
    }
    return kExitConfig;
  }
  const std::filesystem::path out = out_dir.empty() ? std::filesystem::path(c.out) : std::filesystem::path(out_dir);
  const RunResult r = run(c, out, threads > 0 ? threads : c.threads);
  for (const auto& f : r.failures) std::cerr << f << "\n";
  std::cout << to_string(cmd) << ": " << detail::status_name(r.code) << " (" << (out / "summary.json").string()
            << ")\n";
  return r.code;
}

}  // namespace wcsk
