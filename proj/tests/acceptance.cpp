// Acceptance run: drives the four shipped configs through wcsk::run and prints
// one PASS/FAIL line per criterion. Exit status is nonzero if any line fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "wcsk/cli.hpp"

using namespace wcsk;
namespace fs = std::filesystem;

namespace {

struct Line {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [" << what << "]";
    }
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

Json read_json(const fs::path& p) { return Json::parse(slurp(p)); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Run {
  RunResult result;
  double seconds = 0;
};

Run run_config(const std::string& name, const fs::path& out, int threads) {
  const RunConfig c = load_config((fs::path(WCSK_CONFIG_DIR) / (name + ".toml")).string());
  const auto t0 = std::chrono::steady_clock::now();
  Run r{run(c, out, threads), 0};
  r.seconds = seconds_since(t0);
  return r;
}

const Json* find_check(const Json& report, const std::string& id) {
  for (const auto& c : report["checks"])
    if (c["id"] == id) return &c;
  return nullptr;
}

const char* kConfigs[] = {"verify", "verify_audits", "solve", "audit"};

}  // namespace

int main() {
  const fs::path root = fs::current_path() / "acceptance_out";
  fs::remove_all(root);

  std::printf("running shipped configs into %s\n", root.string().c_str());
  std::fflush(stdout);
  Run runs[4];
  for (int k = 0; k < 4; ++k) runs[k] = run_config(kConfigs[k], root / "a" / kConfigs[k], 1);
  const Json verify = read_json(root / "a" / "verify" / "verify.json");
  const Json audits = read_json(root / "a" / "verify_audits" / "verify.json");
  const Json solve = read_json(root / "a" / "solve" / "solve.json");
  const Json audit = read_json(root / "a" / "audit" / "audit.json");

  std::vector<std::pair<std::string, std::function<void(Line&)>>> criteria;

  criteria.emplace_back("identity battery", [&](Line& l) {
    l.require(runs[0].result.code == kExitPass, "verify exit code");
    l.require(verify["reports"].size() == 3, "three chart families");
    double worst = 0, worst_i5 = 0;
    for (const auto& rep : verify["reports"]) {
      const std::string chart = rep["chart"];
      l.require(rep["points_evaluated"].get<int>() >= 200, chart + " points");
      l.require(rep["plan"]["roster"].size() >= 5, chart + " roster");
      for (int i = 1; i <= 8; ++i) {
        const std::string id = "I" + std::to_string(i);
        const Json* c = find_check(rep, id);
        if (!c) {
          l.require(false, chart + " " + id + " missing");
          continue;
        }
        const double r = (*c)["max_residual"];
        l.require((*c)["pass"].get<bool>() && r <= (i == 5 ? 1e-6 : 1e-7), chart + " " + id);
        (i == 5 ? worst_i5 : worst) = std::max(i == 5 ? worst_i5 : worst, r);
      }
    }
    l.require(runs[0].seconds <= 60.0, "runtime");
    l.detail << " worst I1-I8 (not I5) " << worst << ", I5 " << worst_i5 << ", " << runs[0].seconds << " s";
  });

  criteria.emplace_back("classical collapse", [&](Line& l) {
    double worst = 0;
    for (const auto& rep : verify["reports"]) {
      const Json* c = find_check(rep, "C1");
      l.require(c && (*c)["samples"].get<int>() > 0, "C1 sampled");
      if (!c) continue;
      worst = std::max(worst, (*c)["max_residual"].get<double>());
      l.require((*c)["pass"].get<bool>(), std::string(rep["chart"]) + " C1");
    }
    l.require(worst <= 1e-10, "tolerance");
    l.detail << " worst " << worst;
  });

  criteria.emplace_back("round sphere", [&](Line& l) {
    l.require(runs[2].result.code == kExitPass, "solve exit code");
    const Json& one = solve["pairs"][0];
    l.require(one["name"] == "one", "first pair is v = 1");
    const double a = one["adjusted"]["a"];
    l.require(std::abs(a - 8 * kPi) <= 1e-6, "adjusted w");
    std::istringstream csv(slurp(root / "a" / "solve" / "solution_one.csv"));
    std::string line;
    std::getline(csv, line);
    double dtheta = 0, dscal = 0;
    while (std::getline(csv, line)) {
      std::istringstream ls(line);
      std::vector<double> v;
      for (std::string cell; std::getline(ls, cell, ',');) v.push_back(std::stod(cell));
      dtheta = std::max(dtheta, std::abs(v[1] - (1 - v[0] * v[0])));
      dscal = std::max(dscal, std::abs(v[5] - 8 * kPi));
    }
    const double recon = audit["pairs"][0]["reconstruction"]["sup_scal_minus_w"];
    l.require(dtheta <= 1e-8, "profile");
    l.require(dscal <= 1e-6 && recon <= 1e-6, "scalar curvature");
    l.detail << " |w - 8pi| " << std::abs(a - 8 * kPi) << ", profile " << dtheta << ", Scal " << std::max(dscal, recon);
  });

  criteria.emplace_back("oracle equivalence", [&](Line& l) {
    double worst = 0;
    for (const auto& p : audit["pairs"]) {
      const double d = p["oracle_equivalence"]["sup_theta_distance"];
      worst = std::max(worst, d);
      l.require(d <= 1e-6, std::string(p["name"]) + " distance");
    }
    l.require(audit["pairs"].size() == 5, "five pairs");
    // default options start at N = 129 and refine until the Newton residual is below tolerance;
    // with refinement disabled the discretization floor can sit above that tolerance, so the
    // fixed-N run is held to the oracle distance and the time limit only
    double slowest = 0, fixed_worst = 0;
    sphere::NewtonOptions fixed;
    fixed.max_nodes = fixed.nodes;
    for (const WeightPair& p : sphere::default_roster()) {
      const auto o = sphere::solve_quadrature(p.v, p.w);
      for (const sphere::NewtonOptions& opt : {sphere::NewtonOptions{}, fixed}) {
        const bool refine = opt.max_nodes > opt.nodes;
        const auto t0 = std::chrono::steady_clock::now();
        const auto s = sphere::solve_newton(p.v, o.w, opt);
        const double secs = seconds_since(t0);
        slowest = std::max(slowest, secs);
        l.require(secs <= 10.0, p.name + " time");
        const double d = sphere::oracle_distance(s, o);
        l.require(d <= 1e-6, p.name + (refine ? " distance" : " distance at N = 129"));
        if (refine) l.require(s.converged, p.name + " converged");
        else fixed_worst = std::max(fixed_worst, d);
      }
    }
    l.detail << " worst " << worst << ", at fixed N = 129 " << fixed_worst << ", slowest solve " << slowest << " s";
  });

  criteria.emplace_back("end-to-end residual", [&](Line& l) {
    double worst = 0;
    for (const auto& p : audit["pairs"]) {
      const double r = p["reconstruction"]["sup_scal_minus_w"];
      worst = std::max(worst, r);
      l.require(r <= 1e-6, std::string(p["name"]));
    }
    l.detail << " worst " << worst;
  });

  criteria.emplace_back("trace inequalities", [&](Line& l) {
    l.require(runs[1].result.code == kExitPass, "verify_audits exit code");
    double worst = 0, product = 0;
    for (const auto& rep : audits["reports"]) {
      const Json* c = find_check(rep, "A1");
      if (!c) {
        l.require(false, "A1 missing");
        continue;
      }
      worst = std::max(worst, (*c)["max_residual"].get<double>());
      l.require((*c)["pass"].get<bool>(), std::string(rep["chart"]) + " A1");
      if (rep["chart"] == "sphere")
        for (const auto& k : (*c)["constants"])
          if (k["pair"] == "product identity") product = k["fitted"];
    }
    l.require(worst <= 1e-9, "slack");
    l.require(product <= 1e-10, "product identity");
    l.detail << " slack " << worst << ", product identity " << product;
  });

  criteria.emplace_back("entropy suite", [&](Line& l) {
    double min_ent_v = 1e300;
    for (const auto& p : audit["pairs"]) {
      const std::string name = p["name"];
      const Json& e = p["estimates"];
      min_ent_v = std::min(min_ent_v, e["Ent_v"].get<double>());
      l.require(e["Ent_v"].get<double>() >= -1e-12, name + " Ent_v");
      l.require(e["b"].get<double>() <= e["b_bound"].get<double>(), name + " b bound");
      l.require(e["jensen"].get<bool>(), name + " jensen");
      const Json& fam = p["entropy_family"]["members"];
      l.require(fam.size() == 20, name + " family size");
      for (const auto& m : fam) {
        l.require(m["forward_ok"].get<bool>() && m["converse_ok"].get<bool>(), name + " chain");
        l.require(std::isfinite(m["Ent"].get<double>()) && std::isfinite(m["Ent_v"].get<double>()), name + " finite");
      }
    }
    l.detail << " min Ent_v " << min_ent_v;
  });

  criteria.emplace_back("log-concavity audits", [&](Line& l) {
    double concave_worst = 0, control = 1e300;
    for (const auto& rep : audits["reports"]) {
      const std::string chart = rep["chart"];
      const Json* a6 = find_check(rep, "A6");
      l.require(a6 != nullptr, chart + " A6");
      if (a6)
        for (const auto& k : (*a6)["constants"]) {
          const double f = k["fitted"];
          if (k["pair"] == "pow")
            control = std::min(control, f);
          else
            concave_worst = std::max(concave_worst, f);
        }
      for (const char* id : {"A2", "A3", "A4", "A5"}) {
        const Json* c = find_check(rep, id);
        if (!c) {
          l.require(false, chart + " " + id + " missing");
          continue;
        }
        for (const auto& k : (*c)["constants"]) {
          const bool finite = k["fitted"].is_number() && std::isfinite(k["fitted"].get<double>());
          l.require(finite && k["stable"].get<bool>(), chart + " " + id + " " + std::string(k["pair"]));
        }
      }
    }
    l.require(concave_worst <= 1e-9, "log-concave sign term");
    l.require(control > 1e-3, "control violation");
    l.detail << " log-concave " << concave_worst << ", control " << control;
  });

  criteria.emplace_back("self-adjointness and Leibniz", [&](Line& l) {
    double sa = 0, lb = 0;
    for (const auto& p : audit["pairs"]) {
      sa = std::max(sa, p["laplacian"]["self_adjoint"].get<double>());
      lb = std::max(lb, p["laplacian"]["leibniz"].get<double>());
    }
    l.require(sa <= 1e-6 && lb <= 1e-6, "tolerance");
    l.detail << " self-adjoint " << sa << ", Leibniz " << lb;
  });

  criteria.emplace_back("determinism", [&](Line& l) {
    int files = 0;
    for (const char* name : kConfigs) {
      run_config(name, root / "b" / name, 2);
      for (const auto& e : fs::directory_iterator(root / "a" / name)) {
        ++files;
        const fs::path twin = root / "b" / name / e.path().filename();
        l.require(fs::exists(twin) && slurp(e.path()) == slurp(twin), std::string(name) + "/" + e.path().filename().string());
      }
    }
    l.detail << " " << files << " files compared (1 vs 2 threads)";
  });

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Line l;
    try {
      criteria[i].second(l);
    } catch (const std::exception& e) {
      l.require(false, e.what());
    }
    failed += !l.pass;
    std::printf("%s %2zu %s:%s\n", l.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), l.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
