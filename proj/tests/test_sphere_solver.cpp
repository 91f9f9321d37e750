#include "support.hpp"

#include <chrono>
#include <cmath>
#include <map>

#include "oracle_values.hpp"
#include "wcsk/sphere_solver.hpp"

using namespace wcsk;
using namespace wcsk::sphere;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

struct Frozen {
  double a, b, theta_m05, theta_0, theta_p05;
};

const std::map<std::string, Frozen>& frozen() {
  static const std::map<std::string, Frozen> f{
      {"one", {oracle::kSphereOneA, oracle::kSphereOneB, oracle::kSphereOneThetaM05, oracle::kSphereOneTheta0,
               oracle::kSphereOneThetaP05}},
      {"exp", {oracle::kSphereExpA, oracle::kSphereExpB, oracle::kSphereExpThetaM05, oracle::kSphereExpTheta0,
               oracle::kSphereExpThetaP05}},
      {"gauss", {oracle::kSphereGaussA, oracle::kSphereGaussB, oracle::kSphereGaussThetaM05,
                 oracle::kSphereGaussTheta0, oracle::kSphereGaussThetaP05}},
      {"affine", {oracle::kSphereAffineA, oracle::kSphereAffineB, oracle::kSphereAffineThetaM05,
                  oracle::kSphereAffineTheta0, oracle::kSphereAffineThetaP05}},
      {"pow", {oracle::kSpherePowA, oracle::kSpherePowB, oracle::kSpherePowThetaM05, oracle::kSpherePowTheta0,
               oracle::kSpherePowThetaP05}},
  };
  return f;
}

WeightBounds bounds_of(const Expr& v, const Expr& w) {
  return certify_bounds({"p", v, w, {}}, Polytope::interval(-1.0, 1.0));
}

}  // namespace

TEST_CASE("quadrature oracle against the independent ODE integration", "[sphere][oracle]") {
  for (const WeightPair& p : default_roster()) {
    INFO(p.name);
    const Frozen& f = frozen().at(p.name);
    const OracleSolution o = solve_quadrature(p.v, p.w);
    CHECK_THAT(o.a, WithinAbs(f.a, 1e-9 * (1 + std::abs(f.a))));
    CHECK_THAT(o.b, WithinAbs(f.b, 1e-9 * (1 + std::abs(f.b))));
    CHECK_THAT(o.theta(-0.5), WithinAbs(f.theta_m05, 1e-10));
    CHECK_THAT(o.theta(0.0), WithinAbs(f.theta_0, 1e-10));
    CHECK_THAT(o.theta(0.5), WithinAbs(f.theta_p05, 1e-10));
  }
}

TEST_CASE("round sphere from the oracle", "[sphere][oracle]") {
  const OracleSolution o = solve_quadrature(Expr::constant(1.0), Expr::constant(0.0));
  CHECK_THAT(o.a, WithinAbs(8 * kPi, 1e-6));
  CHECK(o.b == 0.0);
  for (double x = -1.0; x <= 1.0; x += 0.125) CHECK_THAT(o.theta(x), WithinAbs(1 - x * x, 1e-8));
}

TEST_CASE("symmetric weights need no linear correction", "[sphere][oracle]") {
  const Expr x = Expr::coord(0);
  CHECK(std::abs(solve_quadrature(exp(-(x * x)), Expr::constant(0.0)).b) < 1e-10);
  CHECK(std::abs(solve_quadrature(1.0 + x * x, 3.0 * x * x).b) < 1e-10);
}

TEST_CASE("incompatible weights are reported", "[sphere][oracle]") {
  const Expr x = Expr::coord(0);
  CHECK_THROWS_AS(solve_quadrature(Expr::constant(1.0), 400.0 * x * x * x * x), NonpositiveProfile);
  CHECK_THROWS_AS(solve_quadrature(x, Expr::constant(0.0)), InvalidWeight);
}

TEST_CASE("Newton solver reproduces the round metric", "[sphere][newton]") {
  const Expr one = Expr::constant(1.0), w = Expr::constant(8 * kPi);
  const OracleSolution o = solve_quadrature(one, Expr::constant(0.0));
  const GlobalSolution s = solve_newton(one, w);
  REQUIRE(s.converged);
  CHECK(oracle_distance(s, o) <= 1e-6);
  CHECK(s.R2_abs <= NewtonOptions{}.tol * (1 + 8 * kPi));
  CHECK(s.phi.maxCoeff() == 0.0);
  SECTION("restart at the root") {
    const GlobalSolution r = solve_newton(one, w, {}, o.profile(129));
    CHECK(r.converged);
    CHECK(r.iterations <= 2);
  }
  SECTION("reconstruction") {
    const auto rr = reconstructed_residual(s, sample_points(64));
    CHECK(rr.scal <= 1e-7);
    CHECK(rr.moment <= 1e-8);
    CHECK(rr.R1 <= 1e-8);
  }
}

TEST_CASE("Newton solutions match the oracle on the roster", "[sphere][newton]") {
  for (const WeightPair& p : default_roster()) {
    INFO(p.name);
    const OracleSolution o = solve_quadrature(p.v, p.w);
    const auto t0 = std::chrono::steady_clock::now();
    const GlobalSolution s = solve_newton(p.v, o.w);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    REQUIRE(s.converged);
    CHECK(secs <= 10.0);
    CHECK(oracle_distance(s, o) <= 1e-6);
    CHECK(reconstructed_residual(s, sample_points(32)).scal <= 1e-6);
    const auto lc = laplacian_checks(s, Eigen::VectorXd::LinSpaced(5, 0.3, -0.4), Eigen::VectorXd::LinSpaced(6, -0.2, 0.6));
    CHECK(lc.self_adjoint <= 1e-6);
    CHECK(lc.leibniz <= 1e-8);
    CHECK(duistermaat_heckman_chi2(field_of(s)) <= 1e-6);
  }
}

TEST_CASE("soliton weight gives a positive profile", "[sphere][newton]") {
  const Expr x = Expr::coord(0);
  const OracleSolution o = solve_quadrature(exp(x), soliton_weight(exp(x), 1, 1));
  const GlobalSolution s = solve_newton(exp(x), o.w);
  REQUIRE(s.converged);
  CHECK(check_profile(profile_of(s, 129)).min_interior_ratio > 0.0);
  CHECK(reconstructed_residual(s, sample_points(64)).scal <= 1e-7);
}

TEST_CASE("auxiliary potential", "[sphere][estimates]") {
  const Expr one = Expr::constant(1.0);
  const GlobalSolution round = solve_newton(one, Expr::constant(8 * kPi));
  const AuxiliaryPsi a = solve_auxiliary_psi(field_of(round));
  CHECK_THAT(a.b, WithinAbs(1.0, 1e-12));
  CHECK(a.psi.cwiseAbs().maxCoeff() <= 1e-12);
  CHECK_THAT(a.area, WithinAbs(1.0, 1e-9));
  const Expr x = Expr::coord(0);
  const OracleSolution o = solve_quadrature(exp(-(x * x)), Expr::constant(0.0));
  CHECK_THAT(solve_auxiliary_psi(field_of(solve_newton(o.v, o.w))).area, WithinAbs(1.0, 1e-9));
}

TEST_CASE("entropy quantities", "[sphere][estimates]") {
  const Expr one = Expr::constant(1.0);
  SECTION("round metric") {
    const GlobalSolution s = solve_newton(one, Expr::constant(8 * kPi));
    const EstimateReport r = compute_estimates(field_of(s), bounds_of(one, Expr::constant(8 * kPi)));
    CHECK_THAT(r.ent, WithinAbs(0.0, 1e-12));
    CHECK_THAT(r.ent_v, WithinAbs(0.0, 1e-12));
    CHECK_THAT(r.m_v, WithinAbs(1.0, 1e-12));
    CHECK_THAT(r.b, WithinAbs(1.0, 1e-12));
    CHECK(r.jensen);
    CHECK(r.b_ok);
  }
  SECTION("roster") {
    for (const WeightPair& p : default_roster()) {
      INFO(p.name);
      const OracleSolution o = solve_quadrature(p.v, p.w);
      const GlobalSolution s = solve_newton(p.v, o.w);
      const EstimateReport r = compute_estimates(field_of(s), bounds_of(p.v, o.w));
      CHECK(r.ent_v >= -1e-12);  // zero up to rounding for v = 1
      CHECK(r.b <= r.b_bound);
      CHECK(r.jensen);
      CHECK(r.b_ok);
    }
  }
  SECTION("family toward large entropy") {
    const Expr x = Expr::coord(0);
    // sup F for e^x dips first: the orbit initially moves mass to where v is small
    for (auto [v, monotone] : {std::pair{Expr::constant(1.0), true}, std::pair{exp(-(x * x)), true},
                               std::pair{exp(x), false}, std::pair{pow(2.0 + x, -3.0), true}}) {
      INFO(v.str());
      const auto fam = entropy_family(v, bounds_of(v, Expr::constant(0.0)));
      REQUIRE(fam.size() == 20);
      for (std::size_t k = 0; k < fam.size(); ++k) {
        CHECK(fam[k].forward_ok);
        CHECK(fam[k].converse_ok);
        if (k > 0) CHECK(fam[k].ent > fam[k - 1].ent);
      }
      CHECK(fam.back().sup_F > fam.front().sup_F);
      if (monotone)
        for (std::size_t k = 1; k < fam.size(); ++k) CHECK(fam[k].sup_F > fam[k - 1].sup_F);
    }
  }
}

TEST_CASE("solver is deterministic", "[sphere][newton]") {
  const Expr x = Expr::coord(0);
  const OracleSolution o = solve_quadrature(pow(2.0 + x, -3.0), pow(2.0 + x, -4.0));
  const GlobalSolution a = solve_newton(o.v, o.w), b = solve_newton(o.v, o.w);
  CHECK(a.phi == b.phi);
  CHECK(a.F == b.F);
  CHECK(a.iterations == b.iterations);
}
