#include "support.hpp"

#include <cmath>
#include <numbers>

#include "oracle_values.hpp"
#include "wcsk/random.hpp"
#include "wcsk/weighted_ops.hpp"

using namespace wcsk;
using Catch::Matchers::WithinAbs;
using test::X;
using test::Y;

namespace {

// small cubic damped by 1/(1 + |z|^2) so omega_phi stays positive on the sampled disc
Expr small_potential(Rng& rng, double amp) {
  Expr e = Expr::constant(0.0);
  for (const Expr& t : {X, Y, X * X, X * Y, Y * Y, X * X * Y, Y * Y * X}) e = e + amp * rng.normal() * t;
  return e / (1.0 + X * X + Y * Y);
}

const Expr kTestFunction = 0.3 * X - 0.7 * Y * Y + 0.2 * X * X * Y;

double rel(double a, double b) { return std::abs(a - b) / (1.0 + std::abs(b)); }

}  // namespace

TEST_CASE("v = 1 collapses every weighted operator", "[weighted]") {
  const ChartSpec<1> sph = sphere_chart();
  Rng rng(21);
  const double w = 5.0;
  double worst = 0.0;
  for (int k = 0; k < 40; ++k) {
    const Expr phi = small_potential(rng, 0.003);
    const auto p = test::point<1>({rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)});
    const MetricState<1> s = test::state(sph, phi, p);
    const WeightedContext<1> c = weighted_context(s, Expr::constant(1.0), Expr::constant(w));
    const CJet<1> f = test::jet_of<1>(kTestFunction, p);
    const RMat<1> ric0 = values<CJet<1>, 2>(s.ric0);
    const double scal = scalar_curvature(s, Which::Phi);
    const double lap = laplacian_field(s, f, Which::Phi).value();
    worst = std::max(worst, rel(weighted_trace(c, ric0, ricci0_moment(s)), trace<1>(s, ric0, Which::Phi)));
    worst = std::max(worst, rel(weighted_laplacian(c, f, LaplacianForm::Expanded), lap));
    worst = std::max(worst, rel(weighted_laplacian(c, f, LaplacianForm::Adjoint), lap));
    worst = std::max(worst, (values<CJet<1>, 2>(weighted_ricci(c)) - values<CJet<1>, 2>(s.ric)).cwiseAbs().maxCoeff());
    for (ScalForm form : {ScalForm::Definitional, ScalForm::TraceForm, ScalForm::System})
      worst = std::max(worst, rel(scal_v(c, form), scal));
    // unweighted system: F = log(omega_phi/omega_0), Delta_phi F = 2 Lambda_phi Ric_0 - w
    worst = std::max(worst, std::abs(c.F.value() - s.log_volratio.value()));
    const double cc = laplacian_field(s, s.log_volratio, Which::Phi).value() + w - 2.0 * trace<1>(s, ric0, Which::Phi);
    worst = std::max(worst, rel(system_residual(c).R2, cc));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("round sphere with v = 1", "[weighted]") {
  const ChartSpec<1> sph = sphere_chart();
  for (auto c : {std::array{0.0, 0.0}, std::array{0.8, -0.3}, std::array{-1.7, 1.1}}) {
    const MetricState<1> s = test::state(sph, Expr::constant(0.0), test::point<1>({c[0], c[1]}));
    const WeightedContext<1> ctx = weighted_context(s, Expr::constant(1.0), Expr::constant(8 * kPi));
    CHECK_THAT(scal_v(ctx, ScalForm::Definitional), WithinAbs(oracle::kFsScal, 1e-9));
    CHECK(std::abs(system_residual(ctx).R2) <= 1e-7);
    CHECK(std::abs(ctx.F.value()) < 1e-15);
  }
}

TEST_CASE("F at the background is log v(mu_0)", "[weighted]") {
  const ChartSpec<1> sph = sphere_chart();
  const Expr v = exp(-(X * X)) + 0.2;
  const auto p = test::point<1>({0.5, 0.25});
  const MetricState<1> s = test::state(sph, Expr::constant(0.0), p);
  const WeightedContext<1> c = weighted_context(s, v, Expr::constant(0.0));
  const double x = 4 * kPi * s.mu0[0].value() - 1.0;
  CHECK_THAT(c.F.value(), WithinAbs(std::log(std::exp(-x * x) + 0.2), 1e-14));
}

TEST_CASE("flat chart oracles", "[weighted]") {
  const ChartSpec<1> flat = flat_chart(0.5);  // roster coordinate 2 mu - 1
  const auto p = test::point<1>({0.4, 0.2});
  SECTION("F with a diagonal perturbation") {
    const MetricState<1> s = test::state(flat, 0.15 * modulus2(0), p);
    const WeightedContext<1> c = weighted_context(s, exp(0.5 * X), Expr::constant(0.0));
    CHECK_THAT(c.F.value(), WithinAbs(oracle::kFlatFDiag, 1e-14));
  }
  SECTION("v = e^mu") {
    const MetricState<1> s = test::state(flat, Expr::constant(0.0), p);
    const WeightedContext<1> c = weighted_context(s, exp(0.5 * (X + 1.0)), Expr::constant(0.0));
    const CJet<1> f = test::jet_of<1>(X * X, p);
    CHECK_THAT(weighted_laplacian(c, f, LaplacianForm::Expanded), WithinAbs(oracle::kFlatWeightedLaplacian, 1e-13));
    CHECK_THAT(weighted_laplacian(c, f, LaplacianForm::Adjoint), WithinAbs(oracle::kFlatWeightedLaplacian, 1e-13));
    CHECK_THAT(scal_v(c, ScalForm::Definitional), WithinAbs(oracle::kFlatScalV, 1e-12));
  }
  SECTION("log-affine weight") {
    const Expr phi = (1.0 / 20) * (X * X * X * X + X * X * Y * Y);
    const MetricState<1> s = test::state(flat, phi, p);
    const WeightedContext<1> c = weighted_context(s, exp(0.35 * (X + 1.0)), Expr::constant(0.0));
    CHECK_THAT(weighted_ricci(c)[0][1].value(), WithinAbs(oracle::kFlatRicV, 1e-12));
  }
}

TEST_CASE("weighted Ricci form is closed", "[weighted]") {
  const ChartSpec<2> part = partial_chart();
  Rng rng(17);
  const Expr v = exp(0.5 * X) + 0.3 * X * X;
  const Expr phi = 0.002 * (Expr::coord(0) * Expr::coord(2) + Expr::coord(1) * Expr::coord(3) * Expr::coord(0)) /
                   (1.0 + modulus2(0) + modulus2(1));
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const auto p = test::point<2>({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8)});
    const MetricState<2> s = test::state(part, phi, p);
    const auto r = weighted_ricci(weighted_context(s, v, Expr::constant(0.0)));
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        for (int l = 0; l < 4; ++l)
          worst = std::max(worst, std::abs(r[j][l].d1(i) + r[l][i].d1(j) + r[i][j].d1(l)));
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("moment map outside the polytope is an error", "[weighted]") {
  const ChartSpec<1> flat = flat_chart(0.5);
  const MetricState<1> s = test::state(flat, Expr::constant(0.0), test::point<1>({1.5, 0.0}));
  CHECK_THROWS_AS(weighted_context(s, Expr::constant(1.0), Expr::constant(0.0)), DomainError);
}
