#include "support.hpp"

#include <cmath>

#include "wcsk/random.hpp"
#include "wcsk/weights.hpp"

using namespace wcsk;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::ContainsSubstring;

namespace {
WeightEval at(const Expr& e, std::vector<double> x, int order = 2) { return eval_weight(e, x, order); }
}  // namespace

TEST_CASE("constant weight has vanishing derivatives", "[weights]") {
  const WeightEval e = at(Expr::constant(1.0), {0.3});
  CHECK(e.value == 1.0);
  CHECK(e.grad(0) == 0.0);
  CHECK(e.hess(0, 0) == 0.0);
}

TEST_CASE("exponential weight at the origin", "[weights]") {
  const WeightEval e = at(exp(test::X), {0.0});
  CHECK_THAT(e.value, WithinAbs(1.0, 1e-15));
  CHECK_THAT(e.grad(0), WithinAbs(1.0, 1e-15));
  CHECK_THAT(e.hess(0, 0), WithinAbs(1.0, 1e-15));
}

TEST_CASE("prefix notation parses to the same weight", "[weights][parse]") {
  const Expr g = parse_expr("(exp (neg (mul x0 x0)))");
  for (double x : {-0.9, -0.2, 0.0, 0.4, 1.0}) {
    const WeightEval e = at(g, {x});
    CHECK_THAT(e.value, WithinAbs(std::exp(-x * x), 1e-15));
    CHECK_THAT(e.grad(0), WithinAbs(-2 * x * std::exp(-x * x), 1e-14));
    CHECK_THAT(e.hess(0, 0), WithinAbs((4 * x * x - 2) * std::exp(-x * x), 1e-14));
  }
  const WeightEval p = at(parse_expr("(div (add 2 x0 (mul 0.5 x1)) 3.5)"), {0.2, -0.4});
  CHECK_THAT(p.value, WithinAbs((2 + 0.2 - 0.2) / 3.5, 1e-15));
  CHECK_THAT(p.grad(1), WithinAbs(0.5 / 3.5, 1e-15));
  CHECK_THAT(at(parse_expr("(pow (add 2 x0) -3)"), {0.0}).value, WithinAbs(0.125, 1e-15));
  CHECK_THAT(at(parse_expr("(sqrt pi)"), {0.0}).value, WithinAbs(std::sqrt(std::numbers::pi), 1e-15));
}

TEST_CASE("malformed expressions are rejected", "[weights][parse]") {
  for (const char* bad : {"", "(", "(add 1", "(frob x0)", "x", "(exp 1 2)", "1 2", "x99", "(add 1))"})
    CHECK_THROWS_AS(parse_expr(bad), ParseError);
}

TEST_CASE("certified bounds of simple weights", "[weights][bounds]") {
  const Polytope I = Polytope::interval(-1.0, 1.0);
  SECTION("v = 1") {
    const WeightBounds b = certify_bounds({"one", Expr::constant(1.0), Expr::constant(0.0), {}}, I);
    CHECK(b.eta == 1.0);
    CHECK(b.L == 1.0);
  }
  SECTION("affine v and w = x") {
    const WeightBounds b = certify_bounds({"affine", (2.0 + test::X) * (1.0 / 3.0), test::X, {}}, I);
    // the margin only widens the interval
    CHECK(b.eta <= 1.0 / 3.0);
    CHECK(b.eta > 1.0 / 3.0 - 1e-2);
    CHECK(b.L >= 1.0);
    CHECK(b.L < 1.0 + 1e-2);
    CHECK(b.nu >= 1.0);
    CHECK(b.nu < 1.0 + 1e-2);
    CHECK(b.M >= 1.0);
    CHECK(b.M < 1.0 + 1e-2);
  }
}

TEST_CASE("nonpositive weight is reported", "[weights][bounds]") {
  const Polytope I = Polytope::interval(-1.0, 1.0);
  CHECK_THROWS_WITH(certify_bounds({"lin", test::X, Expr::constant(0.0), {}}, I), ContainsSubstring("nonpositive weight"));
  CHECK_THROWS_AS(certify_bounds({"log", log(test::X), Expr::constant(0.0), {}}, I), InvalidWeight);
}

TEST_CASE("log-concavity of roster weights", "[weights][concavity]") {
  const Polytope I = Polytope::interval(-1.0, 1.0);
  const LogConcavity e = is_log_concave(exp(test::X), I);
  CHECK(e.concave);
  CHECK_THAT(e.worst_eigenvalue, WithinAbs(0.0, 1e-12));
  const LogConcavity g = is_log_concave(exp(-(test::X * test::X)), I);
  CHECK(g.concave);
  CHECK_THAT(g.worst_eigenvalue, WithinAbs(-2.0, 1e-12));
  const LogConcavity q = is_log_concave(1.0 + test::X * test::X, I, 513);  // odd grid contains x = 0
  CHECK_FALSE(q.concave);
  CHECK_THAT(q.worst_eigenvalue, WithinAbs(2.0, 1e-12));
  CHECK_THAT(q.worst_point[0], WithinAbs(0.0, 1e-12));
  CHECK_FALSE(is_log_concave(pow(2.0 + test::X, -3.0), I).concave);
}

TEST_CASE("soliton weight of an exponential", "[weights]") {
  const Expr w = soliton_weight(exp(test::X), 1, 1);
  for (double x : {-1.0, 0.0, 0.7}) CHECK_THAT(at(w, {x}, 0).value, WithinAbs(2 * std::exp(x) * (1 + x), 1e-13));
}

TEST_CASE("symbolic derivatives agree with central differences", "[weights][property]") {
  Rng rng(7);
  const std::vector<Expr> atoms{test::X, test::Y, exp(0.3 * test::X), 1.0 + test::Y * test::Y, log(2.0 + test::X)};
  for (int trial = 0; trial < 50; ++trial) {
    Expr e = Expr::constant(rng.uniform(-1, 1));
    for (int k = 0; k < 3; ++k) {
      const Expr& a = atoms[static_cast<std::size_t>(rng.next() % atoms.size())];
      const Expr& b = atoms[static_cast<std::size_t>(rng.next() % atoms.size())];
      e = e + rng.uniform(-1, 1) * a * b;
    }
    const std::vector<double> p{rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9)};
    const WeightEval ev = at(e, p);
    const double h = 1e-5;
    for (int i = 0; i < 2; ++i) {
      auto q = p, r = p;
      q[i] += h;
      r[i] -= h;
      const double fd = (at(e, q, 0).value - at(e, r, 0).value) / (2 * h);
      CHECK_THAT(ev.grad(i), WithinAbs(fd, 1e-8 * (1 + std::abs(fd))));
      const double fd2 = (at(e, q, 1).grad(i) - at(e, r, 1).grad(i)) / (2 * h);
      CHECK_THAT(ev.hess(i, i), WithinAbs(fd2, 1e-7 * (1 + std::abs(fd2))));
    }
    CHECK_THAT(ev.hess(0, 1), WithinAbs(ev.hess(1, 0), 1e-14));
  }
}

TEST_CASE("certified bounds enclose the weight", "[weights][property]") {
  Rng rng(11);
  const Polytope box = Polytope::box({-1.0, -1.0}, {1.0, 1.0});
  const Expr v = exp(0.5 * test::X - 0.3 * test::Y) + 0.2 * test::X * test::Y;
  const Expr w = 1.0 + test::X - test::Y * test::Y;
  const WeightBounds b = certify_bounds({"p", v, w, {}}, box);
  for (int k = 0; k < 2000; ++k) {
    const std::vector<double> p{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const double vv = at(v, p, 0).value, ww = at(w, p, 0).value;
    CHECK(b.eta <= vv);
    CHECK(vv <= b.L);
    CHECK(-b.nu <= ww);
    CHECK(ww <= b.M);
  }
}
