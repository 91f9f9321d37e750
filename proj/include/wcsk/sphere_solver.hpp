#pragma once

// S^1-invariant metrics on the unit-area 2-sphere in the momentum picture.
//
// Canonical coordinate x = 4 pi mu - 1 on [-1, 1], lambda = 4 pi. On the
// background, x_0 = (|z|^2 - 1)/(|z|^2 + 1) and Theta_0 = 1 - x_0^2. An
// invariant potential phi = phi_c(x_0)/lambda has moment map
// mu = x_0 + Theta_0 phi_c' and omega_phi/omega_0 = mu'. The profile theta
// describes the same metric through theta(mu(x)) = Theta_0(x) mu'(x), and
// Scal_v = w(mu) becomes -lambda (v theta)'' = w in the momentum variable.

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wcsk/chart.hpp"
#include "wcsk/chebyshev.hpp"
#include "wcsk/expr.hpp"
#include "wcsk/jet.hpp"
#include "wcsk/weighted_ops.hpp"
#include "wcsk/weights.hpp"

namespace wcsk::sphere {

inline constexpr double kLambda = 4 * std::numbers::pi;

class NonpositiveProfile : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double theta0(double x) { return 1.0 - x * x; }

// --- profiles ---------------------------------------------------------------

struct SphereProfile {
  Eigen::VectorXd m;      // Chebyshev-Lobatto nodes of the momentum interval
  Eigen::VectorXd theta;  // profile values

  Eigen::VectorXd coeffs() const { return cheb::coeffs_lobatto(theta); }
  double eval(double mu) const { return cheb::evaluate(coeffs(), mu); }
};

struct ProfileCheck {
  double min_interior_ratio = 0;  // min theta / (1 - m^2) over the interior nodes
  double bc_value = 0;            // max |theta(+-1)|
  double bc_slope = 0;            // max |theta'(+-1) -+ 2|
};

inline ProfileCheck check_profile(const SphereProfile& p) {
  ProfileCheck c;
  const int m = static_cast<int>(p.m.size());
  c.min_interior_ratio = std::numeric_limits<double>::infinity();
  for (int j = 1; j + 1 < m; ++j)
    c.min_interior_ratio = std::min(c.min_interior_ratio, p.theta(j) / theta0(p.m(j)));
  const Eigen::VectorXd d = cheb::derivative(p.coeffs());
  c.bc_value = std::max(std::abs(p.theta(0)), std::abs(p.theta(m - 1)));
  c.bc_slope = std::max(std::abs(cheb::evaluate(d, 1.0) + 2.0), std::abs(cheb::evaluate(d, -1.0) - 2.0));
  return c;
}

// --- quadrature oracle ------------------------------------------------------

// -lambda (v theta)'' = w0 + a + b x with theta(+-1) = 0, theta'(+-1) = -+2.
// P = v theta = 2 v(-1)(x + 1) - K(x)/lambda, K(x) = int_{-1}^x (x - s) w(s) ds.
struct OracleSolution {
  Expr v, w0, w;
  double a = 0, b = 0;
  double v_minus = 0, v_plus = 0;

  double integral0(double x) const { return quad([&](double s) { return w0_at(s); }, x); }
  double integral1(double x) const { return quad([&](double s) { return s * w0_at(s); }, x); }

  double P(double x) const {
    const double k0 = x * integral0(x) - integral1(x);
    const double xp = x + 1.0;
    const double k = k0 + a * xp * xp / 2 + b * (x * x * x / 6 - x / 2 - 1.0 / 3);
    return 2 * v_minus * xp - k / kLambda;
  }
  double dP(double x) const {
    const double k = integral0(x) + a * (x + 1.0) + b * (x * x - 1.0) / 2;
    return 2 * v_minus - k / kLambda;
  }
  double theta(double x) const { return P(x) / v_at(x); }
  double dtheta(double x) const {
    WeightEval e = eval_weight(v, std::vector<double>{x}, 1);
    return (dP(x) - e.grad(0) * P(x) / e.value) / e.value;
  }

  SphereProfile profile(int nodes) const {
    SphereProfile p;
    p.m = cheb::lobatto(nodes);
    p.theta.resize(nodes);
    for (int j = 0; j < nodes; ++j) p.theta(j) = theta(p.m(j));
    p.theta(0) = 0.0;
    p.theta(nodes - 1) = 0.0;
    return p;
  }

  double v_at(double x) const { return eval_weight(v, std::vector<double>{x}, 0).value; }
  double w0_at(double x) const { return eval_weight(w0, std::vector<double>{x}, 0).value; }

  template <class Fn>
  static double quad(Fn f, double x, double lo = -1.0) {
    if (x <= lo) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, x, 8, 1e-14);
  }
};

inline OracleSolution solve_quadrature(const Expr& v, const Expr& w0, int positivity_samples = 2001) {
  OracleSolution o;
  o.v = v;
  o.w0 = w0;
  o.v_minus = o.v_at(-1.0);
  o.v_plus = o.v_at(1.0);
  if (!(o.v_minus > 0) || !(o.v_plus > 0)) throw InvalidWeight("nonpositive weight at the end of the interval");
  // int w = 2 lambda (v(1) + v(-1)), int x w = 2 lambda (v(1) - v(-1))
  const double I0 = o.integral0(1.0), I1 = o.integral1(1.0);
  o.a = (2 * kLambda * (o.v_plus + o.v_minus) - I0) / 2;
  o.b = (2 * kLambda * (o.v_plus - o.v_minus) - I1) * 1.5;
  o.w = w0 + Expr::constant(o.a) + Expr::constant(o.b) * Expr::coord(0);
  for (int i = 1; i < positivity_samples - 1; ++i) {
    const double x = -1.0 + 2.0 * i / (positivity_samples - 1);
    const double vx = o.v_at(x);
    if (!(vx > 0)) throw InvalidWeight("nonpositive weight: v(" + std::to_string(x) + ") = " + std::to_string(vx));
    if (!(o.P(x) > 0))
      throw NonpositiveProfile("weights incompatible with a positive profile: theta(" + std::to_string(x) +
                               ") = " + std::to_string(o.P(x) / vx));
  }
  return o;
}

// --- invariant fields on the two charts ----------------------------------------

// f(z) = scale * sum_k c_k T_k(x_0(z)); orientation -1 is the chart at x_0 = +1.
struct InvariantSeries {
  Eigen::VectorXd c;
  double scale = 1.0;
  double orientation = 1.0;

  template <class T>
  T eval(std::span<const T> u) const {
    const T t = u[0] * u[0] + u[1] * u[1];
    const T x0 = (t - 1.0) / (t + 1.0) * orientation;
    return cheb::evaluate<T>(std::span<const double>(c.data(), c.size()), x0) * scale;
  }
  InvariantSeries on(double o) const { return {c, scale, o}; }
};

inline const ChartSpec<1>& north_chart() {
  static const ChartSpec<1> c = sphere_chart(1.0);
  return c;
}
inline const ChartSpec<1>& south_chart() {
  static const ChartSpec<1> c = sphere_chart(-1.0);
  return c;
}

struct ChartPoint {
  const ChartSpec<1>* chart;
  RVec<1> p;
};

// x_0 <= 0 on the z chart, x_0 > 0 on the w = 1/z chart
inline ChartPoint chart_point(double x0) {
  RVec<1> p;
  if (x0 <= 0) {
    p << std::sqrt((1 + x0) / (1 - x0)), 0.0;
    return {&north_chart(), p};
  }
  p << std::sqrt((1 - x0) / (1 + x0)), 0.0;
  return {&south_chart(), p};
}

// --- Newton collocation -------------------------------------------------------

struct NewtonOptions {
  int nodes = 129;       // initial Chebyshev-Lobatto node count
  int max_nodes = 513;   // refinement cap (nodes -> 2 nodes - 1 while not converged)
  double tol = 1e-9;
  int max_iter = 50;
  double damping = 0.5;
  int max_backtracks = 30;
  double resolve_tol = 1e-12;  // relative size of the coefficient tail reported as resolved
  bool continuation = true;    // homotopy from the round solution when the flat start fails
  double path_tol = 1e-6;
  double min_path_step = 1.0 / 1024;
};

struct IterationRecord {
  int nodes = 0;
  int iteration = 0;
  double r1 = 0, r2 = 0;  // sup norms after the step (r2 relative)
  double step = 0;        // accepted step length
  int backtracks = 0;
};

struct GlobalSolution {
  Expr v, w;
  int nodes = 0;
  Eigen::VectorXd x, cc;       // collocation nodes and Clenshaw-Curtis weights
  Eigen::VectorXd phi;         // physical potential, sup phi = 0
  Eigen::VectorXd F;           // log density
  Eigen::VectorXd mu, dmu;     // canonical moment map and d mu/dx
  Eigen::VectorXd phi_coeffs;  // Chebyshev coefficients of lambda * phi
  Eigen::VectorXd F_coeffs;
  double R1 = 0;               // sup |R1|
  double R2 = 0;               // sup |R2| / (1 + largest term of R2)
  double R2_abs = 0;           // sup |R2|
  double da = 0, db = 0;       // affine correction absorbed by the iteration
  bool converged = false;
  bool resolved = false;
  bool continuation = false;
  int continuation_steps = 0;
  int iterations = 0;
  std::string message;
  std::vector<IterationRecord> trace;

  Eigen::VectorXd theta() const {
    Eigen::VectorXd t(x.size());
    for (int j = 0; j < x.size(); ++j) t(j) = theta0(x(j)) * dmu(j);
    return t;
  }
  InvariantSeries potential() const { return {phi_coeffs, 1.0 / kLambda, 1.0}; }
  InvariantSeries log_density() const { return {F_coeffs, 1.0, 1.0}; }
};

namespace detail {

using Dual = Jet<1, 1>;

inline std::vector<double> matvec(const Eigen::MatrixXd& D, const std::vector<double>& a) {
  Eigen::Map<const Eigen::VectorXd> av(a.data(), static_cast<Eigen::Index>(a.size()));
  Eigen::VectorXd r = D * av;
  return {r.data(), r.data() + r.size()};
}

inline std::vector<Dual> matvec(const Eigen::MatrixXd& D, const std::vector<Dual>& a) {
  const auto m = static_cast<Eigen::Index>(a.size());
  Eigen::VectorXd val(m), der(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    val(i) = a[i].coeff(0);
    der(i) = a[i].coeff(1);
  }
  Eigen::VectorXd rv = D * val, rd = D * der;
  std::vector<Dual> r(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    r[i].coeff(0) = rv(i);
    r[i].coeff(1) = rd(i);
  }
  return r;
}

struct Collocation {
  int m = 0;
  Eigen::VectorXd x, th0, cc;
  Eigen::MatrixXd D;
  Expr v, dv, w;

  Collocation(int nodes, const Expr& v_, const Expr& w_)
      : m(nodes), x(cheb::lobatto(nodes)), cc(cheb::clenshaw_curtis(nodes)), D(cheb::diff_matrix(nodes)),
        v(v_), dv(derivative(v_, 0)), w(w_) {
    th0.resize(m);
    for (int j = 0; j < m; ++j) th0(j) = theta0(x(j));
  }

  // u = (phi_c at nodes, F at nodes, da, db); R = (R1, R2) for the weight w + da + db x.
  // `scale` receives the largest term of R2.
  template <class T>
  void residual(const std::vector<T>& u, std::vector<T>& R, double* scale = nullptr,
                std::vector<T>* mu_out = nullptr, std::vector<T>* dmu_out = nullptr) const {
    std::vector<T> phi(u.begin(), u.begin() + m), F(u.begin() + m, u.begin() + 2 * m);
    const T& da = u[2 * m];
    const T& db = u[2 * m + 1];
    std::vector<T> mu = matvec(D, phi);
    for (int j = 0; j < m; ++j) mu[j] = mu[j] * th0(j) + x(j);
    std::vector<T> dmu = matvec(D, mu);
    std::vector<T> dF = matvec(D, F);
    std::vector<T> vmu(m), q(m);
    R.assign(2 * m, T(0.0));
    for (int j = 0; j < m; ++j) {
      if (!(value_of(dmu[j]) > 0.0)) throw DomainError("moment map is not increasing");
      if (std::abs(value_of(mu[j])) > 1.0 + 1e-9) throw DomainError("moment map leaves the interval");
      std::array<T, 1> mj{mu[j]};
      vmu[j] = v.template eval<T>(std::span<const T>(mj));
      if (!(value_of(vmu[j]) > 0.0)) throw DomainError("nonpositive weight at mu");
      using std::log;
      R[j] = F[j] - log(vmu[j]) - log(dmu[j]);
      q[j] = vmu[j] * dF[j] * th0(j);
    }
    std::vector<T> dq = matvec(D, q);
    double big = 0.0;
    for (int j = 0; j < m; ++j) {
      std::array<T, 1> mj{mu[j]};
      const T wmu = w.template eval<T>(std::span<const T>(mj)) + da + db * mu[j];
      const T dvmu = dv.template eval<T>(std::span<const T>(mj));
      const T t1 = kLambda * dq[j] / (vmu[j] * dmu[j]);
      const T t2 = wmu / vmu[j];
      const T t3 = 2.0 * kLambda / dmu[j];
      const T t4 = 2.0 * kLambda * x(j) * dvmu / vmu[j];
      R[m + j] = t1 + t2 - t3 - t4;
      for (const T* t : {&t1, &t2, &t3, &t4}) big = std::max(big, std::abs(value_of(*t)));
    }
    if (scale) *scale = big;
    if (mu_out) *mu_out = std::move(mu);
    if (dmu_out) *dmu_out = std::move(dmu);
  }

  Eigen::VectorXd residual(const Eigen::VectorXd& u, double* scale = nullptr) const {
    std::vector<double> uu(u.data(), u.data() + u.size()), R;
    residual(uu, R, scale);
    return Eigen::Map<Eigen::VectorXd>(R.data(), static_cast<Eigen::Index>(R.size()));
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& u) const {
    const int n = 2 * m + 2;
    Eigen::MatrixXd Jm(2 * m, n);
    std::vector<Dual> ud(n), R;
    for (int i = 0; i < n; ++i) ud[i] = Dual(u(i));
    for (int k = 0; k < n; ++k) {
      ud[k].coeff(1) = 1.0;
      residual(ud, R);
      for (int i = 0; i < 2 * m; ++i) Jm(i, k) = R[i].coeff(1);
      ud[k].coeff(1) = 0.0;
    }
    return Jm;
  }

  // (sup |R1|, sup |R2| / (1 + scale))
  std::pair<double, double> norms(const Eigen::VectorXd& R, double scale) const {
    return {R.head(m).cwiseAbs().maxCoeff(), R.tail(m).cwiseAbs().maxCoeff() / (1.0 + scale)};
  }
};

// sup over a dense sample of the interpolant
inline double series_sup(const Eigen::VectorXd& c, int samples = 4097) {
  double s = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) s = std::max(s, cheb::evaluate(c, -1.0 + 2.0 * i / (samples - 1)));
  return s;
}

// largest coefficient among the last eighth, relative to the largest overall
inline double tail_ratio(const Eigen::VectorXd& a) {
  const int n = static_cast<int>(a.size());
  const int k0 = n - std::max(2, n / 8);
  const double mx = a.cwiseAbs().maxCoeff();
  return mx > 0 ? a.tail(n - k0).cwiseAbs().maxCoeff() / mx : 0.0;
}

struct NewtonRun {
  Eigen::VectorXd u;
  double f = 0;    // least-squares merit
  double sup = 0;  // max(sup |R1|, relative sup |R2|)
  bool admissible = true;
  std::string message;
};

// Gauge rows: phi_c(1) fixed; no update along the automorphism direction; no update in
// the top mode T_{m-1}, which Theta_0 D annihilates on the nodes. The system is then
// one row overdetermined and solved in the least-squares sense.
inline NewtonRun newton_iterate(const Collocation& col, Eigen::VectorXd u, const NewtonOptions& opt,
                                std::vector<IterationRecord>& trace) {
  const int m = col.m, n = 2 * m + 2;
  // line search on the least-squares merit; the sup norms decide convergence
  auto merit = [&](const Eigen::VectorXd& uu, Eigen::VectorXd* R, double* sup = nullptr) {
    try {
      double sc = 0;
      Eigen::VectorXd r = col.residual(uu, &sc);
      if (!r.allFinite()) return std::numeric_limits<double>::infinity();
      if (R) *R = r;
      auto [a, b] = col.norms(r, sc);
      if (sup) *sup = std::max(a, b);
      return r.head(m).squaredNorm() + r.tail(m).squaredNorm() / ((1.0 + sc) * (1.0 + sc));
    } catch (const DomainError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  NewtonRun run;
  Eigen::VectorXd R;
  run.f = merit(u, &R, &run.sup);
  if (!std::isfinite(run.f)) {
    run.admissible = false;
    run.message = "initial state is not admissible";
    run.u = u;
    return run;
  }
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(3, n);
  G(0, 0) = 1.0;
  for (int j = 0; j < m; ++j) {
    G(1, j) = col.cc(j) * col.x(j);
    G(2, j) = ((j == 0 || j == m - 1) ? 0.5 : 1.0) * ((j % 2) ? -1.0 : 1.0);
  }
  for (int it = 0; it < opt.max_iter && run.sup > opt.tol; ++it) {
    Eigen::MatrixXd A(n + 1, n);
    A.topRows(2 * m) = col.jacobian(u);
    A.bottomRows(3) = G;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    rhs.head(2 * m) = -R;
    const Eigen::VectorXd du = A.householderQr().solve(rhs);
    double step = 1.0;
    int bt = 0;
    Eigen::VectorXd Rn;
    double sup = 0;
    double fn = merit(u + du, &Rn, &sup);
    while (!(fn < run.f) && bt < opt.max_backtracks) {
      step *= opt.damping;
      ++bt;
      fn = merit(u + step * du, &Rn, &sup);
    }
    if (!(fn < run.f)) {
      run.message = "line search failure";
      break;
    }
    u += step * du;
    R = Rn;
    double sc = 0;
    col.residual(u, &sc);
    auto [r1, r2] = col.norms(R, sc);
    run.f = fn;
    run.sup = sup;
    trace.push_back({m, static_cast<int>(trace.size()) + 1, r1, r2, step, bt});
  }
  if (run.message.empty()) run.message = run.sup <= opt.tol ? "converged" : "iteration limit reached";
  run.u = u;
  return run;
}

}  // namespace detail

// phi_c and F at the collocation nodes of a profile (see profile_potential below)
struct PotentialData {
  Eigen::VectorXd phi_coeffs;  // Chebyshev coefficients of lambda * phi
  Eigen::VectorXd mu, dmu, F;  // at the requested nodes
};
PotentialData profile_potential(const SphereProfile& prof, const Expr& v, const Eigen::VectorXd& nodes);

// Damped Newton on the collocated system (R1, R2). The affine correction (da, db) of w
// is carried as two extra unknowns spanning the cokernel of the linearization; for a
// compatible w they converge to zero and the final residuals are taken against w as
// given. If the iteration stalls above tol the node count is refined (m -> 2m - 1) and
// the iteration restarted from the interpolated iterate.
inline GlobalSolution solve_newton(const Expr& v, const Expr& w, const NewtonOptions& opt = {},
                                   const std::optional<SphereProfile>& init = std::nullopt) {
  GlobalSolution sol;
  sol.v = v;
  sol.w = w;
  int m = opt.nodes;
  Eigen::VectorXd u;
  {
    const Eigen::VectorXd x = cheb::lobatto(m);
    u = Eigen::VectorXd::Zero(2 * m + 2);
    if (init) {
      PotentialData pd = profile_potential(*init, v, x);
      for (int j = 0; j < m; ++j) {
        u(j) = cheb::evaluate(pd.phi_coeffs, x(j));
        u(m + j) = pd.F(j);
      }
    } else {
      for (int j = 0; j < m; ++j) u(m + j) = std::log(eval_weight(v, std::vector<double>{x(j)}, 0).value);
    }
  }
  detail::NewtonRun run;
  if (!init && opt.continuation) {
    // From the flat start, follow v_s = v^s, w_s = s w + (1 - s) 8 pi from the round solution
    // whenever the direct iteration fails.
    std::vector<IterationRecord> direct;
    run = detail::newton_iterate(detail::Collocation(m, v, w), u, opt, direct);
    if (run.admissible && run.sup <= opt.tol) {
      sol.trace = std::move(direct);
    } else {
      sol.continuation = true;
      Eigen::VectorXd us = Eigen::VectorXd::Zero(2 * m + 2);
      NewtonOptions path = opt;
      path.tol = opt.path_tol;
      double s = 0.0, ds = 0.25;
      while (s < 1.0) {
        const double s1 = std::min(1.0, s + ds);
        const Expr vs = pow(v, Expr::constant(s1));
        const Expr ws = Expr::constant(s1) * w + Expr::constant((1.0 - s1) * 2.0 * kLambda);
        std::vector<IterationRecord> tr;
        detail::NewtonRun r = detail::newton_iterate(detail::Collocation(m, vs, ws), us, path, tr);
        if (r.admissible && r.sup <= path.tol) {
          us = r.u;
          s = s1;
          ++sol.continuation_steps;
          sol.trace.insert(sol.trace.end(), tr.begin(), tr.end());
          ds = std::min(2 * ds, 0.5);
        } else if ((ds *= 0.5) < opt.min_path_step) {
          sol.message = "continuation stalled at s = " + std::to_string(s);
          return sol;
        }
      }
      u = us;
    }
  }
  for (;;) {
    detail::Collocation col(m, v, w);
    run = detail::newton_iterate(col, u, opt, sol.trace);
    if (!run.admissible) {
      sol.message = run.message;
      return sol;
    }
    u = run.u;
    Eigen::VectorXd pc = cheb::coeffs_lobatto(u.head(m));
    pc(m - 1) = 0.0;  // gauge mode
    const Eigen::VectorXd fc = cheb::coeffs_lobatto(u.segment(m, m));
    sol.resolved = detail::tail_ratio(pc) <= opt.resolve_tol && detail::tail_ratio(fc) <= opt.resolve_tol;
    const int next = 2 * m - 1;
    if (run.sup <= opt.tol || next > opt.max_nodes) break;
    const Eigen::VectorXd xn = cheb::lobatto(next);
    Eigen::VectorXd un(2 * next + 2);
    for (int j = 0; j < next; ++j) {
      un(j) = cheb::evaluate(pc, xn(j));
      un(next + j) = cheb::evaluate(fc, xn(j));
    }
    un.tail(2) = u.tail(2);
    u = un;
    m = next;
  }
  detail::Collocation col(m, v, w);
  sol.nodes = m;
  sol.x = col.x;
  sol.cc = col.cc;
  sol.iterations = static_cast<int>(sol.trace.size());
  sol.da = u(2 * m);
  sol.db = u(2 * m + 1);
  Eigen::VectorXd u0 = u;
  u0.tail(2).setZero();
  std::vector<double> uu(u0.data(), u0.data() + u0.size()), Rv, mu, dmu;
  double sc = 0;
  try {
    col.residual(uu, Rv, &sc, &mu, &dmu);
  } catch (const DomainError& e) {
    sol.message = std::string("final state is not admissible: ") + e.what();
    return sol;
  }
  const Eigen::VectorXd Rf = Eigen::Map<Eigen::VectorXd>(Rv.data(), 2 * m);
  auto [r1, r2] = col.norms(Rf, sc);
  sol.R1 = r1;
  sol.R2 = r2;
  sol.R2_abs = Rf.tail(m).cwiseAbs().maxCoeff();
  sol.converged = std::max(r1, r2) <= opt.tol;
  if (sol.converged) sol.message = "converged";
  else if (run.sup <= opt.tol) sol.message = "weight is not compatible";
  else sol.message = run.message;

  sol.mu = Eigen::Map<Eigen::VectorXd>(mu.data(), m);
  sol.dmu = Eigen::Map<Eigen::VectorXd>(dmu.data(), m);
  sol.F = u.segment(m, m);
  sol.F_coeffs = cheb::chop_plateau(cheb::coeffs_lobatto(sol.F));
  Eigen::VectorXd pc = cheb::coeffs_lobatto(u.head(m));
  pc(m - 1) = 0.0;
  pc = cheb::chop_plateau(pc);
  pc(0) -= detail::series_sup(pc);
  sol.phi_coeffs = pc;
  sol.phi.resize(m);
  for (int j = 0; j < m; ++j) sol.phi(j) = cheb::evaluate(sol.phi_coeffs, col.x(j)) / kLambda;
  return sol;
}

// Inverse of an increasing Chebyshev series on [-1, 1].
inline double invert_increasing(const Eigen::VectorXd& c, double target) {
  double lo = -1.0, hi = 1.0;
  for (int i = 0; i < 200 && hi - lo > 0; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (cheb::evaluate(c, mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Profile of a solution on Lobatto nodes of the momentum interval.
inline SphereProfile profile_of(const GlobalSolution& s, int nodes) {
  const Eigen::VectorXd cm = cheb::coeffs_lobatto(s.mu);
  const Eigen::VectorXd cd = cheb::coeffs_lobatto(s.dmu);
  SphereProfile p;
  p.m = cheb::lobatto(nodes);
  p.theta.resize(nodes);
  for (int j = 0; j < nodes; ++j) {
    if (j == 0 || j == nodes - 1) {
      p.theta(j) = 0.0;
      continue;
    }
    const double x = invert_increasing(cm, p.m(j));
    p.theta(j) = theta0(x) * cheb::evaluate(cd, x);
  }
  return p;
}

// Potential of a profile. With theta = (1 - m^2) h and t = tanh(int_0^mu (1/h - 1)/(1 - m^2)),
// x = (mu + t)/(1 + mu t), phi_c' = -t (1 + mu t)/(1 - t^2) and mu' = h (1 + mu t)^2/(1 - t^2).
// Everything is kept as series in mu, where the profile is smooth.
class MomentumPotential {
 public:
  explicit MomentumPotential(const SphereProfile& prof) {
    // h = theta/(1 - m^2) and r = (1 - h)/(1 - m^2) by division in coefficient space,
    // after removing the noise plateau; then S' = r/h
    hc_ = divide_theta0(cheb::chop_plateau(prof.coeffs()));
    Eigen::VectorXd one_minus_h = -hc_;
    one_minus_h(0) += 1.0;
    const double ep = cheb::evaluate(one_minus_h, 1.0), em = cheb::evaluate(one_minus_h, -1.0);
    one_minus_h(0) -= 0.5 * (ep + em);
    if (one_minus_h.size() > 1) one_minus_h(1) -= 0.5 * (ep - em);
    const Eigen::VectorXd rc = divide_theta0(one_minus_h);
    Eigen::VectorXd gc;
    for (int mg = 64;; mg *= 2) {
      const Eigen::VectorXd gx = cheb::gauss(mg);
      Eigen::VectorXd gv(mg);
      for (int j = 0; j < mg; ++j) gv(j) = cheb::evaluate(rc, gx(j)) / cheb::evaluate(hc_, gx(j));
      gc = cheb::coeffs_gauss(gv);
      if (detail::tail_ratio(gc) <= 1e-13 || mg >= 1024) break;
    }
    S_ = cheb::antiderivative(cheb::chop(gc, 1e-14));
    S_(0) -= cheb::evaluate(S_, 0.0);
  }

  template <class T>
  T t_of(const T& mu) const {
    const T e = exp(cheb::evaluate<T>(span(S_), mu) * 2.0);
    return 1.0 - 2.0 / (e + 1.0);
  }
  double t_of(double mu) const { return std::tanh(cheb::evaluate(S_, mu)); }

  template <class T>
  T x_of(const T& mu) const {
    const T t = t_of(mu);
    return (mu + t) / (1.0 + mu * t);
  }
  template <class T>
  T dmu_of(const T& mu) const {  // d mu / dx_0 at the point with moment mu
    const T t = t_of(mu);
    const T q = 1.0 + mu * t;
    return cheb::evaluate<T>(span(hc_), mu) * q * q / (1.0 - t * t);
  }
  template <class T>
  T dphi_of(const T& mu) const {  // phi_c'(x_0) at the point with moment mu
    const T t = t_of(mu);
    return -t * (1.0 + mu * t) / (1.0 - t * t);
  }

  double mu_of(double x) const {
    if (std::abs(x) >= 1.0) return x;
    double lo = -1.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (x_of(mid) < x ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }
  // moment as a jet in x_0: Newton steps from the exact value double the order each time
  template <class T>
  T mu_of(const T& x0) const {
    T mu(mu_of(value_of(x0)));
    for (int i = 0; i < 4; ++i) mu = mu - (x_of(mu) - x0) * dmu_of(mu);
    return mu;
  }

  // phi_c(x) - phi_c(-1)
  double phi(double x) const {
    const double m = mu_of(x);
    if (m <= -1.0) return 0.0;
    auto f = [&](double s) { return dphi_of(s) / dmu_of(s); };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -1.0, m, 8, 1e-14);
  }

  const Eigen::VectorXd& h_coeffs() const { return hc_; }

 private:
  // least-squares solution of (1 - m^2) q = a for Chebyshev coefficients
  static Eigen::VectorXd divide_theta0(const Eigen::VectorXd& a) {
    const int np = static_cast<int>(a.size()) + 2;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(np, np - 2);
    for (int k = 0; k < np - 2; ++k) {
      M(k, k) += 0.5;
      M(k + 2, k) -= 0.25;
      M(std::abs(k - 2), k) -= 0.25;
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(np);
    rhs.head(a.size()) = a;
    return M.householderQr().solve(rhs);
  }
  static std::span<const double> span(const Eigen::VectorXd& c) { return {c.data(), static_cast<size_t>(c.size())}; }
  Eigen::VectorXd hc_, S_;
};

// phi = phi_c(x_0)/lambda near a base point, as a degree-4 polynomial in x_0 - x_base
struct LocalPotential {
  std::array<double, 5> c{};
  double x_base = 0.0;
  double orientation = 1.0;

  LocalPotential(const MomentumPotential& mp, double x0, double o) : x_base(x0), orientation(o) {
    using U = Jet<1, 3>;
    const U q = mp.dphi_of(mp.mu_of(U::variable(0, x0)));
    c[0] = mp.phi(x0);
    for (int k = 0; k < 4; ++k) c[k + 1] = q.coeff(k) / (k + 1);
    for (double& ck : c) ck /= kLambda;
  }

  template <class T>
  T eval(std::span<const T> u) const {
    const T t = u[0] * u[0] + u[1] * u[1];
    const T d = (t - 1.0) / (t + 1.0) * orientation - x_base;
    T r(c[4]);
    for (int k = 3; k >= 0; --k) r = r * d + c[k];
    return r;
  }
};

inline PotentialData profile_potential(const SphereProfile& prof, const Expr& v, const Eigen::VectorXd& nodes) {
  const MomentumPotential mp(prof);
  const int mg = 2 * static_cast<int>(prof.m.size());
  const Eigen::VectorXd gx = cheb::gauss(mg);
  Eigen::VectorXd q(mg);
  for (int j = 0; j < mg; ++j) q(j) = mp.dphi_of(mp.mu_of(gx(j)));
  PotentialData out;
  out.phi_coeffs = cheb::chop(cheb::antiderivative(cheb::coeffs_gauss(q)));
  out.phi_coeffs(0) -= detail::series_sup(out.phi_coeffs);
  const int n = static_cast<int>(nodes.size());
  out.mu.resize(n);
  out.dmu.resize(n);
  out.F.resize(n);
  for (int j = 0; j < n; ++j) {
    const double mu = mp.mu_of(nodes(j));
    out.mu(j) = mu;
    out.dmu(j) = mp.dmu_of(mu);
    out.F(j) = std::log(eval_weight(v, std::vector<double>{mu}, 0).value) + std::log(out.dmu(j));
  }
  return out;
}

// sup |theta_newton - theta_oracle| over Lobatto nodes of the momentum interval
inline double oracle_distance(const GlobalSolution& s, const OracleSolution& o, int nodes = 129) {
  const SphereProfile p = profile_of(s, nodes);
  double d = 0.0;
  for (int j = 0; j < nodes; ++j) d = std::max(d, std::abs(p.theta(j) - o.theta(p.m(j))));
  return d;
}

// Default solver roster; w holds the unadjusted w_0.
inline std::vector<WeightPair> default_roster() {
  const Expr x = Expr::coord(0);
  return {{"one", Expr::constant(1.0), Expr::constant(0.0), {}},
          {"exp", exp(x), soliton_weight(exp(x), 1, 1), {}},
          {"gauss", exp(-(x * x)), Expr::constant(0.0), {}},
          {"affine", (2.0 + x) * (1.0 / 3.0), Expr::constant(0.0), {}},
          {"pow", pow(2.0 + x, -3.0), pow(2.0 + x, -4.0), {}}};
}

// --- reconstruction into the chart engine ---------------------------------------

struct SphereSample {
  double x0 = 0;
  const ChartSpec<1>* chart = nullptr;
  MetricState<1> state;
  WeightedContext<1> ctx;
  std::optional<CJet<1>> F;  // independently supplied log density
};
using SphereSamples = std::vector<std::unique_ptr<SphereSample>>;

inline std::unique_ptr<SphereSample> reconstruct_at(const InvariantSeries& phi, const Expr& v, const Expr& w,
                                                    double x0, const InvariantSeries* F = nullptr) {
  auto s = std::make_unique<SphereSample>();
  const ChartPoint cp = chart_point(x0);
  const double o = cp.chart == &north_chart() ? 1.0 : -1.0;
  s->x0 = x0;
  s->chart = cp.chart;
  s->state = metric_state(*cp.chart, jet_at<1>(*cp.chart, phi.on(o), cp.p));
  s->ctx = weighted_context(s->state, v, w);
  if (F) {
    auto x = coordinate_jets<1, CJet<1>>(cp.p);
    s->F = F->on(o).template eval<CJet<1>>(std::span<const CJet<1>>(x.data(), x.size()));
  }
  return s;
}

inline SphereSamples reconstruct_states(const GlobalSolution& sol, const std::vector<double>& x0s) {
  SphereSamples out;
  const InvariantSeries phi = sol.potential(), F = sol.log_density();
  for (double x0 : x0s) out.push_back(reconstruct_at(phi, sol.v, sol.w, x0, &F));
  return out;
}

inline SphereSamples reconstruct_states(const SphereProfile& prof, const Expr& v, const Expr& w,
                                        const std::vector<double>& x0s) {
  const MomentumPotential mp(prof);
  SphereSamples out;
  for (double x0 : x0s) {
    auto s = std::make_unique<SphereSample>();
    const ChartPoint cp = chart_point(x0);
    const double o = cp.chart == &north_chart() ? 1.0 : -1.0;
    s->x0 = x0;
    s->chart = cp.chart;
    s->state = metric_state(*cp.chart, jet_at<1>(*cp.chart, LocalPotential(mp, x0, o), cp.p));
    s->ctx = weighted_context(s->state, v, w);
    out.push_back(std::move(s));
  }
  return out;
}

// x_0 = -1 + 2 (i + 1/2)/count, off the collocation grid
inline std::vector<double> sample_points(int count) {
  std::vector<double> x(count);
  for (int i = 0; i < count; ++i) x[i] = -1.0 + 2.0 * (i + 0.5) / count;
  return x;
}

struct ReconstructionResidual {
  double scal = 0;         // sup |Scal_v - w(mu_phi)|, definitional form, from the profile
  double scal_series = 0;  // the same from the Chebyshev series of phi in x_0
  double R1 = 0;           // sup |F_supplied - F|
  double moment = 0;       // sup |x(mu) - (x_0 + Theta_0 phi_c')| through the chart moment map
};

inline ReconstructionResidual reconstructed_residual(const GlobalSolution& sol, const std::vector<double>& x0s,
                                                     int profile_nodes = 129) {
  ReconstructionResidual r;
  for (const auto& s : reconstruct_states(profile_of(sol, profile_nodes), sol.v, sol.w, x0s))
    r.scal = std::max(r.scal, std::abs(scal_v(s->ctx, ScalForm::Definitional) - s->ctx.wval));
  const Eigen::VectorXd dphi = cheb::derivative(sol.phi_coeffs);
  for (const auto& s : reconstruct_states(sol, x0s)) {
    r.scal_series = std::max(r.scal_series, std::abs(scal_v(s->ctx, ScalForm::Definitional) - s->ctx.wval));
    if (s->F) r.R1 = std::max(r.R1, std::abs(s->F->value() - s->ctx.F.value()));
    const double xm = s->chart->weight_map.apply(s->state.mu_values())[0];
    const double expect = s->x0 + theta0(s->x0) * cheb::evaluate(dphi, s->x0);
    r.moment = std::max(r.moment, std::abs(xm - expect));
  }
  return r;
}

// --- estimates -------------------------------------------------------------------

// Invariant (phi, F) pair sampled on Lobatto nodes of the background coordinate.
// Integrals: int_X f omega_0 = 1/2 int f dx.
struct SphereField {
  Expr v;
  Eigen::VectorXd x, cc;
  Eigen::VectorXd phi;      // physical potential
  Eigen::VectorXd mu, dmu;  // canonical moment map, omega_phi / omega_0
  Eigen::VectorXd F;
};

inline SphereField field_of(const GlobalSolution& s) { return {s.v, s.x, s.cc, s.phi, s.mu, s.dmu, s.F}; }

// Automorphism orbit of the background: mu_s = (x + tanh s)/(1 + x tanh s), phi_c = log(1 + x tanh s).
inline SphereField automorphism_field(const Expr& v, double s, int nodes) {
  SphereField f;
  f.v = v;
  f.x = cheb::lobatto(nodes);
  f.cc = cheb::clenshaw_curtis(nodes);
  f.phi.resize(nodes);
  f.mu.resize(nodes);
  f.dmu.resize(nodes);
  f.F.resize(nodes);
  const double tau = std::tanh(s);
  const double sup_phi = std::log1p(std::abs(tau));
  for (int j = 0; j < nodes; ++j) {
    const double x = f.x(j), den = 1 + x * tau;
    f.mu(j) = (x + tau) / den;
    f.dmu(j) = (1 - tau * tau) / (den * den);
    f.phi(j) = (std::log(den) - sup_phi) / kLambda;
    f.F(j) = std::log(eval_weight(v, std::vector<double>{f.mu(j)}, 0).value) + std::log(f.dmu(j));
  }
  return f;
}

inline double integrate(const SphereField& f, const Eigen::VectorXd& g) { return 0.5 * f.cc.dot(g); }

struct AuxiliaryPsi {
  Eigen::VectorXd psi;  // physical, sup psi = 0
  double b = 0;
  double residual = 0;  // sup |omega_psi/omega_0 - rho|
  double area = 0;
};

// omega_psi = b^{-1} sqrt(F^2 + 1) omega_phi: Theta_0 psi_c' = int_{-1}^x (rho - 1)
inline AuxiliaryPsi solve_auxiliary_psi(const SphereField& f) {
  const int m = static_cast<int>(f.x.size());
  AuxiliaryPsi out;
  Eigen::VectorXd rho(m);
  for (int j = 0; j < m; ++j) rho(j) = std::sqrt(f.F(j) * f.F(j) + 1) * f.dmu(j);
  out.b = integrate(f, rho);
  rho /= out.b;
  const Eigen::VectorXd num = cheb::antiderivative(cheb::coeffs_lobatto(rho - Eigen::VectorXd::Ones(m)));
  const int mg = 2 * m;
  const Eigen::VectorXd gx = cheb::gauss(mg);
  Eigen::VectorXd dpsi(mg);
  for (int j = 0; j < mg; ++j) dpsi(j) = cheb::evaluate(num, gx(j)) / theta0(gx(j));
  Eigen::VectorXd pc = cheb::chop(cheb::antiderivative(cheb::coeffs_gauss(dpsi)));
  pc(0) -= detail::series_sup(pc);
  out.psi.resize(m);
  for (int j = 0; j < m; ++j) out.psi(j) = cheb::evaluate(pc, f.x(j)) / kLambda;
  // defining equation on the nodes
  const Eigen::VectorXd dc = cheb::derivative(pc);
  Eigen::VectorXd mu_psi(m);
  for (int j = 0; j < m; ++j) mu_psi(j) = f.x(j) + theta0(f.x(j)) * cheb::evaluate(dc, f.x(j));
  const Eigen::VectorXd dmu_psi = cheb::diff_matrix(m) * mu_psi;
  out.residual = (dmu_psi - rho).cwiseAbs().maxCoeff();
  out.area = integrate(f, dmu_psi);
  return out;
}

struct EstimateReport {
  double ent = 0, ent_v = 0, m_v = 0, b = 0;
  double sup_F = 0, inf_F = 0;
  double sup_trace0 = 0;                  // sup Lambda_0(omega_phi)
  std::vector<std::pair<int, double>> lp;  // ||Lambda_0(omega_phi)||_{L^p(omega_0)}
  double sup_dF2 = 0;                     // sup |dF|^2_phi
  double sup_dF2_plus_trace0 = 0;
  double eps = 0.5, A = 0;
  double sup_F_eps_psi_A_phi = 0;
  AuxiliaryPsi psi;
  double eta = 0, L = 0;
  bool jensen = false;
  double b_bound = 0;
  bool b_ok = false;
};

inline constexpr double kA0 = 4 * std::numbers::pi;  // Ric(omega_0) = 4 pi omega_0

inline EstimateReport compute_estimates(const SphereField& f, const WeightBounds& wb, double eps = 0.5,
                                        double A = 2 * kA0 + 1) {
  const int m = static_cast<int>(f.x.size());
  EstimateReport r;
  r.eps = eps;
  r.A = A;
  r.eta = wb.eta;
  r.L = wb.L;
  Eigen::VectorXd eF = f.F.array().exp();
  r.m_v = integrate(f, eF);
  Eigen::VectorXd t(m);
  for (int j = 0; j < m; ++j) t(j) = f.dmu(j) * std::log(f.dmu(j));
  r.ent = integrate(f, t);
  for (int j = 0; j < m; ++j) t(j) = (f.F(j) - std::log(r.m_v)) * eF(j);
  r.ent_v = integrate(f, t) / r.m_v;
  for (int j = 0; j < m; ++j) t(j) = std::sqrt(f.F(j) * f.F(j) + 1) * f.dmu(j);
  r.b = integrate(f, t);
  r.sup_F = f.F.maxCoeff();
  r.inf_F = f.F.minCoeff();
  r.sup_trace0 = f.dmu.maxCoeff();
  for (int p : {1, 2, 4, 8}) r.lp.emplace_back(p, std::pow(integrate(f, f.dmu.array().pow(p).matrix()), 1.0 / p));
  const Eigen::VectorXd dF = cheb::diff_matrix(m) * f.F;
  for (int j = 0; j < m; ++j) {
    const double g = kLambda * dF(j) * dF(j) * theta0(f.x(j)) / f.dmu(j);
    r.sup_dF2 = std::max(r.sup_dF2, g);
    r.sup_dF2_plus_trace0 = std::max(r.sup_dF2_plus_trace0, g + f.dmu(j));
  }
  r.psi = solve_auxiliary_psi(f);
  r.sup_F_eps_psi_A_phi = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < m; ++j)
    r.sup_F_eps_psi_A_phi = std::max(r.sup_F_eps_psi_A_phi, f.F(j) + eps * r.psi.psi(j) - A * f.phi(j));
  r.jensen = r.ent_v >= -1e-12;
  r.b_bound = std::sqrt(2.0) / wb.eta * (std::numbers::e + r.ent_v);
  r.b_ok = r.b <= r.b_bound;
  return r;
}

// Entropy comparison along the automorphism family.
// forward:  Ent_v <= L' log L'/m_v + (L/m_v)(Ent + 1/e) - log m_v,  L' = max(L, 1)
// converse: Ent <= (m_v/eta)(Ent_v + 1/e) + log m_v + log(1/eta)
struct EntropyMember {
  double s = 0;
  double ent = 0, ent_v = 0, m_v = 0, sup_F = 0;
  double forward_bound = 0, converse_bound = 0;
  bool forward_ok = false, converse_ok = false;
};

inline std::vector<EntropyMember> entropy_family(const Expr& v, const WeightBounds& wb, int members = 20,
                                                 double s_max = 1.9, int nodes = 257) {
  std::vector<EntropyMember> out;
  const double L = wb.L, Lp = std::max(wb.L, 1.0), eta = wb.eta;
  for (int k = 0; k < members; ++k) {
    EntropyMember e;
    e.s = s_max * k / (members - 1);
    const EstimateReport r = compute_estimates(automorphism_field(v, e.s, nodes), wb);
    e.ent = r.ent;
    e.ent_v = r.ent_v;
    e.m_v = r.m_v;
    e.sup_F = r.sup_F;
    e.forward_bound = Lp * std::log(Lp) / r.m_v + L / r.m_v * (r.ent + std::exp(-1.0)) - std::log(r.m_v);
    e.converse_bound = r.m_v / eta * (r.ent_v + std::exp(-1.0)) + std::log(r.m_v) + std::log(1 / eta);
    e.forward_ok = e.ent_v <= e.forward_bound;
    e.converse_ok = e.ent <= e.converse_bound;
    out.push_back(e);
  }
  return out;
}

// Pushforward of omega_phi under mu against the uniform measure, chi^2 over bins.
inline double duistermaat_heckman_chi2(const SphereField& f, int bins = 16) {
  const Eigen::VectorXd cm = cheb::coeffs_lobatto(f.mu), cd = cheb::coeffs_lobatto(f.dmu);
  std::vector<double> edges(bins + 1);
  for (int k = 0; k <= bins; ++k) edges[k] = k == 0 ? -1.0 : k == bins ? 1.0 : invert_increasing(cm, -1.0 + 2.0 * k / bins);
  double chi2 = 0.0;
  const double expect = 1.0 / bins;
  for (int k = 0; k < bins; ++k) {
    const double mass = 0.5 * boost::math::quadrature::gauss<double, 30>::integrate(
                                  [&](double x) { return cheb::evaluate(cd, x); }, edges[k], edges[k + 1]);
    chi2 += (mass - expect) * (mass - expect) / expect;
  }
  return chi2;
}

// Global self-adjointness and pointwise Leibniz rule of the weighted Laplacian on
// a solution, using chart-engine Laplacians at the collocation nodes.
struct LaplacianChecks {
  double self_adjoint = 0;  // |<f, L h> - <h, L f>| / (|f|_inf |h|_inf)
  double leibniz = 0;       // sup |L(fh) - f L h - h L f - 2 g(df, dh)|
};

inline LaplacianChecks laplacian_checks(const GlobalSolution& sol, const Eigen::VectorXd& fc,
                                        const Eigen::VectorXd& hc) {
  const int m = static_cast<int>(sol.x.size());
  const InvariantSeries phi = sol.potential();
  const InvariantSeries f{fc, 1.0, 1.0}, h{hc, 1.0, 1.0};
  double ifl = 0, ihl = 0, fmax = 0, hmax = 0;
  LaplacianChecks out;
  for (int j = 0; j < m; ++j) {
    auto s = reconstruct_at(phi, sol.v, sol.w, sol.x(j));
    const double o = s->chart == &north_chart() ? 1.0 : -1.0;
    auto x = coordinate_jets<1, CJet<1>>(chart_point(sol.x(j)).p);
    std::span<const CJet<1>> xs(x.data(), x.size());
    const CJet<1> fj = f.on(o).eval<CJet<1>>(xs), hj = h.on(o).eval<CJet<1>>(xs);
    const double Lf = weighted_laplacian(s->ctx, fj, LaplacianForm::Adjoint);
    const double Lh = weighted_laplacian(s->ctx, hj, LaplacianForm::Adjoint);
    const double Lfh = weighted_laplacian(s->ctx, fj * hj, LaplacianForm::Adjoint);
    const double cross = gradient_ops(s->state, fj).df.dot(s->state.ginv() * gradient_ops(s->state, hj).df);
    out.leibniz = std::max(out.leibniz, std::abs(Lfh - fj.value() * Lh - hj.value() * Lf - 2 * cross));
    // measure v(mu_phi) omega_phi = v dmu omega_0
    const double wgt = 0.5 * sol.cc(j) * s->ctx.vval * sol.dmu(j);
    ifl += wgt * fj.value() * Lh;
    ihl += wgt * hj.value() * Lf;
    fmax = std::max(fmax, std::abs(fj.value()));
    hmax = std::max(hmax, std::abs(hj.value()));
  }
  out.self_adjoint = std::abs(ifl - ihl) / (fmax * hmax);
  return out;
}

}  // namespace wcsk::sphere
