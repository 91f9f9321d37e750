#pragma once

// Weighted trace, Laplacian, Ricci form and scalar curvature, the log density F
// and the residuals of the coupled elliptic system.

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "wcsk/chart.hpp"
#include "wcsk/weights.hpp"

namespace wcsk {

template <int n>
struct WeightedContext {
  static constexpr int D = 2 * n;
  using J = CJet<n>;
  const MetricState<n>* state = nullptr;
  Expr v, w;  // weights pulled back to chart moment coordinates
  double vval = 0, wval = 0;
  Eigen::VectorXd dv, dlogv;           // v_{,a}, (log v)_{,a} at mu_phi
  Eigen::MatrixXd ddv, ddlogv;         // v_{,ab}, (log v)_{,ab}
  Eigen::MatrixXd gxi;                 // g_phi(xi_a, xi_b)
  Eigen::MatrixXd g0dmu;               // g_0(d mu^a, d mu^b)
  J vmu, logvmu;                       // v(mu_phi), log v(mu_phi) as spatial jets
  J F;                                 // log(v(mu_phi) omega_phi^n / omega_0^n)

  const MetricState<n>& s() const { return *state; }
  int rank() const { return state->rank(); }
};

// Weights given on roster coordinates; the chart's affine map pulls them back.
template <int n>
WeightedContext<n> weighted_context(const MetricState<n>& s, const Expr& v_roster, const Expr& w_roster,
                                    double polytope_tol = 1e-9) {
  using J = CJet<n>;
  constexpr int D = 2 * n;
  WeightedContext<n> c;
  c.state = &s;
  c.v = pullback(v_roster, s.spec->weight_map);
  c.w = pullback(w_roster, s.spec->weight_map);
  const auto m = s.mu_values();
  if (!s.spec->polytope.contains(m, polytope_tol))
    throw DomainError("moment map leaves the polytope at this point");
  WeightEval ve = eval_weight(c.v, m, 2);
  if (!(ve.value > 0.0)) throw DomainError("nonpositive weight at mu_phi");
  c.vval = ve.value;
  c.wval = eval_weight(c.w, m, 0).value;
  c.dv = ve.grad;
  c.ddv = ve.hess;
  c.dlogv = ve.grad / ve.value;
  c.ddlogv = log_hessian(ve);
  const int r = s.rank();
  c.gxi.resize(r, r);
  c.g0dmu.resize(r, r);
  const RMat<n> g = s.g(), g0i = s.g0inv();
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b) {
      RVec<n> xa = values<J, D>(s.xi[a]), xb = values<J, D>(s.xi[b]);
      c.gxi(a, b) = xa.dot(g * xb);
      RVec<n> da, db;
      for (int i = 0; i < D; ++i) {
        da(i) = s.mu[a].d1(i);
        db(i) = s.mu[b].d1(i);
      }
      c.g0dmu(a, b) = da.dot(g0i * db);
    }
  std::span<const J> mus(s.mu.data(), s.mu.size());
  c.vmu = c.v.template eval<J>(mus);
  c.logvmu = log(c.vmu);
  c.F = c.logvmu + s.log_volratio;
  return c;
}

// Lambda_{phi,v}(theta) = Lambda_phi(theta) + (1/v) sum v_{,a} mu_theta^a
template <int n>
double weighted_trace(const WeightedContext<n>& c, const RMat<n>& theta, const Eigen::VectorXd& mu_theta) {
  return trace<n>(c.s(), theta, Which::Phi) + c.dlogv.dot(mu_theta);
}

enum class LaplacianForm { Expanded, Adjoint };

template <int n>
double weighted_laplacian(const WeightedContext<n>& c, const CJet<n>& f, LaplacianForm form) {
  using J = CJet<n>;
  constexpr int D = 2 * n;
  const auto& s = c.s();
  if (form == LaplacianForm::Expanded) {
    double lap = laplacian_field(s, f, Which::Phi).value();
    auto a = grad_jet<n, J>(c.logvmu);
    auto b = grad_jet<n, J>(f);
    double cross = 0.0;
    const RMat<n> gi = s.ginv();
    for (int k = 0; k < D; ++k)
      for (int l = 0; l < D; ++l) cross += gi(k, l) * a[k].value() * b[l].value();
    return lap + cross;
  }
  // -(1/v) d*(v df) = 1/(v sqrt(det g)) d_i (sqrt(det g) v g^{ij} d_j f)
  J vol = exp(s.ph.logdet * 0.5) * c.vmu;
  auto df = grad_jet<n, J>(f);
  double div = 0.0;
  for (int i = 0; i < D; ++i) {
    J Y(0.0);
    for (int j = 0; j < D; ++j) Y = Y + s.ph.ginv[i][j] * df[j];
    div += (vol * Y).d1(i);
  }
  return div / vol.value();
}

// Ric_v = Ric(omega_phi) - 1/2 dd^c log v(mu_phi)
template <int n>
JMat<CJet<n>, 2 * n> weighted_ricci(const WeightedContext<n>& c) {
  using J = CJet<n>;
  constexpr int D = 2 * n;
  auto h = ddc_jet<n, J>(c.logvmu);
  JMat<J, D> r;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) r[i][j] = c.s().ric[i][j] - h[i][j] * 0.5;
  return r;
}

template <int n>
double scalar_curvature(const MetricState<n>& s, Which w) {
  const auto& ric = w == Which::Background ? s.ric0 : s.ric;
  return 2.0 * trace_field(s, ric, w).value();
}

// mu_{Ric(omega_0)} = -1/2 Delta_0 mu_0
template <int n>
Eigen::VectorXd ricci0_moment(const MetricState<n>& s) {
  Eigen::VectorXd m(s.rank());
  for (int a = 0; a < s.rank(); ++a) m(a) = -0.5 * laplacian_field(s, s.mu0[a], Which::Background).value();
  return m;
}

// d^c f(xi_a) at the point
template <int n>
Eigen::VectorXd dc_on_xi(const MetricState<n>& s, const CJet<n>& f) {
  constexpr int D = 2 * n;
  Eigen::VectorXd m(s.rank());
  auto a = dc_jet<n, CJet<n>>(grad_jet<n, CJet<n>>(f));
  for (int q = 0; q < s.rank(); ++q) {
    double v = 0.0;
    for (int l = 0; l < D; ++l) v += a[l].value() * s.xi[q][l].value();
    m(q) = v;
  }
  return m;
}

enum class ScalForm { Definitional, TraceForm, System };

template <int n>
double scal_v(const WeightedContext<n>& c, ScalForm form) {
  const auto& s = c.s();
  if (form == ScalForm::Definitional) {
    const double lapv = laplacian_field(s, c.vmu, Which::Phi).value();
    return c.vval * scalar_curvature(s, Which::Phi) - 2.0 * lapv + c.ddv.cwiseProduct(c.gxi).sum();
  }
  if (form == ScalForm::TraceForm) {
    // 2 v Lambda_{phi,v}(Ric_v) with mu_{Ric_v} = mu_{Ric_0} - 1/2 d^c F(xi)
    const auto ricv = weighted_ricci(c);
    const Eigen::VectorXd mu = ricci0_moment(s) - 0.5 * dc_on_xi(s, c.F);
    return 2.0 * c.vval * weighted_trace(c, values<CJet<n>, 2 * n>(ricv), mu);
  }
  // v (-Delta_{phi,v} F + 2 Lambda_{phi,v} Ric(omega_0))
  const double lf = weighted_laplacian(c, c.F, LaplacianForm::Expanded);
  const double tr = weighted_trace(c, values<CJet<n>, 2 * n>(s.ric0), ricci0_moment(s));
  return c.vval * (-lf + 2.0 * tr);
}

template <int n>
double compute_F(const WeightedContext<n>& c) {
  return c.F.value();
}

struct SystemResidual {
  double R1 = 0, R2 = 0;
};

// R1 = F - log(v omega_phi^n/omega_0^n), R2 = Delta_{phi,v} F + w/v - 2 Lambda_{phi,v} Ric(omega_0).
// Without a supplied F the self-consistent F is used (R1 = 0).
template <int n>
SystemResidual system_residual(const WeightedContext<n>& c, const std::optional<CJet<n>>& F_supplied = std::nullopt) {
  const auto& s = c.s();
  const CJet<n>& F = F_supplied ? *F_supplied : c.F;
  SystemResidual r;
  r.R1 = F.value() - c.F.value();
  const double lf = weighted_laplacian(c, F, LaplacianForm::Expanded);
  const double tr = weighted_trace(c, values<CJet<n>, 2 * n>(s.ric0), ricci0_moment(s));
  r.R2 = lf + c.wval / c.vval - 2.0 * tr;
  return r;
}

}  // namespace wcsk
