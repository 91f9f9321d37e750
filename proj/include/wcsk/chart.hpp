#pragma once

// Pointwise Kähler geometry on torus-invariant charts.
//
// Real coordinates (x_1, y_1, ..., x_n, y_n), z_k = x_k + i y_k,
// J e_{x_k} = e_{y_k}. For a potential psi: d^c psi = -d psi o J,
// omega = d d^c psi (= 2i d dbar psi), g = omega(., J .). The torus rotates
// the first r complex coordinates; mu^a = d^c psi(xi_a) + offset_a.
// Every field is carried as a Taylor jet so derived quantities keep their
// own derivatives (Ricci needs four derivatives of the potential).

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "wcsk/expr.hpp"
#include "wcsk/jet.hpp"
#include "wcsk/weights.hpp"

namespace wcsk {

inline constexpr int kJetOrder = 5;

template <int n>
using CJet = Jet<2 * n, kJetOrder>;
template <int n>
using RVec = Eigen::Matrix<double, 2 * n, 1>;
template <int n>
using RMat = Eigen::Matrix<double, 2 * n, 2 * n>;
template <class J, int D>
using JMat = std::array<std::array<J, D>, D>;

class DegenerateMetric : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// J(i, l) = i-th component of J e_l
template <int n>
RMat<n> complex_structure() {
  RMat<n> J = RMat<n>::Zero();
  for (int k = 0; k < n; ++k) {
    J(2 * k + 1, 2 * k) = 1.0;
    J(2 * k, 2 * k + 1) = -1.0;
  }
  return J;
}

template <int n>
struct ChartSpec {
  std::string name;
  int rank = 1;
  Expr psi0;
  std::vector<double> moment_offset;  // size rank
  Polytope polytope;                  // in chart moment coordinates
  AffineMap weight_map;               // chart moment coordinates -> roster coordinates
  std::array<double, n> radius{};     // sampling radius per complex coordinate
};

// --- generic jet tensor helpers -------------------------------------------

template <int n, class J>
std::array<J, 2 * n> coordinate_jets(const RVec<n>& p) {
  std::array<J, 2 * n> x;
  for (int i = 0; i < 2 * n; ++i) x[i] = J::variable(i, p(i));
  return x;
}

template <int n, class J>
std::array<J, 2 * n> grad_jet(const J& f) {
  std::array<J, 2 * n> d;
  for (int i = 0; i < 2 * n; ++i) d[i] = f.diff(i);
  return d;
}

// (d^c f)_l = -sum_i d_i f J(i, l); J has one entry per column
template <int n, class J>
std::array<J, 2 * n> dc_jet(const std::array<J, 2 * n>& df) {
  std::array<J, 2 * n> a;
  for (int k = 0; k < n; ++k) {
    a[2 * k] = -df[2 * k + 1];
    a[2 * k + 1] = df[2 * k];
  }
  return a;
}

template <int n, class J>
JMat<J, 2 * n> exterior_d(const std::array<J, 2 * n>& a) {
  constexpr int D = 2 * n;
  JMat<J, D> w;
  for (int k = 0; k < D; ++k) {
    w[k][k] = J(0.0);
    for (int l = k + 1; l < D; ++l) {
      w[k][l] = a[l].diff(k) - a[k].diff(l);
      w[l][k] = -w[k][l];
    }
  }
  return w;
}

template <int n, class J>
JMat<J, 2 * n> ddc_jet(const J& f) {
  return exterior_d<n, J>(dc_jet<n, J>(grad_jet<n, J>(f)));
}

// b(X, Y) = beta(X, J Y): b_kl = sum_m beta_km J(m, l)
template <int n, class J>
JMat<J, 2 * n> lower_J(const JMat<J, 2 * n>& beta) {
  constexpr int D = 2 * n;
  JMat<J, D> b;
  for (int k = 0; k < D; ++k)
    for (int q = 0; q < n; ++q) {
      b[k][2 * q] = beta[k][2 * q + 1];
      b[k][2 * q + 1] = -beta[k][2 * q];
    }
  return b;
}

// Gauss-Jordan inverse and log-determinant of a symmetric positive matrix of jets.
template <class J, int D>
void invert_spd(const JMat<J, D>& a, JMat<J, D>& inv, J& logdet) {
  JMat<J, D> m = a;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) inv[i][j] = J(i == j ? 1.0 : 0.0);
  logdet = J(0.0);
  for (int c = 0; c < D; ++c) {
    if (!(m[c][c].value() > 0.0)) throw DegenerateMetric("metric is not positive definite");
    using std::log;
    logdet = logdet + log(m[c][c]);
    J piv = reciprocal(m[c][c]);
    for (int j = 0; j < D; ++j) {
      m[c][j] = m[c][j] * piv;
      inv[c][j] = inv[c][j] * piv;
    }
    for (int i = 0; i < D; ++i) {
      if (i == c) continue;
      J f = m[i][c];
      for (int j = 0; j < D; ++j) {
        m[i][j] = m[i][j] - f * m[c][j];
        inv[i][j] = inv[i][j] - f * inv[c][j];
      }
    }
  }
}

// Lambda(beta) = <beta, omega>_g = -1/2 sum J(k,m) g^{ml} beta_kl
template <int n, class J>
J trace_jet(const JMat<J, 2 * n>& ginv, const JMat<J, 2 * n>& beta) {
  J s(0.0);
  for (int q = 0; q < n; ++q) {
    // J(2q+1, 2q) = 1, J(2q, 2q+1) = -1
    for (int l = 0; l < 2 * n; ++l) {
      s = s + ginv[2 * q][l] * beta[2 * q + 1][l];
      s = s - ginv[2 * q + 1][l] * beta[2 * q][l];
    }
  }
  return s * (-0.5);
}

template <int n, class J>
J laplacian_jet(const JMat<J, 2 * n>& ginv, const J& f) {
  return trace_jet<n, J>(ginv, ddc_jet<n, J>(f));
}

template <int n, class J>
J norm2_jet(const JMat<J, 2 * n>& ginv, const std::array<J, 2 * n>& a, const std::array<J, 2 * n>& b) {
  J s(0.0);
  for (int k = 0; k < 2 * n; ++k)
    for (int l = 0; l < 2 * n; ++l) s = s + ginv[k][l] * a[k] * b[l];
  return s;
}

template <class J, int D>
Eigen::Matrix<double, D, D> values(const JMat<J, D>& m) {
  Eigen::Matrix<double, D, D> r;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) r(i, j) = m[i][j].value();
  return r;
}
template <class J, int D>
Eigen::Matrix<double, D, 1> values(const std::array<J, D>& v) {
  Eigen::Matrix<double, D, 1> r;
  for (int i = 0; i < D; ++i) r(i) = v[i].value();
  return r;
}

// --- Kähler data of a single potential ------------------------------------

template <int n, class J>
struct KahlerData {
  static constexpr int D = 2 * n;
  J psi;
  std::array<J, D> dpsi;
  std::array<J, D> dc;  // d^c psi
  JMat<J, D> omega, g, ginv;
  J logdet;  // log det of the real metric matrix
};

template <int n, class J>
KahlerData<n, J> kahler_data(const J& psi) {
  constexpr int D = 2 * n;
  KahlerData<n, J> k;
  k.psi = psi;
  k.dpsi = grad_jet<n, J>(psi);
  k.dc = dc_jet<n, J>(k.dpsi);
  k.omega = exterior_d<n, J>(k.dc);
  JMat<J, D> g = lower_J<n, J>(k.omega);
  for (int i = 0; i < D; ++i)
    for (int j = i + 1; j < D; ++j) {
      J s = (g[i][j] + g[j][i]) * 0.5;
      g[i][j] = s;
      g[j][i] = s;
    }
  k.g = g;
  invert_spd<J, D>(k.g, k.ginv, k.logdet);
  return k;
}

// Gamma[k][i][j] = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)
template <int n, class J>
using Christoffel = std::array<std::array<std::array<J, 2 * n>, 2 * n>, 2 * n>;

template <int n, class J>
Christoffel<n, J> christoffel(const KahlerData<n, J>& k) {
  constexpr int D = 2 * n;
  std::array<JMat<J, D>, D> dg;  // dg[m][i][j] = d_m g_ij
  for (int m = 0; m < D; ++m)
    for (int i = 0; i < D; ++i)
      for (int j = i; j < D; ++j) {
        dg[m][i][j] = k.g[i][j].diff(m);
        dg[m][j][i] = dg[m][i][j];
      }
  Christoffel<n, J> G;
  for (int i = 0; i < D; ++i)
    for (int j = i; j < D; ++j) {
      std::array<J, D> low;  // Gamma_{l,ij}
      for (int l = 0; l < D; ++l) low[l] = (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]) * 0.5;
      for (int kk = 0; kk < D; ++kk) {
        J s(0.0);
        for (int l = 0; l < D; ++l) s = s + k.ginv[kk][l] * low[l];
        G[kk][i][j] = s;
        G[kk][j][i] = s;
      }
    }
  return G;
}

// --- chart-level types ------------------------------------------------------

template <int n>
struct PotentialJet {
  RVec<n> point;
  CJet<n> psi0;
  CJet<n> phi;
};

// Pot: any closed form with `template <class T> T eval(std::span<const T>)`.
template <int n, class Pot = Expr>
PotentialJet<n> jet_at(const ChartSpec<n>& spec, const Pot& phi, const RVec<n>& p) {
  auto x = coordinate_jets<n, CJet<n>>(p);
  std::span<const CJet<n>> xs(x.data(), x.size());
  return {p, spec.psi0.template eval<CJet<n>>(xs), phi.template eval<CJet<n>>(xs)};
}

// Rotation fields xi_a = x_a d/dy_a - y_a d/dx_a as jets.
template <int n>
std::vector<std::array<CJet<n>, 2 * n>> rotation_fields(int rank, const RVec<n>& p) {
  auto x = coordinate_jets<n, CJet<n>>(p);
  std::vector<std::array<CJet<n>, 2 * n>> xi(rank);
  for (int a = 0; a < rank; ++a) {
    for (auto& c : xi[a]) c = CJet<n>(0.0);
    xi[a][2 * a] = -x[2 * a + 1];
    xi[a][2 * a + 1] = x[2 * a];
  }
  return xi;
}

template <int n>
struct MetricState {
  static constexpr int D = 2 * n;
  using J = CJet<n>;
  const ChartSpec<n>* spec = nullptr;
  RVec<n> point;
  PotentialJet<n> jet;
  KahlerData<n, J> bg, ph;  // omega_0 and omega_phi
  std::vector<std::array<J, D>> xi;
  std::vector<J> mu0, mu;   // moment maps
  J log_volratio;           // log(omega_phi^n / omega_0^n)
  JMat<J, D> ric0, ric;     // Ricci forms
  Christoffel<n, J> gamma0, gamma;
  double min_eig = 0.0;     // smallest eigenvalue of g_phi
  double min_rel_eig = 0.0; // smallest eigenvalue of g_phi relative to g_0

  int rank() const { return static_cast<int>(mu.size()); }
  RMat<n> g0() const { return values<J, D>(bg.g); }
  RMat<n> g() const { return values<J, D>(ph.g); }
  RMat<n> g0inv() const { return values<J, D>(bg.ginv); }
  RMat<n> ginv() const { return values<J, D>(ph.ginv); }
  RMat<n> omega0() const { return values<J, D>(bg.omega); }
  RMat<n> omega() const { return values<J, D>(ph.omega); }
  double volratio() const { return std::exp(log_volratio.value()); }
  std::vector<double> mu_values() const {
    std::vector<double> m;
    for (const auto& j : mu) m.push_back(j.value());
    return m;
  }
};

template <int n>
std::vector<CJet<n>> moment_jets(const KahlerData<n, CJet<n>>& k,
                                 const std::vector<std::array<CJet<n>, 2 * n>>& xi,
                                 const std::vector<double>& offset) {
  std::vector<CJet<n>> mu;
  for (std::size_t a = 0; a < xi.size(); ++a) {
    CJet<n> s(offset[a]);
    for (int l = 0; l < 2 * n; ++l) s = s + k.dc[l] * xi[a][l];
    mu.push_back(s);
  }
  return mu;
}

template <int n>
MetricState<n> metric_state(const ChartSpec<n>& spec, const PotentialJet<n>& jet) {
  using J = CJet<n>;
  constexpr int D = 2 * n;
  MetricState<n> s;
  s.spec = &spec;
  s.point = jet.point;
  s.jet = jet;
  s.bg = kahler_data<n, J>(jet.psi0);
  try {
    s.ph = kahler_data<n, J>(jet.psi0 + jet.phi);
  } catch (const DegenerateMetric&) {
    throw DegenerateMetric("omega_phi is not positive at the point");
  }
  Eigen::SelfAdjointEigenSolver<RMat<n>> es(s.g());
  s.min_eig = es.eigenvalues().minCoeff();
  if (s.min_eig <= 1e-12) throw DegenerateMetric("degenerate metric (min eigenvalue <= 1e-12)");
  Eigen::GeneralizedSelfAdjointEigenSolver<RMat<n>> ges(s.g(), s.g0());
  s.min_rel_eig = ges.eigenvalues().minCoeff();
  s.xi = rotation_fields<n>(spec.rank, jet.point);
  s.mu0 = moment_jets<n>(s.bg, s.xi, spec.moment_offset);
  s.mu = moment_jets<n>(s.ph, s.xi, spec.moment_offset);
  // omega^n ratio is the ratio of Pfaffians: sqrt of the real determinant ratio
  s.log_volratio = (s.ph.logdet - s.bg.logdet) * 0.5;
  // Ric = -1/2 dd^c log det(g_{j kbar}) = -1/4 dd^c log det(g_real)
  auto r0 = ddc_jet<n, J>(s.bg.logdet);
  auto rp = ddc_jet<n, J>(s.ph.logdet);
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) {
      s.ric0[i][j] = r0[i][j] * (-0.25);
      s.ric[i][j] = rp[i][j] * (-0.25);
    }
  s.gamma0 = christoffel<n, J>(s.bg);
  s.gamma = christoffel<n, J>(s.ph);
  return s;
}

// --- pointwise operations ---------------------------------------------------

enum class Which { Background, Phi };

template <int n>
const KahlerData<n, CJet<n>>& kdata(const MetricState<n>& s, Which w) {
  return w == Which::Background ? s.bg : s.ph;
}

template <int n>
double trace(const MetricState<n>& s, const RMat<n>& beta, Which w) {
  const RMat<n> J = complex_structure<n>();
  const RMat<n> ginv = values<CJet<n>, 2 * n>(kdata(s, w).ginv);
  return -0.5 * (J * ginv).cwiseProduct(beta).sum();
}

template <int n>
CJet<n> trace_field(const MetricState<n>& s, const JMat<CJet<n>, 2 * n>& beta, Which w) {
  return trace_jet<n, CJet<n>>(kdata(s, w).ginv, beta);
}

template <int n>
CJet<n> laplacian_field(const MetricState<n>& s, const CJet<n>& f, Which w) {
  return laplacian_jet<n, CJet<n>>(kdata(s, w).ginv, f);
}

template <int n>
struct GradientOps {
  RVec<n> df, dcf, grad;  // grad = g_phi^{-1} df
  double norm2 = 0, lap_phi = 0, lap_0 = 0;
};

template <int n>
GradientOps<n> gradient_ops(const MetricState<n>& s, const CJet<n>& f) {
  GradientOps<n> o;
  for (int i = 0; i < 2 * n; ++i) o.df(i) = f.d1(i);
  o.dcf = -complex_structure<n>().transpose() * o.df;
  o.grad = s.ginv() * o.df;
  o.norm2 = o.df.dot(o.grad);
  o.lap_phi = laplacian_field(s, f, Which::Phi).value();
  o.lap_0 = laplacian_field(s, f, Which::Background).value();
  return o;
}

template <int n>
RMat<n> hessian_values(const CJet<n>& f) {
  RMat<n> h;
  for (int i = 0; i < 2 * n; ++i)
    for (int j = 0; j < 2 * n; ++j) h(i, j) = f.d2(i, j);
  return h;
}

template <int n>
struct CovariantHessian {
  RMat<n> full, plus, minus;
};

template <int n>
CovariantHessian<n> covariant_hessian(const MetricState<n>& s, const CJet<n>& f, Which w) {
  constexpr int D = 2 * n;
  const auto& G = w == Which::Background ? s.gamma0 : s.gamma;
  CovariantHessian<n> h;
  h.full = hessian_values<n>(f);
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j)
      for (int k = 0; k < D; ++k) h.full(i, j) -= G[k][i][j].value() * f.d1(k);
  const RMat<n> J = complex_structure<n>();
  const RMat<n> rot = J.transpose() * h.full * J;
  h.plus = 0.5 * (h.full + rot);
  h.minus = 0.5 * (h.full - rot);
  return h;
}

// inner product of 2-forms, <a, b> = 1/2 g^{ik} g^{jl} a_ij b_kl
template <int n>
double form_inner(const RMat<n>& ginv, const RMat<n>& a, const RMat<n>& b) {
  return 0.5 * (ginv * a * ginv).cwiseProduct(b).sum();
}

// (nabla^0_m omega_phi)_{ij} at the point
template <int n>
std::array<RMat<n>, 2 * n> nabla0_omega(const MetricState<n>& s) {
  constexpr int D = 2 * n;
  std::array<RMat<n>, D> out;
  const RMat<n> w = s.omega();
  for (int m = 0; m < D; ++m) {
    RMat<n> G;  // G(p, i) = Gamma0^p_{m i}
    for (int p = 0; p < D; ++p)
      for (int i = 0; i < D; ++i) G(p, i) = s.gamma0[p][m][i].value();
    RMat<n> dw;
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) dw(i, j) = s.ph.omega[i][j].d1(m);
    out[m] = dw - G.transpose() * w - w * G;
  }
  return out;
}

// |nabla^0 omega_phi|^2_{g_0 (x) g_phi} by coordinate contraction
template <int n>
double nabla0_omega_norm(const MetricState<n>& s) {
  constexpr int D = 2 * n;
  const auto N = nabla0_omega(s);
  const RMat<n> g0i = s.g0inv(), gi = s.ginv();
  double r = 0.0;
  for (int m = 0; m < D; ++m)
    for (int q = 0; q < D; ++q) r += g0i(m, q) * form_inner<n>(gi, N[m], N[q]);
  return r;
}

// Same norm summed over a g_0-orthonormal frame (e_k, J e_k), k = 1..n.
template <int n>
double nabla0_omega_norm_frame(const MetricState<n>& s, const std::array<RVec<n>, n>& e) {
  constexpr int D = 2 * n;
  const auto N = nabla0_omega(s);
  const RMat<n> gi = s.ginv();
  const RMat<n> J = complex_structure<n>();
  double r = 0.0;
  for (int k = 0; k < n; ++k)
    for (const RVec<n>& v : {RVec<n>(e[k]), RVec<n>(J * e[k])}) {
      RMat<n> Nv = RMat<n>::Zero();
      for (int m = 0; m < D; ++m) Nv += v(m) * N[m];
      r += form_inner<n>(gi, Nv, Nv);
    }
  return r;
}

// Random g-orthonormal frame (e_k) with J e_k completing it.
template <int n, class Rng>
std::array<RVec<n>, n> random_unitary_frame(const RMat<n>& g, Rng& next_normal) {
  const RMat<n> J = complex_structure<n>();
  std::array<RVec<n>, n> e;
  std::vector<RVec<n>> basis;
  for (int k = 0; k < n; ++k) {
    RVec<n> v;
    for (int i = 0; i < 2 * n; ++i) v(i) = next_normal();
    for (const auto& b : basis) v -= (b.dot(g * v)) * b;
    v /= std::sqrt(v.dot(g * v));
    e[k] = v;
    basis.push_back(v);
    basis.push_back(J * v);
  }
  return e;
}

// --- curvature of the background --------------------------------------------

// R[l][i][j][k]: R(e_i, e_j) e_k = R^l_{ijk} e_l
template <int n>
using Riemann = std::array<std::array<std::array<std::array<double, 2 * n>, 2 * n>, 2 * n>, 2 * n>;

template <int n>
Riemann<n> riemann(const Christoffel<n, CJet<n>>& G) {
  constexpr int D = 2 * n;
  Riemann<n> R{};
  for (int l = 0; l < D; ++l)
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j)
        for (int k = 0; k < D; ++k) {
          double v = G[l][j][k].d1(i) - G[l][i][k].d1(j);
          for (int m = 0; m < D; ++m)
            v += G[l][i][m].value() * G[m][j][k].value() - G[l][j][m].value() * G[m][i][k].value();
          R[l][i][j][k] = v;
        }
  return R;
}

// g(R(X, Y) Z, W)
template <int n>
double riemann_eval(const Riemann<n>& R, const RMat<n>& g, const RVec<n>& X, const RVec<n>& Y,
                    const RVec<n>& Z, const RVec<n>& W) {
  constexpr int D = 2 * n;
  RVec<n> out = RVec<n>::Zero();
  for (int l = 0; l < D; ++l)
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j)
        for (int k = 0; k < D; ++k) out(l) += R[l][i][j][k] * X(i) * Y(j) * Z(k);
  return out.dot(g * W);
}

struct CurvatureBounds {
  double A0 = 0.0;             // -A0 omega_0 <= Ric(omega_0) <= A0 omega_0
  double bisectional_min = 0;  // lower bound of holomorphic bisectional curvature
  std::size_t samples = 0;
};

// eigenvalues of g_0^{-1} ric_0 at the point
template <int n>
Eigen::Matrix<double, 2 * n, 1> ricci_eigenvalues(const MetricState<n>& s) {
  const RMat<n> ric = values<CJet<n>, 2 * n>(lower_J<n, CJet<n>>(s.ric0));
  Eigen::GeneralizedSelfAdjointEigenSolver<RMat<n>> es(0.5 * (ric + ric.transpose()), s.g0());
  return es.eigenvalues();
}

template <int n, class Rng>
double bisectional_min_at(const MetricState<n>& s, Rng& next_normal, int pairs = 32) {
  const Riemann<n> R = riemann<n>(s.gamma0);
  const RMat<n> g = s.g0(), J = complex_structure<n>();
  double best = std::numeric_limits<double>::infinity();
  auto eval = [&](RVec<n> X, RVec<n> Y) {
    X /= std::sqrt(X.dot(g * X));
    Y /= std::sqrt(Y.dot(g * Y));
    best = std::min(best, riemann_eval<n>(R, g, X, J * X, J * Y, Y));
  };
  for (int i = 0; i < 2 * n; ++i)
    for (int j = 0; j < 2 * n; ++j) eval(RVec<n>::Unit(i), RVec<n>::Unit(j));
  for (int q = 0; q < pairs; ++q) {
    RVec<n> X, Y;
    for (int i = 0; i < 2 * n; ++i) X(i) = next_normal();
    for (int i = 0; i < 2 * n; ++i) Y(i) = next_normal();
    eval(X, Y);
  }
  return best;
}

// --- (1,1)-form fields and the differentiated trace -------------------------

// beta(X, Y) = S^+(J X, Y) for a symmetric tensor field S, S^+ its J-invariant part.
template <int n>
struct FormField {
  std::vector<Expr> s;  // upper triangle of S, row-major

  template <class J>
  JMat<J, 2 * n> eval(const std::array<J, 2 * n>& x) const {
    constexpr int D = 2 * n;
    std::span<const J> xs(x.data(), x.size());
    JMat<J, D> S;
    int q = 0;
    for (int i = 0; i < D; ++i)
      for (int j = i; j < D; ++j) {
        S[i][j] = s[q++].template eval<J>(xs);
        S[j][i] = S[i][j];
      }
    // S^+(X, Y) = 1/2 (S(X, Y) + S(JX, JY)); beta_ij = S^+(J e_i, e_j)
    const RMat<n> Jm = complex_structure<n>();
    JMat<J, D> Sp, beta;
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) {
        J v = S[i][j];
        for (int a = 0; a < D; ++a)
          for (int b = 0; b < D; ++b)
            if (Jm(a, i) != 0.0 && Jm(b, j) != 0.0) v = v + S[a][b] * (Jm(a, i) * Jm(b, j));
        Sp[i][j] = v * 0.5;
      }
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) {
        J v(0.0);
        for (int m = 0; m < D; ++m)
          if (Jm(m, i) != 0.0) v = v + Sp[m][j] * Jm(m, i);
        beta[i][j] = v;
      }
    return beta;
  }
};

// Ridders' extrapolated central difference of h at 0.
template <class F>
double ridders_derivative(F&& h, double step, double* err_out = nullptr) {
  constexpr int ntab = 10;
  constexpr double con = 1.4, con2 = con * con, safe = 2.0;
  double a[ntab][ntab];
  double hh = step, err = std::numeric_limits<double>::max(), ans = 0.0;
  a[0][0] = (h(hh) - h(-hh)) / (2.0 * hh);
  for (int i = 1; i < ntab; ++i) {
    hh /= con;
    a[0][i] = (h(hh) - h(-hh)) / (2.0 * hh);
    double fac = con2;
    for (int j = 1; j <= i; ++j) {
      a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
      fac *= con2;
      double e = std::max(std::abs(a[j][i] - a[j - 1][i]), std::abs(a[j][i] - a[j - 1][i - 1]));
      if (e <= err) {
        err = e;
        ans = a[j][i];
      }
    }
    if (std::abs(a[i][i] - a[i - 1][i - 1]) >= safe * err) break;
  }
  if (err_out) *err_out = err;
  return ans;
}

struct DiffTraceResult {
  double lhs = 0, rhs = 0, residual = 0;
};

// Checks d Lambda_phi(beta)(V) = Lambda_phi(nabla^0_V beta) - g_phi(beta, nabla^0_V omega_phi).
// The left side is a divided difference along p + tV.
template <int n, class Pot = Expr>
DiffTraceResult diff_trace_check(const ChartSpec<n>& spec, const Pot& phi, const FormField<n>& beta,
                                 const MetricState<n>& s, const RVec<n>& V) {
  constexpr int D = 2 * n;
  using L = Jet<D, 2>;
  auto trace_at = [&](double t) {
    RVec<n> q = s.point + t * V;
    auto x = coordinate_jets<n, L>(q);
    std::span<const L> xs(x.data(), x.size());
    auto k = kahler_data<n, L>(spec.psi0.template eval<L>(xs) + phi.template eval<L>(xs));
    return trace_jet<n, L>(k.ginv, beta.template eval<L>(x)).value();
  };
  DiffTraceResult r;
  // several starting steps; keep the extrapolation with the smallest error estimate
  double best = std::numeric_limits<double>::max();
  for (double h0 : {1e-2, 2e-3, 4e-4}) {
    double err = 0.0;
    const double d = ridders_derivative(trace_at, h0 / std::max(1.0, V.norm()), &err);
    if (err < best) {
      best = err;
      r.lhs = d;
    }
  }

  auto x = coordinate_jets<n, CJet<n>>(s.point);
  const auto B = beta.template eval<CJet<n>>(x);
  RMat<n> b = values<CJet<n>, D>(B), nb = RMat<n>::Zero(), nw = RMat<n>::Zero();
  const auto N = nabla0_omega(s);
  for (int m = 0; m < D; ++m) {
    RMat<n> G, db;
    for (int p = 0; p < D; ++p)
      for (int i = 0; i < D; ++i) G(p, i) = s.gamma0[p][m][i].value();
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) db(i, j) = B[i][j].d1(m);
    nb += V(m) * (db - G.transpose() * b - b * G);
    nw += V(m) * N[m];
  }
  const RMat<n> J = complex_structure<n>();
  const RMat<n> gi = s.ginv();
  r.rhs = -0.5 * (J * gi).cwiseProduct(nb).sum() - form_inner<n>(gi, b, nw);
  r.residual = std::abs(r.lhs - r.rhs);
  return r;
}

// --- chart families ---------------------------------------------------------

inline constexpr double kPi = std::numbers::pi;

// Fubini-Study potential of unit area in the complex coordinate (x_{2k}, x_{2k+1}).
inline Expr fubini_study(int k) {
  Expr x = Expr::coord(2 * k), y = Expr::coord(2 * k + 1);
  return (1.0 / (4 * kPi)) * log(1.0 + x * x + y * y);
}

inline Expr modulus2(int k) {
  Expr x = Expr::coord(2 * k), y = Expr::coord(2 * k + 1);
  return x * x + y * y;
}

// moment coordinate mu in [0, 1/2pi] -> roster coordinate 4 pi mu - 1 in [-1, 1]
inline AffineMap sphere_weight_map(int rank, double orientation = 1.0) {
  AffineMap a{rank, 2, std::vector<double>(2 * rank, 0.0), {0.0, 0.0}};
  for (int i = 0; i < rank; ++i) {
    a.M[i * rank + i] = 4 * kPi * orientation;
    a.c[i] = -orientation;
  }
  return a;
}

inline ChartSpec<1> flat_chart(double scale = 0.5) {
  // psi0 = scale |z|^2, mu0 = 2 scale |z|^2 on |z| <= 1
  AffineMap m{1, 2, {1.0 / scale, 0.0}, {-1.0, 0.0}};
  return {"flat", 1, scale * modulus2(0), {0.0}, Polytope::interval(0.0, 2 * scale), m, {1.0}};
}

inline ChartSpec<1> sphere_chart(double orientation = 1.0) {
  return {orientation > 0 ? "sphere" : "sphere-south", 1, fubini_study(0), {0.0},
          Polytope::interval(0.0, 1.0 / (2 * kPi)), sphere_weight_map(1, orientation), {2.0}};
}

inline ChartSpec<2> product_chart() {
  return {"product", 2, fubini_study(0) + fubini_study(1), {0.0, 0.0},
          Polytope::box({0.0, 0.0}, {1.0 / (2 * kPi), 1.0 / (2 * kPi)}), sphere_weight_map(2), {1.5, 1.5}};
}

inline ChartSpec<2> partial_chart() {
  return {"partial", 1, fubini_study(0) + (1.0 / (4 * kPi)) * modulus2(1), {0.0},
          Polytope::interval(0.0, 1.0 / (2 * kPi)), sphere_weight_map(1), {1.5, 1.0}};
}

}  // namespace wcsk
