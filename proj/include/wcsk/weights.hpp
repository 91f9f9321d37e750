#pragma once

// Moment polytopes, weight expressions with exact derivatives, certified
// sampling bounds and log-concavity.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "wcsk/expr.hpp"
#include "wcsk/jet.hpp"

namespace wcsk {

class InvalidWeight : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// { x : <l_i, x> + c_i >= 0 } in R^r, r in {1, 2}.
class Polytope {
 public:
  struct HalfSpace {
    std::vector<double> l;
    double c;
  };

  Polytope(int r, std::vector<HalfSpace> h) : r_(r), h_(std::move(h)) {
    if (r_ < 1 || r_ > 2) throw std::invalid_argument("Polytope: only ranks 1 and 2 are supported");
    for (const auto& s : h_)
      if (static_cast<int>(s.l.size()) != r_) throw std::invalid_argument("Polytope: bad half-space");
    compute_vertices();
    if (verts_.empty()) throw std::invalid_argument("Polytope: empty");
    if (!bounded()) throw std::invalid_argument("Polytope: unbounded");
    lo_.assign(r_, std::numeric_limits<double>::infinity());
    hi_.assign(r_, -std::numeric_limits<double>::infinity());
    for (const auto& v : verts_)
      for (int i = 0; i < r_; ++i) {
        lo_[i] = std::min(lo_[i], v[i]);
        hi_[i] = std::max(hi_[i], v[i]);
      }
  }

  static Polytope interval(double a, double b) {
    return Polytope(1, {{{1.0}, -a}, {{-1.0}, b}});
  }
  static Polytope box(std::vector<double> lo, std::vector<double> hi) {
    const int r = static_cast<int>(lo.size());
    std::vector<HalfSpace> h;
    for (int i = 0; i < r; ++i) {
      std::vector<double> e(r, 0.0);
      e[i] = 1.0;
      h.push_back({e, -lo[i]});
      e[i] = -1.0;
      h.push_back({e, hi[i]});
    }
    return Polytope(r, std::move(h));
  }

  int dim() const { return r_; }
  const std::vector<HalfSpace>& halfspaces() const { return h_; }
  const std::vector<double>& lower() const { return lo_; }
  const std::vector<double>& upper() const { return hi_; }

  // signed distance-like violation (0 inside)
  double violation(std::span<const double> x) const {
    double worst = 0.0;
    for (const auto& s : h_) {
      double v = s.c;
      double nrm = 0.0;
      for (int i = 0; i < r_; ++i) {
        v += s.l[i] * x[i];
        nrm += s.l[i] * s.l[i];
      }
      worst = std::max(worst, -v / std::sqrt(nrm));
    }
    return worst;
  }
  bool contains(std::span<const double> x, double tol = 1e-9) const { return violation(x) <= tol; }

  // Dense grid of `per_axis^r` points over the bounding box, restricted to P.
  std::vector<std::vector<double>> grid(int per_axis) const {
    std::vector<std::vector<double>> pts;
    if (r_ == 1) {
      for (int i = 0; i < per_axis; ++i) pts.push_back({lo_[0] + (hi_[0] - lo_[0]) * i / (per_axis - 1)});
    } else {
      for (int i = 0; i < per_axis; ++i)
        for (int j = 0; j < per_axis; ++j) {
          std::vector<double> x{lo_[0] + (hi_[0] - lo_[0]) * i / (per_axis - 1),
                                lo_[1] + (hi_[1] - lo_[1]) * j / (per_axis - 1)};
          if (contains(x, 1e-12)) pts.push_back(std::move(x));
        }
    }
    return pts;
  }
  // covering radius of grid(per_axis)
  double grid_radius(int per_axis) const {
    double s = 0.0;
    for (int i = 0; i < r_; ++i) {
      double h = (hi_[i] - lo_[i]) / (per_axis - 1) / 2;
      s += h * h;
    }
    return std::sqrt(s);
  }

 private:
  void compute_vertices() {
    if (r_ == 1) {
      double a = -std::numeric_limits<double>::infinity(), b = std::numeric_limits<double>::infinity();
      for (const auto& s : h_) {
        if (s.l[0] > 0) a = std::max(a, -s.c / s.l[0]);
        else if (s.l[0] < 0) b = std::min(b, -s.c / s.l[0]);
        else if (s.c < 0) return;
      }
      if (!(a <= b) || !std::isfinite(a) || !std::isfinite(b)) {
        if (a <= b) verts_.push_back({a});
        return;
      }
      verts_.push_back({a});
      verts_.push_back({b});
      return;
    }
    for (std::size_t i = 0; i < h_.size(); ++i)
      for (std::size_t j = i + 1; j < h_.size(); ++j) {
        const auto& p = h_[i];
        const auto& q = h_[j];
        double det = p.l[0] * q.l[1] - p.l[1] * q.l[0];
        if (std::abs(det) < 1e-14) continue;
        std::vector<double> x{(-p.c * q.l[1] + q.c * p.l[1]) / det, (-q.c * p.l[0] + p.c * q.l[0]) / det};
        if (contains(x, 1e-10)) verts_.push_back(x);
      }
  }
  bool bounded() const {
    if (r_ == 1) return verts_.size() == 2 && std::isfinite(verts_[0][0]) && std::isfinite(verts_[1][0]);
    // a nonzero recession direction would lie on the boundary ray of some constraint
    for (const auto& s : h_)
      for (double sign : {1.0, -1.0}) {
        double d0 = -s.l[1] * sign, d1 = s.l[0] * sign;
        bool rec = true;
        for (const auto& t : h_)
          if (t.l[0] * d0 + t.l[1] * d1 < -1e-14) rec = false;
        if (rec) return false;
      }
    return !h_.empty();
  }

  int r_;
  std::vector<HalfSpace> h_;
  std::vector<std::vector<double>> verts_;
  std::vector<double> lo_, hi_;
};

struct WeightEval {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

// Value, gradient and Hessian of a weight at x; `order` limits the output.
inline WeightEval eval_weight(const Expr& e, std::span<const double> x, int order = 2,
                              const Polytope* P = nullptr) {
  const int r = static_cast<int>(x.size());
  if (r > 4) throw std::invalid_argument("eval_weight: at most 4 coordinates");
  if (P && !P->contains(x)) throw DomainError("eval_weight: point outside the polytope");
  using J = Jet<4, 2>;
  std::vector<J> xs;
  for (int i = 0; i < r; ++i) xs.push_back(J::variable(i, x[i]));
  J v = e.eval<J>(xs);
  WeightEval out;
  out.value = v.value();
  if (order >= 1) {
    out.grad.resize(r);
    for (int i = 0; i < r; ++i) out.grad(i) = v.d1(i);
  }
  if (order >= 2) {
    out.hess.resize(r, r);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) out.hess(i, j) = v.d2(i, j);
  }
  return out;
}

struct WeightBounds {
  double eta = 0, L = 0;        // eta <= v <= L
  double nu = 0, M = 0;         // -nu <= w <= M
  double dv = 0, dw = 0;        // sup |grad v|, sup |grad w|
  double raw_vmin = 0, raw_vmax = 0, raw_wmin = 0, raw_wmax = 0;
  double inflation = 0;         // covering radius used for the Lipschitz margin
  std::size_t samples = 0;
};

struct WeightPair {
  std::string name;
  Expr v, w;
  std::optional<WeightBounds> bounds;
};

inline int default_grid_per_axis(int r) {
  int per = 512;
  while (std::pow(static_cast<double>(per), r) > static_cast<double>(1 << 20)) per /= 2;
  return per;
}

// Sampled extrema inflated by a first-order Lipschitz margin.
inline WeightBounds certify_bounds(const WeightPair& pair, const Polytope& P, int per_axis = 0) {
  if (per_axis <= 0) per_axis = default_grid_per_axis(P.dim());
  const auto pts = P.grid(per_axis);
  WeightBounds b;
  b.raw_vmin = b.raw_wmin = std::numeric_limits<double>::infinity();
  b.raw_vmax = b.raw_wmax = -std::numeric_limits<double>::infinity();
  double hv = 0, hw = 0;  // sup of Hessian norms, for the gradient margin
  for (const auto& x : pts) {
    WeightEval v, w;
    try {
      v = eval_weight(pair.v, x, 2);
      w = eval_weight(pair.w, x, 2);
    } catch (const DomainError& e) {
      throw InvalidWeight(std::string("nonpositive weight or undefined expression: ") + e.what());
    }
    if (!(v.value > 0.0) || !std::isfinite(v.value))
      throw InvalidWeight("nonpositive weight: v(" + std::to_string(x[0]) + (x.size() > 1 ? "," + std::to_string(x[1]) : "") +
                          ") = " + std::to_string(v.value));
    b.raw_vmin = std::min(b.raw_vmin, v.value);
    b.raw_vmax = std::max(b.raw_vmax, v.value);
    b.raw_wmin = std::min(b.raw_wmin, w.value);
    b.raw_wmax = std::max(b.raw_wmax, w.value);
    b.dv = std::max(b.dv, v.grad.norm());
    b.dw = std::max(b.dw, w.grad.norm());
    hv = std::max(hv, v.hess.norm());
    hw = std::max(hw, w.hess.norm());
  }
  const double h = P.grid_radius(per_axis);
  b.inflation = h;
  b.samples = pts.size();
  b.eta = b.raw_vmin - b.dv * h;
  if (b.eta <= 0.0) b.eta = b.raw_vmin / 2;  // margin too coarse; keep a positive bound
  b.L = b.raw_vmax + b.dv * h;
  b.nu = -(b.raw_wmin - b.dw * h);
  b.M = b.raw_wmax + b.dw * h;
  b.dv += hv * h;
  b.dw += hw * h;
  return b;
}

struct LogConcavity {
  bool concave = false;
  double worst_eigenvalue = 0.0;
  std::vector<double> worst_point;
};

inline Eigen::MatrixXd log_hessian(const WeightEval& v) {
  return v.hess / v.value - (v.grad * v.grad.transpose()) / (v.value * v.value);
}

inline LogConcavity is_log_concave(const Expr& v, const Polytope& P, int per_axis = 0, double tol = 1e-10) {
  if (per_axis <= 0) per_axis = default_grid_per_axis(P.dim());
  LogConcavity out;
  out.worst_eigenvalue = -std::numeric_limits<double>::infinity();
  for (const auto& x : P.grid(per_axis)) {
    WeightEval e = eval_weight(v, x, 2);
    if (!(e.value > 0.0)) throw InvalidWeight("nonpositive weight in log-concavity test");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(log_hessian(e));
    double m = es.eigenvalues().maxCoeff();
    if (m > out.worst_eigenvalue) {
      out.worst_eigenvalue = m;
      out.worst_point = x;
    }
  }
  out.concave = out.worst_eigenvalue <= tol;
  return out;
}

// w(x) = 2 v(x) (n + <d log v(x), x>)
inline Expr soliton_weight(const Expr& v, int n, int r) {
  Expr s = Expr::constant(static_cast<double>(n));
  for (int a = 0; a < r; ++a) s = s + Expr::coord(a) * derivative(v, a) / v;
  return 2.0 * v * s;
}

}  // namespace wcsk
