#pragma once

// Truncated multivariate Taylor polynomials (Taylor-mode forward AD).
//
// Jet<N, K> holds the Taylor coefficients of a smooth function of N real
// variables around a base point, up to total degree K. Arithmetic is exact
// on the truncated polynomial ring, so every derivative up to order K is
// exact up to rounding.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

namespace wcsk {

class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

constexpr int binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return static_cast<int>(r);
}

template <int N, int K>
struct JetTables {
  static constexpr int size = binomial(N + K, K);

  std::vector<std::array<int, N>> exps;
  std::vector<int> degree;
  std::vector<double> factorial;  // alpha!
  // product table: c[k] += a[i] * b[j]
  std::vector<std::uint16_t> mi, mj, mk;
  // partial derivative tables: out[dst] = fac * in[src]
  std::array<std::vector<std::uint16_t>, N> dsrc, ddst;
  std::array<std::vector<double>, N> dfac;
  std::map<std::array<int, N>, int> lookup;

  int index(const std::array<int, N>& e) const {
    auto it = lookup.find(e);
    return it == lookup.end() ? -1 : it->second;
  }

  static const JetTables& get() {
    static const JetTables t;
    return t;
  }

 private:
  JetTables() {
    // graded enumeration: degree 0, 1, ..., K; within a degree lexicographic
    for (int d = 0; d <= K; ++d) {
      std::array<int, N> e{};
      enumerate(e, 0, d);
    }
    for (int i = 0; i < size; ++i) {
      lookup[exps[i]] = i;
      double f = 1;
      for (int v = 0; v < N; ++v)
        for (int q = 2; q <= exps[i][v]; ++q) f *= q;
      factorial.push_back(f);
    }
    for (int i = 0; i < size; ++i)
      for (int j = 0; j < size; ++j) {
        if (degree[i] + degree[j] > K) continue;
        std::array<int, N> e;
        for (int v = 0; v < N; ++v) e[v] = exps[i][v] + exps[j][v];
        mi.push_back(static_cast<std::uint16_t>(i));
        mj.push_back(static_cast<std::uint16_t>(j));
        mk.push_back(static_cast<std::uint16_t>(lookup.at(e)));
      }
    for (int v = 0; v < N; ++v)
      for (int dst = 0; dst < size; ++dst) {
        if (degree[dst] >= K) continue;
        auto e = exps[dst];
        e[v] += 1;
        dsrc[v].push_back(static_cast<std::uint16_t>(lookup.at(e)));
        ddst[v].push_back(static_cast<std::uint16_t>(dst));
        dfac[v].push_back(static_cast<double>(e[v]));
      }
  }

  void enumerate(std::array<int, N>& e, int var, int remaining) {
    if (var == N - 1) {
      e[var] = remaining;
      exps.push_back(e);
      int d = 0;
      for (int x : e) d += x;
      degree.push_back(d);
      return;
    }
    for (int k = remaining; k >= 0; --k) {
      e[var] = k;
      enumerate(e, var + 1, remaining - k);
    }
  }
};

}  // namespace detail

template <int N, int K>
class Jet {
 public:
  static constexpr int nvars = N;
  static constexpr int order = K;
  static constexpr int size = detail::JetTables<N, K>::size;
  using Tables = detail::JetTables<N, K>;

  Jet() { c_.fill(0.0); }
  Jet(double v) {  // NOLINT: implicit promotion of constants is intended
    c_.fill(0.0);
    c_[0] = v;
  }

  static Jet variable(int i, double at) {
    Jet r(at);
    r.c_[1 + i] = 1.0;  // degree-1 monomials follow the constant, in variable order
    return r;
  }

  double value() const { return c_[0]; }
  double coeff(int i) const { return c_[i]; }
  double& coeff(int i) { return c_[i]; }
  const std::array<double, size>& coeffs() const { return c_; }

  // partial derivative d^alpha f at the base point
  double derivative(const std::array<int, N>& alpha) const {
    const auto& t = Tables::get();
    int idx = t.index(alpha);
    if (idx < 0) throw std::out_of_range("Jet::derivative: order exceeds truncation");
    return t.factorial[idx] * c_[idx];
  }
  double d1(int i) const { return c_[1 + i]; }
  double d2(int i, int j) const {
    std::array<int, N> a{};
    a[i] += 1;
    a[j] += 1;
    return derivative(a);
  }

  // the jet of the partial derivative; the top-degree coefficients become zero
  Jet diff(int v) const {
    const auto& t = Tables::get();
    Jet r;
    const auto& src = t.dsrc[v];
    const auto& dst = t.ddst[v];
    const auto& fac = t.dfac[v];
    for (std::size_t q = 0; q < src.size(); ++q) r.c_[dst[q]] = fac[q] * c_[src[q]];
    return r;
  }

  Jet& operator+=(const Jet& o) {
    for (int i = 0; i < size; ++i) c_[i] += o.c_[i];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (int i = 0; i < size; ++i) c_[i] -= o.c_[i];
    return *this;
  }
  Jet& operator*=(double s) {
    for (auto& x : c_) x *= s;
    return *this;
  }
  Jet& operator*=(const Jet& o) {
    *this = *this * o;
    return *this;
  }
  Jet& operator/=(const Jet& o) {
    *this = *this / o;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator-(Jet a) {
    for (auto& x : a.c_) x = -x;
    return a;
  }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator+(Jet a, double s) {
    a.c_[0] += s;
    return a;
  }
  friend Jet operator+(double s, Jet a) { return a + s; }
  friend Jet operator-(Jet a, double s) {
    a.c_[0] -= s;
    return a;
  }
  friend Jet operator-(double s, const Jet& a) { return (-a) + s; }

  friend Jet operator*(const Jet& a, const Jet& b) {
    const auto& t = Tables::get();
    Jet r;
    const std::size_t m = t.mi.size();
    const auto* pi = t.mi.data();
    const auto* pj = t.mj.data();
    const auto* pk = t.mk.data();
    for (std::size_t q = 0; q < m; ++q) r.c_[pk[q]] += a.c_[pi[q]] * b.c_[pj[q]];
    return r;
  }
  friend Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
  friend Jet operator/(const Jet& a, double s) { return a * (1.0 / s); }
  friend Jet operator/(double s, const Jet& b) { return reciprocal(b) * s; }

  // f(a0 + h) = sum_m taylor[m] h^m, taylor[m] = f^(m)(a0)/m!
  static Jet compose(const Jet& a, const std::array<double, K + 1>& taylor) {
    Jet h = a;
    h.c_[0] = 0.0;
    Jet r(taylor[K]);
    for (int m = K - 1; m >= 0; --m) r = r * h + taylor[m];
    return r;
  }

  friend Jet reciprocal(const Jet& a) {
    const double x = a.value();
    if (x == 0.0) throw DomainError("division by zero in jet arithmetic");
    std::array<double, K + 1> t;
    double p = 1.0 / x;
    for (int m = 0; m <= K; ++m) {
      t[m] = (m % 2 ? -1.0 : 1.0) * p;
      p /= x;
    }
    return compose(a, t);
  }
  friend Jet exp(const Jet& a) {
    std::array<double, K + 1> t;
    const double e = std::exp(a.value());
    double f = 1.0;
    for (int m = 0; m <= K; ++m) {
      if (m > 0) f *= m;
      t[m] = e / f;
    }
    return compose(a, t);
  }
  friend Jet log(const Jet& a) {
    const double x = a.value();
    if (!(x > 0.0)) throw DomainError("log of non-positive value");
    std::array<double, K + 1> t;
    t[0] = std::log(x);
    double p = 1.0;
    for (int m = 1; m <= K; ++m) {
      p /= x;
      t[m] = (m % 2 ? 1.0 : -1.0) * p / m;
    }
    return compose(a, t);
  }
  friend Jet pow(const Jet& a, double e) {
    const double x = a.value();
    if (!(x > 0.0)) throw DomainError("non-integer power of non-positive value");
    std::array<double, K + 1> t;
    double c = 1.0;  // binomial(e, m)
    for (int m = 0; m <= K; ++m) {
      t[m] = c * std::pow(x, e - m);
      c *= (e - m) / (m + 1);
    }
    return compose(a, t);
  }
  friend Jet sqrt(const Jet& a) { return pow(a, 0.5); }

 private:
  std::array<double, size> c_;
};

// scalar access shared by double and jets
inline double value_of(double x) { return x; }
template <int N, int K>
double value_of(const Jet<N, K>& j) {
  return j.value();
}

}  // namespace wcsk
