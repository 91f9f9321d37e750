#pragma once

// Chebyshev tools on [-1, 1]: Lobatto nodes, differentiation matrix,
// Clenshaw-Curtis weights, coefficient transforms, Clenshaw evaluation,
// spectral antiderivatives.

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace wcsk::cheb {

// x_j = cos(j pi / (m - 1)), j = 0..m-1 (x_0 = 1)
inline Eigen::VectorXd lobatto(int m) {
  Eigen::VectorXd x(m);
  for (int j = 0; j < m; ++j) x(j) = std::cos(std::numbers::pi * j / (m - 1));
  // exact symmetry
  for (int j = 0; j < m / 2; ++j) x(m - 1 - j) = -x(j);
  if (m % 2) x(m / 2) = 0.0;
  return x;
}

// first-kind (Gauss) nodes, endpoints excluded
inline Eigen::VectorXd gauss(int m) {
  Eigen::VectorXd x(m);
  for (int j = 0; j < m; ++j) x(j) = std::cos(std::numbers::pi * (j + 0.5) / m);
  return x;
}

inline Eigen::MatrixXd diff_matrix(int m) {
  const int N = m - 1;
  const Eigen::VectorXd x = lobatto(m);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(m, m);
  auto c = [&](int i) { return ((i == 0 || i == N) ? 2.0 : 1.0) * ((i % 2) ? -1.0 : 1.0); };
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (i != j) D(i, j) = c(i) / c(j) / (x(i) - x(j));
  // negative-sum trick for the diagonal
  for (int i = 0; i < m; ++i) D(i, i) = -D.row(i).sum();
  return D;
}

inline Eigen::VectorXd clenshaw_curtis(int m) {
  const int N = m - 1;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
  const double pi = std::numbers::pi;
  for (int j = 0; j <= N; ++j) {
    const double th = pi * j / N;
    double s = 0.0;
    for (int k = 1; k <= N / 2; ++k) {
      double b = (2 * k == N) ? 1.0 : 2.0;
      s += b * std::cos(2 * k * th) / (4.0 * k * k - 1.0);
    }
    double c = (j == 0 || j == N) ? 1.0 : 2.0;
    w(j) = c / N * (1.0 - s);
  }
  return w;
}

// values at lobatto(m) -> coefficients of sum_k a_k T_k
inline Eigen::VectorXd coeffs_lobatto(const Eigen::VectorXd& f) {
  const int m = static_cast<int>(f.size());
  const int N = m - 1;
  Eigen::VectorXd a(m);
  for (int k = 0; k <= N; ++k) {
    double s = 0.0;
    for (int j = 0; j <= N; ++j) {
      double h = (j == 0 || j == N) ? 0.5 : 1.0;
      s += h * f(j) * std::cos(std::numbers::pi * k * j / N);
    }
    a(k) = 2.0 / N * s * ((k == 0 || k == N) ? 0.5 : 1.0);
  }
  return a;
}

// values at gauss(m) -> coefficients
inline Eigen::VectorXd coeffs_gauss(const Eigen::VectorXd& f) {
  const int m = static_cast<int>(f.size());
  Eigen::VectorXd a(m);
  for (int k = 0; k < m; ++k) {
    double s = 0.0;
    for (int j = 0; j < m; ++j) s += f(j) * std::cos(std::numbers::pi * k * (j + 0.5) / m);
    a(k) = (k == 0 ? 1.0 : 2.0) / m * s;
  }
  return a;
}

// Clenshaw evaluation, generic in the scalar type
template <class T>
T evaluate(std::span<const double> a, const T& x) {
  T b1(0.0), b2(0.0);
  const T two_x = x * 2.0;
  for (int k = static_cast<int>(a.size()) - 1; k >= 1; --k) {
    T b0 = two_x * b1 - b2 + a[k];
    b2 = b1;
    b1 = b0;
  }
  return x * b1 - b2 + a[0];
}

inline double evaluate(const Eigen::VectorXd& a, double x) {
  return evaluate<double>(std::span<const double>(a.data(), a.size()), x);
}

inline Eigen::VectorXd derivative(const Eigen::VectorXd& a) {
  const int m = static_cast<int>(a.size());
  Eigen::VectorXd d = Eigen::VectorXd::Zero(m);
  if (m < 2) return d;
  // c_{k-1} = c_{k+1} + 2 k a_k
  for (int k = m - 1; k >= 1; --k) d(k - 1) = (k + 1 < m ? d(k + 1) : 0.0) + 2.0 * k * a(k);
  d(0) *= 0.5;
  return d;
}

// antiderivative vanishing at x = -1; one extra coefficient
inline Eigen::VectorXd antiderivative(const Eigen::VectorXd& a) {
  const int m = static_cast<int>(a.size());
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m + 1);
  auto ak = [&](int k) { return (k >= 0 && k < m) ? a(k) : 0.0; };
  for (int k = 1; k <= m; ++k) {
    double prev = (k == 1) ? 2.0 * ak(0) : ak(k - 1);
    b(k) = (prev - ak(k + 1)) / (2.0 * k);
  }
  double at_minus1 = 0.0;
  for (int k = 1; k <= m; ++k) at_minus1 += b(k) * ((k % 2) ? -1.0 : 1.0);
  b(0) = -at_minus1;
  return b;
}

// drop trailing coefficients below rel * max |a_k|
inline Eigen::VectorXd chop(const Eigen::VectorXd& a, double rel = 1e-15) {
  const double mx = a.cwiseAbs().maxCoeff();
  int last = static_cast<int>(a.size()) - 1;
  while (last > 0 && std::abs(a(last)) <= rel * mx) --last;
  return a.head(last + 1);
}

// chop at ten times the level of the last quarter (the noise plateau of a resolved series),
// and never below rel
inline Eigen::VectorXd chop_plateau(const Eigen::VectorXd& a, double rel = 1e-13) {
  const int n = static_cast<int>(a.size());
  const double mx = a.cwiseAbs().maxCoeff();
  if (n < 8 || mx == 0.0) return chop(a, rel);
  const double floor = a.tail(n / 4).cwiseAbs().maxCoeff() / mx;
  return chop(a, std::max(rel, 10 * floor));
}

}  // namespace wcsk::cheb
