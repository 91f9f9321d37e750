#pragma once

#include <catch_amalgamated.hpp>

#include <initializer_list>

#include "wcsk/chart.hpp"
#include "wcsk/expr.hpp"

namespace test {

using namespace wcsk;

template <int n>
RVec<n> point(std::initializer_list<double> c) {
  RVec<n> p;
  int i = 0;
  for (double v : c) p(i++) = v;
  return p;
}

template <int n>
CJet<n> jet_of(const Expr& e, const RVec<n>& p) {
  auto x = coordinate_jets<n, CJet<n>>(p);
  return e.eval<CJet<n>>(std::span<const CJet<n>>(x.data(), x.size()));
}

template <int n>
MetricState<n> state(const ChartSpec<n>& spec, const Expr& phi, const RVec<n>& p) {
  return metric_state(spec, jet_at<n>(spec, phi, p));
}

inline const Expr X = Expr::coord(0), Y = Expr::coord(1);

}  // namespace test
