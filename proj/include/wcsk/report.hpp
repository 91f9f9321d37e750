#pragma once

// JSON and CSV serialization of reports. Numbers are written with 17 significant
// digits so that repeated runs can be compared byte for byte.

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>

#include "wcsk/identity_suite.hpp"
#include "wcsk/sphere_solver.hpp"

namespace wcsk {

using Json = nlohmann::ordered_json;

namespace detail {

inline void write_number(std::ostream& os, double v) {
  if (!std::isfinite(v)) {
    os << "null";
    return;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

inline void write_json(std::ostream& os, const Json& j, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(indent * depth), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ",\n";
        first = false;
        os << pad << Json(it.key()).dump() << ": ";
        write_json(os, it.value(), indent, depth + 1);
      }
      os << "\n" << close << "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      // arrays of scalars stay on one line
      bool flat = true;
      for (const auto& e : j) flat = flat && !e.is_structured();
      os << "[";
      bool first = true;
      for (const auto& e : j) {
        os << (first ? "" : ",") << (flat ? (first ? "" : " ") : "\n" + pad);
        first = false;
        write_json(os, e, indent, depth + 1);
      }
      os << (flat ? "" : "\n" + close) << "]";
      return;
    }
    case Json::value_t::number_float:
      write_number(os, j.get<double>());
      return;
    default:
      os << j.dump();
  }
}

}  // namespace detail

inline std::string dump_json(const Json& j) {
  std::ostringstream os;
  detail::write_json(os, j, 2, 0);
  os << "\n";
  return os.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
}

inline Json to_json(const WeightBounds& b) {
  return {{"eta", b.eta}, {"L", b.L}, {"nu", b.nu}, {"M", b.M}, {"sup_grad_v", b.dv}, {"sup_grad_w", b.dw},
          {"samples", b.samples}};
}

inline Json to_json(const CheckEntry& c) {
  Json j{{"id", c.id},
         {"name", c.name},
         {"anchor", c.anchor},
         {"kind", c.inequality ? "inequality" : "identity"}};
  if (c.inequality && c.id != "A1" && c.id != "A6") {
    j["max_required_constant"] = c.max_residual;
  } else {
    j["max_residual"] = c.max_residual;
    j["tolerance"] = c.tolerance;
  }
  if (!c.constants.empty()) {
    Json arr = Json::array();
    for (const auto& k : c.constants)
      arr.push_back({{"pair", k.pair},
                     {"fitted", k.fitted},
                     {"fitted_half_sample", k.fitted_half},
                     {"assembled", k.assembled},
                     {"stable", k.stable}});
    j["constants"] = arr;
  }
  j["samples"] = c.samples;
  j["rejected"] = c.rejected;
  j["worst"] = {{"potential", c.worst.potential},
                {"point", c.worst.point},
                {"pair", c.worst.pair},
                {"coordinates", c.worst.coords}};
  if (!c.note.empty()) j["note"] = c.note;
  j["pass"] = c.pass;
  return j;
}

inline Json to_json(const AuditReport& r) {
  const SamplePlan& p = r.plan;
  Json roster = Json::array();
  for (const auto& w : p.roster) roster.push_back({{"name", w.name}, {"v", w.v.str()}, {"w", w.w.str()}});
  Json pots = Json::array();
  for (const auto& q : r.potentials)
    pots.push_back({{"amplitude", q.amplitude}, {"tries", q.tries}, {"accepted", q.accepted}, {"coefficients", q.coeffs}});
  Json checks = Json::array();
  for (const auto& c : r.checks) checks.push_back(to_json(c));
  return {{"chart", to_string(p.chart)},
          {"plan",
           {{"potentials", p.potentials},
            {"points", p.points},
            {"amplitudes", p.amplitudes},
            {"seed", p.seed},
            {"delta", p.delta},
            {"max_tries", p.max_tries},
            {"degree", p.degree},
            {"K", p.K},
            {"roster", roster}}},
          {"points_evaluated", r.points_evaluated},
          {"points_rejected", r.points_rejected},
          {"curvature", {{"A0", r.curvature.A0}, {"bisectional_min", r.curvature.bisectional_min}}},
          {"potentials", pots},
          {"checks", checks},
          {"errors", r.errors},
          {"pass", r.pass}};
}

namespace sphere {

inline Json to_json(const IterationRecord& t) {
  return {{"nodes", t.nodes}, {"iteration", t.iteration}, {"r1", t.r1}, {"r2", t.r2}, {"step", t.step},
          {"backtracks", t.backtracks}};
}

inline Json summary_json(const GlobalSolution& s) {
  return {{"v", s.v.str()},
          {"w", s.w.str()},
          {"nodes", s.nodes},
          {"converged", s.converged},
          {"message", s.message},
          {"iterations", s.iterations},
          {"continuation", s.continuation},
          {"continuation_steps", s.continuation_steps},
          {"resolved", s.resolved},
          {"sup_R1", s.R1},
          {"sup_R2_relative", s.R2},
          {"sup_R2", s.R2_abs},
          {"residual_affine_correction", {{"a", s.da}, {"b", s.db}}}};
}

inline std::string trace_csv(const GlobalSolution& s) {
  std::ostringstream os;
  os << "nodes,iteration,r1,r2,step,backtracks\n";
  char buf[160];
  for (const auto& t : s.trace) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%d\n", t.nodes, t.iteration, t.r1, t.r2, t.step,
                  t.backtracks);
    os << buf;
  }
  return os.str();
}

// Columns x, theta, phi, F, mu, Scal_v, w on the collocation nodes. Scal_v is the
// definitional weighted scalar curvature of the reconstructed metric and w is taken
// at mu_phi.
inline std::string solution_csv(const GlobalSolution& s, int profile_nodes = 129) {
  std::vector<double> xs(s.x.data(), s.x.data() + s.x.size());
  const auto states = reconstruct_states(profile_of(s, profile_nodes), s.v, s.w, xs);
  const Eigen::VectorXd theta = s.theta();
  std::ostringstream os;
  os << "x,theta,phi,F,mu,Scal_v,w\n";
  char buf[256];
  for (int j = 0; j < s.x.size(); ++j) {
    const auto& st = *states[static_cast<std::size_t>(j)];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.x(j), theta(j), s.phi(j), s.F(j),
                  s.mu(j), scal_v(st.ctx, ScalForm::Definitional), st.ctx.wval);
    os << buf;
  }
  return os.str();
}

inline Json to_json(const EstimateReport& r) {
  Json lp = Json::array();
  for (const auto& [p, v] : r.lp) lp.push_back({{"p", p}, {"norm", v}});
  return {{"Ent", r.ent},
          {"Ent_v", r.ent_v},
          {"m_v", r.m_v},
          {"b", r.b},
          {"b_bound", r.b_bound},
          {"b_ok", r.b_ok},
          {"jensen", r.jensen},
          {"eta", r.eta},
          {"L", r.L},
          {"sup_F", r.sup_F},
          {"inf_F", r.inf_F},
          {"sup_trace0", r.sup_trace0},
          {"Lp_trace0", lp},
          {"sup_dF2", r.sup_dF2},
          {"sup_dF2_plus_trace0", r.sup_dF2_plus_trace0},
          {"eps", r.eps},
          {"A", r.A},
          {"sup_F_plus_eps_psi_minus_A_phi", r.sup_F_eps_psi_A_phi},
          {"auxiliary_psi", {{"b", r.psi.b}, {"residual", r.psi.residual}, {"area", r.psi.area}}}};
}

inline Json to_json(const EntropyMember& e) {
  return {{"s", e.s},
          {"Ent", e.ent},
          {"Ent_v", e.ent_v},
          {"m_v", e.m_v},
          {"sup_F", e.sup_F},
          {"forward_bound", e.forward_bound},
          {"converse_bound", e.converse_bound},
          {"forward_ok", e.forward_ok},
          {"converse_ok", e.converse_ok}};
}

}  // namespace sphere
}  // namespace wcsk
