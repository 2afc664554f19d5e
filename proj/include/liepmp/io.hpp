#pragma once

// Problem files (JSON), trajectory CSV and run reports. Numeric fields accept
// either JSON numbers or decimal strings; strings are parsed as binary64 with
// strtod so the same text always gives the same bits.

#include <Eigen/Dense>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "liepmp/error.hpp"
#include "liepmp/lie_core.hpp"
#include "liepmp/pmp_core.hpp"
#include "liepmp/shooting.hpp"
#include "liepmp/spacecraft.hpp"

namespace liepmp {

using Json = nlohmann::ordered_json;

using ProblemSpec = std::variant<So2ManeuverSpec, So3AttitudeSpec>;

inline double parse_number(const Json& j, const std::string& key) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
      throw Error(ErrorCode::InvalidConfig, "field '" + key + "' is not a decimal number: " + s);
    }
    return v;
  }
  throw Error(ErrorCode::InvalidConfig, "field '" + key + "' must be a number or decimal string");
}

inline double get_number(const Json& obj, const std::string& key, std::optional<double> fallback = {}) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    throw Error(ErrorCode::InvalidConfig, "missing field '" + key + "'");
  }
  return parse_number(obj.at(key), key);
}

inline int get_int(const Json& obj, const std::string& key, std::optional<int> fallback = {}) {
  const double v = get_number(obj, key, fallback ? std::optional<double>(*fallback) : std::nullopt);
  if (v != std::floor(v) || std::abs(v) > 1e9) {
    throw Error(ErrorCode::InvalidConfig, "field '" + key + "' must be an integer");
  }
  return static_cast<int>(v);
}

inline Eigen::Vector3d get_vec3(const Json& obj, const std::string& key,
                                std::optional<Eigen::Vector3d> fallback = {}) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    throw Error(ErrorCode::InvalidConfig, "missing field '" + key + "'");
  }
  const Json& a = obj.at(key);
  if (!a.is_array() || a.size() != 3) {
    throw Error(ErrorCode::InvalidConfig, "field '" + key + "' must be an array of 3 numbers");
  }
  return {parse_number(a[0], key), parse_number(a[1], key), parse_number(a[2], key)};
}

/// Angle given either in radians under `key` or in degrees under `key_deg`.
inline double get_angle(const Json& obj, const std::string& key, double fallback) {
  const bool rad = obj.contains(key);
  const bool deg = obj.contains(key + "_deg");
  if (rad && deg) throw Error(ErrorCode::InvalidConfig, "give only one of '" + key + "' and '" + key + "_deg'");
  if (deg) return deg2rad(parse_number(obj.at(key + "_deg"), key + "_deg"));
  if (rad) return parse_number(obj.at(key), key);
  return fallback;
}

inline ProblemSpec problem_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "problem file must hold a JSON object");
  if (!j.contains("model") || !j.at("model").is_string()) {
    throw Error(ErrorCode::InvalidConfig, "missing string field 'model'");
  }
  const std::string model = j.at("model").get<std::string>();
  const std::string name = j.contains("name") && j.at("name").is_string() ? j.at("name").get<std::string>() : model;
  if (model == "so2_maneuver") {
    const ManeuverDefaults d = maneuver_defaults();
    So2ManeuverSpec s;
    s.name = name;
    s.h = get_number(j, "h", d.h);
    s.N = get_int(j, "N");
    s.c = get_number(j, "c", d.c);
    s.d = get_number(j, "d", d.d);
    s.theta_i = get_angle(j, "theta_i", 0.0);
    s.theta_f = get_angle(j, "theta_f", 0.0);
    s.omega_i = get_number(j, "omega_i", 0.0);
    s.omega_f = get_number(j, "omega_f", 0.0);
    s.turns = get_int(j, "turns", 0);
    try {
      check_spec(s);
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidConfig, e.what());
    }
    return s;
  }
  if (model == "so3_attitude") {
    So3AttitudeSpec s;
    s.name = name;
    s.h = get_number(j, "h", 0.05);
    s.N = get_int(j, "N");
    if (j.contains("J")) {
      const Json& jj = j.at("J");
      if (jj.is_array() && jj.size() == 3 && !jj[0].is_array()) {
        s.J = get_vec3(j, "J").asDiagonal();
      } else if (jj.is_array() && jj.size() == 3) {
        for (int r = 0; r < 3; ++r) {
          if (!jj[r].is_array() || jj[r].size() != 3) throw Error(ErrorCode::InvalidConfig, "J must be 3x3 or a diagonal");
          for (int c = 0; c < 3; ++c) s.J(r, c) = parse_number(jj[r][c], "J");
        }
      } else {
        throw Error(ErrorCode::InvalidConfig, "J must be 3x3 or a diagonal");
      }
    }
    s.u_lo = get_vec3(j, "u_lo", Eigen::Vector3d::Constant(-1.0));
    s.u_hi = get_vec3(j, "u_hi", Eigen::Vector3d::Constant(1.0));
    s.R_i = axis_angle(get_vec3(j, "R_i_axis_angle", Eigen::Vector3d::Zero()));
    s.omega_i = get_vec3(j, "omega_i", Eigen::Vector3d::Zero());
    s.R_target = axis_angle(get_vec3(j, "R_target_axis_angle"));
    s.omega_target = get_vec3(j, "omega_target", Eigen::Vector3d::Zero());
    s.w_R = get_number(j, "w_R", 50.0);
    s.w_omega = get_number(j, "w_omega", 50.0);
    try {
      check_spec(s);
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidConfig, e.what());
    }
    return s;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown model '" + model + "'");
}

inline ProblemSpec load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open problem file " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed JSON: ") + e.what());
  }
  return problem_from_json(j);
}

inline std::optional<ProblemSpec> preset_problem(const std::string& name) {
  if (auto s = so2_preset(name)) return ProblemSpec(*s);
  if (auto s = so3_preset(name)) return ProblemSpec(*s);
  return std::nullopt;
}

inline std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v + 0.0);
  return buf;
}

inline Json number_string(double v) { return fmt17(v); }

inline Json vec3_json(const Eigen::Vector3d& v) {
  return Json::array({fmt17(v(0)), fmt17(v(1)), fmt17(v(2))});
}

inline Json problem_to_json(const ProblemSpec& spec) {
  Json j;
  if (const auto* s = std::get_if<So2ManeuverSpec>(&spec)) {
    j["model"] = "so2_maneuver";
    j["name"] = s->name;
    j["h"] = fmt17(s->h);
    j["N"] = s->N;
    j["c"] = fmt17(s->c);
    j["d"] = fmt17(s->d);
    j["theta_i"] = fmt17(s->theta_i);
    j["theta_f"] = fmt17(s->theta_f);
    j["omega_i"] = fmt17(s->omega_i);
    j["omega_f"] = fmt17(s->omega_f);
    j["turns"] = s->turns;
  } else {
    const auto& t = std::get<So3AttitudeSpec>(spec);
    j["model"] = "so3_attitude";
    j["name"] = t.name;
    j["h"] = fmt17(t.h);
    j["N"] = t.N;
    Json jj = Json::array();
    for (int r = 0; r < 3; ++r) jj.push_back(vec3_json(t.J.row(r).transpose()));
    j["J"] = jj;
    j["u_lo"] = vec3_json(t.u_lo);
    j["u_hi"] = vec3_json(t.u_hi);
    j["R_i_axis_angle"] = vec3_json(log(t.R_i).v);
    j["omega_i"] = vec3_json(t.omega_i);
    j["R_target_axis_angle"] = vec3_json(log(t.R_target).v);
    j["omega_target"] = vec3_json(t.omega_target);
    j["w_R"] = fmt17(t.w_R);
    j["w_omega"] = fmt17(t.w_omega);
  }
  return j;
}

// ---------------------------------------------------------------------------
// Trajectory CSV

/// Orientation angle per row: unwrapped planar angle on SO(2), rotation angle on SO(3).
template <MatrixLieGroup G>
std::vector<double> orientation_angles(const std::vector<GroupElement<G>>& q) {
  std::vector<double> out(q.size());
  if constexpr (G::kind == GroupKind::SO2) {
    double acc = 0.0;
    for (size_t t = 0; t < q.size(); ++t) {
      const double a = angle(q[t]);
      if (t == 0) {
        acc = a;
      } else {
        acc += std::remainder(a - angle(q[t - 1]), 2.0 * std::numbers::pi);
      }
      out[t] = acc;
    }
  } else {
    for (size_t t = 0; t < q.size(); ++t) out[t] = rotation_angle(q[t]);
  }
  return out;
}

template <MatrixLieGroup G>
std::string trajectory_csv(const LieOCP<G>& p, const ExtremalTrajectory<G>& e, double h) {
  constexpr int n = G::matrix_dim;
  constexpr int nq = G::algebra_dim;
  const int N = p.horizon;
  int ng = 0;
  for (int t = 1; t <= N; ++t) ng = std::max(ng, constraint_count(p, t));
  std::ostringstream os;
  os << "t,time_s,theta_rad_unwrapped";
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) os << ",q" << i << j;
  }
  for (int i = 0; i < p.nx; ++i) os << ",x" << i;
  for (int i = 0; i < p.nu; ++i) os << ",u" << i;
  for (int i = 0; i < nq; ++i) os << ",zeta" << i;
  for (int i = 0; i < p.nx; ++i) os << ",xi" << i;
  for (int i = 0; i < nq; ++i) os << ",rho" << i;
  for (int i = 0; i < ng; ++i) os << ",mu" << i;
  for (int i = 0; i < ng; ++i) os << ",g" << i;
  os << ",H\n";
  const std::vector<double> theta = orientation_angles(e.q);
  auto cells = [&](const Vec* v, int count) {
    for (int i = 0; i < count; ++i) {
      os << ',';
      if (v && i < v->size()) os << fmt17((*v)(i));
    }
  };
  for (int t = 0; t <= N; ++t) {
    os << t << ',' << fmt17(t * h) << ',' << fmt17(theta[t]);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) os << ',' << fmt17(e.q[t](i, j));
    }
    cells(&e.x[t], p.nx);
    const bool has_step = t < N;
    Vec zeta, rho;
    if (has_step) {
      zeta = e.zeta[t].c;
      rho = e.rho[t].c;
    }
    cells(has_step ? &e.u[t] : nullptr, p.nu);
    cells(has_step ? &zeta : nullptr, nq);
    cells(has_step ? &e.xi[t] : nullptr, p.nx);
    cells(has_step ? &rho : nullptr, nq);
    const int nct = constraint_count(p, t);
    Vec mu, g;
    if (nct > 0) {
      mu = t < static_cast<int>(e.mu.size()) && e.mu[t].size() == nct ? e.mu[t] : Vec::Zero(nct);
      g = eval_constraints(p, t, e.q[t], e.x[t], e.bound);
    }
    cells(nct > 0 ? &mu : nullptr, ng);
    cells(nct > 0 ? &g : nullptr, ng);
    os << ',';
    if (has_step) os << fmt17(hamiltonian(p, t, e.zeta[t], e.xi[t], e.q[t], e.x[t], e.u[t], e.nu));
    os << '\n';
  }
  return os.str();
}

inline Json residuals_json(const ResidualReport& r) {
  Json j;
  j["dynamics_defect"] = r.dynamics_defect;
  j["initial_defect"] = r.initial_defect;
  j["adjoint_defect"] = r.adjoint_defect;
  j["transversality"] = r.transversality;
  j["stationarity"] = r.stationarity;
  j["complementarity"] = r.complementarity;
  j["max_multiplier"] = r.max_multiplier;
  j["nontriviality"] = r.nontriviality;
  j["nontriviality_violation"] = r.nontriviality_violation;
  j["singular_steps"] = r.singular_steps.size();
  return j;
}

inline Json report_json(const SolveReport& r) {
  Json j;
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  j["residual_norm"] = r.residual_norm;
  j["failure"] = r.failure ? std::string(to_string(*r.failure)) : std::string();
  j["message"] = r.message;
  j["nu"] = r.nu;
  j["bound"] = r.bound;
  j["segments"] = r.segments;
  j["unknowns"] = r.unknowns;
  j["abnormal_conditions_close"] = r.abnormal_conditions_close;
  j["residuals"] = residuals_json(r.residuals);
  Json stages = Json::array();
  for (const auto& s : r.homotopy) {
    stages.push_back({{"bound", s.bound}, {"converged", s.converged}, {"iterations", s.iterations},
                      {"residual_norm", s.residual_norm}});
  }
  j["homotopy"] = stages;
  j["seconds"] = r.seconds;
  return j;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidConfig, "cannot write " + path);
  out << text;
}

}  // namespace liepmp
