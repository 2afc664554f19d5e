#pragma once

// Spacecraft attitude problems: single-axis maneuvers on SO(2) with momentum
// and torque bounds, and a rigid body on SO(3) with an Euler momentum step.
// Units are SI for a body scaled to unit inertia.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "liepmp/error.hpp"
#include "liepmp/lie_core.hpp"
#include "liepmp/ocp_model.hpp"
#include "liepmp/shooting.hpp"

namespace liepmp {

struct ManeuverDefaults {
  double h = 0.05;     // s
  double c = 0.025;    // N m
  double d = 0.0875;   // N m s
};

inline ManeuverDefaults maneuver_defaults() { return {}; }

inline double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

struct So2ManeuverSpec {
  std::string name = "so2";
  double h = 0.05;
  int N = 1;
  double c = 0.025;
  double d = 0.0875;
  double theta_i = 0.0;
  double theta_f = 0.0;
  double omega_i = 0.0;
  double omega_f = 0.0;
  int turns = 0;  // extra full revolutions of the initial guess

  double final_time() const { return h * N; }
};

/// F(omega): rotation by arcsin(h omega).
inline GroupElement<SO2> so2_step(double h, double omega) {
  const double ho = h * omega;
  if (!(std::abs(ho) < 1.0)) {
    throw Error(ErrorCode::LogBranchCut, "|h omega| >= 1 leaves the step domain");
  }
  const double cth = std::sqrt(1.0 - ho * ho);
  Eigen::Matrix2d m;
  m << cth, -ho, ho, cth;
  return GroupElement<SO2>(m);
}

inline void check_spec(const So2ManeuverSpec& s) {
  if (!(s.h > 0.0) || s.N < 1 || !(s.c > 0.0) || !(s.d > 0.0)) {
    throw Error(ErrorCode::InvalidSpec, "need h > 0, N >= 1, c > 0, d > 0");
  }
  if (!(s.h * s.d < 1.0)) throw Error(ErrorCode::InvalidSpec, "need h d < 1");
  if (s.turns < 0) throw Error(ErrorCode::InvalidSpec, "turns must be non-negative");
}

inline LieOCP<SO2> build_so2(const So2ManeuverSpec& spec) {
  check_spec(spec);
  const double h = spec.h;
  LieOCP<SO2> p;
  p.name = spec.name;
  p.horizon = spec.N;
  p.nx = 1;
  p.nu = 1;
  p.step = [h](int, const GroupElement<SO2>&, const Vec& x) { return so2_step(h, x(0)); };
  p.step_partials = [h](int, const GroupElement<SO2>&, const Vec& x) {
    StepPartials<SO2> sp;
    sp.dq.setZero();
    sp.dx = Mat::Constant(1, 1, h / std::sqrt(1.0 - h * h * x(0) * x(0)));
    return sp;
  };
  p.dynamics = [h](int, const GroupElement<SO2>&, const Vec& x, const Vec& u) {
    return Vec::Constant(1, x(0) + h * u(0));
  };
  p.dynamics_partials = [h](int, const GroupElement<SO2>&, const Vec&, const Vec&) {
    return MapPartials{Mat::Zero(1, 1), Mat::Constant(1, 1, 1.0), Mat::Constant(1, 1, h)};
  };
  p.stage_cost = [](int, const GroupElement<SO2>&, const Vec&, const Vec& u) {
    return 0.5 * u(0) * u(0);
  };
  p.stage_cost_partials = [](int, const GroupElement<SO2>&, const Vec&, const Vec& u) {
    CostPartials<SO2> c;
    c.dx = Vec::Zero(1);
    c.du = u;
    return c;
  };
  const int N = spec.N;
  p.constraints.count = [N](int t) { return t >= 1 && t <= N - 1 ? 1 : 0; };
  p.constraints.eval = [](int, const GroupElement<SO2>&, const Vec& x, double d) {
    return Vec::Constant(1, 0.5 * (x(0) * x(0) - d * d));
  };
  p.constraints.partials = [](int, const GroupElement<SO2>&, const Vec& x, double) {
    return ConstraintPartials{Mat::Zero(1, 1), Mat::Constant(1, 1, x(0))};
  };
  p.constraints.nominal_bound = spec.d;
  p.controls.lo = Vec::Constant(1, -spec.c);
  p.controls.hi = Vec::Constant(1, spec.c);
  p.boundary = BoundarySpec<SO2>::fixed_both(rotation2(spec.theta_i), Vec::Constant(1, spec.omega_i),
                                             rotation2(spec.theta_f), Vec::Constant(1, spec.omega_f));
  p.quadratic_control_weights = Vec::Ones(1);
  p.costate_partials_control_free = true;
  p.left_invariant = true;
  return p;
}

/// Net rotation the maneuver has to achieve, including the extra turns.
inline double so2_travel(const So2ManeuverSpec& s) {
  return std::remainder(s.theta_f - s.theta_i, 2.0 * std::numbers::pi) +
         2.0 * std::numbers::pi * s.turns;
}

/// Initial guess from the continuous minimum-energy double integrator
/// theta'' = u, u(tau) = a + b tau, matched to the boundary data.
inline WarmStart<SO2> so2_warm_start(const So2ManeuverSpec& s) {
  const double T = s.final_time();
  const double travel = so2_travel(s);
  Eigen::Matrix2d A;
  A << T, 0.5 * T * T, 0.5 * T * T, T * T * T / 6.0;
  const Eigen::Vector2d rhs(s.omega_f - s.omega_i, travel - s.omega_i * T);
  const Eigen::Vector2d ab = A.partialPivLu().solve(rhs);
  const double a = ab(0);
  const double b = ab(1);
  WarmStart<SO2> w;
  for (int t = 0; t <= s.N; ++t) {
    const double tau = t * s.h;
    const double theta = s.theta_i + s.omega_i * tau + 0.5 * a * tau * tau + b * tau * tau * tau / 6.0;
    const double omega = s.omega_i + a * tau + 0.5 * b * tau * tau;
    w.q.push_back(rotation2(theta));
    w.x.push_back(Vec::Constant(1, omega));
    if (t < s.N) {
      w.xi.push_back(Vec::Constant(1, (a + b * tau) / s.h));
      w.rho.push_back(Vec::Constant(1, -b / s.h));
    }
  }
  return w;
}

inline std::optional<So2ManeuverSpec> so2_preset(const std::string& name) {
  const ManeuverDefaults d = maneuver_defaults();
  So2ManeuverSpec s;
  s.name = name;
  s.h = d.h;
  s.c = d.c;
  s.d = d.d;
  if (name == "t1") {
    s.N = 2000;
    s.theta_f = deg2rad(90.0);
    s.omega_f = 0.080;
    s.turns = 1;
  } else if (name == "t2") {
    s.N = 380;
    s.theta_f = deg2rad(75.0);
  } else if (name == "t3") {
    s.N = 800;
    s.theta_i = deg2rad(90.0);
    s.theta_f = deg2rad(265.0);
  } else {
    return std::nullopt;
  }
  return s;
}

// ---------------------------------------------------------------------------
// SO(3)

struct So3AttitudeSpec {
  std::string name = "so3";
  double h = 0.05;
  int N = 1;
  Eigen::Matrix3d J = Eigen::Matrix3d::Identity();
  Eigen::Vector3d u_lo = Eigen::Vector3d::Constant(-1.0);
  Eigen::Vector3d u_hi = Eigen::Vector3d::Constant(1.0);
  GroupElement<SO3> R_i;
  Eigen::Vector3d omega_i = Eigen::Vector3d::Zero();
  GroupElement<SO3> R_target;
  Eigen::Vector3d omega_target = Eigen::Vector3d::Zero();
  double w_R = 50.0;
  double w_omega = 50.0;
};

inline void check_spec(const So3AttitudeSpec& s) {
  if (!(s.h > 0.0) || s.N < 1) throw Error(ErrorCode::InvalidSpec, "need h > 0 and N >= 1");
  if ((s.J - s.J.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error(ErrorCode::InvalidSpec, "inertia must be symmetric");
  }
  if (Eigen::LLT<Eigen::Matrix3d>(s.J).info() != Eigen::Success) {
    throw Error(ErrorCode::InvalidSpec, "inertia must be positive definite");
  }
  if ((s.u_lo.array() > s.u_hi.array()).any()) {
    throw Error(ErrorCode::InvalidSpec, "control box has lo > hi");
  }
  if (s.w_R < 0.0 || s.w_omega < 0.0) throw Error(ErrorCode::InvalidSpec, "negative weights");
}

inline LieOCP<SO3> build_so3(const So3AttitudeSpec& spec) {
  check_spec(spec);
  const double h = spec.h;
  const Eigen::Matrix3d J = spec.J;
  const Eigen::Matrix3d Jinv = J.inverse();
  LieOCP<SO3> p;
  p.name = spec.name;
  p.horizon = spec.N;
  p.nx = 3;
  p.nu = 3;
  p.step = [h](int, const GroupElement<SO3>&, const Vec& x) {
    return exp(AlgebraVector<SO3>(Coords<SO3>(h * x)));
  };
  p.step_partials = [h](int, const GroupElement<SO3>&, const Vec& x) {
    StepPartials<SO3> sp;
    sp.dq.setZero();
    sp.dx = h * dexp_left(AlgebraVector<SO3>(Coords<SO3>(h * x)));
    return sp;
  };
  p.dynamics = [h, J, Jinv](int, const GroupElement<SO3>&, const Vec& x, const Vec& u) -> Vec {
    const Eigen::Vector3d w = x;
    return Jinv * ((Eigen::Matrix3d::Identity() + h * hat<SO3>(w)) * (J * w) + h * u);
  };
  p.dynamics_partials = [h, J, Jinv](int, const GroupElement<SO3>&, const Vec& x, const Vec&) {
    const Eigen::Vector3d w = x;
    MapPartials mp;
    mp.dq = Mat::Zero(3, 3);
    mp.dx = Eigen::Matrix3d::Identity() +
            h * Jinv * (hat<SO3>(w) * J - hat<SO3>(Eigen::Vector3d(J * w)));
    mp.du = h * Jinv;
    return mp;
  };
  p.stage_cost = [](int, const GroupElement<SO3>&, const Vec&, const Vec& u) {
    return 0.5 * u.squaredNorm();
  };
  p.stage_cost_partials = [](int, const GroupElement<SO3>&, const Vec&, const Vec& u) {
    CostPartials<SO3> c;
    c.dx = Vec::Zero(3);
    c.du = u;
    return c;
  };
  const GroupElement<SO3> Rt = spec.R_target;
  const Eigen::Vector3d wt = spec.omega_target;
  const double wR = spec.w_R;
  const double wW = spec.w_omega;
  p.final_cost = [Rt, wt, wR, wW](const GroupElement<SO3>& q, const Vec& x) {
    const Coords<SO3> e = log(Rt.inverse() * q).v;
    return 0.5 * wR * e.squaredNorm() + 0.5 * wW * (x - wt).squaredNorm();
  };
  p.final_cost_partials = [Rt, wt, wR, wW](const GroupElement<SO3>& q, const Vec& x) {
    // dlog_left(e)^T e = e, since ad_e e = 0
    FinalCostPartials<SO3> f;
    f.dq = wR * log(Rt.inverse() * q).v;
    f.dx = wW * (x - wt);
    return f;
  };
  p.controls.lo = spec.u_lo;
  p.controls.hi = spec.u_hi;
  p.boundary = BoundarySpec<SO3>::free_final(spec.R_i, spec.omega_i);
  p.quadratic_control_weights = Vec::Ones(3);
  p.costate_partials_control_free = true;
  p.left_invariant = false;
  return p;
}

inline GroupElement<SO3> axis_angle(const Eigen::Vector3d& v) {
  return exp(AlgebraVector<SO3>(v));
}

inline std::optional<So3AttitudeSpec> so3_preset(const std::string& name) {
  if (name != "so3-rest-to-rest") return std::nullopt;
  So3AttitudeSpec s;
  s.name = name;
  s.h = 0.05;
  s.N = 100;
  s.J = Eigen::Vector3d(1.0, 1.5, 2.0).asDiagonal();
  s.R_target = axis_angle(Eigen::Vector3d(0.4, -0.3, 0.6));
  return s;
}

}  // namespace liepmp
