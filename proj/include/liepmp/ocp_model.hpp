#pragma once

// Discrete-time optimal control problems on G x R^nx:
//   q_{t+1} = q_t s_t(q_t, x_t),   x_{t+1} = f_t(q_t, x_t, u_t),   u_t in Box,
//   g_t(q_t, x_t) <= 0 (t = 1..N),  cost sum_t c_t(q_t, x_t, u_t) + c_N(q_N, x_N).
//
// All group-direction derivatives are left-trivialized: the derivative of a
// map m at q is the matrix D with m(q exp(e hat(w))) = m(q) + e D w + O(e^2).
// For group-valued maps (the step s_t) the output is trivialized as well:
// s(q exp(e hat(w)), x) = s exp(e hat(D w)) + O(e^2).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "liepmp/error.hpp"
#include "liepmp/finite_diff.hpp"
#include "liepmp/implicit_step.hpp"
#include "liepmp/lie_core.hpp"

namespace liepmp {

template <MatrixLieGroup G>
struct StepPartials {
  AlgebraMatrix<G> dq;
  Mat dx;  // n_q x n_x
};

/// Partials of a vector-valued map; row count is the output dimension.
struct MapPartials {
  Mat dq;
  Mat dx;
  Mat du;
};

template <MatrixLieGroup G>
struct CostPartials {
  Coords<G> dq = Coords<G>::Zero();
  Vec dx;
  Vec du;
};

template <MatrixLieGroup G>
struct FinalCostPartials {
  Coords<G> dq = Coords<G>::Zero();
  Vec dx;
};

struct ConstraintPartials {
  Mat dq;  // n_g x n_q
  Mat dx;  // n_g x n_x
};

struct Box {
  Vec lo;
  Vec hi;

  bool valid() const {
    return lo.size() == hi.size() && (lo.array() <= hi.array()).all();
  }
  bool contains(const Vec& u, double slack = 0.0) const {
    return u.size() == lo.size() && (u.array() >= lo.array() - slack).all() &&
           (u.array() <= hi.array() + slack).all();
  }
  Vec clamp(const Vec& u) const { return u.cwiseMax(lo).cwiseMin(hi); }
};

enum class BoundaryVariant { FixedBoth, FixedInitFreeFinal, FixedInitSubmanifold };

constexpr std::string_view to_string(BoundaryVariant v) {
  switch (v) {
    case BoundaryVariant::FixedBoth: return "FixedBoth";
    case BoundaryVariant::FixedInitFreeFinal: return "FixedInitFreeFinal";
    case BoundaryVariant::FixedInitSubmanifold: return "FixedInitSubmanifold";
  }
  return "?";
}

template <MatrixLieGroup G>
struct BoundarySpec {
  using Submersion = std::function<Vec(const GroupElement<G>&, const Vec&)>;
  using SubmersionJacobian = std::function<Mat(const GroupElement<G>&, const Vec&)>;

  BoundaryVariant variant = BoundaryVariant::FixedBoth;
  GroupElement<G> q0;
  Vec x0;
  GroupElement<G> qN;  // FixedBoth only
  Vec xN;              // FixedBoth only
  Submersion b_fin;    // FixedInitSubmanifold: M_fin = {b_fin = 0}
  SubmersionJacobian b_fin_jacobian;  // optional, m x (n_q + n_x), left-trivialized in q

  static BoundarySpec fixed_both(GroupElement<G> q0, Vec x0, GroupElement<G> qN, Vec xN) {
    BoundarySpec b;
    b.variant = BoundaryVariant::FixedBoth;
    b.q0 = q0;
    b.x0 = std::move(x0);
    b.qN = qN;
    b.xN = std::move(xN);
    return b;
  }
  static BoundarySpec free_final(GroupElement<G> q0, Vec x0) {
    BoundarySpec b;
    b.variant = BoundaryVariant::FixedInitFreeFinal;
    b.q0 = q0;
    b.x0 = std::move(x0);
    return b;
  }
  static BoundarySpec submanifold(GroupElement<G> q0, Vec x0, Submersion b_fin,
                                  SubmersionJacobian jac = {}) {
    BoundarySpec b;
    b.variant = BoundaryVariant::FixedInitSubmanifold;
    b.q0 = q0;
    b.x0 = std::move(x0);
    b.b_fin = std::move(b_fin);
    b.b_fin_jacobian = std::move(jac);
    return b;
  }
};

/// State constraints g_t(q, x; bound) <= 0 for t = 1..N. `bound` is a scalar
/// parameter the problem owner threads through (e.g. a momentum limit) so that
/// continuation can relax and tighten it; `nominal_bound` is the target value.
template <MatrixLieGroup G>
struct StateConstraints {
  std::function<int(int t)> count;
  std::function<Vec(int t, const GroupElement<G>&, const Vec&, double bound)> eval;
  std::function<ConstraintPartials(int t, const GroupElement<G>&, const Vec&, double bound)>
      partials;  // optional
  double nominal_bound = 0.0;

  bool empty() const { return !count; }
};

template <MatrixLieGroup G>
struct LieOCP {
  using Group = G;
  using Element = GroupElement<G>;

  std::string name;
  int horizon = 1;
  int nx = 0;
  int nu = 0;

  std::function<Element(int t, const Element& q, const Vec& x)> step;
  std::function<StepPartials<G>(int t, const Element& q, const Vec& x)> step_partials;
  std::optional<ImplicitStepSpec<G>> implicit_step;  // replaces `step` when set

  std::function<Vec(int t, const Element& q, const Vec& x, const Vec& u)> dynamics;
  std::function<MapPartials(int t, const Element& q, const Vec& x, const Vec& u)>
      dynamics_partials;

  std::function<double(int t, const Element& q, const Vec& x, const Vec& u)> stage_cost;
  std::function<CostPartials<G>(int t, const Element& q, const Vec& x, const Vec& u)>
      stage_cost_partials;

  std::function<double(const Element& q, const Vec& x)> final_cost;  // optional
  std::function<FinalCostPartials<G>(const Element& q, const Vec& x)> final_cost_partials;

  StateConstraints<G> constraints;
  Box controls;
  BoundarySpec<G> boundary;

  // Structure promises made by the problem author:
  // stage cost = 0.5 sum_i r_i u_i^2 + (terms free of u) and f_t affine in u.
  std::optional<Vec> quadratic_control_weights;
  // D_q and D_x of c_t and f_t do not depend on u.
  bool costate_partials_control_free = false;
  // s_t, f_t, c_t, g_t do not depend on q.
  bool left_invariant = false;

  double probe_radius = 0.1;

  bool has_constraints() const { return !constraints.empty(); }
};

template <MatrixLieGroup G>
struct Trajectory {
  std::vector<GroupElement<G>> q;
  std::vector<Vec> x;
  std::vector<int> clamped_steps;  // steps whose control was projected onto the box

  int horizon() const { return static_cast<int>(q.size()) - 1; }
};

// ---------------------------------------------------------------------------
// Model evaluation with analytic partials where supplied, central differences
// (step max(1e-6, 1e-8 |x|)) otherwise.

template <MatrixLieGroup G>
GroupElement<G> eval_step(const LieOCP<G>& p, int t, const GroupElement<G>& q, const Vec& x) {
  if (p.implicit_step) return solve_step(*p.implicit_step, q, x, t).s;
  return p.step(t, q, x);
}

/// The step s, its logarithm a = e^{-1}(s) and the derivatives of a.
template <MatrixLieGroup G>
struct StepLinearization {
  GroupElement<G> s;
  AlgebraVector<G> a;
  AlgebraMatrix<G> a_q;
  Mat a_x;  // n_q x n_x
};

template <MatrixLieGroup G>
StepLinearization<G> linearize_step(const LieOCP<G>& p, int t, const GroupElement<G>& q,
                                    const Vec& x) {
  StepLinearization<G> lin;
  if (p.implicit_step) {
    const auto sol = solve_step(*p.implicit_step, q, x, t);
    lin.s = sol.s;
    lin.a = log(lin.s);
    const KappaPartials<G> kp = kappa_partials(*p.implicit_step, lin.s, q, x, t);
    const AlgebraMatrix<G> dlog = dlog_left(lin.a);
    lin.a_q = dlog * kp.dq;
    lin.a_x = dlog * kp.dx;
    return lin;
  }
  lin.s = p.step(t, q, x);
  lin.a = log(lin.s);
  if (p.step_partials) {
    const StepPartials<G> sp = p.step_partials(t, q, x);
    const AlgebraMatrix<G> dlog = dlog_left(lin.a);
    lin.a_q = dlog * sp.dq;
    lin.a_x = dlog * sp.dx;
    return lin;
  }
  auto log_step_q = [&](const GroupElement<G>& qp) -> Vec { return log(p.step(t, qp, x)).v; };
  lin.a_q = group_jacobian<G>(log_step_q, q);
  if (p.nx > 0) {
    lin.a_x = central_jacobian([&](const Vec& xp) -> Vec { return log(p.step(t, q, xp)).v; }, x);
  } else {
    lin.a_x = Mat(G::algebra_dim, 0);
  }
  return lin;
}

template <MatrixLieGroup G>
MapPartials dynamics_partials_fd(const LieOCP<G>& p, int t, const GroupElement<G>& q,
                                 const Vec& x, const Vec& u) {
  MapPartials mp;
  mp.dq = group_jacobian<G>([&](const GroupElement<G>& qp) -> Vec { return p.dynamics(t, qp, x, u); },
                            q);
  mp.dx = p.nx > 0 ? central_jacobian([&](const Vec& xp) -> Vec { return p.dynamics(t, q, xp, u); }, x)
                   : Mat(p.nx, 0);
  mp.du = p.nu > 0 ? central_jacobian([&](const Vec& up) -> Vec { return p.dynamics(t, q, x, up); }, u)
                   : Mat(p.nx, 0);
  return mp;
}

template <MatrixLieGroup G>
MapPartials eval_dynamics_partials(const LieOCP<G>& p, int t, const GroupElement<G>& q,
                                   const Vec& x, const Vec& u) {
  if (p.dynamics_partials) return p.dynamics_partials(t, q, x, u);
  return dynamics_partials_fd(p, t, q, x, u);
}

template <MatrixLieGroup G>
CostPartials<G> stage_cost_partials_fd(const LieOCP<G>& p, int t, const GroupElement<G>& q,
                                       const Vec& x, const Vec& u) {
  CostPartials<G> cp;
  cp.dq = group_jacobian<G>(
              [&](const GroupElement<G>& qp) { return scalar_vec(p.stage_cost(t, qp, x, u)); }, q)
              .transpose();
  cp.dx = p.nx > 0 ? Vec(central_jacobian(
                             [&](const Vec& xp) { return scalar_vec(p.stage_cost(t, q, xp, u)); }, x)
                             .transpose())
                   : Vec(0);
  cp.du = p.nu > 0 ? Vec(central_jacobian(
                             [&](const Vec& up) { return scalar_vec(p.stage_cost(t, q, x, up)); }, u)
                             .transpose())
                   : Vec(0);
  return cp;
}

template <MatrixLieGroup G>
CostPartials<G> eval_stage_cost_partials(const LieOCP<G>& p, int t, const GroupElement<G>& q,
                                         const Vec& x, const Vec& u) {
  if (p.stage_cost_partials) return p.stage_cost_partials(t, q, x, u);
  return stage_cost_partials_fd(p, t, q, x, u);
}

template <MatrixLieGroup G>
double eval_final_cost(const LieOCP<G>& p, const GroupElement<G>& q, const Vec& x) {
  return p.final_cost ? p.final_cost(q, x) : 0.0;
}

template <MatrixLieGroup G>
FinalCostPartials<G> final_cost_partials_fd(const LieOCP<G>& p, const GroupElement<G>& q,
                                            const Vec& x) {
  FinalCostPartials<G> fp;
  fp.dx = Vec::Zero(p.nx);
  if (!p.final_cost) return fp;
  fp.dq = group_jacobian<G>([&](const GroupElement<G>& qp) { return scalar_vec(p.final_cost(qp, x)); },
                            q)
              .transpose();
  if (p.nx > 0) {
    fp.dx = central_jacobian([&](const Vec& xp) { return scalar_vec(p.final_cost(q, xp)); }, x)
                .transpose();
  }
  return fp;
}

template <MatrixLieGroup G>
FinalCostPartials<G> eval_final_cost_partials(const LieOCP<G>& p, const GroupElement<G>& q,
                                              const Vec& x) {
  if (!p.final_cost) {
    FinalCostPartials<G> fp;
    fp.dx = Vec::Zero(p.nx);
    return fp;
  }
  if (p.final_cost_partials) return p.final_cost_partials(q, x);
  return final_cost_partials_fd(p, q, x);
}

template <MatrixLieGroup G>
int constraint_count(const LieOCP<G>& p, int t) {
  if (p.constraints.empty() || t < 1 || t > p.horizon) return 0;
  return p.constraints.count(t);
}

template <MatrixLieGroup G>
Vec eval_constraints(const LieOCP<G>& p, int t, const GroupElement<G>& q, const Vec& x,
                     double bound) {
  if (constraint_count(p, t) == 0) return Vec(0);
  return p.constraints.eval(t, q, x, bound);
}

template <MatrixLieGroup G>
ConstraintPartials constraint_partials_fd(const LieOCP<G>& p, int t, const GroupElement<G>& q,
                                          const Vec& x, double bound) {
  ConstraintPartials cp;
  const int ng = constraint_count(p, t);
  cp.dq = group_jacobian<G>(
      [&](const GroupElement<G>& qp) -> Vec { return p.constraints.eval(t, qp, x, bound); }, q);
  cp.dx = p.nx > 0 ? central_jacobian(
                         [&](const Vec& xp) -> Vec { return p.constraints.eval(t, q, xp, bound); }, x)
                   : Mat(ng, 0);
  return cp;
}

template <MatrixLieGroup G>
ConstraintPartials eval_constraint_partials(const LieOCP<G>& p, int t, const GroupElement<G>& q,
                                            const Vec& x, double bound) {
  const int ng = constraint_count(p, t);
  if (ng == 0) return {Mat(0, G::algebra_dim), Mat(0, p.nx)};
  if (p.constraints.partials) return p.constraints.partials(t, q, x, bound);
  return constraint_partials_fd(p, t, q, x, bound);
}

// ---------------------------------------------------------------------------
// validate / simulate / total_cost

enum class ValidationCode {
  InvalidHorizon,
  MissingMap,
  DimensionMismatch,
  ConvexityViolation,
  BoundaryInvalid,
  BranchDomainViolation,
  MapEvaluationFailure,
  DerivativeMismatch,
};

constexpr std::string_view to_string(ValidationCode c) {
  switch (c) {
    case ValidationCode::InvalidHorizon: return "InvalidHorizon";
    case ValidationCode::MissingMap: return "MissingMap";
    case ValidationCode::DimensionMismatch: return "DimensionMismatch";
    case ValidationCode::ConvexityViolation: return "ConvexityViolation";
    case ValidationCode::BoundaryInvalid: return "BoundaryInvalid";
    case ValidationCode::BranchDomainViolation: return "BranchDomainViolation";
    case ValidationCode::MapEvaluationFailure: return "MapEvaluationFailure";
    case ValidationCode::DerivativeMismatch: return "DerivativeMismatch";
  }
  return "?";
}

struct ValidationIssue {
  ValidationCode code;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool accepted() const { return issues.empty(); }
  bool has(ValidationCode c) const {
    return std::any_of(issues.begin(), issues.end(),
                       [c](const ValidationIssue& i) { return i.code == c; });
  }
  void add(ValidationCode c, std::string msg) { issues.push_back({c, std::move(msg)}); }
};

namespace detail {

inline double scaled_error(const Mat& analytic, const Mat& fd) {
  if (analytic.rows() != fd.rows() || analytic.cols() != fd.cols()) {
    return std::numeric_limits<double>::infinity();
  }
  if (fd.size() == 0) return 0.0;
  return (analytic - fd).cwiseAbs().maxCoeff() / std::max(1.0, fd.cwiseAbs().maxCoeff());
}

}  // namespace detail

inline constexpr double kDerivativeTol = 1e-5;

template <MatrixLieGroup G>
ValidationReport validate(const LieOCP<G>& p) {
  ValidationReport report;
  if (p.horizon < 1) report.add(ValidationCode::InvalidHorizon, "horizon must be >= 1");
  if (!p.step && !p.implicit_step) report.add(ValidationCode::MissingMap, "no step map");
  if (!p.dynamics) report.add(ValidationCode::MissingMap, "no Euclidean dynamics");
  if (!p.stage_cost) report.add(ValidationCode::MissingMap, "no stage cost");
  if (p.controls.lo.size() != p.nu || p.controls.hi.size() != p.nu) {
    report.add(ValidationCode::DimensionMismatch, "control box dimension differs from n_u");
  } else if (!p.controls.valid()) {
    report.add(ValidationCode::ConvexityViolation, "control box has lo > hi");
  }
  const auto& b = p.boundary;
  if (b.x0.size() != p.nx) report.add(ValidationCode::BoundaryInvalid, "x0 dimension");
  if (b.variant == BoundaryVariant::FixedBoth && b.xN.size() != p.nx) {
    report.add(ValidationCode::BoundaryInvalid, "xN dimension");
  }
  if (b.variant == BoundaryVariant::FixedInitSubmanifold && !b.b_fin) {
    report.add(ValidationCode::BoundaryInvalid, "submanifold boundary without b_fin");
  }
  if (p.quadratic_control_weights && p.quadratic_control_weights->size() != p.nu) {
    report.add(ValidationCode::DimensionMismatch, "quadratic control weights dimension");
  }
  if (!report.accepted()) return report;

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const std::vector<int> times = {0, p.horizon / 2, p.horizon - 1};
  double err_step = 0.0, err_dyn = 0.0, err_cost = 0.0, err_final = 0.0, err_con = 0.0;
  for (int t : times) {
    for (int probe = 0; probe < 3; ++probe) {
      Coords<G> w;
      for (int i = 0; i < G::algebra_dim; ++i) w(i) = 0.1 * unif(rng);
      const GroupElement<G> q = b.q0 * exp(AlgebraVector<G>(w));
      Vec x = b.x0;
      for (int i = 0; i < p.nx; ++i) {
        x(i) += p.probe_radius * (1.0 + std::abs(b.x0(i))) * unif(rng);
      }
      Vec u(p.nu);
      for (int i = 0; i < p.nu; ++i) {
        const double lo = std::isfinite(p.controls.lo(i)) ? p.controls.lo(i) : -1.0;
        const double hi = std::isfinite(p.controls.hi(i)) ? p.controls.hi(i) : 1.0;
        u(i) = lo + (hi - lo) * 0.5 * (1.0 + unif(rng));
      }
      try {
        const GroupElement<G> s = eval_step(p, t, q, x);
        (void)log(s);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::LogBranchCut) {
          report.add(ValidationCode::BranchDomainViolation,
                     "step leaves the exp-diffeomorphism domain at t=" + std::to_string(t));
        } else {
          report.add(ValidationCode::MapEvaluationFailure, e.what());
        }
        continue;
      }
      try {
        if (p.step_partials && !p.implicit_step) {
          const StepPartials<G> sp = p.step_partials(t, q, x);
          const GroupElement<G> s = p.step(t, q, x);
          auto rel = [&](const GroupElement<G>& sp2) -> Vec { return log(s.inverse() * sp2).v; };
          const Mat fdq = group_jacobian<G>([&](const GroupElement<G>& qp) { return rel(p.step(t, qp, x)); }, q);
          err_step = std::max(err_step, detail::scaled_error(sp.dq, fdq));
          if (p.nx > 0) {
            const Mat fdx = central_jacobian([&](const Vec& xp) { return rel(p.step(t, q, xp)); }, x);
            err_step = std::max(err_step, detail::scaled_error(sp.dx, fdx));
          }
        }
        if (p.dynamics_partials) {
          const MapPartials a = p.dynamics_partials(t, q, x, u);
          const MapPartials f = dynamics_partials_fd(p, t, q, x, u);
          err_dyn = std::max({err_dyn, detail::scaled_error(a.dq, f.dq),
                              detail::scaled_error(a.dx, f.dx), detail::scaled_error(a.du, f.du)});
        }
        if (p.stage_cost_partials) {
          const CostPartials<G> a = p.stage_cost_partials(t, q, x, u);
          const CostPartials<G> f = stage_cost_partials_fd(p, t, q, x, u);
          err_cost = std::max({err_cost, detail::scaled_error(a.dq, f.dq),
                               detail::scaled_error(a.dx, f.dx), detail::scaled_error(a.du, f.du)});
        }
        if (p.final_cost && p.final_cost_partials) {
          const FinalCostPartials<G> a = p.final_cost_partials(q, x);
          const FinalCostPartials<G> f = final_cost_partials_fd(p, q, x);
          err_final = std::max({err_final, detail::scaled_error(a.dq, f.dq),
                                detail::scaled_error(a.dx, f.dx)});
        }
        const int tc = std::max(1, t);
        if (constraint_count(p, tc) > 0 && p.constraints.partials) {
          const double bound = p.constraints.nominal_bound;
          const ConstraintPartials a = p.constraints.partials(tc, q, x, bound);
          const ConstraintPartials f = constraint_partials_fd(p, tc, q, x, bound);
          err_con = std::max({err_con, detail::scaled_error(a.dq, f.dq),
                              detail::scaled_error(a.dx, f.dx)});
        }
      } catch (const Error& e) {
        report.add(ValidationCode::MapEvaluationFailure, e.what());
      }
    }
  }
  auto check = [&](double err, const char* what) {
    if (err > kDerivativeTol) {
      report.add(ValidationCode::DerivativeMismatch,
                 std::string(what) + " analytic partials differ from finite differences (scaled error " +
                     std::to_string(err) + ")");
    }
  };
  check(err_step, "step map");
  check(err_dyn, "dynamics");
  check(err_cost, "stage cost");
  check(err_final, "final cost");
  check(err_con, "state constraint");
  return report;
}

/// Forward recursion q_{t+1} = q_t s_t(q_t, x_t), x_{t+1} = f_t(q_t, x_t, u_t).
/// Out-of-box controls are projected onto the box and recorded in clamped_steps.
template <MatrixLieGroup G>
Trajectory<G> simulate(const LieOCP<G>& p, const std::vector<Vec>& controls) {
  if (static_cast<int>(controls.size()) != p.horizon) {
    throw Error(ErrorCode::DimensionMismatch, "expected one control per step");
  }
  Trajectory<G> traj;
  traj.q.reserve(p.horizon + 1);
  traj.x.reserve(p.horizon + 1);
  traj.q.push_back(p.boundary.q0);
  traj.x.push_back(p.boundary.x0);
  for (int t = 0; t < p.horizon; ++t) {
    const GroupElement<G>& q = traj.q.back();
    const Vec x = traj.x.back();
    Vec u = controls[t];
    if (!p.controls.contains(u)) {
      u = p.controls.clamp(u);
      traj.clamped_steps.push_back(t);
    }
    const GroupElement<G> s = eval_step(p, t, q, x);
    (void)log(s);  // LogBranchCut if the step left the chart domain
    traj.q.push_back(q * s);
    traj.x.push_back(p.dynamics(t, q, x, u));
  }
  return traj;
}

template <MatrixLieGroup G>
double total_cost(const LieOCP<G>& p, const Trajectory<G>& traj, const std::vector<Vec>& controls,
                  double consistency_tol = 1e-9) {
  if (traj.horizon() != p.horizon || static_cast<int>(controls.size()) != p.horizon) {
    throw Error(ErrorCode::InconsistentTrajectory, "trajectory length does not match the horizon");
  }
  double cost = 0.0;
  for (int t = 0; t < p.horizon; ++t) {
    const Vec u = p.controls.clamp(controls[t]);
    const Vec x_next = p.dynamics(t, traj.q[t], traj.x[t], u);
    const GroupElement<G> q_next = traj.q[t] * eval_step(p, t, traj.q[t], traj.x[t]);
    const double dx = (x_next - traj.x[t + 1]).cwiseAbs().maxCoeff() / (1.0 + x_next.cwiseAbs().maxCoeff());
    const double dq = (q_next.matrix() - traj.q[t + 1].matrix()).cwiseAbs().maxCoeff();
    if ((p.nx > 0 && dx > consistency_tol) || dq > consistency_tol) {
      throw Error(ErrorCode::InconsistentTrajectory,
                  "trajectory does not follow the dynamics at step " + std::to_string(t));
    }
    cost += p.stage_cost(t, traj.q[t], traj.x[t], u);
  }
  return cost + eval_final_cost(p, traj.q.back(), traj.x.back());
}

}  // namespace liepmp
