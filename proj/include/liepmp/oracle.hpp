#pragma once

// Independent checks of extremals: a direct penalty method over the control
// sequence, finite-difference audits of every analytic partial, and the
// left-translation equivariance of solutions.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "liepmp/error.hpp"
#include "liepmp/finite_diff.hpp"
#include "liepmp/implicit_step.hpp"
#include "liepmp/lie_core.hpp"
#include "liepmp/ocp_model.hpp"
#include "liepmp/pmp_core.hpp"
#include "liepmp/shooting.hpp"

namespace liepmp {

struct OracleOptions {
  double penalty0 = 1e3;
  double penalty_growth = 10.0;
  int stages = 5;
  int max_iter = 200;  // quasi-Newton iterations per stage
  double kkt_tol = 1e-8;  // on pg / max(1, |f|), the noise floor of the gradient scales with f
  double kkt_fail = 1e-4;
  double gradient_step = 1e-7;
  double hessian_step = 1e-4;
};

template <MatrixLieGroup G>
struct OracleSolution {
  std::vector<Vec> controls;
  Trajectory<G> trajectory;
  double cost = 0.0;      // sum of stage and final costs, penalties excluded
  double kkt_norm = 0.0;  // projected-gradient norm of the last stage over max(1, |f|)
  double penalty = 0.0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

/// Penalized objective evaluated from step t0 given the state at t0.
template <MatrixLieGroup G>
class PenaltyObjective {
 public:
  PenaltyObjective(const LieOCP<G>& p, double penalty, double step)
      : p_(p), penalty_(penalty), step_(step) {}

  double tail(int t0, GroupElement<G> q, Vec x, const std::vector<Vec>& u) const {
    double f = 0.0;
    for (int t = t0; t < p_.horizon; ++t) {
      f += p_.stage_cost(t, q, x, u[t]);
      const GroupElement<G> s = eval_step(p_, t, q, x);
      x = p_.dynamics(t, q, x, u[t]);
      q = q * s;
      f += constraint_penalty(t + 1, q, x);
    }
    return f + terminal(q, x);
  }

  double constraint_penalty(int t, const GroupElement<G>& q, const Vec& x) const {
    if (constraint_count(p_, t) == 0) return 0.0;
    const Vec g = eval_constraints(p_, t, q, x, p_.constraints.nominal_bound);
    return penalty_ * g.cwiseMax(0.0).squaredNorm();
  }

  double terminal(const GroupElement<G>& q, const Vec& x) const {
    double f = eval_final_cost(p_, q, x);
    switch (p_.boundary.variant) {
      case BoundaryVariant::FixedBoth: f += penalty_ * endpoint_mismatch(p_, q, x).squaredNorm(); break;
      case BoundaryVariant::FixedInitSubmanifold:
        f += penalty_ * p_.boundary.b_fin(q, x).squaredNorm();
        break;
      case BoundaryVariant::FixedInitFreeFinal: break;
    }
    return f;
  }

  /// Objective and central-difference gradient; perturbing u_t only re-simulates from t.
  double value_and_gradient(const std::vector<Vec>& u, Vec& grad) const {
    const int N = p_.horizon;
    const int nu = p_.nu;
    std::vector<GroupElement<G>> qs(N + 1);
    std::vector<Vec> xs(N + 1);
    qs[0] = p_.boundary.q0;
    xs[0] = p_.boundary.x0;
    for (int t = 0; t < N; ++t) {
      const GroupElement<G> s = eval_step(p_, t, qs[t], xs[t]);
      xs[t + 1] = p_.dynamics(t, qs[t], xs[t], u[t]);
      qs[t + 1] = qs[t] * s;
    }
    const double f = tail(0, qs[0], xs[0], u);
    grad.resize(N * nu);
    std::vector<Vec> up = u;
    for (int t = 0; t < N; ++t) {
      for (int j = 0; j < nu; ++j) {
        const double h = step_ * std::max(1.0, std::abs(u[t](j)));
        up[t](j) = u[t](j) + h;
        const double fp = tail(t, qs[t], xs[t], up);
        up[t](j) = u[t](j) - h;
        const double fm = tail(t, qs[t], xs[t], up);
        up[t](j) = u[t](j);
        grad(t * nu + j) = (fp - fm) / (2.0 * h);
      }
    }
    return f;
  }

  double value(const std::vector<Vec>& u) const {
    return tail(0, p_.boundary.q0, p_.boundary.x0, u);
  }

 private:
  const LieOCP<G>& p_;
  double penalty_;
  double step_;
};

inline std::vector<Vec> unflatten(const Vec& v, int N, int nu) {
  std::vector<Vec> out(N);
  for (int t = 0; t < N; ++t) out[t] = v.segment(t * nu, nu);
  return out;
}

inline Vec flatten(const std::vector<Vec>& u, int nu) {
  Vec v(u.size() * nu);
  for (size_t t = 0; t < u.size(); ++t) v.segment(t * nu, nu) = u[t];
  return v;
}

}  // namespace detail

/// Penalty method over the controls. Each stage runs a projected quasi-Newton
/// method: variables at a bound with the gradient pointing outward are held
/// fixed, the rest take a step with a Hessian model (finite differences of the
/// gradient at the start of the stage, BFGS updates after), and an Armijo
/// search runs along the projection arc.
template <MatrixLieGroup G>
OracleSolution<G> oracle_solve(const LieOCP<G>& p, const std::vector<Vec>& u0,
                               const OracleOptions& opts = {}) {
  const int N = p.horizon;
  const int nu = p.nu;
  const int n = N * nu;
  if (static_cast<int>(u0.size()) != N) throw Error(ErrorCode::DimensionMismatch, "u0 length");
  Vec lo(n), hi(n);
  for (int t = 0; t < N; ++t) {
    lo.segment(t * nu, nu) = p.controls.lo;
    hi.segment(t * nu, nu) = p.controls.hi;
  }
  auto project = [&](const Vec& v) -> Vec { return v.cwiseMax(lo).cwiseMin(hi); };

  OracleSolution<G> sol;
  Vec u = project(detail::flatten(u0, nu));
  double penalty = opts.penalty0;
  for (int stage = 0; stage < opts.stages; ++stage, penalty *= opts.penalty_growth) {
    const detail::PenaltyObjective<G> obj(p, penalty, opts.gradient_step);
    auto grad_at = [&](const Vec& v, Vec& g) {
      return obj.value_and_gradient(detail::unflatten(v, N, nu), g);
    };
    Vec g;
    double f = grad_at(u, g);
    double pg = (project(u - g) - u).cwiseAbs().maxCoeff();
    Mat H;
    auto fd_hessian = [&] {
      H.resize(n, n);
      for (int j = 0; j < n; ++j) {
        const double h = opts.hessian_step * std::max(1.0, std::abs(u(j)));
        Vec up = u, gp;
        up(j) += h;
        grad_at(up, gp);
        H.col(j) = (gp - g) / h;
      }
      H = 0.5 * (H + H.transpose()).eval();
    };
    fd_hessian();
    bool fresh = true;
    int it = 0;
    auto scaled = [&] { return pg / std::max(1.0, std::abs(f)); };
    for (; it < opts.max_iter && scaled() > opts.kkt_tol; ++it) {
      const double eps = std::min(1e-8, pg);
      std::vector<int> free_idx;
      std::vector<char> active(n, 0);
      for (int i = 0; i < n; ++i) {
        const bool at_lo = u(i) <= lo(i) + eps && g(i) > 0.0;
        const bool at_hi = u(i) >= hi(i) - eps && g(i) < 0.0;
        active[i] = at_lo || at_hi;
        if (!active[i]) free_idx.push_back(i);
      }
      const int nf = static_cast<int>(free_idx.size());
      Mat hf(nf, nf);
      Vec gf(nf);
      for (int r = 0; r < nf; ++r) {
        gf(r) = g(free_idx[r]);
        for (int c = 0; c < nf; ++c) hf(r, c) = H(free_idx[r], free_idx[c]);
      }
      Vec df = -gf;
      double shift = 0.0;
      const double scale = nf > 0 ? std::max(1.0, hf.diagonal().cwiseAbs().maxCoeff()) : 1.0;
      for (int attempt = 0; attempt < 30 && nf > 0; ++attempt) {
        const Eigen::LLT<Mat> llt(hf + shift * Mat::Identity(nf, nf));
        if (llt.info() == Eigen::Success) {
          df = -llt.solve(gf);
          break;
        }
        shift = shift == 0.0 ? 1e-10 * scale : 10.0 * shift;
      }
      Vec d = Vec::Zero(n);
      for (int r = 0; r < nf; ++r) d(free_idx[r]) = df(r);
      for (int i = 0; i < n; ++i) {
        if (active[i]) d(i) = -g(i) / std::max(1.0, std::abs(H(i, i)));
      }
      // full projected step first, then backtracking on the feasible segment of d
      Vec un = project(u + d);
      double fn = obj.value(detail::unflatten(un, N, nu));
      bool accepted = fn <= f + 1e-4 * g.dot(un - u);
      if (!accepted) {
        for (int i = 0; i < n; ++i) {
          if ((u(i) >= hi(i) && d(i) > 0.0) || (u(i) <= lo(i) && d(i) < 0.0)) d(i) = 0.0;
        }
        double alpha = 1.0;
        for (int i = 0; i < n; ++i) {
          if (d(i) > 0.0) alpha = std::min(alpha, (hi(i) - u(i)) / d(i));
          if (d(i) < 0.0) alpha = std::min(alpha, (lo(i) - u(i)) / d(i));
        }
        const double slope = g.dot(d);
        for (int k = 0; k < 50 && slope < 0.0 && alpha > 0.0; ++k) {
          un = project(u + alpha * d);
          fn = obj.value(detail::unflatten(un, N, nu));
          if (fn <= f + 1e-4 * alpha * slope) {
            accepted = true;
            break;
          }
          alpha *= 0.5;
        }
      }
      if (!accepted || (un - u).cwiseAbs().maxCoeff() == 0.0) {
        if (fresh) break;
        fd_hessian();
        fresh = true;
        continue;
      }
      fresh = false;
      Vec gn;
      fn = grad_at(un, gn);
      const Vec sv = un - u;
      const Vec yv = gn - g;
      const double sty = sv.dot(yv);
      const Vec hs = H * sv;
      const double shs = sv.dot(hs);
      if (sty > 1e-12 * sv.norm() * yv.norm() && shs > 0.0) {
        H += yv * yv.transpose() / sty - hs * hs.transpose() / shs;
      }
      u = un;
      g = gn;
      f = fn;
      pg = (project(u - g) - u).cwiseAbs().maxCoeff();
    }
    sol.iterations += it;
    sol.kkt_norm = scaled();
    sol.penalty = penalty;
  }
  sol.controls = detail::unflatten(u, N, nu);
  sol.trajectory = simulate(p, sol.controls);
  sol.cost = total_cost(p, sol.trajectory, sol.controls);
  sol.converged = sol.kkt_norm <= opts.kkt_tol;
  if (sol.kkt_norm > opts.kkt_fail) {
    throw Error(ErrorCode::NoConvergence,
                "oracle projected-gradient norm " + std::to_string(sol.kkt_norm));
  }
  return sol;
}

/// Least-squares fit of the initial costate so that D_uH vanishes at every
/// control strictly inside the box (multipliers taken as zero). The adjoint
/// recursion is affine in the costate, so the fit is linear.
template <MatrixLieGroup G>
ExtremalTrajectory<G> reconstruct_costates(const LieOCP<G>& p, const Trajectory<G>& traj,
                                           const std::vector<Vec>& controls, double nu = -1.0,
                                           double interior_margin = 1e-9) {
  constexpr int nq = G::algebra_dim;
  const int n = nq + p.nx;
  const int N = p.horizon;
  const double bound = p.constraints.nominal_bound;
  // y_t = Phi_t y_0 + phi_t
  std::vector<Mat> Phi(N);
  std::vector<Vec> phi(N);
  Phi[0] = Mat::Identity(n, n);
  phi[0] = Vec::Zero(n);
  for (int t = 1; t < N; ++t) {
    const StageLinearization<G> st = linearize_stage(p, t, traj.q[t], traj.x[t], controls[t], bound);
    const AdjointAffine aff = adjoint_affine(p, st, Vec::Zero(constraint_count(p, t)), nu);
    const auto lu = aff.M.partialPivLu();
    Phi[t] = lu.solve(Phi[t - 1]);
    phi[t] = lu.solve(Vec(phi[t - 1] - aff.b));
  }
  std::vector<Mat> rows;
  std::vector<Vec> rhs;
  for (int t = 0; t < N; ++t) {
    const Vec& u = controls[t];
    const MapPartials f = eval_dynamics_partials(p, t, traj.q[t], traj.x[t], u);
    const CostPartials<G> c = eval_stage_cost_partials(p, t, traj.q[t], traj.x[t], u);
    for (int j = 0; j < p.nu; ++j) {
      if (u(j) <= p.controls.lo(j) + interior_margin || u(j) >= p.controls.hi(j) - interior_margin) continue;
      // nu c_u + f_u^T xi_t = 0
      Mat sel = Mat::Zero(1, n);
      sel.rightCols(p.nx) = f.du.col(j).transpose();
      rows.push_back(sel * Phi[t]);
      rhs.push_back(Vec::Constant(1, -nu * c.du(j) - (sel * phi[t])(0)));
    }
  }
  if (p.boundary.variant == BoundaryVariant::FixedInitFreeFinal) {
    const FinalCostPartials<G> fc = eval_final_cost_partials(p, traj.q[N], traj.x[N]);
    Vec target(n);
    target << nu * fc.dq, nu * fc.dx;
    rows.push_back(Phi[N - 1]);
    rhs.push_back(target - phi[N - 1]);
  }
  int total = 0;
  for (const auto& r : rows) total += static_cast<int>(r.rows());
  Mat A(total, n);
  Vec b(total);
  int off = 0;
  for (size_t i = 0; i < rows.size(); ++i) {
    A.middleRows(off, rows[i].rows()) = rows[i];
    b.segment(off, rows[i].rows()) = rhs[i];
    off += static_cast<int>(rows[i].rows());
  }
  const Vec y0 = total > 0 ? Vec(A.colPivHouseholderQr().solve(b)) : Vec::Zero(n);

  ExtremalTrajectory<G> e;
  e.q = traj.q;
  e.x = traj.x;
  e.u = controls;
  e.nu = nu;
  e.bound = bound;
  e.mu.assign(N + 1, Vec());
  for (int t = 1; t <= N; ++t) e.mu[t] = Vec::Zero(constraint_count(p, t));
  for (int t = 0; t < N; ++t) {
    const Costate<G> c = unpack_costate<G>(Vec(Phi[t] * y0 + phi[t]));
    e.rho.push_back(c.rho);
    e.xi.push_back(c.xi);
    e.zeta.push_back(zeta_from_rho(log(eval_step(p, t, traj.q[t], traj.x[t])), c.rho));
  }
  return e;
}

// ---------------------------------------------------------------------------
// Derivative audit

struct AuditReport {
  int points = 0;
  double max_rel_error = 0.0;
  std::map<std::string, double> errors;  // per audited quantity

  void record(const std::string& what, double err) {
    double& slot = errors[what];
    slot = std::max(slot, err);
    max_rel_error = std::max(max_rel_error, err);
  }
};

inline double audit_error(const Mat& analytic, const Mat& fd, double floor = 1e-2) {
  if (analytic.rows() != fd.rows() || analytic.cols() != fd.cols()) {
    return std::numeric_limits<double>::infinity();
  }
  if (fd.size() == 0) return 0.0;
  return (analytic - fd).cwiseAbs().maxCoeff() / std::max(fd.cwiseAbs().maxCoeff(), floor);
}

template <MatrixLieGroup G>
AuditReport derivative_audit(const LieOCP<G>& p, int points = 100, unsigned seed = 1) {
  constexpr int nq = G::algebra_dim;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  AuditReport rep;
  const double bound = p.constraints.nominal_bound;
  for (int k = 0; k < points; ++k) {
    const int t = p.horizon > 1 ? static_cast<int>(k % p.horizon) : 0;
    Coords<G> w;
    for (int i = 0; i < nq; ++i) w(i) = 0.5 * unif(rng);
    const GroupElement<G> q = p.boundary.q0 * exp(AlgebraVector<G>(w));
    Vec x = p.boundary.x0;
    for (int i = 0; i < p.nx; ++i) x(i) += p.probe_radius * (1.0 + std::abs(x(i))) * unif(rng);
    Vec u(p.nu);
    for (int i = 0; i < p.nu; ++i) {
      const double lo = std::isfinite(p.controls.lo(i)) ? p.controls.lo(i) : -1.0;
      const double hi = std::isfinite(p.controls.hi(i)) ? p.controls.hi(i) : 1.0;
      u(i) = lo + (hi - lo) * 0.5 * (1.0 + unif(rng));
    }
    Coords<G> zc;
    for (int i = 0; i < nq; ++i) zc(i) = unif(rng);
    const CoAlgebraVector<G> zeta(zc);
    Vec xi(p.nx);
    for (int i = 0; i < p.nx; ++i) xi(i) = unif(rng);
    const double nu = -1.0;

    // Hamiltonian partials against differences of the Hamiltonian itself
    const HamiltonianPartials<G> hp = hamiltonian_partials(p, t, zeta, xi, q, x, u, nu);
    auto H = [&](const GroupElement<G>& qq, const Vec& xx, const Vec& uu) {
      return hamiltonian(p, t, zeta, xi, qq, xx, uu, nu);
    };
    rep.record("hamiltonian.d_q",
               audit_error(hp.d_q.c.transpose(),
                           group_jacobian<G>([&](const GroupElement<G>& qq) { return scalar_vec(H(qq, x, u)); }, q)));
    if (p.nx > 0) {
      rep.record("hamiltonian.d_x",
                 audit_error(hp.d_x.transpose(),
                             central_jacobian([&](const Vec& xx) { return scalar_vec(H(q, xx, u)); }, x)));
    }
    if (p.nu > 0) {
      rep.record("hamiltonian.d_u",
                 audit_error(hp.d_u.transpose(),
                             central_jacobian([&](const Vec& uu) { return scalar_vec(H(q, x, uu)); }, u)));
    }
    {
      Coords<G> dz;
      for (int i = 0; i < nq; ++i) {
        const Coords<G> e = Coords<G>::Unit(i) * 1e-6;
        dz(i) = (hamiltonian(p, t, CoAlgebraVector<G>(zc + e), xi, q, x, u, nu) -
                 hamiltonian(p, t, CoAlgebraVector<G>(zc - e), xi, q, x, u, nu)) / 2e-6;
      }
      rep.record("hamiltonian.d_zeta", audit_error(hp.d_zeta.v, dz));
    }
    if (p.nx > 0) {
      const Vec dxi = central_jacobian(
          [&](const Vec& xx) { return scalar_vec(hamiltonian(p, t, zeta, xx, q, x, u, nu)); }, xi)
                          .transpose();
      rep.record("hamiltonian.d_xi", audit_error(hp.d_xi, dxi));
    }

    // user-supplied partials
    if (p.dynamics_partials) {
      const MapPartials a = p.dynamics_partials(t, q, x, u);
      const MapPartials f = dynamics_partials_fd(p, t, q, x, u);
      rep.record("dynamics.dq", audit_error(a.dq, f.dq));
      rep.record("dynamics.dx", audit_error(a.dx, f.dx));
      rep.record("dynamics.du", audit_error(a.du, f.du));
    }
    if (p.stage_cost_partials) {
      const CostPartials<G> a = p.stage_cost_partials(t, q, x, u);
      const CostPartials<G> f = stage_cost_partials_fd(p, t, q, x, u);
      rep.record("stage_cost.dq", audit_error(a.dq, f.dq));
      rep.record("stage_cost.dx", audit_error(a.dx, f.dx));
      rep.record("stage_cost.du", audit_error(a.du, f.du));
    }
    if (p.final_cost && p.final_cost_partials) {
      const FinalCostPartials<G> a = p.final_cost_partials(q, x);
      const FinalCostPartials<G> f = final_cost_partials_fd(p, q, x);
      rep.record("final_cost.dq", audit_error(a.dq, f.dq));
      rep.record("final_cost.dx", audit_error(a.dx, f.dx));
    }
    const int tc = std::max(1, t);
    if (constraint_count(p, tc) > 0 && p.constraints.partials) {
      const ConstraintPartials a = p.constraints.partials(tc, q, x, bound);
      const ConstraintPartials f = constraint_partials_fd(p, tc, q, x, bound);
      rep.record("constraints.dq", audit_error(a.dq, f.dq));
      rep.record("constraints.dx", audit_error(a.dx, f.dx));
    }
    if (p.step && p.step_partials && !p.implicit_step) {
      const StepPartials<G> a = p.step_partials(t, q, x);
      const GroupElement<G> s = p.step(t, q, x);
      auto rel = [&](const GroupElement<G>& s2) -> Vec { return log(s.inverse() * s2).v; };
      rep.record("step.dq", audit_error(a.dq, group_jacobian<G>([&](const GroupElement<G>& qq) { return rel(p.step(t, qq, x)); }, q)));
      if (p.nx > 0) {
        rep.record("step.dx", audit_error(a.dx, central_jacobian([&](const Vec& xx) { return rel(p.step(t, q, xx)); }, x)));
      }
    }
    if (p.implicit_step) {
      const auto& spec = *p.implicit_step;
      const GroupElement<G> s = solve_step(spec, q, x, t).s;
      const KappaPartials<G> kp = kappa_partials(spec, s, q, x, t);
      auto rel = [&](const GroupElement<G>& s2) -> Vec { return log(s.inverse() * s2).v; };
      rep.record("kappa.dq", audit_error(kp.dq, group_jacobian<G>([&](const GroupElement<G>& qq) { return rel(solve_step(spec, qq, x, t).s); }, q)));
      if (p.nx > 0) {
        rep.record("kappa.dx", audit_error(kp.dx, central_jacobian([&](const Vec& xx) { return rel(solve_step(spec, q, xx, t).s); }, x)));
      }
    }

    // cotangent trivialization of f(q) = trace(W^T q)
    GroupMatrix<G> W;
    for (int i = 0; i < G::matrix_dim; ++i) {
      for (int j = 0; j < G::matrix_dim; ++j) W(i, j) = unif(rng);
    }
    const CoAlgebraVector<G> tc_val = trivialize_cotangent(q, W);
    rep.record("trivialize_cotangent",
               audit_error(tc_val.c.transpose(),
                           group_jacobian<G>([&](const GroupElement<G>& qq) {
                             return scalar_vec((W.array() * qq.matrix().array()).sum());
                           }, q)));
    ++rep.points;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Equivariance

template <MatrixLieGroup G>
LieOCP<G> left_translate(const LieOCP<G>& p, const GroupElement<G>& g0) {
  if (p.boundary.variant != BoundaryVariant::FixedBoth) {
    throw Error(ErrorCode::BoundaryMismatch, "equivariance check needs fixed boundary data");
  }
  LieOCP<G> out = p;
  out.boundary.q0 = g0 * p.boundary.q0;
  out.boundary.qN = g0 * p.boundary.qN;
  return out;
}

template <MatrixLieGroup G>
WarmStart<G> left_translate(const WarmStart<G>& w, const GroupElement<G>& g0) {
  WarmStart<G> out = w;
  for (auto& q : out.q) q = g0 * q;
  return out;
}

struct EquivarianceResult {
  double control_difference = 0.0;
  bool converged = false;
};

/// Solves the problem and its left translation by g0; returns the control gap.
template <MatrixLieGroup G>
EquivarianceResult equivariance_check(const LieOCP<G>& p, const GroupElement<G>& g0,
                                      const WarmStart<G>& warm = {},
                                      const SolveOptions& opts = {}) {
  if (!p.left_invariant) {
    throw Error(ErrorCode::InvalidSpec, "equivariance needs maps that are left-invariant in q");
  }
  const LieOCP<G> moved = left_translate(p, g0);
  const SolveResult<G> a = solve_ocp(p, warm, opts);
  const SolveResult<G> b = solve_ocp(moved, left_translate(warm, g0), opts);
  EquivarianceResult r;
  r.converged = a.report.converged && b.report.converged;
  for (int t = 0; t < p.horizon; ++t) {
    r.control_difference =
        std::max(r.control_difference, (a.extremal.u[t] - b.extremal.u[t]).cwiseAbs().maxCoeff());
  }
  return r;
}

}  // namespace liepmp
