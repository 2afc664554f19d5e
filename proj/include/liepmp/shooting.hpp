#pragma once

// Multiple shooting for the boundary value problem of pmp_core.hpp.
//
// Unknowns z = [costate seeds (rho, xi) at nodes t_0..t_{S-1};
//               node states (w, x) at t_1..t_{S-1}, q = q_ref exp(hat(w));
//               multipliers mu^t for every constrained t].
// Residual   = [per interior node: state defect, costate defect;
//               terminal block; Fischer-Burmeister block per multiplier].
// Controls are eliminated by control_argmax inside the forward sweep.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "liepmp/error.hpp"
#include "liepmp/lie_core.hpp"
#include "liepmp/ocp_model.hpp"
#include "liepmp/pmp_core.hpp"

namespace liepmp {

struct SolveOptions {
  double tol = 1e-10;
  int max_iter = 200;
  int segments = 0;  // 0 selects max(1, ceil(N / 250))
  bool homotopy = true;
  double homotopy_relax = 10.0;
  double homotopy_factor = 0.7;
  int homotopy_max_stages = 20;
  double nu = -1.0;
  int threads = 0;  // 0 selects hardware concurrency, capped by LIEPMP_THREADS
  double fb_smoothing = 1e-10;
  int polish_steps = 3;
  std::function<void(const std::string&)> log;
};

inline int default_segments(int horizon) { return std::max(1, (horizon + 249) / 250); }

inline int resolve_threads(int requested) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  n = std::max(1, n);
  if (const char* env = std::getenv("LIEPMP_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return n;
}

/// Initial guess for states (t = 0..N), costates (t = 0..N-1) and multipliers (t = 0..N).
/// Missing pieces default to the u = 0 simulation, zero costates and zero multipliers.
template <MatrixLieGroup G>
struct WarmStart {
  std::vector<GroupElement<G>> q;
  std::vector<Vec> x;
  std::vector<Vec> rho;
  std::vector<Vec> xi;
  std::vector<Vec> mu;
};

struct ShootingLayout {
  int horizon = 0;
  int nq = 0;
  int nx = 0;
  int segments = 1;
  std::vector<int> nodes;  // t_0 = 0 < ... < t_S = N
  bool with_multipliers = false;
  std::vector<int> mu_offset;  // per t in 0..N, -1 when t carries no multiplier unknown
  std::vector<int> mu_count;   // per t in 0..N
  std::vector<int> mu_time;    // per multiplier unknown, its time index
  int states_begin = 0;
  int mu_begin = 0;
  int dim = 0;

  int n() const { return nq + nx; }
  int seed_offset(int k) const { return k * n(); }
  int state_offset(int k) const { return states_begin + (k - 1) * n(); }
  int boundary_row() const { return 2 * n() * (segments - 1); }
  int fb_row(int t) const { return boundary_row() + n() + (mu_offset[t] - mu_begin); }
  int multiplier_count() const { return dim - mu_begin; }
  /// Segment whose sweep inverts the adjoint at t (t strictly inside), or -1.
  int sweeping_segment(int t) const {
    for (int k = 0; k < segments; ++k) {
      if (t > nodes[k] && t < nodes[k + 1]) return k;
    }
    return -1;
  }
};

template <MatrixLieGroup G>
ShootingLayout make_layout(const LieOCP<G>& p, int segments, bool with_multipliers) {
  ShootingLayout L;
  L.horizon = p.horizon;
  L.nq = G::algebra_dim;
  L.nx = p.nx;
  const int s = segments > 0 ? segments : default_segments(p.horizon);
  L.segments = std::clamp(s, 1, p.horizon);
  L.nodes.resize(L.segments + 1);
  for (int k = 0; k <= L.segments; ++k) {
    L.nodes[k] = static_cast<int>(std::llround(static_cast<double>(k) * p.horizon / L.segments));
  }
  L.with_multipliers = with_multipliers && p.has_constraints();
  L.states_begin = L.segments * L.n();
  L.mu_begin = L.states_begin + (L.segments - 1) * L.n();
  L.mu_offset.assign(p.horizon + 1, -1);
  L.mu_count.assign(p.horizon + 1, 0);
  int off = L.mu_begin;
  if (L.with_multipliers) {
    for (int t = 1; t <= p.horizon; ++t) {
      if (t == p.horizon && p.boundary.variant == BoundaryVariant::FixedBoth) break;
      const int ng = constraint_count(p, t);
      if (ng == 0) continue;
      L.mu_offset[t] = off;
      L.mu_count[t] = ng;
      for (int j = 0; j < ng; ++j) L.mu_time.push_back(t);
      off += ng;
    }
  }
  L.dim = off;
  return L;
}

template <MatrixLieGroup G>
struct ShootingProblem {
  const LieOCP<G>* ocp = nullptr;
  ShootingLayout layout;
  std::vector<GroupElement<G>> node_ref;  // per node; entry 0 unused
  double bound = 0.0;
  double nu = -1.0;
  double fb_eps = 1e-10;

  Vec mu(const Vec& z, int t) const {
    if (layout.mu_offset[t] < 0) return Vec::Zero(constraint_count(*ocp, t));
    return z.segment(layout.mu_offset[t], layout.mu_count[t]);
  }
  GroupElement<G> node_q(const Vec& z, int k) const {
    const Coords<G> w = z.segment(layout.state_offset(k), G::algebra_dim);
    return node_ref[k] * exp(AlgebraVector<G>(w));
  }
};

/// Trajectory produced by one forward sweep over all segments.
template <MatrixLieGroup G>
struct SweepData {
  std::vector<GroupElement<G>> q;  // t = 0..N (node states at node times)
  Mat X;                           // nx x (N+1)
  Mat U;                           // nu x N
  Mat Y;                           // (nq+nx) x N packed costates
  Vec g;                           // constraint values aligned with multiplier unknowns
  std::vector<char> singular;      // per step
  std::vector<GroupElement<G>> q_end;  // predicted state at the end of each segment
  Mat X_end;

  void resize(const LieOCP<G>& p, const ShootingLayout& L) {
    q.assign(p.horizon + 1, GroupElement<G>());
    X.setZero(p.nx, p.horizon + 1);
    U.setZero(p.nu, p.horizon);
    Y.setZero(L.n(), p.horizon);
    g.setZero(L.multiplier_count());
    singular.assign(p.horizon, 0);
    q_end.assign(L.segments, GroupElement<G>());
    X_end.setZero(p.nx, L.segments);
  }

  /// Copies everything segment k touches when swept from t_start.
  void restore(const SweepData& base, const ShootingLayout& L, int k, int t_start) {
    const int t1 = L.nodes[k + 1];
    for (int t = t_start; t <= t1; ++t) {
      if (t < t1 || k == L.segments - 1) {
        q[t] = base.q[t];
        X.col(t) = base.X.col(t);
      }
      if (t < t1) {
        U.col(t) = base.U.col(t);
        Y.col(t) = base.Y.col(t);
        singular[t] = base.singular[t];
      }
      if (L.mu_offset[t] >= 0 && (t < t1 || k == L.segments - 1)) {
        g.segment(L.mu_offset[t] - L.mu_begin, L.mu_count[t]) =
            base.g.segment(L.mu_offset[t] - L.mu_begin, L.mu_count[t]);
      }
    }
    q_end[k] = base.q_end[k];
    X_end.col(k) = base.X_end.col(k);
  }
};

/// Backward adjoint relation inverted for the costate at t, with the control
/// re-selected from the new costate. Iterates on u when the adjoint
/// coefficients depend on it.
template <MatrixLieGroup G>
void forward_costate(const LieOCP<G>& p, int t, const GroupElement<G>& q, const Vec& x,
                     const Vec& y_prev, const Vec& mu, double nu, double bound, Vec& y,
                     ControlChoice& choice, GroupElement<G>& s) {
  Vec u_lin = p.controls.clamp(Vec::Zero(p.nu));
  StageLinearization<G> st = linearize_stage(p, t, q, x, u_lin, bound);
  for (int iter = 0;; ++iter) {
    const AdjointAffine aff = adjoint_affine(p, st, mu, nu);
    const auto lu = aff.M.partialPivLu();
    y = lu.solve(y_prev - aff.b);
    if (!y.allFinite()) throw Error(ErrorCode::SingularJacobian, "adjoint map is singular");
    choice = control_argmax(p, t, Vec(y.tail(p.nx)), q, x, nu, &st.f);
    if (p.costate_partials_control_free) break;
    const double change = (choice.u - u_lin).cwiseAbs().maxCoeff();
    if (change <= 1e-15 * (1.0 + u_lin.cwiseAbs().maxCoeff())) break;
    if (iter >= 50) {
      throw Error(ErrorCode::NoConvergence, "control/costate fixed point did not settle");
    }
    u_lin = choice.u;
    st = linearize_stage(p, t, q, x, u_lin, bound);
  }
  s = st.step.s;
}

template <MatrixLieGroup G>
void sweep_segment(const ShootingProblem<G>& sp, const Vec& z, int k, int t_start,
                   SweepData<G>& sw) {
  const LieOCP<G>& p = *sp.ocp;
  const ShootingLayout& L = sp.layout;
  const int n = L.n();
  const int t0 = L.nodes[k];
  const int t1 = L.nodes[k + 1];
  if (t_start == t0) {
    if (k == 0) {
      sw.q[t0] = p.boundary.q0;
      sw.X.col(t0) = p.boundary.x0;
    } else {
      sw.q[t0] = sp.node_q(z, k);
      sw.X.col(t0) = z.segment(L.state_offset(k) + L.nq, L.nx);
    }
  }
  Vec y(n);
  for (int t = t_start; t < t1; ++t) {
    const GroupElement<G> q = sw.q[t];
    const Vec x = sw.X.col(t);
    ControlChoice choice;
    GroupElement<G> s;
    if (t == t0) {
      y = z.segment(L.seed_offset(k), n);
      choice = control_argmax(p, t, Vec(y.tail(L.nx)), q, x, sp.nu);
      s = eval_step(p, t, q, x);
      (void)log(s);
    } else {
      forward_costate(p, t, q, x, Vec(sw.Y.col(t - 1)), sp.mu(z, t), sp.nu, sp.bound, y, choice, s);
    }
    sw.Y.col(t) = y;
    sw.U.col(t) = choice.u;
    sw.singular[t] = choice.singular ? 1 : 0;
    if (L.mu_offset[t] >= 0) {
      sw.g.segment(L.mu_offset[t] - L.mu_begin, L.mu_count[t]) = eval_constraints(p, t, q, x, sp.bound);
    }
    const GroupElement<G> q_next = q * s;
    const Vec x_next = p.dynamics(t, q, x, choice.u);
    if (t + 1 < t1 || k == L.segments - 1) {
      sw.q[t + 1] = q_next;
      sw.X.col(t + 1) = x_next;
    } else {
      sw.q_end[k] = q_next;
      sw.X_end.col(k) = x_next;
    }
  }
  if (k == L.segments - 1) {
    sw.q_end[k] = sw.q[t1];
    sw.X_end.col(k) = sw.X.col(t1);
    if (L.mu_offset[t1] >= 0) {
      sw.g.segment(L.mu_offset[t1] - L.mu_begin, L.mu_count[t1]) =
          eval_constraints(p, t1, sw.q[t1], Vec(sw.X.col(t1)), sp.bound);
    }
  }
}

template <MatrixLieGroup G>
void full_sweep(const ShootingProblem<G>& sp, const Vec& z, SweepData<G>& sw) {
  for (int k = 0; k < sp.layout.segments; ++k) sweep_segment(sp, z, k, sp.layout.nodes[k], sw);
}

template <MatrixLieGroup G>
Vec assemble_from_sweep(const ShootingProblem<G>& sp, const Vec& z, const SweepData<G>& sw) {
  const LieOCP<G>& p = *sp.ocp;
  const ShootingLayout& L = sp.layout;
  const int n = L.n();
  Vec r(L.dim);
  for (int k = 0; k + 1 < L.segments; ++k) {
    const int t = L.nodes[k + 1];
    const int row = 2 * n * k;
    r.segment(row, L.nq) = log(sw.q_end[k].inverse() * sw.q[t]).v;
    r.segment(row + L.nq, L.nx) = sw.X.col(t) - sw.X_end.col(k);
    const StageLinearization<G> st =
        linearize_stage(p, t, sw.q[t], Vec(sw.X.col(t)), Vec(sw.U.col(t)), sp.bound);
    const AdjointAffine aff = adjoint_affine(p, st, sp.mu(z, t), sp.nu);
    r.segment(row + n, n) = aff.M * sw.Y.col(t) + aff.b - sw.Y.col(t - 1);
  }
  const int N = L.horizon;
  r.segment(L.boundary_row(), n) =
      boundary_residual(p, unpack_costate<G>(Vec(sw.Y.col(N - 1))), sp.mu(z, N), sw.q[N],
                        Vec(sw.X.col(N)), sp.nu, sp.bound);
  for (int i = 0; i < L.multiplier_count(); ++i) {
    r(L.boundary_row() + n + i) = fischer_burmeister(-z(L.mu_begin + i), -sw.g(i), sp.fb_eps);
  }
  return r;
}

template <MatrixLieGroup G>
Vec assemble_residual(const ShootingProblem<G>& sp, const Vec& z) {
  SweepData<G> sw;
  sw.resize(*sp.ocp, sp.layout);
  full_sweep(sp, z, sw);
  return assemble_from_sweep(sp, z, sw);
}

namespace detail {

inline bool is_domain_error(const Error& e) {
  switch (e.code()) {
    case ErrorCode::LogBranchCut:
    case ErrorCode::InvalidGroupElement:
    case ErrorCode::NoConvergence:
    case ErrorCode::SingularJacobian:
    case ErrorCode::NonConcaveHamiltonian: return true;
    default: return false;
  }
}

template <MatrixLieGroup G>
std::pair<int, int> column_influence(const ShootingLayout& L, int j) {
  if (j < L.states_begin) {
    const int k = j / L.n();
    return {k, L.nodes[k]};
  }
  if (j < L.mu_begin) {
    const int k = (j - L.states_begin) / L.n() + 1;
    return {k, L.nodes[k]};
  }
  const int t = L.mu_time[j - L.mu_begin];
  const int k = L.sweeping_segment(t);
  return {k, k >= 0 ? t : -1};
}

}  // namespace detail

/// Forward-difference Jacobian, columns recomputed by re-sweeping only the
/// segment (and time range) an unknown influences.
template <MatrixLieGroup G>
Mat shooting_jacobian(const ShootingProblem<G>& sp, const Vec& z, const SweepData<G>& base,
                      const Vec& r0, int threads) {
  const ShootingLayout& L = sp.layout;
  Mat J(L.dim, L.dim);
  auto work = [&](int begin, int end) {
    SweepData<G> w = base;
    Vec zp = z;
    for (int j = begin; j < end; ++j) {
      const auto [k, t_start] = detail::column_influence<G>(L, j);
      const double delta = 1e-7 * (1.0 + std::abs(z(j)));
      auto eval = [&](double dz) -> Vec {
        zp(j) = z(j) + dz;
        if (k >= 0) sweep_segment(sp, zp, k, t_start, w);
        Vec rc = assemble_from_sweep(sp, zp, w);
        if (k >= 0) w.restore(base, L, k, t_start);
        zp(j) = z(j);
        return rc;
      };
      try {
        J.col(j) = (eval(delta) - r0) / delta;
      } catch (const Error& e) {
        if (!detail::is_domain_error(e)) throw;
        if (k >= 0) w.restore(base, L, k, t_start);
        zp(j) = z(j);
        J.col(j) = (r0 - eval(-delta)) / delta;
      }
    }
  };
  const int nt = std::min(threads, std::max(1, L.dim / 16));
  if (nt <= 1) {
    work(0, L.dim);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(nt);
    const int chunk = (L.dim + nt - 1) / nt;
    for (int i = 0; i < nt; ++i) {
      const int b = i * chunk;
      const int e = std::min(L.dim, b + chunk);
      pool.emplace_back([&, i, b, e] {
        try {
          work(b, e);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& err : errors) {
      if (err) std::rethrow_exception(err);
    }
  }
  return J;
}

struct HomotopyStage {
  double bound = 0.0;
  bool converged = false;
  int iterations = 0;
  double residual_norm = 0.0;
};

struct SolveReport {
  bool converged = false;
  int iterations = 0;
  double residual_norm = std::numeric_limits<double>::infinity();
  std::optional<ErrorCode> failure;
  std::string message;
  ResidualReport residuals;
  double nu = -1.0;
  double bound = 0.0;
  int segments = 1;
  int unknowns = 0;
  std::vector<HomotopyStage> homotopy;
  bool abnormal_conditions_close = false;
  double seconds = 0.0;
};

template <MatrixLieGroup G>
struct SolveResult {
  ExtremalTrajectory<G> extremal;
  SolveReport report;
  ShootingProblem<G> problem;
  Vec z;
};

/// Builds the shooting problem and its initial unknown vector from a warm start.
template <MatrixLieGroup G>
std::pair<ShootingProblem<G>, Vec> make_shooting_problem(const LieOCP<G>& p,
                                                         const WarmStart<G>& warm, int segments,
                                                         bool with_multipliers, double bound,
                                                         const SolveOptions& opts = {}) {
  ShootingProblem<G> sp;
  sp.ocp = &p;
  sp.layout = make_layout(p, segments, with_multipliers);
  sp.bound = bound;
  sp.nu = opts.nu;
  sp.fb_eps = opts.fb_smoothing;
  const ShootingLayout& L = sp.layout;

  std::vector<GroupElement<G>> qs = warm.q;
  std::vector<Vec> xs = warm.x;
  if (static_cast<int>(qs.size()) != p.horizon + 1 || static_cast<int>(xs.size()) != p.horizon + 1) {
    const Trajectory<G> tr =
        simulate(p, std::vector<Vec>(p.horizon, p.controls.clamp(Vec::Zero(p.nu))));
    qs = tr.q;
    xs = tr.x;
  }
  Vec z = Vec::Zero(L.dim);
  sp.node_ref.assign(L.segments, GroupElement<G>());
  for (int k = 0; k < L.segments; ++k) {
    const int t = L.nodes[k];
    if (static_cast<int>(warm.rho.size()) == p.horizon) z.segment(L.seed_offset(k), L.nq) = warm.rho[t];
    if (static_cast<int>(warm.xi.size()) == p.horizon && L.nx > 0) {
      z.segment(L.seed_offset(k) + L.nq, L.nx) = warm.xi[t];
    }
    if (k >= 1) {
      sp.node_ref[k] = qs[t];
      z.segment(L.state_offset(k) + L.nq, L.nx) = xs[t];
    }
  }
  if (static_cast<int>(warm.mu.size()) == p.horizon + 1) {
    for (int t = 1; t <= p.horizon; ++t) {
      if (L.mu_offset[t] >= 0 && warm.mu[t].size() == L.mu_count[t]) {
        z.segment(L.mu_offset[t], L.mu_count[t]) = warm.mu[t].cwiseMin(0.0);
      }
    }
  }
  return {sp, z};
}

/// Moves node references onto the current node states so that w = 0 again.
template <MatrixLieGroup G>
void rebase_nodes(ShootingProblem<G>& sp, Vec& z) {
  for (int k = 1; k < sp.layout.segments; ++k) {
    sp.node_ref[k] = sp.node_q(z, k);
    z.segment(sp.layout.state_offset(k), G::algebra_dim).setZero();
  }
}

template <MatrixLieGroup G>
ExtremalTrajectory<G> extract_extremal(const ShootingProblem<G>& sp, const Vec& z,
                                       const SweepData<G>& sw) {
  const LieOCP<G>& p = *sp.ocp;
  const int N = p.horizon;
  ExtremalTrajectory<G> e;
  e.q = sw.q;
  e.x.resize(N + 1);
  for (int t = 0; t <= N; ++t) e.x[t] = sw.X.col(t);
  e.u.resize(N);
  e.rho.resize(N);
  e.zeta.resize(N);
  e.xi.resize(N);
  for (int t = 0; t < N; ++t) {
    e.u[t] = sw.U.col(t);
    const Costate<G> c = unpack_costate<G>(Vec(sw.Y.col(t)));
    e.rho[t] = c.rho;
    e.xi[t] = c.xi;
    e.zeta[t] = zeta_from_rho(log(eval_step(p, t, e.q[t], e.x[t])), c.rho);
    if (sw.singular[t]) e.singular_steps.push_back(t);
  }
  e.mu.assign(N + 1, Vec());
  for (int t = 1; t <= N; ++t) e.mu[t] = sp.mu(z, t);
  e.nu = sp.nu;
  e.bound = sp.bound;
  return e;
}

namespace detail {

inline void emit(const SolveOptions& opts, const std::string& msg) {
  if (opts.log) opts.log(msg);
}

}  // namespace detail

/// Damped Newton on the shooting residual. Never throws for numerical
/// failures; they are recorded in the report together with the best iterate.
template <MatrixLieGroup G>
SolveResult<G> solve(const ShootingProblem<G>& sp, const Vec& z0, const SolveOptions& opts = {}) {
  const auto clock_start = std::chrono::steady_clock::now();
  const LieOCP<G>& p = *sp.ocp;
  const ShootingLayout& L = sp.layout;
  const int threads = resolve_threads(opts.threads);

  SolveResult<G> res;
  res.problem = sp;
  res.report.nu = sp.nu;
  res.report.bound = sp.bound;
  res.report.segments = L.segments;
  res.report.unknowns = L.dim;

  Vec z = z0;
  SweepData<G> sw;
  sw.resize(p, L);
  Vec r;
  auto try_eval = [&](const Vec& zz, SweepData<G>& out, Vec& rr) -> bool {
    try {
      full_sweep(sp, zz, out);
      rr = assemble_from_sweep(sp, zz, out);
      return rr.allFinite();
    } catch (const Error& e) {
      if (!detail::is_domain_error(e)) throw;
      return false;
    }
  };
  if (!try_eval(z, sw, r)) {
    res.report.failure = ErrorCode::NoConvergence;
    res.report.message = "initial guess leaves the domain of the step maps";
    res.z = z;
    return res;
  }

  std::optional<Eigen::PartialPivLU<Mat>> lu;
  SweepData<G> trial_sw = sw;
  Vec r_trial;
  int iter = 0;
  bool converged = false;
  for (;; ++iter) {
    const double norm = r.cwiseAbs().maxCoeff();
    detail::emit(opts, "newton " + std::to_string(iter) + " residual " + std::to_string(norm));
    if (norm <= opts.tol) {
      converged = true;
      break;
    }
    if (iter >= opts.max_iter) {
      res.report.failure = ErrorCode::NoConvergence;
      res.report.message = "iteration limit reached";
      break;
    }
    const Mat J = shooting_jacobian(sp, z, sw, r, threads);
    lu.emplace(J);
    const Vec d = -lu->solve(r);
    if (!d.allFinite() || lu->rcond() < 1e-18) {
      res.report.failure = ErrorCode::SingularJacobian;
      res.report.message = "shooting Jacobian is singular; try more segments";
      break;
    }
    const double f0 = r.squaredNorm();
    double alpha = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= 30; ++halving) {
      const Vec zt = z + alpha * d;
      if (try_eval(zt, trial_sw, r_trial) && r_trial.squaredNorm() <= (1.0 - 2e-4 * alpha) * f0) {
        z = zt;
        std::swap(sw, trial_sw);
        r = r_trial;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      res.report.failure = ErrorCode::NoConvergence;
      res.report.message = "line search failed";
      break;
    }
  }
  if (converged && lu) {
    for (int k = 0; k < opts.polish_steps; ++k) {
      const Vec zt = z - lu->solve(r);
      if (!try_eval(zt, trial_sw, r_trial)) break;
      if (!(r_trial.cwiseAbs().maxCoeff() < r.cwiseAbs().maxCoeff())) break;
      z = zt;
      std::swap(sw, trial_sw);
      r = r_trial;
    }
  }
  if (converged && L.multiplier_count() > 0 && z.tail(L.multiplier_count()).maxCoeff() > 0.0) {
    // project onto mu <= 0; kept only if the residual stays within tolerance
    Vec zt = z;
    zt.tail(L.multiplier_count()) = zt.tail(L.multiplier_count()).cwiseMin(0.0);
    if (try_eval(zt, trial_sw, r_trial) && r_trial.cwiseAbs().maxCoeff() <= opts.tol) {
      z = zt;
      std::swap(sw, trial_sw);
      r = r_trial;
    }
  }
  res.report.converged = converged;
  res.report.iterations = iter;
  res.report.residual_norm = r.cwiseAbs().maxCoeff();
  res.z = z;
  res.extremal = extract_extremal(sp, z, sw);
  try {
    res.report.residuals = check_extremal(p, res.extremal);
    if (converged) res.report.abnormal_conditions_close = abnormal_conditions_close(p, res.extremal, 1e-8);
  } catch (const Error& e) {
    if (!detail::is_domain_error(e)) throw;
  }
  if (converged && res.report.residuals.nontriviality_violation) {
    res.report.converged = false;
    res.report.failure = ErrorCode::NoConvergence;
    res.report.message = "converged to the trivial multiplier tuple";
  }
  res.report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
  return res;
}

namespace detail {

template <MatrixLieGroup G>
bool feasible_at(const LieOCP<G>& p, const ExtremalTrajectory<G>& e, double bound) {
  for (int t = 1; t <= p.horizon; ++t) {
    if (constraint_count(p, t) == 0) continue;
    if (eval_constraints(p, t, e.q[t], e.x[t], bound).maxCoeff() > 0.0) return false;
  }
  return true;
}

template <MatrixLieGroup G>
std::string infeasibility_hint(const LieOCP<G>& p, double bound) {
  if (p.boundary.variant != BoundaryVariant::FixedBoth) return {};
  for (int t = p.horizon; t >= std::max(1, p.horizon - 1); --t) {
    if (constraint_count(p, t) == 0) continue;
    if (eval_constraints(p, t, p.boundary.qN, p.boundary.xN, bound).maxCoeff() > 0.0) {
      return "fixed final state violates the state constraint at bound " + std::to_string(bound) +
             "; the problem is likely infeasible";
    }
    break;
  }
  return {};
}

template <MatrixLieGroup G>
Vec with_multipliers(const ShootingLayout& from, const ShootingLayout& to, const Vec& z) {
  Vec out = Vec::Zero(to.dim);
  out.head(from.mu_begin) = z.head(from.mu_begin);
  if (from.with_multipliers && to.with_multipliers) out.tail(to.dim - to.mu_begin) = z.tail(from.dim - from.mu_begin);
  return out;
}

}  // namespace detail

/// Continuation on the state-constraint bound: a relaxed solve with mu frozen
/// at zero, then geometric tightening towards the nominal bound.
template <MatrixLieGroup G>
SolveResult<G> homotopy_solve(const LieOCP<G>& p, const WarmStart<G>& warm,
                              const SolveOptions& opts = {}) {
  const auto clock_start = std::chrono::steady_clock::now();
  const double target = p.constraints.nominal_bound;
  std::vector<HomotopyStage> trace;
  auto finish = [&](SolveResult<G> r) {
    r.report.homotopy = trace;
    r.report.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
    return r;
  };
  auto record = [&](const SolveResult<G>& r, double bound) {
    trace.push_back({bound, r.report.converged, r.report.iterations, r.report.residual_norm});
  };
  auto fail = [&](SolveResult<G> r) {
    const std::string hint = detail::infeasibility_hint(p, target);
    if (!hint.empty()) r.report.message += "; " + hint;
    r.report.converged = false;
    if (!r.report.failure) r.report.failure = ErrorCode::NoConvergence;
    return finish(std::move(r));
  };

  double bound = opts.homotopy_relax * target;
  auto [sp0, z0] = make_shooting_problem(p, warm, opts.segments, false, bound, opts);
  detail::emit(opts, "homotopy stage 1, bound " + std::to_string(bound));
  SolveResult<G> cur = solve(sp0, z0, opts);
  record(cur, bound);
  if (!cur.report.converged) return fail(std::move(cur));

  ShootingProblem<G> sp = cur.problem;
  Vec z = cur.z;
  rebase_nodes(sp, z);
  {
    ShootingProblem<G> spm = sp;
    spm.layout = make_layout(p, sp.layout.segments, true);
    z = detail::with_multipliers<G>(sp.layout, spm.layout, z);
    sp = spm;
  }
  if (detail::feasible_at(p, cur.extremal, target)) {
    sp.bound = target;
    SolveResult<G> fin = solve(sp, z, opts);
    if (!fin.report.converged) return fail(std::move(fin));
    return finish(std::move(fin));
  }

  double step_factor = opts.homotopy_factor;
  while (static_cast<int>(trace.size()) < opts.homotopy_max_stages) {
    const double next = std::max(target, bound * step_factor);
    sp.bound = next;
    detail::emit(opts, "homotopy stage " + std::to_string(trace.size() + 1) + ", bound " +
                           std::to_string(next));
    SolveResult<G> trial = solve(sp, z, opts);
    record(trial, next);
    if (trial.report.converged) {
      cur = std::move(trial);
      bound = next;
      z = cur.z;
      sp = cur.problem;
      rebase_nodes(sp, z);
      if (bound <= target) return finish(std::move(cur));
      step_factor = opts.homotopy_factor;
    } else {
      // retry from the last converged stage with a shorter step
      step_factor = std::sqrt(step_factor);
      if (step_factor > 0.999) return fail(std::move(trial));
    }
  }
  SolveResult<G> last = std::move(cur);
  last.report.message = "homotopy stage limit reached";
  last.report.failure = ErrorCode::NoConvergence;
  return fail(std::move(last));
}

/// Entry point: validates, then either solves directly or runs the bound continuation.
template <MatrixLieGroup G>
SolveResult<G> solve_ocp(const LieOCP<G>& p, const WarmStart<G>& warm = {},
                         const SolveOptions& opts = {}) {
  const ValidationReport vr = validate(p);
  if (!vr.accepted()) {
    std::string msg = "problem rejected:";
    for (const auto& issue : vr.issues) msg += " [" + std::string(to_string(issue.code)) + "] " + issue.message;
    throw Error(ErrorCode::InvalidSpec, msg);
  }
  if (p.has_constraints() && opts.homotopy) return homotopy_solve(p, warm, opts);
  auto [sp, z0] = make_shooting_problem(p, warm, opts.segments, true,
                                        p.constraints.nominal_bound, opts);
  SolveResult<G> r = solve(sp, z0, opts);
  if (!r.report.converged && p.has_constraints()) {
    const std::string hint = detail::infeasibility_hint(p, p.constraints.nominal_bound);
    if (!hint.empty()) r.report.message += "; " + hint;
  }
  return r;
}

}  // namespace liepmp
