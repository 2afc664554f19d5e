#pragma once

// First-order necessary conditions for the problems in ocp_model.hpp.
//
// Index conventions: costates (rho^t, xi^t) live on t = 0..N-1, multipliers
// mu^t on t = 1..N. The Hamiltonian at step t is evaluated with costate t,
//   H_t = nu c_t + <zeta^t, log s_t(q_t, x_t)> + <xi^t, f_t(q_t, x_t, u_t)>,
// and zeta^t is reconstructed from the propagated costate as
// zeta^t = dexp_dual(a_t, rho^t), a_t = log s_t(q_t, x_t).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "liepmp/error.hpp"
#include "liepmp/finite_diff.hpp"
#include "liepmp/lie_core.hpp"
#include "liepmp/ocp_model.hpp"

namespace liepmp {

/// Propagated costate. zeta is derived from rho where the Hamiltonian needs it.
template <MatrixLieGroup G>
struct Costate {
  CoAlgebraVector<G> rho;
  Vec xi;
};

template <MatrixLieGroup G>
CoAlgebraVector<G> zeta_from_rho(const AlgebraVector<G>& a, const CoAlgebraVector<G>& rho) {
  return dexp_dual(a, rho);
}

template <MatrixLieGroup G>
struct ExtremalTrajectory {
  std::vector<GroupElement<G>> q;  // t = 0..N
  std::vector<Vec> x;              // t = 0..N
  std::vector<Vec> u;              // t = 0..N-1
  std::vector<CoAlgebraVector<G>> rho;   // t = 0..N-1
  std::vector<CoAlgebraVector<G>> zeta;  // t = 0..N-1
  std::vector<Vec> xi;                   // t = 0..N-1
  std::vector<Vec> mu;                   // t = 0..N, mu[0] empty
  double nu = -1.0;
  double bound = 0.0;  // state-constraint parameter the extremal was computed for
  std::vector<int> singular_steps;

  int horizon() const { return static_cast<int>(u.size()); }
  Costate<G> costate(int t) const { return {rho[t], xi[t]}; }
};

// ---------------------------------------------------------------------------
// Hamiltonian and partials

template <MatrixLieGroup G>
double hamiltonian(const LieOCP<G>& p, int t, const CoAlgebraVector<G>& zeta, const Vec& xi,
                   const GroupElement<G>& q, const Vec& x, const Vec& u, double nu) {
  const AlgebraVector<G> a = log(eval_step(p, t, q, x));
  double h = pairing(zeta, a);
  if (p.nx > 0) h += xi.dot(p.dynamics(t, q, x, u));
  if (nu != 0.0) h += nu * p.stage_cost(t, q, x, u);
  return h;
}

template <MatrixLieGroup G>
struct HamiltonianPartials {
  AlgebraVector<G> d_zeta;
  Vec d_xi;
  CoAlgebraVector<G> d_q;
  Vec d_x;
  Vec d_u;
};

/// Everything the adjoint recursion needs at one step, evaluated once.
template <MatrixLieGroup G>
struct StageLinearization {
  StepLinearization<G> step;
  AlgebraMatrix<G> zeta_of_rho;     // zeta = zeta_of_rho * rho
  AlgebraMatrix<G> coadjoint_back;  // Ad*_{exp(-a)}
  MapPartials f;
  CostPartials<G> c;
  ConstraintPartials g;
};

template <MatrixLieGroup G>
StageLinearization<G> linearize_stage(const LieOCP<G>& p, int t, const GroupElement<G>& q,
                                      const Vec& x, const Vec& u, double bound) {
  StageLinearization<G> st;
  st.step = linearize_step(p, t, q, x);
  st.zeta_of_rho = dexp_dual_matrix(st.step.a);
  st.coadjoint_back = adjoint_matrix(exp(-st.step.a)).transpose();
  st.f = eval_dynamics_partials(p, t, q, x, u);
  st.c = eval_stage_cost_partials(p, t, q, x, u);
  st.g = eval_constraint_partials(p, t, q, x, bound);
  return st;
}

template <MatrixLieGroup G>
HamiltonianPartials<G> hamiltonian_partials(const LieOCP<G>& p, int t,
                                            const CoAlgebraVector<G>& zeta, const Vec& xi,
                                            const GroupElement<G>& q, const Vec& x, const Vec& u,
                                            double nu) {
  const StepLinearization<G> lin = linearize_step(p, t, q, x);
  const MapPartials f = eval_dynamics_partials(p, t, q, x, u);
  const CostPartials<G> c = eval_stage_cost_partials(p, t, q, x, u);
  HamiltonianPartials<G> hp;
  hp.d_zeta = lin.a;
  hp.d_xi = p.dynamics(t, q, x, u);
  Coords<G> dq = nu * c.dq + lin.a_q.transpose() * zeta.c;
  if (p.nx > 0) dq += f.dq.transpose() * xi;
  hp.d_q = CoAlgebraVector<G>(dq);
  hp.d_x = nu * c.dx + lin.a_x.transpose() * zeta.c;
  if (p.nx > 0) hp.d_x += f.dx.transpose() * xi;
  hp.d_u = nu * c.du;
  if (p.nx > 0 && p.nu > 0) hp.d_u += f.du.transpose() * xi;
  return hp;
}

/// Affine form of one backward adjoint step:
/// [rho^{t-1}; xi^{t-1}] = M [rho^t; xi^t] + b.
struct AdjointAffine {
  Mat M;
  Vec b;
};

template <MatrixLieGroup G>
AdjointAffine adjoint_affine(const LieOCP<G>& p, const StageLinearization<G>& st, const Vec& mu,
                             double nu) {
  constexpr int nq = G::algebra_dim;
  const int nx = p.nx;
  AdjointAffine aff;
  aff.M.setZero(nq + nx, nq + nx);
  aff.b.setZero(nq + nx);
  aff.M.topLeftCorner(nq, nq) = st.coadjoint_back + st.step.a_q.transpose() * st.zeta_of_rho;
  if (nx > 0) {
    aff.M.topRightCorner(nq, nx) = st.f.dq.transpose();
    aff.M.bottomLeftCorner(nx, nq) = st.step.a_x.transpose() * st.zeta_of_rho;
    aff.M.bottomRightCorner(nx, nx) = st.f.dx.transpose();
  }
  aff.b.head(nq) = nu * st.c.dq;
  if (nx > 0) aff.b.tail(nx) = nu * st.c.dx;
  if (mu.size() > 0) {
    aff.b.head(nq) += st.g.dq.transpose() * mu;
    if (nx > 0) aff.b.tail(nx) += st.g.dx.transpose() * mu;
  }
  return aff;
}

template <MatrixLieGroup G>
Vec pack_costate(const Costate<G>& c) {
  Vec y(G::algebra_dim + c.xi.size());
  y << c.rho.c, c.xi;
  return y;
}

template <MatrixLieGroup G>
Costate<G> unpack_costate(const Vec& y) {
  Costate<G> c;
  c.rho = CoAlgebraVector<G>(Coords<G>(y.head(G::algebra_dim)));
  c.xi = y.tail(y.size() - G::algebra_dim);
  return c;
}

template <MatrixLieGroup G>
Costate<G> adjoint_step(const LieOCP<G>& p, const StageLinearization<G>& st,
                        const Costate<G>& costate, const Vec& mu, double nu) {
  const AdjointAffine aff = adjoint_affine(p, st, mu, nu);
  return unpack_costate<G>(aff.M * pack_costate(costate) + aff.b);
}

/// rho^{t-1} = Ad*_{exp(-a_t)} rho^t + D_qH + mu^t D_q g_t,
/// xi^{t-1} = D_xH + mu^t D_x g_t, with H evaluated at step t.
template <MatrixLieGroup G>
Costate<G> adjoint_step(const LieOCP<G>& p, int t, const Costate<G>& costate, const Vec& mu,
                        const GroupElement<G>& q, const Vec& x, const Vec& u, double nu,
                        double bound = std::numeric_limits<double>::quiet_NaN()) {
  if (t < 1 || t > p.horizon - 1) {
    throw Error(ErrorCode::DimensionMismatch, "adjoint_step needs 1 <= t <= N-1");
  }
  if (mu.size() != constraint_count(p, t)) {
    throw Error(ErrorCode::DimensionMismatch, "multiplier dimension differs from n_g(t)");
  }
  const double b = std::isnan(bound) ? p.constraints.nominal_bound : bound;
  return adjoint_step(p, linearize_stage(p, t, q, x, u, b), costate, mu, nu);
}

// ---------------------------------------------------------------------------
// Control selection

struct ControlChoice {
  Vec u;
  bool singular = false;
};

namespace detail {

inline bool at_lower(const Box& box, const Vec& u, int i) { return u(i) <= box.lo(i); }
inline bool at_upper(const Box& box, const Vec& u, int i) { return u(i) >= box.hi(i); }

}  // namespace detail

/// D_uH as a function of u only (zeta does not enter).
template <MatrixLieGroup G>
Vec control_gradient(const LieOCP<G>& p, int t, const Vec& xi, const GroupElement<G>& q,
                     const Vec& x, const Vec& u, double nu) {
  Vec g = Vec::Zero(p.nu);
  if (nu != 0.0) g += nu * eval_stage_cost_partials(p, t, q, x, u).du;
  if (p.nx > 0) g += eval_dynamics_partials(p, t, q, x, u).du.transpose() * xi;
  return g;
}

template <MatrixLieGroup G>
ControlChoice control_argmax(const LieOCP<G>& p, int t, const Vec& xi, const GroupElement<G>& q,
                             const Vec& x, double nu,
                             const MapPartials* dynamics_at_zero = nullptr) {
  const Box& box = p.controls;
  const Vec u0 = box.clamp(Vec::Zero(p.nu));
  ControlChoice out;
  if (nu == 0.0 || p.quadratic_control_weights) {
    // affine dynamics in u: f_u^T xi does not depend on u
    Vec lin = Vec::Zero(p.nu);
    if (p.nx > 0) {
      const Mat& fu = dynamics_at_zero ? dynamics_at_zero->du
                                       : eval_dynamics_partials(p, t, q, x, u0).du;
      lin = fu.transpose() * xi;
    }
    if (nu == 0.0) {
      out.u = u0;
      for (int i = 0; i < p.nu; ++i) {
        if (lin(i) > 0.0) {
          out.u(i) = box.hi(i);
        } else if (lin(i) < 0.0) {
          out.u(i) = box.lo(i);
        } else {
          out.singular = true;
        }
      }
      return out;
    }
    const Vec& r = *p.quadratic_control_weights;
    out.u = box.clamp(Vec((lin.array() / (-nu * r.array())).matrix()));
    return out;
  }

  // projected Newton on -H over the box
  Vec u = u0;
  auto neg_h = [&](const Vec& w) {
    double v = -nu * p.stage_cost(t, q, x, w);
    if (p.nx > 0) v -= xi.dot(p.dynamics(t, q, x, w));
    return v;
  };
  auto grad = [&](const Vec& w) -> Vec { return -control_gradient(p, t, xi, q, x, w, nu); };
  for (int iter = 0; iter < 100; ++iter) {
    const Vec gr = grad(u);
    const Mat hess = central_jacobian(grad, u);
    const Mat sym = 0.5 * (hess + hess.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> eig(sym);
    if (p.nu > 0 && eig.eigenvalues().minCoeff() <= 0.0) {
      throw Error(ErrorCode::NonConcaveHamiltonian,
                  "Hamiltonian is not strictly concave in u at t=" + std::to_string(t));
    }
    std::vector<int> free;
    for (int i = 0; i < p.nu; ++i) {
      const bool pinned = (detail::at_lower(box, u, i) && gr(i) > 0.0) ||
                          (detail::at_upper(box, u, i) && gr(i) < 0.0);
      if (!pinned) free.push_back(i);
    }
    Vec dir = Vec::Zero(p.nu);
    if (!free.empty()) {
      Mat hf(free.size(), free.size());
      Vec gf(free.size());
      for (size_t a = 0; a < free.size(); ++a) {
        gf(a) = gr(free[a]);
        for (size_t b = 0; b < free.size(); ++b) hf(a, b) = sym(free[a], free[b]);
      }
      const Vec df = -hf.llt().solve(gf);
      for (size_t a = 0; a < free.size(); ++a) dir(free[a]) = df(a);
    }
    const double f0 = neg_h(u);
    double alpha = 1.0;
    Vec next = box.clamp(u + dir);
    for (int k = 0; k < 30 && neg_h(next) > f0 - 1e-4 * std::abs(gr.dot(next - u)); ++k) {
      alpha *= 0.5;
      next = box.clamp(u + alpha * dir);
    }
    const double change = (next - u).cwiseAbs().maxCoeff();
    u = next;
    if (change <= 1e-14 * (1.0 + u.cwiseAbs().maxCoeff())) break;
  }
  out.u = u;
  return out;
}

template <MatrixLieGroup G>
ControlChoice control_argmax(const LieOCP<G>& p, int t, const Costate<G>& costate,
                             const GroupElement<G>& q, const Vec& x, double nu) {
  return control_argmax(p, t, costate.xi, q, x, nu);
}

/// max over w in the box of <D_uH, w - u>, floored at 0.
template <MatrixLieGroup G>
double stationarity_residual(const LieOCP<G>& p, int t, const CoAlgebraVector<G>& /*zeta*/,
                             const Vec& xi, const GroupElement<G>& q, const Vec& x, const Vec& u,
                             double nu) {
  const Vec g = control_gradient(p, t, xi, q, x, u, nu);
  double total = 0.0;
  for (int i = 0; i < p.nu; ++i) {
    total += std::max(g(i) * (p.controls.hi(i) - u(i)), g(i) * (p.controls.lo(i) - u(i)));
  }
  return std::max(0.0, total);
}

// ---------------------------------------------------------------------------
// Complementarity

/// Fischer-Burmeister function a + b - sqrt(a^2 + b^2 + eps^2).
inline double fischer_burmeister(double a, double b, double eps = 0.0) {
  return a + b - std::sqrt(a * a + b * b + eps * eps);
}

template <MatrixLieGroup G>
double complementarity_residual(const LieOCP<G>& p, const std::vector<GroupElement<G>>& q,
                                const std::vector<Vec>& x, const std::vector<Vec>& mu,
                                double bound) {
  double r = 0.0;
  for (int t = 1; t <= p.horizon; ++t) {
    const int ng = constraint_count(p, t);
    if (ng == 0) continue;
    const Vec g = eval_constraints(p, t, q[t], x[t], bound);
    const Vec m = (t < static_cast<int>(mu.size()) && mu[t].size() == ng) ? mu[t] : Vec::Zero(ng);
    for (int j = 0; j < ng; ++j) r = std::max(r, std::abs(fischer_burmeister(-m(j), -g(j))));
  }
  return r;
}

template <MatrixLieGroup G>
double complementarity_residual(const LieOCP<G>& p, const ExtremalTrajectory<G>& e) {
  return complementarity_residual(p, e.q, e.x, e.mu, e.bound);
}

// ---------------------------------------------------------------------------
// Transversality

namespace detail {

template <MatrixLieGroup G>
Vec terminal_covector(const LieOCP<G>& p, const Costate<G>& last, const Vec& mu_n,
                      const GroupElement<G>& qn, const Vec& xn, double nu, double bound) {
  constexpr int nq = G::algebra_dim;
  const FinalCostPartials<G> fc = eval_final_cost_partials(p, qn, xn);
  Vec v(nq + p.nx);
  v.head(nq) = last.rho.c - nu * fc.dq;
  if (p.nx > 0) v.tail(p.nx) = last.xi - nu * fc.dx;
  if (mu_n.size() > 0) {
    const ConstraintPartials gp = eval_constraint_partials(p, p.horizon, qn, xn, bound);
    v.head(nq) -= gp.dq.transpose() * mu_n;
    if (p.nx > 0) v.tail(p.nx) -= gp.dx.transpose() * mu_n;
  }
  return v;
}

}  // namespace detail

template <MatrixLieGroup G>
Vec transversality_free(const LieOCP<G>& p, const Costate<G>& last, const Vec& mu_n,
                        const GroupElement<G>& qn, const Vec& xn, double nu,
                        double bound = std::numeric_limits<double>::quiet_NaN()) {
  if (p.boundary.variant != BoundaryVariant::FixedInitFreeFinal) {
    throw Error(ErrorCode::BoundaryMismatch, "transversality_free needs a free final state");
  }
  const double b = std::isnan(bound) ? p.constraints.nominal_bound : bound;
  return detail::terminal_covector(p, last, mu_n, qn, xn, nu, b);
}

/// Jacobian of b_fin, left-trivialized in q: m x (n_q + n_x).
template <MatrixLieGroup G>
Mat submersion_jacobian(const LieOCP<G>& p, const GroupElement<G>& qn, const Vec& xn) {
  const auto& bd = p.boundary;
  if (bd.b_fin_jacobian) return bd.b_fin_jacobian(qn, xn);
  const Mat jq = group_jacobian<G>([&](const GroupElement<G>& qp) -> Vec { return bd.b_fin(qp, xn); }, qn);
  const int m = static_cast<int>(jq.rows());
  Mat j(m, G::algebra_dim + p.nx);
  j.leftCols(G::algebra_dim) = jq;
  if (p.nx > 0) {
    j.rightCols(p.nx) = central_jacobian([&](const Vec& xp) -> Vec { return bd.b_fin(qn, xp); }, xn);
  }
  return j;
}

/// Orthonormal basis of ker(D b_fin) from a Householder QR of D b_fin^T.
inline Mat tangent_basis(const Mat& db, double rank_tol = 1e-10) {
  const int n = static_cast<int>(db.cols());
  const int m = static_cast<int>(db.rows());
  if (m == 0) return Mat::Identity(n, n);
  if (m > n) throw Error(ErrorCode::SubmersionRankError, "more boundary equations than states");
  const Eigen::HouseholderQR<Mat> qr(db.transpose());
  const Mat r = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
  const double scale = std::max(1.0, db.cwiseAbs().maxCoeff());
  for (int i = 0; i < m; ++i) {
    if (std::abs(r(i, i)) < rank_tol * scale) {
      throw Error(ErrorCode::SubmersionRankError, "D b_fin is rank deficient");
    }
  }
  const Mat qfull = qr.householderQ() * Mat::Identity(n, n);
  return qfull.rightCols(n - m);
}

template <MatrixLieGroup G>
Vec transversality_submanifold(const LieOCP<G>& p, const Costate<G>& last, const Vec& mu_n,
                               const GroupElement<G>& qn, const Vec& xn, double nu,
                               double bound = std::numeric_limits<double>::quiet_NaN()) {
  if (p.boundary.variant != BoundaryVariant::FixedInitSubmanifold) {
    throw Error(ErrorCode::BoundaryMismatch, "transversality_submanifold needs a submanifold boundary");
  }
  const double b = std::isnan(bound) ? p.constraints.nominal_bound : bound;
  const Vec v = detail::terminal_covector(p, last, mu_n, qn, xn, nu, b);
  const Vec bval = p.boundary.b_fin(qn, xn);
  const Mat basis = tangent_basis(submersion_jacobian(p, qn, xn));
  Vec r(bval.size() + basis.cols());
  r << bval, basis.transpose() * v;
  return r;
}

/// Endpoint mismatch for a fixed final state: (vee log(q_target^-1 q_N), x_N - x_target).
template <MatrixLieGroup G>
Vec endpoint_mismatch(const LieOCP<G>& p, const GroupElement<G>& qn, const Vec& xn) {
  Vec r(G::algebra_dim + p.nx);
  r.head(G::algebra_dim) = log(p.boundary.qN.inverse() * qn).v;
  if (p.nx > 0) r.tail(p.nx) = xn - p.boundary.xN;
  return r;
}

/// Terminal block of the boundary value problem for whichever boundary variant p uses.
template <MatrixLieGroup G>
Vec boundary_residual(const LieOCP<G>& p, const Costate<G>& last, const Vec& mu_n,
                      const GroupElement<G>& qn, const Vec& xn, double nu, double bound) {
  switch (p.boundary.variant) {
    case BoundaryVariant::FixedBoth: return endpoint_mismatch(p, qn, xn);
    case BoundaryVariant::FixedInitFreeFinal:
      return transversality_free(p, last, mu_n, qn, xn, nu, bound);
    case BoundaryVariant::FixedInitSubmanifold:
      return transversality_submanifold(p, last, mu_n, qn, xn, nu, bound);
  }
  return {};
}

// ---------------------------------------------------------------------------
// Residual stack

struct ResidualReport {
  double dynamics_defect = 0.0;
  double initial_defect = 0.0;
  double adjoint_defect = 0.0;
  int adjoint_defect_step = -1;
  double transversality = 0.0;
  double stationarity = 0.0;
  double complementarity = 0.0;
  double max_multiplier = 0.0;  // largest mu entry; must be <= 0
  double nontriviality = 0.0;   // ||(zeta, xi, mu, nu)||_inf
  bool nontriviality_violation = false;
  std::vector<int> singular_steps;

  double max_residual() const {
    return std::max({dynamics_defect, initial_defect, adjoint_defect, transversality, stationarity,
                     complementarity});
  }
};

template <MatrixLieGroup G>
ResidualReport check_extremal(const LieOCP<G>& p, const ExtremalTrajectory<G>& e,
                              std::optional<double> nu_override = std::nullopt) {
  const int n = p.horizon;
  if (e.horizon() != n || static_cast<int>(e.q.size()) != n + 1 ||
      static_cast<int>(e.rho.size()) != n || static_cast<int>(e.xi.size()) != n) {
    throw Error(ErrorCode::InconsistentTrajectory, "extremal arrays do not match the horizon");
  }
  const double nu = nu_override.value_or(e.nu);
  const double bound = e.bound;
  auto mu_at = [&](int t) -> Vec {
    const int ng = constraint_count(p, t);
    if (t < static_cast<int>(e.mu.size()) && e.mu[t].size() == ng) return e.mu[t];
    return Vec::Zero(ng);
  };

  ResidualReport rep;
  rep.initial_defect = log(p.boundary.q0.inverse() * e.q[0]).v.cwiseAbs().maxCoeff();
  if (p.nx > 0) {
    rep.initial_defect =
        std::max(rep.initial_defect, (e.x[0] - p.boundary.x0).cwiseAbs().maxCoeff());
  }
  for (int t = 0; t < n; ++t) {
    const GroupElement<G> qn = e.q[t] * eval_step(p, t, e.q[t], e.x[t]);
    double d = log(qn.inverse() * e.q[t + 1]).v.cwiseAbs().maxCoeff();
    if (p.nx > 0) {
      d = std::max(d, (p.dynamics(t, e.q[t], e.x[t], e.u[t]) - e.x[t + 1]).cwiseAbs().maxCoeff());
    }
    rep.dynamics_defect = std::max(rep.dynamics_defect, d);
    if (!p.controls.contains(e.u[t], 1e-14)) {
      rep.dynamics_defect = std::max(
          rep.dynamics_defect, (e.u[t] - p.controls.clamp(e.u[t])).cwiseAbs().maxCoeff());
    }
  }
  for (int t = 1; t < n; ++t) {
    const Costate<G> prev =
        adjoint_step(p, linearize_stage(p, t, e.q[t], e.x[t], e.u[t], bound), e.costate(t), mu_at(t), nu);
    double d = (prev.rho.c - e.rho[t - 1].c).cwiseAbs().maxCoeff();
    if (p.nx > 0) d = std::max(d, (prev.xi - e.xi[t - 1]).cwiseAbs().maxCoeff());
    if (d > rep.adjoint_defect) {
      rep.adjoint_defect = d;
      rep.adjoint_defect_step = t;
    }
  }
  rep.transversality = boundary_residual(p, e.costate(n - 1), mu_at(n), e.q[n], e.x[n], nu, bound)
                           .cwiseAbs()
                           .maxCoeff();
  for (int t = 0; t < n; ++t) {
    const AlgebraVector<G> a = log(eval_step(p, t, e.q[t], e.x[t]));
    const CoAlgebraVector<G> z = zeta_from_rho(a, e.rho[t]);
    rep.stationarity =
        std::max(rep.stationarity, stationarity_residual(p, t, z, e.xi[t], e.q[t], e.x[t], e.u[t], nu));
    rep.nontriviality = std::max(rep.nontriviality, z.c.cwiseAbs().maxCoeff());
    if (p.nx > 0) rep.nontriviality = std::max(rep.nontriviality, e.xi[t].cwiseAbs().maxCoeff());
  }
  rep.complementarity = complementarity_residual(p, e.q, e.x, e.mu, bound);
  rep.max_multiplier = -std::numeric_limits<double>::infinity();
  for (int t = 1; t <= n; ++t) {
    const Vec m = mu_at(t);
    if (m.size() > 0) {
      rep.max_multiplier = std::max(rep.max_multiplier, m.maxCoeff());
      rep.nontriviality = std::max(rep.nontriviality, m.cwiseAbs().maxCoeff());
    }
  }
  if (rep.max_multiplier == -std::numeric_limits<double>::infinity()) rep.max_multiplier = 0.0;
  rep.nontriviality = std::max(rep.nontriviality, std::abs(nu));
  rep.nontriviality_violation = !(rep.nontriviality > 0.0);
  rep.singular_steps = e.singular_steps;
  return rep;
}

/// Re-checks an extremal with nu = 0; true when the abnormal conditions close too.
template <MatrixLieGroup G>
bool abnormal_conditions_close(const LieOCP<G>& p, const ExtremalTrajectory<G>& e, double tol) {
  const ResidualReport r = check_extremal(p, e, 0.0);
  return r.adjoint_defect <= tol && r.transversality <= tol && r.stationarity <= tol &&
         !r.nontriviality_violation;
}

}  // namespace liepmp
