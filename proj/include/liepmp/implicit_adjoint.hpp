#pragma once

// Adjoint step for implicitly defined group steps v_t(s, q, x) = 0. The
// Hamiltonian carries s as an explicit argument; c_t, f_t and g_t must not
// depend on s, so D_sH comes from the <zeta, log s> term alone.

#include "liepmp/implicit_step.hpp"
#include "liepmp/ocp_model.hpp"
#include "liepmp/pmp_core.hpp"

namespace liepmp {

/// rho^{t-1} = Ad*_{exp(-a)} rho^t + D_qH - (D_s v^-1 D_q v)^T D_sH + mu^t D_q g_t,
/// xi^{t-1}  = D_xH - (D_s v^-1 D_x v)^T D_sH + mu^t D_x g_t,
/// where D_qH and D_xH are taken at fixed s. `d_s_h` is D_sH, left-trivialized in s.
template <MatrixLieGroup G>
Costate<G> implicit_adjoint_step(const LieOCP<G>& p, int t, const Costate<G>& costate,
                                 const Vec& mu, const GroupElement<G>& q, const Vec& x,
                                 const Vec& u, const GroupElement<G>& s, double nu,
                                 const CoAlgebraVector<G>& d_s_h, double bound) {
  if (!p.implicit_step) throw Error(ErrorCode::InvalidSpec, "problem has no implicit step");
  const KappaPartials<G> kp = kappa_partials(*p.implicit_step, s, q, x, t);
  const AlgebraVector<G> a = log(s);
  const MapPartials f = eval_dynamics_partials(p, t, q, x, u);
  const CostPartials<G> c = eval_stage_cost_partials(p, t, q, x, u);
  const ConstraintPartials g = eval_constraint_partials(p, t, q, x, bound);

  Costate<G> prev;
  Coords<G> rho = adjoint_matrix(exp(-a)).transpose() * costate.rho.c + nu * c.dq +
                  kp.dq.transpose() * d_s_h.c;
  Vec xi = nu * c.dx + kp.dx.transpose() * d_s_h.c;
  if (p.nx > 0) {
    rho += f.dq.transpose() * costate.xi;
    xi += f.dx.transpose() * costate.xi;
  }
  if (mu.size() > 0) {
    rho += g.dq.transpose() * mu;
    if (p.nx > 0) xi += g.dx.transpose() * mu;
  }
  prev.rho = CoAlgebraVector<G>(rho);
  prev.xi = xi;
  return prev;
}

/// D_sH of <zeta, log s>: dlog_left(a)^T zeta, which equals rho.
template <MatrixLieGroup G>
CoAlgebraVector<G> implicit_d_s_hamiltonian(const GroupElement<G>& s, const Costate<G>& costate) {
  const AlgebraVector<G> a = log(s);
  const CoAlgebraVector<G> zeta = zeta_from_rho(a, costate.rho);
  return CoAlgebraVector<G>(dlog_left(a).transpose() * zeta.c);
}

template <MatrixLieGroup G>
Costate<G> implicit_adjoint_step(const LieOCP<G>& p, int t, const Costate<G>& costate,
                                 const Vec& mu, const GroupElement<G>& q, const Vec& x,
                                 const Vec& u, const GroupElement<G>& s, double nu) {
  return implicit_adjoint_step(p, t, costate, mu, q, x, u, s, nu,
                               implicit_d_s_hamiltonian(s, costate), p.constraints.nominal_bound);
}

}  // namespace liepmp
