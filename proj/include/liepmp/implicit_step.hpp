#pragma once

// Steps defined implicitly by v_t(s, q, x) = 0. Newton runs multiplicatively
// in the algebra (s <- s exp(hat(w))), so iterates never leave the group.

#include <functional>
#include <string>

#include "liepmp/error.hpp"
#include "liepmp/finite_diff.hpp"
#include "liepmp/lie_core.hpp"

namespace liepmp {

/// Partials of the implicit residual, left-trivialized in s and q.
template <MatrixLieGroup G>
struct ImplicitResidualPartials {
  AlgebraMatrix<G> ds;
  AlgebraMatrix<G> dq;
  Mat dx;  // n_q x n_x
};

template <MatrixLieGroup G>
struct ImplicitStepSpec {
  using Residual = std::function<Coords<G>(int t, const GroupElement<G>& s,
                                           const GroupElement<G>& q, const Vec& x)>;
  using Guess = std::function<GroupElement<G>(int t, const GroupElement<G>& q, const Vec& x)>;
  using Partials = std::function<ImplicitResidualPartials<G>(
      int t, const GroupElement<G>& s, const GroupElement<G>& q, const Vec& x)>;

  Residual residual;
  GroupElement<G> initial_guess;
  Guess guess;        // optional; overrides initial_guess
  Partials partials;  // optional; finite differences otherwise
};

template <MatrixLieGroup G>
struct ImplicitStepSolution {
  GroupElement<G> s;
  int newton_iters = 0;
  double residual_norm = 0.0;
};

struct ImplicitStepOptions {
  double tol = 1e-12;
  int max_iter = 50;
  double singular_det = 1e-12;
};

template <MatrixLieGroup G>
AlgebraMatrix<G> implicit_residual_ds(const ImplicitStepSpec<G>& spec, int t,
                                      const GroupElement<G>& s, const GroupElement<G>& q,
                                      const Vec& x) {
  if (spec.partials) return spec.partials(t, s, q, x).ds;
  const Mat j = group_jacobian<G>(
      [&](const GroupElement<G>& sp) -> Vec { return spec.residual(t, sp, q, x); }, s);
  return j;
}

template <MatrixLieGroup G>
ImplicitResidualPartials<G> implicit_residual_partials(const ImplicitStepSpec<G>& spec, int t,
                                                       const GroupElement<G>& s,
                                                       const GroupElement<G>& q, const Vec& x) {
  if (spec.partials) return spec.partials(t, s, q, x);
  ImplicitResidualPartials<G> out;
  out.ds = implicit_residual_ds(spec, t, s, q, x);
  out.dq = group_jacobian<G>(
      [&](const GroupElement<G>& qp) -> Vec { return spec.residual(t, s, qp, x); }, q);
  out.dx = x.size() == 0
               ? Mat(G::algebra_dim, 0)
               : central_jacobian([&](const Vec& xp) -> Vec { return spec.residual(t, s, q, xp); },
                                  x);
  return out;
}

template <MatrixLieGroup G>
ImplicitStepSolution<G> solve_step(const ImplicitStepSpec<G>& spec, const GroupElement<G>& q,
                                   const Vec& x, int t = 0,
                                   const ImplicitStepOptions& opts = {}) {
  GroupElement<G> s = spec.guess ? spec.guess(t, q, x) : spec.initial_guess;
  Coords<G> r = spec.residual(t, s, q, x);
  double norm = r.cwiseAbs().maxCoeff();
  int iters = 0;
  while (norm > opts.tol) {
    if (iters >= opts.max_iter) {
      throw Error(ErrorCode::NoConvergence,
                  "implicit step residual " + std::to_string(norm) + " after " +
                      std::to_string(iters) + " Newton iterations");
    }
    const AlgebraMatrix<G> ds = implicit_residual_ds(spec, t, s, q, x);
    if (std::abs(ds.determinant()) < opts.singular_det) {
      throw Error(ErrorCode::SingularJacobian, "implicit step residual has singular D_s v");
    }
    const Coords<G> dir = -ds.partialPivLu().solve(r);
    double alpha = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 30; ++halving) {
      const GroupElement<G> trial = s * exp(AlgebraVector<G>(Coords<G>(alpha * dir)));
      const Coords<G> rt = spec.residual(t, trial, q, x);
      // Armijo on 0.5 |v|^2 with slope 1e-4
      if (rt.squaredNorm() <= (1.0 - 2e-4 * alpha) * r.squaredNorm()) {
        s = trial;
        r = rt;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    ++iters;
    if (!accepted) {
      throw Error(ErrorCode::NoConvergence, "implicit step line search failed");
    }
    norm = r.cwiseAbs().maxCoeff();
  }
  return {s, iters, norm};
}

/// Derivatives of the implicit solution map s = kappa(q, x), left-trivialized:
/// kappa(q exp(e w), x + e d) = kappa(q, x) exp(e (dq w + dx d)) + O(e^2).
template <MatrixLieGroup G>
struct KappaPartials {
  AlgebraMatrix<G> dq;
  Mat dx;  // n_q x n_x
};

template <MatrixLieGroup G>
KappaPartials<G> kappa_partials(const ImplicitStepSpec<G>& spec, const GroupElement<G>& s,
                                const GroupElement<G>& q, const Vec& x, int t = 0,
                                double singular_det = 1e-12) {
  const ImplicitResidualPartials<G> vp = implicit_residual_partials(spec, t, s, q, x);
  if (std::abs(vp.ds.determinant()) < singular_det) {
    throw Error(ErrorCode::SingularJacobian, "D_s v is singular");
  }
  const auto lu = vp.ds.partialPivLu();
  KappaPartials<G> out;
  out.dq = -lu.solve(vp.dq);
  out.dx = -lu.solve(vp.dx);
  return out;
}

}  // namespace liepmp
