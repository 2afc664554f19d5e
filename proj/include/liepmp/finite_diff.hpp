#pragma once

// Central finite differences in Euclidean and left-translated group directions.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "liepmp/lie_core.hpp"

namespace liepmp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline double fd_step(double x) { return std::max(1e-6, 1e-8 * std::abs(x)); }

inline constexpr double kGroupFdStep = 1e-6;

/// Jacobian of a vector-valued f at x by central differences.
template <class F>
Mat central_jacobian(F&& f, const Vec& x) {
  Vec xp = x;
  Mat jac;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = fd_step(x(j));
    xp(j) = x(j) + h;
    const Vec fp = f(xp);
    xp(j) = x(j) - h;
    const Vec fm = f(xp);
    xp(j) = x(j);
    if (j == 0) jac.resize(fp.size(), x.size());
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
  if (x.size() == 0) jac.resize(0, 0);
  return jac;
}

/// Jacobian of a vector-valued f along q exp(s hat(e_i)) at s = 0.
template <MatrixLieGroup G, class F>
Mat group_jacobian(F&& f, const GroupElement<G>& q) {
  Mat jac;
  for (int i = 0; i < G::algebra_dim; ++i) {
    const Coords<G> e = Coords<G>::Unit(i) * kGroupFdStep;
    const Vec fp = f(q * exp(AlgebraVector<G>(e)));
    const Vec fm = f(q * exp(AlgebraVector<G>(Coords<G>(-e))));
    if (i == 0) jac.resize(fp.size(), G::algebra_dim);
    jac.col(i) = (fp - fm) / (2.0 * kGroupFdStep);
  }
  return jac;
}

inline Vec scalar_vec(double v) { return Vec::Constant(1, v); }

}  // namespace liepmp
