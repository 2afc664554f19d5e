#pragma once

// Matrix Lie group kernels for SO(2) and SO(3): hat/vee, exp/log, (co)adjoint
// actions, cotangent left-trivialization and the dual of the exponential's
// derivative. Algebra coordinates are the hat-isomorphism coordinates; the
// pairing between a covector c and a vector v is c^T v.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <numbers>
#include <string_view>

#include "liepmp/error.hpp"

namespace liepmp {

enum class GroupKind { SO2, SO3 };

constexpr std::string_view to_string(GroupKind kind) {
  return kind == GroupKind::SO2 ? "SO2" : "SO3";
}

struct SO2 {
  static constexpr GroupKind kind = GroupKind::SO2;
  static constexpr int matrix_dim = 2;
  static constexpr int algebra_dim = 1;
};

struct SO3 {
  static constexpr GroupKind kind = GroupKind::SO3;
  static constexpr int matrix_dim = 3;
  static constexpr int algebra_dim = 3;
};

template <class G>
concept MatrixLieGroup = requires {
  { G::kind } -> std::convertible_to<GroupKind>;
  { G::matrix_dim } -> std::convertible_to<int>;
  { G::algebra_dim } -> std::convertible_to<int>;
} && (G::algebra_dim == G::matrix_dim * (G::matrix_dim - 1) / 2);

template <MatrixLieGroup G>
using GroupMatrix = Eigen::Matrix<double, G::matrix_dim, G::matrix_dim>;
/// Coordinates of an algebra element or of an algebra covector.
template <MatrixLieGroup G>
using Coords = Eigen::Matrix<double, G::algebra_dim, 1>;
/// Linear map on algebra coordinates.
template <MatrixLieGroup G>
using AlgebraMatrix = Eigen::Matrix<double, G::algebra_dim, G::algebra_dim>;

inline constexpr double kOrthoTol = 1e-10;
inline constexpr double kSkewTol = 1e-10;
inline constexpr double kBranchMargin = 1e-6;

template <MatrixLieGroup G>
struct AlgebraVector {
  Coords<G> v = Coords<G>::Zero();

  AlgebraVector() = default;
  explicit AlgebraVector(const Coords<G>& coords) : v(coords) {}

  static AlgebraVector zero() { return {}; }
  AlgebraVector operator+(const AlgebraVector& o) const { return AlgebraVector(v + o.v); }
  AlgebraVector operator-(const AlgebraVector& o) const { return AlgebraVector(v - o.v); }
  AlgebraVector operator-() const { return AlgebraVector(-v); }
  AlgebraVector operator*(double s) const { return AlgebraVector(v * s); }
};

template <MatrixLieGroup G>
struct CoAlgebraVector {
  Coords<G> c = Coords<G>::Zero();

  CoAlgebraVector() = default;
  explicit CoAlgebraVector(const Coords<G>& coeffs) : c(coeffs) {}

  static CoAlgebraVector zero() { return {}; }
  CoAlgebraVector operator+(const CoAlgebraVector& o) const { return CoAlgebraVector(c + o.c); }
  CoAlgebraVector operator-(const CoAlgebraVector& o) const { return CoAlgebraVector(c - o.c); }
  CoAlgebraVector operator*(double s) const { return CoAlgebraVector(c * s); }
};

template <MatrixLieGroup G>
double pairing(const CoAlgebraVector<G>& c, const AlgebraVector<G>& v) {
  return c.c.dot(v.v);
}

template <MatrixLieGroup G>
GroupMatrix<G> hat(const Coords<G>& v) {
  GroupMatrix<G> m;
  if constexpr (G::kind == GroupKind::SO2) {
    m << 0.0, -v(0), v(0), 0.0;
  } else {
    // clang-format off
    m <<  0.0,  -v(2),  v(1),
          v(2),  0.0,  -v(0),
         -v(1),  v(0),  0.0;
    // clang-format on
  }
  return m;
}

template <MatrixLieGroup G>
Coords<G> vee(const GroupMatrix<G>& a) {
  if ((a + a.transpose()).cwiseAbs().maxCoeff() > kSkewTol) {
    throw Error(ErrorCode::InvalidAlgebraMatrix, "matrix is not skew-symmetric");
  }
  Coords<G> v;
  if constexpr (G::kind == GroupKind::SO2) {
    v(0) = 0.5 * (a(1, 0) - a(0, 1));
  } else {
    v << 0.5 * (a(2, 1) - a(1, 2)), 0.5 * (a(0, 2) - a(2, 0)), 0.5 * (a(1, 0) - a(0, 1));
  }
  return v;
}

/// Element of SO(n) stored as an orthonormal matrix. Construction from an
/// arbitrary matrix projects back onto the group (polar factor) once the
/// orthonormality or determinant defect exceeds 1e-10.
template <MatrixLieGroup G>
class GroupElement {
 public:
  using Matrix = GroupMatrix<G>;

  GroupElement() : m_(Matrix::Identity()) {}

  explicit GroupElement(const Matrix& m) : m_(m) {
    if (!m_.allFinite()) {
      throw Error(ErrorCode::InvalidGroupElement, "non-finite matrix entries");
    }
    const double ortho = (m_.transpose() * m_ - Matrix::Identity()).norm();
    const double det = m_.determinant();
    if (ortho > kOrthoTol || std::abs(det - 1.0) > kOrthoTol) {
      if (det <= 0.0) {
        throw Error(ErrorCode::InvalidGroupElement, "determinant is not positive");
      }
      Eigen::JacobiSVD<Matrix> svd(m_, Eigen::ComputeFullU | Eigen::ComputeFullV);
      m_ = svd.matrixU() * svd.matrixV().transpose();
    }
  }

  static GroupElement identity() { return GroupElement(); }

  const Matrix& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  GroupElement inverse() const { return GroupElement(m_.transpose()); }
  GroupElement operator*(const GroupElement& o) const { return GroupElement(m_ * o.m_); }

  double orthonormality_defect() const {
    return (m_.transpose() * m_ - Matrix::Identity()).norm();
  }

 private:
  Matrix m_;
};

template <MatrixLieGroup G>
GroupElement<G> exp(const AlgebraVector<G>& a) {
  using Matrix = GroupMatrix<G>;
  if constexpr (G::kind == GroupKind::SO2) {
    const double c = std::cos(a.v(0));
    const double s = std::sin(a.v(0));
    Matrix m;
    m << c, -s, s, c;
    return GroupElement<G>(m);
  } else {
    const double theta = a.v.norm();
    const Matrix k = hat<G>(a.v);
    double c1;  // sin(theta)/theta
    double c2;  // (1-cos(theta))/theta^2
    if (theta < 1e-8) {
      const double t2 = theta * theta;
      c1 = 1.0 - t2 / 6.0;
      c2 = 0.5 - t2 / 24.0;
    } else {
      c1 = std::sin(theta) / theta;
      c2 = (1.0 - std::cos(theta)) / (theta * theta);
    }
    return GroupElement<G>(Matrix::Identity() + c1 * k + c2 * k * k);
  }
}

template <MatrixLieGroup G>
GroupElement<G> exp(const Coords<G>& v) {
  return exp(AlgebraVector<G>(v));
}

/// Rotation angle in [0, pi]; never throws.
template <MatrixLieGroup G>
double rotation_angle(const GroupElement<G>& g) {
  if constexpr (G::kind == GroupKind::SO2) {
    return std::abs(std::atan2(g(1, 0), g(0, 0)));
  } else {
    const double cos_theta = std::clamp((g.matrix().trace() - 1.0) / 2.0, -1.0, 1.0);
    return std::acos(cos_theta);
  }
}

/// Principal logarithm. Throws LogBranchCut when the rotation angle is within
/// 1e-6 of pi, i.e. outside the domain on which exp is a diffeomorphism.
template <MatrixLieGroup G>
AlgebraVector<G> log(const GroupElement<G>& g) {
  constexpr double limit = std::numbers::pi - kBranchMargin;
  Coords<G> v;
  if constexpr (G::kind == GroupKind::SO2) {
    const double theta = std::atan2(g(1, 0), g(0, 0));
    if (std::abs(theta) >= limit) {
      throw Error(ErrorCode::LogBranchCut, "SO2 rotation angle at the branch cut");
    }
    v(0) = theta;
  } else {
    const auto& m = g.matrix();
    const double cos_theta = std::clamp((m.trace() - 1.0) / 2.0, -1.0, 1.0);
    const double theta = std::acos(cos_theta);
    if (theta >= limit) {
      throw Error(ErrorCode::LogBranchCut, "SO3 rotation angle at the branch cut");
    }
    const Coords<G> axis2(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
    if (theta < 1e-6) {
      v = 0.5 * (1.0 + theta * theta / 6.0) * axis2;
    } else {
      v = theta / (2.0 * std::sin(theta)) * axis2;
    }
  }
  return AlgebraVector<G>(v);
}

/// Matrix of ad_a (Lie bracket with a) in algebra coordinates.
template <MatrixLieGroup G>
AlgebraMatrix<G> ad_matrix(const Coords<G>& a) {
  if constexpr (G::kind == GroupKind::SO2) {
    return AlgebraMatrix<G>::Zero();
  } else {
    return hat<G>(a);
  }
}

/// Matrix of Ad_g w = vee(g hat(w) g^-1).
template <MatrixLieGroup G>
AlgebraMatrix<G> adjoint_matrix(const GroupElement<G>& g) {
  if constexpr (G::kind == GroupKind::SO2) {
    return AlgebraMatrix<G>::Identity();
  } else {
    return g.matrix();
  }
}

/// Dual of the adjoint action: <ad_star(g, rho), w> = <rho, Ad_g w>.
template <MatrixLieGroup G>
CoAlgebraVector<G> ad_star(const GroupElement<G>& g, const CoAlgebraVector<G>& rho) {
  return CoAlgebraVector<G>(adjoint_matrix(g).transpose() * rho.c);
}

/// Pulls the ambient (Frobenius) gradient dF of a scalar function at q back to
/// the algebra dual: <result, w> = trace(dF^T q hat(w)), i.e. the derivative of
/// the function along the left-translated direction q exp(s hat(w)).
template <MatrixLieGroup G>
CoAlgebraVector<G> trivialize_cotangent(const GroupElement<G>& q, const GroupMatrix<G>& dF) {
  Coords<G> c;
  for (int i = 0; i < G::algebra_dim; ++i) {
    const GroupMatrix<G> dir = q.matrix() * hat<G>(Coords<G>::Unit(i));
    c(i) = (dF.array() * dir.array()).sum();
  }
  return CoAlgebraVector<G>(c);
}

namespace detail {

// Number of series terms k = 0..K-1 needed so that |a|^K / (K+1)! < 1e-17.
inline int dexp_series_terms(double norm_a) {
  int k = 1;
  double bound = norm_a / 2.0;
  while (bound >= 1e-17 && k < 60) {
    ++k;
    bound *= norm_a / static_cast<double>(k + 1);
  }
  return k;
}

}  // namespace detail

/// Applies sum_{k>=0} (-ad_a^*)^k / (k+1)! to zeta. The number of terms only
/// depends on |a|, so the map is exactly linear in zeta.
template <MatrixLieGroup G>
CoAlgebraVector<G> dexp_dual(const AlgebraVector<G>& a, const CoAlgebraVector<G>& zeta) {
  if constexpr (G::kind == GroupKind::SO2) {
    return zeta;
  } else {
    const AlgebraMatrix<G> minus_ad_star = -ad_matrix<G>(a.v).transpose();
    const int terms = detail::dexp_series_terms(a.v.norm());
    Coords<G> term = zeta.c;
    Coords<G> sum = term;
    for (int k = 1; k < terms; ++k) {
      term = minus_ad_star * term / static_cast<double>(k + 1);
      sum += term;
    }
    return CoAlgebraVector<G>(sum);
  }
}

template <MatrixLieGroup G>
AlgebraMatrix<G> dexp_dual_matrix(const AlgebraVector<G>& a) {
  AlgebraMatrix<G> m;
  for (int i = 0; i < G::algebra_dim; ++i) {
    m.col(i) = dexp_dual(a, CoAlgebraVector<G>(Coords<G>::Unit(i))).c;
  }
  return m;
}

template <MatrixLieGroup G>
CoAlgebraVector<G> dexp_dual_inverse(const AlgebraVector<G>& a, const CoAlgebraVector<G>& rho) {
  return CoAlgebraVector<G>(dexp_dual_matrix(a).partialPivLu().solve(rho.c));
}

/// Left-trivialized derivative of exp: exp(a + e d) = exp(a) exp(e * dexp_left(a) d) + O(e^2).
/// Equal to the transpose of dexp_dual_matrix.
template <MatrixLieGroup G>
AlgebraMatrix<G> dexp_left(const AlgebraVector<G>& a) {
  return dexp_dual_matrix(a).transpose();
}

/// Left-trivialized derivative of log at exp(a): log(exp(a) exp(e d)) = a + e * dlog_left(a) d.
template <MatrixLieGroup G>
AlgebraMatrix<G> dlog_left(const AlgebraVector<G>& a) {
  return dexp_left(a).inverse();
}

/// Planar rotation by theta (standard counter-clockwise convention).
inline GroupElement<SO2> rotation2(double theta) {
  return exp(AlgebraVector<SO2>(Coords<SO2>::Constant(theta)));
}

/// Angle of a planar rotation in (-pi, pi].
inline double angle(const GroupElement<SO2>& r) { return std::atan2(r(1, 0), r(0, 0)); }

}  // namespace liepmp
