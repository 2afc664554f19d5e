#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "liepmp/lie_core.hpp"

using namespace liepmp;

namespace {

constexpr double kPi = std::numbers::pi;

template <int n>
Eigen::Matrix<double, n, n> series_expm(const Eigen::Matrix<double, n, n>& a, int terms = 30) {
  Eigen::Matrix<double, n, n> sum = Eigen::Matrix<double, n, n>::Identity();
  Eigen::Matrix<double, n, n> term = sum;
  for (int k = 1; k < terms; ++k) {
    term = term * a / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

long double asin_series(long double x) {
  long double sum = x, term = x;
  for (int k = 1; k < 40; ++k) {
    term *= x * x * (2 * k - 1) * (2 * k - 1) / static_cast<long double>((2 * k) * (2 * k + 1));
    sum += term;
  }
  return sum;
}

Eigen::Vector3d random_ball(std::mt19937_64& rng, double radius) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (;;) {
    Eigen::Vector3d v(d(rng), d(rng), d(rng));
    if (v.norm() <= 1.0) return radius * v;
  }
}

}  // namespace

TEST(Hat, ZeroOnSO2) { EXPECT_TRUE(hat<SO2>(Coords<SO2>::Zero()).isZero(0.0)); }

TEST(Hat, VeeRoundTripSO3) {
  const Eigen::Vector3d v(1, 2, 3);
  EXPECT_EQ(vee<SO3>(hat<SO3>(v)), v);
}

TEST(Hat, MatchesCrossProduct) {
  const double a = 0.7;
  const Eigen::Vector3d axis(0, 0, a);
  const Eigen::Vector3d e1 = Eigen::Vector3d::UnitX();
  EXPECT_TRUE((hat<SO3>(axis) * e1).isApprox(axis.cross(e1), 1e-15));
  EXPECT_NEAR((hat<SO3>(axis) * e1)(1), a, 1e-15);
}

TEST(Hat, VeeRejectsNonSkew) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  EXPECT_THROW(vee<SO3>(m), Error);
  try {
    vee<SO3>(m);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidAlgebraMatrix);
  }
}

TEST(Exp, ZeroIsIdentity) {
  EXPECT_TRUE(exp(AlgebraVector<SO2>()).matrix().isIdentity(0.0));
  EXPECT_TRUE(exp(AlgebraVector<SO3>()).matrix().isIdentity(0.0));
}

TEST(Exp, QuarterTurnSO2MatchesSeries) {
  const Coords<SO2> v = Coords<SO2>::Constant(kPi / 2);
  const Eigen::Matrix2d oracle = series_expm<2>(hat<SO2>(v));
  const Eigen::Matrix2d got = exp<SO2>(v).matrix();
  EXPECT_LE((got - oracle).cwiseAbs().maxCoeff(), 1e-14);
  Eigen::Matrix2d expect;
  expect << 0, -1, 1, 0;
  EXPECT_LE((got - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Exp, QuarterTurnSO3MatchesSeries) {
  const Eigen::Vector3d v(0, 0, kPi / 2);
  const Eigen::Matrix3d oracle = series_expm<3>(hat<SO3>(v));
  const Eigen::Matrix3d got = exp<SO3>(v).matrix();
  EXPECT_LE((got - oracle).cwiseAbs().maxCoeff(), 1e-14);
  Eigen::Matrix3d expect;
  expect << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  EXPECT_LE((got - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Exp, GenericSO3MatchesSeries) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const Eigen::Vector3d v = random_ball(rng, 3.0);
    const Eigen::Matrix3d oracle = series_expm<3>(hat<SO3>(v), 60);
    EXPECT_LE((exp<SO3>(v).matrix() - oracle).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(Log, IdentityIsZero) {
  EXPECT_TRUE(log(GroupElement<SO2>()).v.isZero(0.0));
  EXPECT_TRUE(log(GroupElement<SO3>()).v.isZero(0.0));
}

TEST(Log, RoundTripOnPrincipalBranch) {
  const Eigen::Vector3d v(0.3, 0, 0);
  EXPECT_LE((log(exp<SO3>(v)).v - v).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Log, PlanarRotationStepIsArcsine) {
  const double h = 0.05, w = 0.0875;
  const double s = h * w;
  Eigen::Matrix2d f;
  f << std::sqrt(1 - s * s), -s, s, std::sqrt(1 - s * s);
  const double oracle = static_cast<double>(asin_series(static_cast<long double>(s)));
  const double got = log(GroupElement<SO2>(f)).v(0);
  EXPECT_NEAR(got, oracle, 1e-17);
  EXPECT_NEAR(got, 4.3750139e-3, 1e-10);
}

TEST(Log, BranchCutThrows) {
  const GroupElement<SO2> half = rotation2(kPi);
  EXPECT_THROW(log(half), Error);
  const GroupElement<SO3> r = exp<SO3>(Eigen::Vector3d(0, kPi - 1e-8, 0));
  try {
    log(r);
    FAIL() << "expected LogBranchCut";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LogBranchCut);
  }
}

TEST(GroupElement, ProjectsDriftedMatrix) {
  Eigen::Matrix3d m = exp<SO3>(Eigen::Vector3d(0.1, 0.2, 0.3)).matrix();
  m(0, 0) += 1e-6;
  const GroupElement<SO3> g(m);
  EXPECT_LE(g.orthonormality_defect(), 1e-14);
  EXPECT_NEAR(g.matrix().determinant(), 1.0, 1e-14);
}

TEST(GroupElement, RejectsReflection) {
  Eigen::Matrix2d m;
  m << 1, 0, 0, -1;
  EXPECT_THROW(GroupElement<SO2>{m}, Error);
}

TEST(AdStar, IdentityElement) {
  const CoAlgebraVector<SO3> rho(Eigen::Vector3d(0.4, -1.0, 2.0));
  EXPECT_EQ(ad_star(GroupElement<SO3>(), rho).c, rho.c);
}

TEST(AdStar, PlanarIsIdentityForEveryElement) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(-3.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    const CoAlgebraVector<SO2> rho(Coords<SO2>::Constant(d(rng)));
    EXPECT_EQ(ad_star(rotation2(d(rng)), rho).c, rho.c);
  }
}

TEST(AdStar, SO3MatchesConjugation) {
  const GroupElement<SO3> g = exp<SO3>(Eigen::Vector3d(0, 0, kPi / 2));
  const CoAlgebraVector<SO3> e1(Eigen::Vector3d::UnitX());
  const CoAlgebraVector<SO3> got = ad_star(g, e1);
  for (int i = 0; i < 3; ++i) {
    const Eigen::Vector3d w = Eigen::Vector3d::Unit(i);
    const Eigen::Matrix3d conj = g.matrix() * hat<SO3>(w) * g.matrix().transpose();
    const double oracle = e1.c.dot(vee<SO3>(conj));
    EXPECT_NEAR(got.c.dot(w), oracle, 1e-15);
  }
}

TEST(AdStar, DualityOnRandomInputs) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const GroupElement<SO3> g = exp<SO3>(random_ball(rng, 3.0));
    const CoAlgebraVector<SO3> rho(random_ball(rng, 2.0));
    const AlgebraVector<SO3> w(random_ball(rng, 2.0));
    const AlgebraVector<SO3> adw(vee<SO3>(g.matrix() * hat<SO3>(w.v) * g.matrix().transpose()));
    EXPECT_NEAR(pairing(ad_star(g, rho), w), pairing(rho, adw), 1e-12);
  }
}

TEST(Trivialize, ZeroGradient) {
  EXPECT_TRUE(trivialize_cotangent(GroupElement<SO3>(), Eigen::Matrix3d::Zero()).c.isZero(0.0));
}

TEST(Trivialize, TraceOnSO2AtIdentity) {
  const GroupElement<SO2> q;
  const CoAlgebraVector<SO2> c = trivialize_cotangent(q, Eigen::Matrix2d::Identity());
  const double e = 1e-6;
  const double fd = ((q.matrix() * exp<SO2>(Coords<SO2>::Constant(e)).matrix()).trace() -
                     (q.matrix() * exp<SO2>(Coords<SO2>::Constant(-e)).matrix()).trace()) /
                    (2 * e);
  EXPECT_NEAR(c.c(0), fd, 1e-9);
  EXPECT_NEAR(c.c(0), 0.0, 1e-15);
}

TEST(Trivialize, EntryFunctionOnSO3) {
  std::mt19937_64 rng(2);
  for (const GroupElement<SO3>& q : {GroupElement<SO3>(), exp<SO3>(random_ball(rng, 2.0))}) {
    Eigen::Matrix3d df = Eigen::Matrix3d::Zero();
    df(0, 0) = 1.0;
    const CoAlgebraVector<SO3> c = trivialize_cotangent(q, df);
    for (int i = 0; i < 3; ++i) {
      const double e = 1e-6;
      const Eigen::Vector3d w = Eigen::Vector3d::Unit(i);
      const double fd = ((q.matrix() * exp<SO3>(Eigen::Vector3d(e * w)).matrix())(0, 0) -
                         (q.matrix() * exp<SO3>(Eigen::Vector3d(-e * w)).matrix())(0, 0)) /
                        (2 * e);
      EXPECT_NEAR(c.c(i), fd, 1e-9);
    }
  }
}

TEST(DexpDual, ZeroArgumentIsIdentity) {
  const CoAlgebraVector<SO3> z(Eigen::Vector3d(1, -2, 0.5));
  EXPECT_EQ(dexp_dual(AlgebraVector<SO3>(), z).c, z.c);
}

TEST(DexpDual, PlanarIsIdentity) {
  const CoAlgebraVector<SO2> z(Coords<SO2>::Constant(2.5));
  EXPECT_EQ(dexp_dual(AlgebraVector<SO2>(Coords<SO2>::Constant(1.3)), z).c, z.c);
}

TEST(DexpDual, SO3MatchesSeries) {
  const Eigen::Vector3d a(0, 0, 0.4);
  const Eigen::Vector3d zeta = Eigen::Vector3d::UnitX();
  // sum_k (-ad_a^T)^k / (k+1)!, with ad_a = hat(a)
  const Eigen::Matrix3d m = -hat<SO3>(a).transpose();
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  Eigen::Matrix3d power = Eigen::Matrix3d::Identity();
  double fact = 1.0;
  for (int k = 0; k < 25; ++k) {
    fact *= (k + 1);
    sum += power * zeta / fact;
    power = power * m;
  }
  const Eigen::Vector3d got = dexp_dual(AlgebraVector<SO3>(a), CoAlgebraVector<SO3>(zeta)).c;
  EXPECT_LE((got - sum).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(DexpLeft, MatchesFiniteDifferenceOfExp) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 20; ++i) {
    const Eigen::Vector3d a = random_ball(rng, 2.5);
    const Eigen::Matrix3d d = dexp_left(AlgebraVector<SO3>(a));
    const double e = 1e-6;
    for (int j = 0; j < 3; ++j) {
      const Eigen::Vector3d dj = Eigen::Vector3d::Unit(j);
      const GroupElement<SO3> base = exp<SO3>(a);
      const Eigen::Vector3d fp = log(base.inverse() * exp<SO3>(Eigen::Vector3d(a + e * dj))).v;
      const Eigen::Vector3d fm = log(base.inverse() * exp<SO3>(Eigen::Vector3d(a - e * dj))).v;
      EXPECT_LE(((fp - fm) / (2 * e) - d.col(j)).cwiseAbs().maxCoeff(), 1e-8);
    }
  }
}

TEST(DexpDual, InverseAndDlogRoundTrip) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 100; ++i) {
    const AlgebraVector<SO3> a(random_ball(rng, 3.0));
    const CoAlgebraVector<SO3> z(random_ball(rng, 1.0));
    EXPECT_LE((dexp_dual_inverse(a, dexp_dual(a, z)).c - z.c).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_TRUE((dlog_left(a) * dexp_left(a)).isIdentity(1e-12));
  }
}

TEST(DexpDual, LinearInCovector) {
  std::mt19937_64 rng(8);
  const AlgebraVector<SO3> a(random_ball(rng, 2.0));
  const CoAlgebraVector<SO3> z1(random_ball(rng, 1.0)), z2(random_ball(rng, 1.0));
  const CoAlgebraVector<SO3> lhs = dexp_dual(a, z1 * 2.0 + z2 * -3.0);
  const CoAlgebraVector<SO3> rhs = dexp_dual(a, z1) * 2.0 + dexp_dual(a, z2) * -3.0;
  EXPECT_LE((lhs.c - rhs.c).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(ExpLog, RoundTripProperty) {
  std::mt19937_64 rng(17);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Eigen::Vector3d v = random_ball(rng, 3.0);
    worst = std::max(worst, (log(exp<SO3>(v)).v - v).cwiseAbs().maxCoeff());
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(RotationAngle, PlanarAndSpatial) {
  EXPECT_NEAR(angle(rotation2(0.7)), 0.7, 1e-15);
  EXPECT_NEAR(rotation_angle(exp<SO3>(Eigen::Vector3d(0.3, -0.4, 0))), 0.5, 1e-14);
}
