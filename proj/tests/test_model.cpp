#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "test_problems.hpp"

using namespace liepmp;
using namespace liepmp::testing;

namespace {

LieOCP<SO2> t2_problem() { return build_so2(*so2_preset("t2")); }

Vec v1(double a) { return Vec::Constant(1, a); }

Eigen::Vector3d cross_recursion(const Eigen::Matrix3d& J, const Eigen::Vector3d& w, double h,
                                const Eigen::Vector3d& u) {
  const Eigen::Vector3d m = J * w;
  return J.inverse() * (m + h * w.cross(m) + h * u);
}

}  // namespace

// ---------------------------------------------------------------------------
// ocp_model

TEST(Validate, AcceptsPlanarExample) {
  const ValidationReport r = validate(t2_problem());
  EXPECT_TRUE(r.accepted()) << (r.issues.empty() ? "" : r.issues.front().message);
}

TEST(Validate, RejectsInvertedBox) {
  LieOCP<SO2> p = t2_problem();
  p.controls.lo = v1(1.0);
  p.controls.hi = v1(-1.0);
  EXPECT_TRUE(validate(p).has(ValidationCode::ConvexityViolation));
}

TEST(Validate, RejectsWrongControlCostPartial) {
  LieOCP<SO2> p = t2_problem();
  p.stage_cost_partials = [](int, const GroupElement<SO2>&, const Vec&, const Vec& u) {
    CostPartials<SO2> c;
    c.dx = Vec::Zero(1);
    c.du = 1.1 * u;
    return c;
  };
  p.probe_radius = 1.0;
  EXPECT_TRUE(validate(p).has(ValidationCode::DerivativeMismatch));
}

TEST(Validate, RejectsMissingMapsAndHorizon) {
  LieOCP<SO2> p = t2_problem();
  p.horizon = 0;
  p.dynamics = nullptr;
  const ValidationReport r = validate(p);
  EXPECT_TRUE(r.has(ValidationCode::InvalidHorizon));
  EXPECT_TRUE(r.has(ValidationCode::MissingMap));
}

TEST(Validate, RejectsMomentumBoundOutsideArcsineDomain) {
  So2ManeuverSpec s = *so2_preset("t2");
  s.d = 30.0;
  EXPECT_THROW(build_so2(s), Error);
}

TEST(Simulate, ZeroControlsStayAtRest) {
  const LieOCP<SO2> p = t2_problem();
  const Trajectory<SO2> tr = simulate(p, std::vector<Vec>(p.horizon, v1(0.0)));
  ASSERT_EQ(static_cast<int>(tr.q.size()), p.horizon + 1);
  for (int t = 0; t <= p.horizon; ++t) {
    EXPECT_TRUE(tr.q[t].matrix().isIdentity(0.0));
    EXPECT_EQ(tr.x[t](0), 0.0);
  }
}

TEST(Simulate, ConstantControlIntegratesMomentum) {
  const LieOCP<SO2> p = t2_problem();
  const double c = 0.025, h = 0.05;
  const Trajectory<SO2> tr = simulate(p, std::vector<Vec>(p.horizon, v1(c)));
  for (int t = 0; t <= p.horizon; ++t) EXPECT_NEAR(tr.x[t](0), t * h * c, 1e-13);
}

TEST(Simulate, ClampsControlsOutsideBox) {
  const LieOCP<SO2> p = t2_problem();
  std::vector<Vec> u(p.horizon, v1(0.0));
  u[3] = v1(1.0);
  const Trajectory<SO2> tr = simulate(p, u);
  ASSERT_EQ(tr.clamped_steps.size(), 1u);
  EXPECT_EQ(tr.clamped_steps[0], 3);
  EXPECT_NEAR(tr.x[4](0), 0.05 * 0.025, 1e-16);
}

TEST(Simulate, SpatialKinematics) {
  So3AttitudeSpec s = *so3_preset("so3-rest-to-rest");
  s.omega_i = Eigen::Vector3d(0.2, -0.1, 0.3);
  const LieOCP<SO3> p = build_so3(s);
  std::mt19937_64 rng(3);
  std::vector<Vec> u(p.horizon);
  for (Vec& ut : u) ut = Eigen::Vector3d(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
  const Trajectory<SO3> tr = simulate(p, u);
  for (int t = 0; t < p.horizon; ++t) {
    const Eigen::Matrix3d next = tr.q[t].matrix() * exp<SO3>(Eigen::Vector3d(s.h * tr.x[t])).matrix();
    EXPECT_LE((tr.q[t + 1].matrix() - next).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Simulate, FreeSymmetricTopSpinsAboutFixedAxis) {
  So3AttitudeSpec s = *so3_preset("so3-rest-to-rest");
  s.J.setIdentity();
  s.omega_i = Eigen::Vector3d(0.3, -0.2, 0.5);
  s.N = 40;
  const LieOCP<SO3> p = build_so3(s);
  const Trajectory<SO3> tr = simulate(p, std::vector<Vec>(s.N, Vec::Zero(3)));
  for (int t = 0; t <= s.N; ++t) {
    EXPECT_LE((tr.x[t] - s.omega_i).cwiseAbs().maxCoeff(), 1e-15);
    const Eigen::Vector3d expect = s.h * t * s.omega_i;
    EXPECT_LE((log(tr.q[t]).v - expect).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Simulate, EulerMomentumRecursionFiveSteps) {
  So3AttitudeSpec s = *so3_preset("so3-rest-to-rest");
  s.J = Eigen::Vector3d(1, 2, 3).asDiagonal();
  s.omega_i = Eigen::Vector3d(0.1, 0.2, 0.3);
  s.N = 5;
  const LieOCP<SO3> p = build_so3(s);
  const Trajectory<SO3> tr = simulate(p, std::vector<Vec>(5, Vec::Zero(3)));
  Eigen::Vector3d w = s.omega_i;
  for (int t = 0; t < 5; ++t) w = cross_recursion(s.J, w, s.h, Eigen::Vector3d::Zero());
  EXPECT_LE((tr.x[5] - w).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Simulate, KineticEnergyDriftIsMeasured) {
  So3AttitudeSpec s = *so3_preset("so3-rest-to-rest");
  s.J = Eigen::Vector3d(1, 2, 3).asDiagonal();
  s.omega_i = Eigen::Vector3d(0.1, 0.2, 0.3);
  s.h = 0.01;
  s.N = 1000;
  const LieOCP<SO3> p = build_so3(s);
  const Trajectory<SO3> tr = simulate(p, std::vector<Vec>(s.N, Vec::Zero(3)));
  auto energy = [&](const Vec& w) { return 0.5 * w.dot(s.J * w); };
  const double drift = std::abs(energy(tr.x.back()) - energy(tr.x.front())) / energy(tr.x.front());
  RecordProperty("relative_kinetic_energy_drift", std::to_string(drift));
  EXPECT_TRUE(std::isfinite(drift));
}

TEST(TotalCost, ZeroAndConstantControls) {
  const LieOCP<SO2> p = t2_problem();
  std::vector<Vec> zero(p.horizon, v1(0.0));
  EXPECT_EQ(total_cost(p, simulate(p, zero), zero), 0.0);
  const double c = 0.025;
  std::vector<Vec> sat(p.horizon, v1(c));
  EXPECT_NEAR(total_cost(p, simulate(p, sat), sat), p.horizon * c * c / 2, 1e-13);
}

TEST(TotalCost, RejectsInconsistentTrajectory) {
  const LieOCP<SO2> p = t2_problem();
  std::vector<Vec> u(p.horizon, v1(0.01));
  Trajectory<SO2> tr = simulate(p, u);
  tr.x[10](0) += 1e-3;
  try {
    total_cost(p, tr, u);
    FAIL() << "expected InconsistentTrajectory";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InconsistentTrajectory);
  }
}

TEST(PlanarStep, IsRotationWithArcsineAngle) {
  const double h = 0.05;
  for (double w = -0.0875; w <= 0.0875; w += 0.0875 / 50) {
    const GroupElement<SO2> f = so2_step(h, w);
    EXPECT_LE((f.matrix().transpose() * f.matrix() - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_NEAR(f.matrix().determinant(), 1.0, 1e-14);
    EXPECT_NEAR(angle(f), std::asin(h * w), 1e-14);
  }
  for (double hw : {-0.99, -0.5, 0.3, 0.99}) EXPECT_NEAR(angle(so2_step(1.0, hw)), std::asin(hw), 1e-14);
}

TEST(Presets, ManeuverDefaultsAndTable) {
  const ManeuverDefaults d = maneuver_defaults();
  EXPECT_EQ(d.h, 0.05);
  EXPECT_EQ(d.c, 0.025);
  EXPECT_EQ(d.d, 0.0875);
  const So2ManeuverSpec t1 = *so2_preset("t1"), t2 = *so2_preset("t2"), t3 = *so2_preset("t3");
  EXPECT_EQ(t1.N, 2000);
  EXPECT_NEAR(t1.final_time(), 100.0, 1e-12);
  EXPECT_NEAR(rad2deg(t1.theta_f), 90.0, 1e-12);
  EXPECT_EQ(t1.omega_f, 0.08);
  EXPECT_EQ(t2.N, 380);
  EXPECT_NEAR(t2.final_time(), 19.0, 1e-12);
  EXPECT_NEAR(rad2deg(t2.theta_f), 75.0, 1e-12);
  EXPECT_EQ(t3.N, 800);
  EXPECT_NEAR(rad2deg(t3.theta_i), 90.0, 1e-12);
  EXPECT_NEAR(rad2deg(t3.theta_f), 265.0, 1e-12);
  EXPECT_FALSE(so2_preset("t4").has_value());
}

TEST(Presets, SpatialInertiaMustBePositiveDefinite) {
  So3AttitudeSpec s = *so3_preset("so3-rest-to-rest");
  s.J(0, 0) = -1.0;
  EXPECT_THROW(build_so3(s), Error);
}

// ---------------------------------------------------------------------------
// pmp_core

TEST(Hamiltonian, VanishesWithZeroMultipliers) {
  const LieOCP<SO2> p = t2_problem();
  EXPECT_EQ(hamiltonian(p, 0, CoAlgebraVector<SO2>(), v1(0.0), GroupElement<SO2>(), v1(0.05), v1(0.01), 0.0), 0.0);
}

TEST(Hamiltonian, PlanarExampleValue) {
  const LieOCP<SO2> p = t2_problem();
  const double h = 0.05, w = 0.08, u = 0.01, z = 2.0, xi = 3.0;
  const double got = hamiltonian(p, 5, CoAlgebraVector<SO2>(Coords<SO2>::Constant(z)), v1(xi),
                                 GroupElement<SO2>(), v1(w), v1(u), -1.0);
  const double oracle = -u * u / 2 + z * std::asin(h * w) + xi * (w + h * u);
  EXPECT_NEAR(got, oracle, 1e-15);
  EXPECT_NEAR(got, 0.2494500213334869, 1e-15);
}

TEST(Hamiltonian, PlanarPartials) {
  const LieOCP<SO2> p = t2_problem();
  const double h = 0.05, w = 0.07, u = -0.013, z = 1.7, xi = -2.2;
  const HamiltonianPartials<SO2> hp = hamiltonian_partials(
      p, 3, CoAlgebraVector<SO2>(Coords<SO2>::Constant(z)), v1(xi), rotation2(0.4), v1(w), v1(u), -1.0);
  EXPECT_NEAR(hp.d_zeta.v(0), std::asin(h * w), 1e-16);
  EXPECT_NEAR(hp.d_u(0), -u + h * xi, 1e-16);
  EXPECT_NEAR(hp.d_x(0), h * z / std::sqrt(1 - h * h * w * w) + xi, 1e-15);
  EXPECT_EQ(hp.d_q.c(0), 0.0);
  EXPECT_NEAR(hp.d_xi(0), w + h * u, 1e-16);
}

TEST(AdjointStep, PlanarRecursion) {
  const LieOCP<SO2> p = t2_problem();
  const double h = 0.05;
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const double w = uniform(rng, -0.0875, 0.0875), z = uniform(rng, -5, 5), xi = uniform(rng, -5, 5);
    const double mu = i % 2 ? uniform(rng, -3, 0) : 0.0;
    const Costate<SO2> c{CoAlgebraVector<SO2>(Coords<SO2>::Constant(z)), v1(xi)};
    const Costate<SO2> prev = adjoint_step(p, 7, c, v1(mu), rotation2(uniform(rng, -3, 3)), v1(w),
                                           v1(uniform(rng, -0.025, 0.025)), -1.0);
    EXPECT_EQ(prev.rho.c(0), z);
    EXPECT_NEAR(prev.xi(0), h * z / std::sqrt(1 - h * h * w * w) + xi + mu * w, 1e-14);
  }
}

TEST(AdjointStep, RejectsOutOfRangeStep) {
  const LieOCP<SO2> p = t2_problem();
  const Costate<SO2> c{CoAlgebraVector<SO2>(), v1(0.0)};
  EXPECT_THROW(adjoint_step(p, 0, c, Vec(), GroupElement<SO2>(), v1(0.0), v1(0.0), -1.0), Error);
  EXPECT_THROW(adjoint_step(p, 5, c, Vec(), GroupElement<SO2>(), v1(0.0), v1(0.0), -1.0), Error);
}

TEST(AdjointStep, SpatialMatchesTransposeJacobianOracle) {
  So3AttitudeSpec s = *so3_preset("so3-rest-to-rest");
  s.J << 1.2, 0.1, 0.0, 0.1, 1.5, -0.2, 0.0, -0.2, 2.0;
  const LieOCP<SO3> p = build_so3(s);
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const GroupElement<SO3> q = exp<SO3>(Eigen::Vector3d(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)));
    const Vec x = Eigen::Vector3d(uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, -2, 2));
    const Vec u = Eigen::Vector3d(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
    const Costate<SO3> c{CoAlgebraVector<SO3>(Eigen::Vector3d(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1))),
                         Eigen::Vector3d(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1))};
    const double nu = -1.0;
    const int t = 4;
    const GroupElement<SO3> next = q * eval_step(p, t, q, x);
    // L(q', x') = <rho, log(next^-1 q' s(q', x'))> + <xi, f(q', x', u)> + nu c(q', x', u)
    auto L = [&](const GroupElement<SO3>& qq, const Vec& xx) {
      return c.rho.c.dot(log(next.inverse() * qq * eval_step(p, t, qq, xx)).v) + c.xi.dot(p.dynamics(t, qq, xx, u)) +
             nu * p.stage_cost(t, qq, xx, u);
    };
    const Costate<SO3> prev = adjoint_step(p, t, c, Vec(), q, x, u, nu);
    const double e = 1e-6;
    for (int i = 0; i < 3; ++i) {
      const Eigen::Vector3d w = e * Eigen::Vector3d::Unit(i);
      const double dq = (L(q * exp<SO3>(w), x) - L(q * exp<SO3>(Eigen::Vector3d(-w)), x)) / (2 * e);
      const double dx = (L(q, x + w) - L(q, x - w)) / (2 * e);
      EXPECT_NEAR(prev.rho.c(i), dq, 1e-6);
      EXPECT_NEAR(prev.xi(i), dx, 1e-6);
    }
  }
}

TEST(AdjointStep, SuperpositionInCostates) {
  So3AttitudeSpec s = *so3_preset("so3-rest-to-rest");
  const LieOCP<SO3> p = build_so3(s);
  std::mt19937_64 rng(33);
  auto rv = [&] { return Eigen::Vector3d(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)); };
  const GroupElement<SO3> q = exp<SO3>(Eigen::Vector3d(rv()));
  const Vec x = rv(), u = rv();
  const Costate<SO3> a{CoAlgebraVector<SO3>(rv()), rv()}, b{CoAlgebraVector<SO3>(rv()), rv()};
  const double alpha = 0.7, beta = -1.3;
  const Costate<SO3> ab{CoAlgebraVector<SO3>(alpha * a.rho.c + beta * b.rho.c), alpha * a.xi + beta * b.xi};
  // with nu = 0 the step is linear; otherwise affine
  const Costate<SO3> l = adjoint_step(p, 2, ab, Vec(), q, x, u, 0.0);
  const Costate<SO3> ra = adjoint_step(p, 2, a, Vec(), q, x, u, 0.0);
  const Costate<SO3> rb = adjoint_step(p, 2, b, Vec(), q, x, u, 0.0);
  EXPECT_LE((l.rho.c - alpha * ra.rho.c - beta * rb.rho.c).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((l.xi - alpha * ra.xi - beta * rb.xi).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Transversality, FreeFinalWithoutCost) {
  So3AttitudeSpec s = *so3_preset("so3-rest-to-rest");
  LieOCP<SO3> p = build_so3(s);
  p.final_cost = nullptr;
  p.final_cost_partials = nullptr;
  const Costate<SO3> c{CoAlgebraVector<SO3>(Eigen::Vector3d(1, 2, 3)), Eigen::Vector3d(-1, 0.5, 2)};
  const Vec r = transversality_free(p, c, Vec(), GroupElement<SO3>(), Eigen::Vector3d(0.1, 0, 0), -1.0);
  EXPECT_EQ(r.head(3), c.rho.c);
  EXPECT_EQ(r.tail(3), c.xi);
}

TEST(Transversality, QuadraticMomentumCost) {
  LieOCP<SO2> p = unconstrained_so2(10, 0.2);
  p.boundary = BoundarySpec<SO2>::free_final(GroupElement<SO2>(), v1(0.0));
  p.final_cost = [](const GroupElement<SO2>&, const Vec& x) { return 0.5 * x.squaredNorm(); };
  const Costate<SO2> c{CoAlgebraVector<SO2>(Coords<SO2>::Constant(0.3)), v1(0.7)};
  const double xn = 0.04;
  const Vec r = transversality_free(p, c, Vec(), rotation2(0.5), v1(xn), -1.0);
  EXPECT_NEAR(r(1), 0.7 + xn, 1e-9);
  EXPECT_NEAR(r(0), 0.3, 1e-12);
}

TEST(Transversality, SpatialOrientationCostMatchesFiniteDifference) {
  const So3AttitudeSpec s = *so3_preset("so3-rest-to-rest");
  const LieOCP<SO3> p = build_so3(s);
  const GroupElement<SO3> qn = exp<SO3>(Eigen::Vector3d(0.2, -0.5, 0.1));
  const Vec xn = Eigen::Vector3d(0.05, 0.0, -0.1);
  const Costate<SO3> c{CoAlgebraVector<SO3>(Eigen::Vector3d(0.1, 0.2, 0.3)), Eigen::Vector3d::Zero()};
  const Vec r = transversality_free(p, c, Vec(), qn, xn, -1.0);
  const double e = 1e-6;
  for (int i = 0; i < 3; ++i) {
    const Eigen::Vector3d w = e * Eigen::Vector3d::Unit(i);
    const double fd = (p.final_cost(qn * exp<SO3>(w), xn) - p.final_cost(qn * exp<SO3>(Eigen::Vector3d(-w)), xn)) / (2 * e);
    EXPECT_NEAR(r(i), c.rho.c(i) + fd, 1e-6);
  }
}

TEST(Transversality, WholeSpaceSubmanifoldReducesToFree) {
  const So3AttitudeSpec s = *so3_preset("so3-rest-to-rest");
  LieOCP<SO3> free_p = build_so3(s);
  LieOCP<SO3> sub = free_p;
  sub.boundary = BoundarySpec<SO3>::submanifold(s.R_i, s.omega_i, [](const GroupElement<SO3>&, const Vec&) { return Vec(); });
  const GroupElement<SO3> qn = exp<SO3>(Eigen::Vector3d(0.3, 0.1, -0.2));
  const Vec xn = Eigen::Vector3d(0.1, 0.2, 0.3);
  const Costate<SO3> c{CoAlgebraVector<SO3>(Eigen::Vector3d(1, -1, 0.5)), Eigen::Vector3d(0.2, 0.4, -0.6)};
  const Vec a = transversality_free(free_p, c, Vec(), qn, xn, -1.0);
  const Vec b = transversality_submanifold(sub, c, Vec(), qn, xn, -1.0);
  ASSERT_EQ(a.size(), b.size());
  // the orthonormal basis of the whole space may rotate the components; norms agree
  EXPECT_NEAR(a.norm(), b.norm(), 1e-12);
  EXPECT_THROW(transversality_free(sub, c, Vec(), qn, xn, -1.0), Error);
}

TEST(Transversality, FixedMomentumSubmanifold) {
  LieOCP<SO3> p = build_so3(*so3_preset("so3-rest-to-rest"));
  p.final_cost = nullptr;
  p.final_cost_partials = nullptr;
  const Eigen::Vector3d xbar(0.1, 0.0, -0.1);
  p.boundary = BoundarySpec<SO3>::submanifold(GroupElement<SO3>(), Vec::Zero(3),
                                              [xbar](const GroupElement<SO3>&, const Vec& x) { return Vec(x - xbar); });
  const GroupElement<SO3> qn = exp<SO3>(Eigen::Vector3d(0.3, 0.1, -0.2));
  const Costate<SO3> c{CoAlgebraVector<SO3>(Eigen::Vector3d(1, -2, 0.5)), Eigen::Vector3d(7, 8, 9)};
  const Vec r = transversality_submanifold(p, c, Vec(), qn, Vec(xbar), -1.0);
  ASSERT_EQ(r.size(), 6);
  EXPECT_LE(r.head(3).cwiseAbs().maxCoeff(), 1e-9);  // b_fin
  // tangent space is T G x {0}; the QR basis spans the group directions
  EXPECT_NEAR(r.tail(3).norm(), c.rho.c.norm(), 1e-9);
  const Mat basis = tangent_basis(submersion_jacobian(p, qn, Vec(xbar)));
  EXPECT_LE(basis.bottomRows(3).cwiseAbs().maxCoeff(), 1e-9);
  Costate<SO3> c2 = c;
  c2.xi = Eigen::Vector3d(-3, 0, 1);
  EXPECT_LE((transversality_submanifold(p, c2, Vec(), qn, Vec(xbar), -1.0) - r).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Transversality, SinglePointSubmanifoldIsEndpointMismatch) {
  LieOCP<SO2> p = unconstrained_so2(10, 0.2);
  const GroupElement<SO2> target = rotation2(0.2);
  p.boundary = BoundarySpec<SO2>::submanifold(GroupElement<SO2>(), v1(0.0), [target](const GroupElement<SO2>& q, const Vec& x) {
    Vec r(2);
    r << log(target.inverse() * q).v(0), x(0);
    return r;
  });
  const Costate<SO2> c{CoAlgebraVector<SO2>(Coords<SO2>::Constant(4.0)), v1(-2.0)};
  const Vec r = transversality_submanifold(p, c, Vec(), rotation2(0.25), v1(0.01), -1.0);
  ASSERT_EQ(r.size(), 2);
  EXPECT_NEAR(r(0), 0.05, 1e-12);
  EXPECT_NEAR(r(1), 0.01, 1e-15);
}

TEST(TangentBasis, RankDeficientThrows) {
  Mat db(2, 3);
  db << 1, 0, 0, 2, 0, 0;
  try {
    tangent_basis(db);
    FAIL() << "expected SubmersionRankError";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SubmersionRankError);
  }
}

TEST(ControlArgmax, PlanarCases) {
  const LieOCP<SO2> p = t2_problem();
  const GroupElement<SO2> q;
  EXPECT_EQ(control_argmax(p, 0, v1(1000.0), q, v1(0.0), -1.0).u(0), 0.025);
  EXPECT_EQ(control_argmax(p, 0, v1(0.0), q, v1(0.0), -1.0).u(0), 0.0);
  EXPECT_EQ(control_argmax(p, 0, v1(-4.0), q, v1(0.0), 0.0).u(0), -0.025);
  EXPECT_EQ(control_argmax(p, 0, v1(4.0), q, v1(0.0), 0.0).u(0), 0.025);
  const ControlChoice tie = control_argmax(p, 0, v1(0.0), q, v1(0.0), 0.0);
  EXPECT_TRUE(tie.singular);
  EXPECT_NEAR(control_argmax(p, 0, v1(0.2), q, v1(0.0), -1.0).u(0), 0.05 * 0.2, 1e-17);
}

TEST(ControlArgmax, GenericPathMatchesQuadraticPath) {
  LieOCP<SO2> p = t2_problem();
  LieOCP<SO2> generic = p;
  generic.quadratic_control_weights.reset();
  for (double xi : {-1000.0, -0.3, 0.0, 0.17, 0.4, 1000.0}) {
    const double a = control_argmax(p, 0, v1(xi), GroupElement<SO2>(), v1(0.01), -1.0).u(0);
    const double b = control_argmax(generic, 0, v1(xi), GroupElement<SO2>(), v1(0.01), -1.0).u(0);
    EXPECT_NEAR(a, b, 1e-12);
  }
}

TEST(ControlArgmax, NonConcaveHamiltonianThrows) {
  LieOCP<SO2> p = t2_problem();
  p.quadratic_control_weights.reset();
  p.stage_cost = [](int, const GroupElement<SO2>&, const Vec&, const Vec& u) { return -0.5 * u(0) * u(0); };
  p.stage_cost_partials = nullptr;
  try {
    control_argmax(p, 0, v1(0.1), GroupElement<SO2>(), v1(0.0), -1.0);
    FAIL() << "expected NonConcaveHamiltonian";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonConcaveHamiltonian);
  }
}

TEST(Stationarity, InteriorAndSaturated) {
  const LieOCP<SO2> p = t2_problem();
  const CoAlgebraVector<SO2> z;
  const GroupElement<SO2> q;
  const double h = 0.05, c = 0.025;
  const double xi_in = 0.3;
  const double u_in = control_argmax(p, 0, v1(xi_in), q, v1(0.0), -1.0).u(0);
  EXPECT_LE(stationarity_residual(p, 0, z, v1(xi_in), q, v1(0.0), v1(u_in), -1.0), 1e-12);
  const double xi_sat = 10.0;  // h xi = 0.5 > c
  EXPECT_EQ(stationarity_residual(p, 0, z, v1(xi_sat), q, v1(0.0), v1(c), -1.0), 0.0);
  const double g = -0.0 + h * xi_sat;
  EXPECT_NEAR(stationarity_residual(p, 0, z, v1(xi_sat), q, v1(0.0), v1(0.0), -1.0), c * std::abs(g), 1e-15);
}

TEST(FischerBurmeister, ScalarCases) {
  auto phi = [](double mu, double g) { return fischer_burmeister(-mu, -g); };
  EXPECT_EQ(phi(0.0, -0.3), 0.0);
  EXPECT_EQ(phi(-1.0, 0.0), 0.0);
  EXPECT_NEAR(phi(-1.0, -0.5), 1.5 - std::sqrt(1.25), 1e-16);
  EXPECT_NEAR(phi(-1.0, -0.5), 0.38196, 1e-5);
}

TEST(Complementarity, TrajectoryResidual) {
  const LieOCP<SO2> p = t2_problem();
  std::vector<Vec> u(p.horizon, v1(0.0));
  u[0] = v1(0.025);
  const Trajectory<SO2> tr = simulate(p, u);
  std::vector<Vec> mu(p.horizon + 1);
  for (int t = 1; t <= p.horizon; ++t) mu[t] = Vec::Zero(constraint_count(p, t));
  EXPECT_EQ(complementarity_residual(p, tr.q, tr.x, mu, p.constraints.nominal_bound), 0.0);
  mu[5](0) = -1.0;
  const double g = 0.5 * (tr.x[5](0) * tr.x[5](0) - 0.0875 * 0.0875);
  EXPECT_NEAR(complementarity_residual(p, tr.q, tr.x, mu, p.constraints.nominal_bound),
              std::abs(fischer_burmeister(1.0, -g)), 1e-15);
}

TEST(CheckExtremal, ZeroCostatesWithAbnormalGaugeAreTrivial) {
  const LieOCP<SO2> p = t2_problem();
  std::vector<Vec> u(p.horizon, v1(0.0));
  const Trajectory<SO2> tr = simulate(p, u);
  ExtremalTrajectory<SO2> e;
  e.q = tr.q;
  e.x = tr.x;
  e.u = u;
  e.rho.assign(p.horizon, CoAlgebraVector<SO2>());
  e.zeta.assign(p.horizon, CoAlgebraVector<SO2>());
  e.xi.assign(p.horizon, v1(0.0));
  e.mu.assign(p.horizon + 1, Vec());
  for (int t = 1; t <= p.horizon; ++t) e.mu[t] = Vec::Zero(constraint_count(p, t));
  e.nu = 0.0;
  e.bound = p.constraints.nominal_bound;
  const ResidualReport r = check_extremal(p, e);
  EXPECT_TRUE(r.nontriviality_violation);
  EXPECT_EQ(r.nontriviality, 0.0);
}

// ---------------------------------------------------------------------------
// implicit_step

TEST(ImplicitStep, ExplicitResidualFromExactGuess) {
  const Eigen::Vector3d target(0.2, -0.1, 0.4);
  ImplicitStepSpec<SO3> spec;
  spec.residual = [target](int, const GroupElement<SO3>& s, const GroupElement<SO3>&, const Vec& x) {
    return Coords<SO3>(log(s).v - Eigen::Vector3d(target + x));
  };
  spec.guess = [target](int, const GroupElement<SO3>&, const Vec& x) { return exp<SO3>(Eigen::Vector3d(target + x)); };
  const ImplicitStepSolution<SO3> sol = solve_step(spec, GroupElement<SO3>(), Vec(Eigen::Vector3d::Zero()));
  EXPECT_EQ(sol.newton_iters, 0);
  EXPECT_LE((log(sol.s).v - target).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ImplicitStep, PlanarMidpointType) {
  const double h = 0.05;
  ImplicitStepSpec<SO2> spec;
  spec.residual = [h](int, const GroupElement<SO2>& s, const GroupElement<SO2>&, const Vec& x) {
    return Coords<SO2>::Constant(angle(s) - h * x(0));
  };
  const ImplicitStepSolution<SO2> sol = solve_step(spec, GroupElement<SO2>(), v1(1.3));
  EXPECT_NEAR(angle(sol.s), h * 1.3, 1e-12);
}

TEST(ImplicitStep, TrapezoidClosedForm) {
  const double h = 0.05, k = 3.0, w = 0.7;
  // angle(s) = (h/2)(w + w'), w' = w + k angle(s)  =>  angle(s) = h w / (1 - h k / 2)
  ImplicitStepSpec<SO2> spec;
  spec.residual = [h, k](int, const GroupElement<SO2>& s, const GroupElement<SO2>&, const Vec& x) {
    const double th = angle(s);
    return Coords<SO2>::Constant(th - 0.5 * h * (x(0) + x(0) + k * th));
  };
  const ImplicitStepSolution<SO2> sol = solve_step(spec, GroupElement<SO2>(), v1(w));
  EXPECT_NEAR(angle(sol.s), h * w / (1.0 - h * k / 2.0), 1e-12);
}

TEST(KappaPartials, IndependentOfMomentum) {
  ImplicitStepSpec<SO2> spec;
  spec.residual = [](int, const GroupElement<SO2>& s, const GroupElement<SO2>&, const Vec&) {
    return Coords<SO2>::Constant(angle(s) - 0.1);
  };
  const ImplicitStepSolution<SO2> sol = solve_step(spec, GroupElement<SO2>(), v1(0.4));
  EXPECT_LE(kappa_partials(spec, sol.s, GroupElement<SO2>(), v1(0.4)).dx.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(KappaPartials, PlanarScalar) {
  const double h = 0.05;
  ImplicitStepSpec<SO2> spec;
  spec.residual = [h](int, const GroupElement<SO2>& s, const GroupElement<SO2>&, const Vec& x) {
    return Coords<SO2>::Constant(angle(s) - h * x(0));
  };
  const ImplicitStepSolution<SO2> sol = solve_step(spec, GroupElement<SO2>(), v1(0.9));
  EXPECT_NEAR(kappa_partials(spec, sol.s, GroupElement<SO2>(), v1(0.9)).dx(0, 0), h, 1e-8);
}

TEST(KappaPartials, SpatialAffineResidualMatchesFiniteDifference) {
  std::mt19937_64 rng(12);
  Eigen::Matrix3d A, B;
  for (int i = 0; i < 9; ++i) {
    A(i) = uniform(rng, -0.2, 0.2);
    B(i) = uniform(rng, -0.3, 0.3);
  }
  const Eigen::Vector3d c0(0.1, -0.2, 0.15);
  ImplicitStepSpec<SO3> spec;
  spec.residual = [=](int, const GroupElement<SO3>& s, const GroupElement<SO3>& q, const Vec& x) {
    return Coords<SO3>(log(s).v - (A * log(q).v + B * x + c0));
  };
  const GroupElement<SO3> q = exp<SO3>(Eigen::Vector3d(0.3, 0.2, -0.4));
  const Vec x = Eigen::Vector3d(0.5, -0.1, 0.2);
  const ImplicitStepSolution<SO3> sol = solve_step(spec, q, x);
  const KappaPartials<SO3> kp = kappa_partials(spec, sol.s, q, x);
  const double e = 1e-6;
  for (int j = 0; j < 3; ++j) {
    const Eigen::Vector3d d = e * Eigen::Vector3d::Unit(j);
    const GroupElement<SO3> sp = solve_step(spec, q, Vec(x + d)).s;
    const GroupElement<SO3> sm = solve_step(spec, q, Vec(x - d)).s;
    const Eigen::Vector3d fdx = (log(sol.s.inverse() * sp).v - log(sol.s.inverse() * sm).v) / (2 * e);
    const GroupElement<SO3> sq = solve_step(spec, q * exp<SO3>(d), x).s;
    const GroupElement<SO3> sqm = solve_step(spec, q * exp<SO3>(Eigen::Vector3d(-d)), x).s;
    const Eigen::Vector3d fdq = (log(sol.s.inverse() * sq).v - log(sol.s.inverse() * sqm).v) / (2 * e);
    EXPECT_LE((fdx - kp.dx.col(j)).norm() / std::max(1.0, fdx.norm()), 1e-5);
    EXPECT_LE((fdq - kp.dq.col(j)).norm() / std::max(1.0, fdq.norm()), 1e-5);
  }
}

TEST(ImplicitAdjoint, EncodedExplicitStepMatchesAdjointStep) {
  const So2ManeuverSpec s = *so2_preset("t2");
  const LieOCP<SO2> ex = build_so2(s);
  const LieOCP<SO2> im = implicit_variant(ex, s.h);
  std::mt19937_64 rng(6);
  for (int i = 0; i < 20; ++i) {
    const double w = uniform(rng, -0.08, 0.08);
    const GroupElement<SO2> q = rotation2(uniform(rng, -3, 3));
    const Costate<SO2> c{CoAlgebraVector<SO2>(Coords<SO2>::Constant(uniform(rng, -5, 5))), v1(uniform(rng, -5, 5))};
    const Vec mu = v1(uniform(rng, -1, 0));
    const Vec u = v1(uniform(rng, -0.025, 0.025));
    const Costate<SO2> a = adjoint_step(ex, 3, c, mu, q, v1(w), u, -1.0);
    const GroupElement<SO2> sstep = solve_step(*im.implicit_step, q, v1(w)).s;
    const Costate<SO2> b = implicit_adjoint_step(im, 3, c, mu, q, v1(w), u, sstep, -1.0);
    EXPECT_NEAR(a.rho.c(0), b.rho.c(0), 1e-10);
    EXPECT_NEAR(a.xi(0), b.xi(0), 1e-10);
  }
}

TEST(ImplicitAdjoint, VanishingStepDerivativeGivesPlainRecursion) {
  const So2ManeuverSpec s = *so2_preset("t2");
  const LieOCP<SO2> im = implicit_variant(build_so2(s), s.h);
  const double w = 0.05, xi = 1.5, z = 0.7, mu = -0.2;
  const Costate<SO2> c{CoAlgebraVector<SO2>(Coords<SO2>::Constant(z)), v1(xi)};
  const GroupElement<SO2> sstep = solve_step(*im.implicit_step, GroupElement<SO2>(), v1(w)).s;
  const Costate<SO2> b = implicit_adjoint_step(im, 3, c, v1(mu), GroupElement<SO2>(), v1(w), v1(0.01), sstep, -1.0,
                                               CoAlgebraVector<SO2>(), im.constraints.nominal_bound);
  EXPECT_NEAR(b.rho.c(0), z, 1e-15);
  EXPECT_NEAR(b.xi(0), xi + mu * w, 1e-15);
}
