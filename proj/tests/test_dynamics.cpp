#include <random>

#include <gtest/gtest.h>

#include <jetmpc/dynamics.hpp>
#include <jetmpc/sim.hpp>
#include <jetmpc/testing/oracles.hpp>

using namespace jetmpc;
using jetmpc::testing::check_lambda;
using jetmpc::testing::check_linearization;

namespace {

struct Hover {
  RobotModel model = default_robot_model();
  JetParams jets = linear_jet_params();
  State z;
  ControlInput u;

  Hover() {
    const int n_j = model.num_jets();
    u.s = Eigen::VectorXd::Zero(model.n_s);
    z = State(n_j);
    z.thrust = hover_thrust(model, u.s);
    u.v = z.thrust;
  }
};

}  // namespace

TEST(Dynamics, HoverIsAnEquilibrium) {
  Hover h;
  const Eigen::VectorXd dz = dynamics(h.model, h.jets, h.z, h.u);
  EXPECT_LT(dz.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Dynamics, FreeFall) {
  Hover h;
  h.z.thrust.setZero();
  h.u.v.setZero();
  const Eigen::VectorXd dz = dynamics(h.model, h.jets, h.z, h.u);
  EXPECT_TRUE(dz.segment<3>(3).isApprox(Eigen::Vector3d(0, 0, -h.model.mass * h.model.gravity), 1e-14));
  EXPECT_LT(dz.segment<3>(9).norm(), 1e-14);
}

TEST(Dynamics, MatchesWorldFrameNewtonEuler) {
  // d/dt (R h) = R (hdot + omega x h): body-frame momentum rates agree with
  // world-frame Newton-Euler.
  const RobotModel model = default_robot_model();
  const JetParams jets = jetmpc::testing::nonlinear_jet_params();
  std::mt19937_64 rng(21);
  for (int n = 0; n < 200; ++n) {
    const auto p = jetmpc::testing::random_operating_point(model, jets, rng);
    Wrench w;
    w.force = Eigen::Vector3d(10, -20, 5);
    w.torque = Eigen::Vector3d(-3, 4, 1);
    const Eigen::VectorXd dz = dynamics(model, jets, p.z, p.u, w);
    const Eigen::Matrix3d r = rotation_from_euler(p.z.phi);
    const Eigen::Vector3d omega = model.inertia.inverse() * p.z.h_w;
    const auto world = jetmpc::testing::newton_euler_world(model, p.z, p.u, w);
    const Eigen::Vector3d lin = r * (dz.segment<3>(3) + omega.cross(p.z.h_p));
    const Eigen::Vector3d ang = r * (dz.segment<3>(9) + omega.cross(p.z.h_w));
    EXPECT_LT((lin - world.momentum_rate).norm(), 1e-9 * (1 + world.momentum_rate.norm()));
    EXPECT_LT((ang - world.angular_momentum_rate).norm(), 1e-9 * (1 + world.angular_momentum_rate.norm()));
  }
}

TEST(Dynamics, DimensionMismatchThrows) {
  Hover h;
  h.u.v.resize(2);
  EXPECT_THROW(dynamics(h.model, h.jets, h.z, h.u), InvalidArgument);
}

TEST(Dynamics, SingularPitchThrows) {
  Hover h;
  h.z.phi.y() = std::numbers::pi / 2;
  EXPECT_THROW(dynamics(h.model, h.jets, h.z, h.u), SingularityError);
}

TEST(Lambda, ZeroThrustGivesZero) {
  const RobotModel m = default_robot_model();
  const JetFrames f = forward_kinematics(m, Eigen::VectorXd::Constant(m.n_s, 0.2));
  const Eigen::VectorXd t = Eigen::VectorXd::Zero(m.num_jets());
  EXPECT_EQ(lambda_lin(f, t).norm(), 0.0);
  EXPECT_EQ(lambda_ang(f, t).norm(), 0.0);
}

TEST(Lambda, FixedMountsGiveZero) {
  const RobotModel m = default_robot_model();
  JetFrames f = forward_kinematics(m, Eigen::VectorXd::Zero(m.n_s));
  f.resize(2);  // back jets only
  const Eigen::VectorXd t = Eigen::VectorXd::Constant(2, 120.0);
  EXPECT_EQ(lambda_lin(f, t).norm(), 0.0);
  EXPECT_EQ(lambda_ang(f, t).norm(), 0.0);
}

TEST(Lambda, MatchesFiniteDifferences) {
  const auto r = check_lambda(default_robot_model(), 200, 7);
  EXPECT_LE(r.max_lin_error, 1e-5);
  EXPECT_LE(r.max_ang_error, 1e-5);
}

TEST(Linearize, MatchesFrozenDynamics) {
  const auto r = check_linearization(default_robot_model(), jetmpc::testing::nonlinear_jet_params(), 100, 17);
  EXPECT_LE(r.max_a_error, 1e-5);
  EXPECT_LE(r.max_b_error, 1e-5);
  EXPECT_LE(r.max_tangency, 1e-10);
}

TEST(Linearize, ExactAtPointForFullDynamics) {
  // The frozen model only drops terms, so at the point it reproduces f exactly.
  Hover h;
  h.z.h_p = Eigen::Vector3d(3, -2, 1);
  h.z.h_w = Eigen::Vector3d(0.4, -0.2, 0.3);
  h.z.phi = Eigen::Vector3d(0.1, -0.2, 0.5);
  const ErrorReferences refs{Eigen::Vector3d(0.1, 0, 1.5), Eigen::Vector3d::Zero()};
  const LinearModel lm = linearize(h.model, h.jets, h.z, h.u, refs);
  const Eigen::VectorXd f = augmented_dynamics(h.model, h.jets, h.z, h.u, refs);
  EXPECT_LT((lm.A * lm.z_c + lm.B * lm.u_c + lm.c - f).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Linearize, DirectThrustLayoutDropsJetStates) {
  Hover h;
  const LinearModel lm = linearize(h.model, h.jets, h.z, h.u, {}, JetModelMode::kDirectThrust);
  EXPECT_EQ(lm.A.rows(), 18);
  EXPECT_EQ(lm.B.cols(), h.model.n_s + h.model.num_jets());
}
