#pragma once

/**
 * @file model.hpp
 * @brief Parametric flying-robot model: jet mounting kinematics, allocation
 * matrices and the default four-jet torso.
 *
 * Every jet sits at the end of a serial kinematic chain rooted in the body
 * frame B. The chain is a fixed mount transform followed by revolute joints;
 * each joint rotates about an axis expressed in its predecessor frame and is
 * followed by a constant offset transform. The jet thrust acts along the
 * local z axis of the chain's terminal frame.
 */

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "errors.hpp"
#include "rotation.hpp"

namespace jetmpc {

struct Joint {
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();   ///< unit axis in predecessor frame
  Eigen::Isometry3d offset = Eigen::Isometry3d::Identity();  ///< applied after the rotation
};

struct KinematicChain {
  Eigen::Isometry3d mount = Eigen::Isometry3d::Identity();  ///< body frame -> chain base
  std::vector<Joint> joints;
  int first_joint = 0;  ///< joints occupy s[first_joint, first_joint + joints.size())

  int num_joints() const { return static_cast<int>(joints.size()); }
  bool fixed() const { return joints.empty(); }
};

struct RobotModel {
  double mass = 45.0;
  Eigen::Matrix3d inertia = Eigen::Vector3d(3.0, 2.5, 1.5).asDiagonal();
  Eigen::Vector3d com_offset = Eigen::Vector3d::Zero();  ///< CoM in body frame
  std::vector<KinematicChain> chains;
  int n_s = 0;
  Eigen::VectorXd s_min;
  Eigen::VectorXd s_max;
  double gravity = 9.81;

  int num_jets() const { return static_cast<int>(chains.size()); }

  /// Throws InvalidArgument naming the first violated invariant.
  void validate() const {
    detail::require(std::isfinite(mass) && mass > 0.0, "model.mass must be positive");
    detail::require((inertia - inertia.transpose()).norm() <= 1e-12,
                    "model.inertia must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(inertia);
    detail::require(eig.eigenvalues().minCoeff() > 0.0,
                    "model.inertia must be positive definite");
    detail::require(!chains.empty(), "model.chains must contain at least one jet");
    detail::require(n_s >= 0, "model.n_s must be nonnegative");
    detail::require(s_min.size() == n_s && s_max.size() == n_s,
                    "model.joint_limits must have n_s entries");
    for (int i = 0; i < n_s; ++i) {
      detail::require(s_min[i] < s_max[i], "model.joint_limits: s_min < s_max violated");
    }
    std::vector<int> owner(static_cast<std::size_t>(n_s), -1);
    for (std::size_t c = 0; c < chains.size(); ++c) {
      const auto& chain = chains[c];
      detail::require(chain.first_joint >= 0 &&
                          chain.first_joint + chain.num_joints() <= n_s,
                      "model.chains: joint index range outside [0, n_s)");
      for (int k = 0; k < chain.num_joints(); ++k) {
        detail::require(std::abs(chain.joints[k].axis.norm() - 1.0) <= 1e-12,
                        "model.chains: joint axis must have unit norm");
        auto& o = owner[static_cast<std::size_t>(chain.first_joint + k)];
        detail::require(o < 0, "model.chains: joint index ranges overlap");
        o = static_cast<int>(c);
      }
    }
  }
};

/// Pose and joint Jacobians of one jet frame, all in body coordinates.
struct JetFrame {
  Eigen::Matrix3d rotation;   ///< body -> jet
  Eigen::Vector3d arm;        ///< CoM -> jet origin
  Eigen::MatrixXd j_omega;    ///< 3 x n_s, relative angular Jacobian
  Eigen::MatrixXd j_arm;      ///< 3 x n_s, d(arm)/ds
};

using JetFrames = std::vector<JetFrame>;

inline JetFrames forward_kinematics(const RobotModel& model, const Eigen::VectorXd& s) {
  if (s.size() != model.n_s) {
    throw InvalidArgument("forward_kinematics: joint vector has size " +
                          std::to_string(s.size()) + ", expected " +
                          std::to_string(model.n_s));
  }
  if (!s.allFinite()) throw InvalidArgument("forward_kinematics: non-finite joint vector");

  JetFrames frames;
  frames.reserve(model.chains.size());
  std::vector<Eigen::Vector3d> axes;
  std::vector<Eigen::Vector3d> origins;
  for (const auto& chain : model.chains) {
    axes.clear();
    origins.clear();
    Eigen::Isometry3d pose = chain.mount;
    for (int k = 0; k < chain.num_joints(); ++k) {
      const auto& joint = chain.joints[k];
      axes.push_back(pose.linear() * joint.axis);
      origins.push_back(pose.translation());
      pose = pose * Eigen::AngleAxisd(s[chain.first_joint + k], joint.axis) * joint.offset;
    }

    JetFrame f;
    f.rotation = pose.linear();
    f.arm = pose.translation() - model.com_offset;
    f.j_omega = Eigen::MatrixXd::Zero(3, model.n_s);
    f.j_arm = Eigen::MatrixXd::Zero(3, model.n_s);
    for (int k = 0; k < chain.num_joints(); ++k) {
      const int col = chain.first_joint + k;
      f.j_omega.col(col) = axes[k];
      f.j_arm.col(col) = axes[k].cross(pose.translation() - origins[k]);
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

struct AllocationMatrices {
  Eigen::Matrix3Xd lin;  ///< column i: thrust direction of jet i
  Eigen::Matrix3Xd ang;  ///< column i: torque about CoM per newton of jet i
};

inline AllocationMatrices allocation_matrices(const JetFrames& frames) {
  const auto n = static_cast<Eigen::Index>(frames.size());
  AllocationMatrices a{Eigen::Matrix3Xd(3, n), Eigen::Matrix3Xd(3, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& f = frames[static_cast<std::size_t>(i)];
    const Eigen::Vector3d dir = f.rotation.col(2);
    a.lin.col(i) = dir;
    a.ang.col(i) = skew(f.arm) * dir;
  }
  return a;
}

/**
 * Default torso with four jets: two fixed back jets canted 10 deg outward and
 * two arm jets, each on a shoulder pitch (y) + shoulder roll (x) chain.
 *
 * The arm shoulders sit forward of the CoM by cos(10 deg) times the back-jet
 * setback, so equal thrusts at s = 0 produce zero net torque.
 */
inline RobotModel default_robot_model() {
  RobotModel m;
  m.mass = 45.0;
  m.inertia = Eigen::Vector3d(3.0, 2.5, 1.5).asDiagonal();
  m.com_offset.setZero();
  m.gravity = 9.81;
  m.n_s = 4;

  const double cant = 10.0 * std::numbers::pi / 180.0;
  const double setback = 0.15;
  for (const double side : {1.0, -1.0}) {
    KinematicChain back;
    back.mount.setIdentity();
    back.mount.translate(Eigen::Vector3d(-setback, side * 0.12, 0.10));
    back.mount.rotate(Eigen::AngleAxisd(-side * cant, Eigen::Vector3d::UnitX()));
    back.first_joint = 0;
    m.chains.push_back(back);
  }
  int first = 0;
  for (const double side : {1.0, -1.0}) {
    KinematicChain arm;
    arm.mount.setIdentity();
    arm.mount.translate(Eigen::Vector3d(setback * std::cos(cant), side * 0.30, 0.35));
    Joint pitch;
    pitch.axis = Eigen::Vector3d::UnitY();
    Joint roll;
    roll.axis = Eigen::Vector3d::UnitX();
    roll.offset.setIdentity();
    roll.offset.translate(Eigen::Vector3d(0.0, 0.0, -0.15));
    arm.joints = {pitch, roll};
    arm.first_joint = first;
    first += 2;
    m.chains.push_back(arm);
  }
  m.s_min = Eigen::Vector4d(-0.6, -0.5, -0.6, -0.5);
  m.s_max = Eigen::Vector4d(0.6, 0.5, 0.6, 0.5);
  return m;
}

}  // namespace jetmpc
