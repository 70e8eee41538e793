#pragma once

/**
 * @file dynamics.hpp
 * @brief Centroidal momentum + jet dynamics in body-CoM coordinates and their
 * LPV linearisation.
 *
 * State z = [x_G, h_p, phi, h_w, T, Tdot] where the momenta are expressed in
 * the frame with origin at the CoM and orientation of the body. The angular
 * velocity is recovered as I^-1 h_w (locked velocity ~ body velocity).
 *
 *   x_G'  = R h_p / m
 *   h_p'  = A_lin(s) T - m g R^T e3 - omega x h_p + R^T f_ext
 *   phi'  = (I W)^-1 h_w
 *   h_w'  = A_ang(s) T - omega x h_w + R^T tau_ext
 *   T'    = Tdot
 *   Tdot' = h(T, Tdot) + g(T, Tdot) v
 *
 * with R the body -> world rotation.
 */

#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "jet.hpp"
#include "model.hpp"
#include "rotation.hpp"

namespace jetmpc {

/// How the controller sees the jets.
enum class JetModelMode {
  kSecondOrder,  ///< T, Tdot are states; v is the input
  kDirectThrust  ///< T is an input; no jet states (ablation)
};

/// Index map of the (augmented) state vector.
struct StateLayout {
  int n_jets = 4;
  JetModelMode mode = JetModelMode::kSecondOrder;

  static constexpr int x = 0;
  static constexpr int hp = 3;
  static constexpr int phi = 6;
  static constexpr int hw = 9;
  int thrust() const { return 12; }
  int thrust_rate() const { return 12 + n_jets; }
  bool has_jet_states() const { return mode == JetModelMode::kSecondOrder; }
  /// Size of the physical state (without integral errors).
  int size() const { return has_jet_states() ? 12 + 2 * n_jets : 12; }
  int ex() const { return size(); }
  int ephi() const { return size() + 3; }
  int augmented_size() const { return size() + 6; }
};

struct State {
  Eigen::Vector3d x = Eigen::Vector3d::Zero();
  Eigen::Vector3d h_p = Eigen::Vector3d::Zero();
  Eigen::Vector3d phi = Eigen::Vector3d::Zero();
  Eigen::Vector3d h_w = Eigen::Vector3d::Zero();
  Eigen::VectorXd thrust;
  Eigen::VectorXd thrust_rate;

  State() = default;
  explicit State(int n_jets)
      : thrust(Eigen::VectorXd::Zero(n_jets)), thrust_rate(Eigen::VectorXd::Zero(n_jets)) {}

  int num_jets() const { return static_cast<int>(thrust.size()); }

  Eigen::VectorXd to_vector() const {
    const int n = num_jets();
    Eigen::VectorXd z(12 + 2 * n);
    z << x, h_p, phi, h_w, thrust, thrust_rate;
    return z;
  }

  static State from_vector(const Eigen::VectorXd& z, int n_jets) {
    detail::require(z.size() == 12 + 2 * n_jets, "State::from_vector: size mismatch");
    State s(n_jets);
    s.x = z.segment<3>(0);
    s.h_p = z.segment<3>(3);
    s.phi = z.segment<3>(6);
    s.h_w = z.segment<3>(9);
    s.thrust = z.segment(12, n_jets);
    s.thrust_rate = z.segment(12 + n_jets, n_jets);
    return s;
  }
};

struct ControlInput {
  Eigen::VectorXd s;  ///< joint positions, rad
  Eigen::VectorXd v;  ///< auxiliary jet inputs (thrust in direct-thrust mode)

  Eigen::VectorXd to_vector() const {
    Eigen::VectorXd u(s.size() + v.size());
    u << s, v;
    return u;
  }
};

/// External wrench in world coordinates, applied at the CoM.
struct Wrench {
  Eigen::Vector3d force = Eigen::Vector3d::Zero();
  Eigen::Vector3d torque = Eigen::Vector3d::Zero();
};

namespace detail {

inline void check_dimensions(const RobotModel& model, const State& z, const ControlInput& u) {
  const int n_j = model.num_jets();
  require(z.thrust.size() == n_j && z.thrust_rate.size() == n_j,
          "dynamics: state thrust dimension does not match the number of jets");
  require(u.s.size() == model.n_s, "dynamics: joint input dimension mismatch");
  require(u.v.size() == n_j, "dynamics: jet input dimension mismatch");
}

}  // namespace detail

/// Nonlinear state derivative in the layout of State::to_vector().
inline Eigen::VectorXd dynamics(const RobotModel& model, const JetParams& jets, const State& z,
                                const ControlInput& u, const Wrench& w_ext = {}) {
  detail::check_dimensions(model, z, u);
  const int n_j = model.num_jets();
  const Eigen::Matrix3d rot = rotation_from_euler(z.phi);
  const Eigen::Matrix3d w = euler_rate_matrix(z.phi);
  const Eigen::Vector3d omega = model.inertia.llt().solve(z.h_w);
  const AllocationMatrices alloc = allocation_matrices(forward_kinematics(model, u.s));

  Eigen::VectorXd dz(12 + 2 * n_j);
  dz.segment<3>(0) = rot * z.h_p / model.mass;
  dz.segment<3>(3) = alloc.lin * z.thrust -
                     model.mass * model.gravity * rot.transpose() * Eigen::Vector3d::UnitZ() -
                     omega.cross(z.h_p) + rot.transpose() * w_ext.force;
  dz.segment<3>(6) = w.lu().solve(omega);
  dz.segment<3>(9) = alloc.ang * z.thrust - omega.cross(z.h_w) + rot.transpose() * w_ext.torque;
  dz.segment(12, n_j) = z.thrust_rate;
  for (int i = 0; i < n_j; ++i) {
    dz[12 + n_j + i] = jet_accel(jets, z.thrust[i], z.thrust_rate[i], u.v[i]);
  }
  return dz;
}

/// d(A_lin(s) T)/ds.
inline Eigen::MatrixXd lambda_lin(const JetFrames& frames, const Eigen::VectorXd& thrust) {
  detail::require(static_cast<Eigen::Index>(frames.size()) == thrust.size(),
                  "lambda_lin: thrust dimension mismatch");
  const Eigen::Index n_s = frames.empty() ? 0 : frames.front().j_omega.cols();
  Eigen::MatrixXd lam = Eigen::MatrixXd::Zero(3, n_s);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    lam.noalias() -= thrust[static_cast<Eigen::Index>(i)] * skew(f.rotation.col(2)) * f.j_omega;
  }
  return lam;
}

/// d(A_ang(s) T)/ds.
inline Eigen::MatrixXd lambda_ang(const JetFrames& frames, const Eigen::VectorXd& thrust) {
  detail::require(static_cast<Eigen::Index>(frames.size()) == thrust.size(),
                  "lambda_ang: thrust dimension mismatch");
  const Eigen::Index n_s = frames.empty() ? 0 : frames.front().j_omega.cols();
  Eigen::MatrixXd lam = Eigen::MatrixXd::Zero(3, n_s);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    const Eigen::Matrix3d s_dir = skew(f.rotation.col(2));
    lam.noalias() -= thrust[static_cast<Eigen::Index>(i)] *
                     (s_dir * f.j_arm + skew(f.arm) * s_dir * f.j_omega);
  }
  return lam;
}

/// zdot ~ A z + B u + c over the augmented state [z, e_x, e_phi].
struct LinearModel {
  StateLayout layout;
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::VectorXd c;
  Eigen::VectorXd z_c;  ///< augmented linearisation state
  Eigen::VectorXd u_c;
  Eigen::Matrix3d rotation;  ///< frozen body -> world rotation
};

/// Integral-error references used by the e_x and e_phi rows.
struct ErrorReferences {
  Eigen::Vector3d x = Eigen::Vector3d::Zero();
  Eigen::Vector3d phi = Eigen::Vector3d::Zero();
};

/**
 * Linearise around (z_c, u_c) with R, omega and I frozen at z_c.
 *
 * In kSecondOrder mode u = [s, v]; in kDirectThrust mode u = [s, T] and the
 * thrust entries of z_c are ignored except as the linearisation thrust.
 * `errors` holds e_x, e_phi at the point (only used to fill z_c).
 */
inline LinearModel linearize(const RobotModel& model, const JetParams& jets, const State& z_c,
                             const ControlInput& u_c, const ErrorReferences& refs,
                             JetModelMode mode = JetModelMode::kSecondOrder,
                             const Eigen::Vector3d& e_x = Eigen::Vector3d::Zero(),
                             const Eigen::Vector3d& e_phi = Eigen::Vector3d::Zero()) {
  detail::check_dimensions(model, z_c, u_c);
  const int n_j = model.num_jets();
  const int n_s = model.n_s;

  LinearModel lm;
  lm.layout = StateLayout{n_j, mode};
  const StateLayout& L = lm.layout;
  const int nz = L.augmented_size();
  const int nu = n_s + n_j;
  lm.A = Eigen::MatrixXd::Zero(nz, nz);
  lm.B = Eigen::MatrixXd::Zero(nz, nu);
  lm.c = Eigen::VectorXd::Zero(nz);

  const Eigen::Matrix3d rot = rotation_from_euler(z_c.phi);
  const Eigen::Matrix3d w = euler_rate_matrix(z_c.phi);
  const Eigen::Vector3d omega = model.inertia.llt().solve(z_c.h_w);
  const Eigen::Matrix3d s_omega = skew(omega);
  const JetFrames frames = forward_kinematics(model, u_c.s);
  const AllocationMatrices alloc = allocation_matrices(frames);
  const bool direct = mode == JetModelMode::kDirectThrust;
  const Eigen::VectorXd thrust_c = direct ? u_c.v : z_c.thrust;
  const Eigen::MatrixXd lam_lin = lambda_lin(frames, thrust_c);
  const Eigen::MatrixXd lam_ang = lambda_ang(frames, thrust_c);
  lm.rotation = rot;

  lm.A.block<3, 3>(L.x, L.hp) = rot / model.mass;

  lm.A.block<3, 3>(L.hp, L.hp) = -s_omega;
  lm.B.block(L.hp, 0, 3, n_s) = lam_lin;
  lm.c.segment<3>(L.hp) = -model.mass * model.gravity * rot.transpose() * Eigen::Vector3d::UnitZ() -
                          lam_lin * u_c.s;

  lm.A.block<3, 3>(L.phi, L.hw) = (model.inertia * w).inverse();

  lm.A.block<3, 3>(L.hw, L.hw) = -s_omega;
  lm.B.block(L.hw, 0, 3, n_s) = lam_ang;
  lm.c.segment<3>(L.hw) = -lam_ang * u_c.s;

  if (direct) {
    lm.B.block(L.hp, n_s, 3, n_j) = alloc.lin;
    lm.B.block(L.hw, n_s, 3, n_j) = alloc.ang;
  } else {
    lm.A.block(L.hp, L.thrust(), 3, n_j) = alloc.lin;
    lm.A.block(L.hw, L.thrust(), 3, n_j) = alloc.ang;
    for (int i = 0; i < n_j; ++i) {
      const JetLinearization jl =
          jet_linearization(jets, z_c.thrust[i], z_c.thrust_rate[i], u_c.v[i]);
      lm.A(L.thrust() + i, L.thrust_rate() + i) = 1.0;
      lm.A(L.thrust_rate() + i, L.thrust() + i) = jl.d_t;
      lm.A(L.thrust_rate() + i, L.thrust_rate() + i) = jl.d_tdot;
      lm.B(L.thrust_rate() + i, n_s + i) = jl.d_v;
      lm.c[L.thrust_rate() + i] = jl.bias;
    }
  }

  lm.A.block<3, 3>(L.ex(), L.x).setIdentity();
  lm.c.segment<3>(L.ex()) = -refs.x;
  lm.A.block<3, 3>(L.ephi(), L.phi).setIdentity();
  lm.c.segment<3>(L.ephi()) = -refs.phi;

  lm.z_c.resize(nz);
  if (direct) {
    lm.z_c << z_c.x, z_c.h_p, z_c.phi, z_c.h_w, e_x, e_phi;
  } else {
    lm.z_c << z_c.to_vector(), e_x, e_phi;
  }
  lm.u_c = u_c.to_vector();
  return lm;
}

/// Full nonlinear augmented derivative [f(z, u), x - x_ref, phi - phi_ref].
inline Eigen::VectorXd augmented_dynamics(const RobotModel& model, const JetParams& jets,
                                          const State& z, const ControlInput& u,
                                          const ErrorReferences& refs,
                                          const Wrench& w_ext = {}) {
  const Eigen::VectorXd f = dynamics(model, jets, z, u, w_ext);
  Eigen::VectorXd out(f.size() + 6);
  out << f, z.x - refs.x, z.phi - refs.phi;
  return out;
}

}  // namespace jetmpc
