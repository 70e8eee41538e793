#pragma once

/**
 * @file sim.hpp
 * @brief Closed-loop simulator: nonlinear plant integrated with RK4 at f_sim,
 * MPC at f_mpc, jet commands latched at f_jet, first-order joint servos.
 */

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "dynamics.hpp"
#include "jet.hpp"
#include "model.hpp"
#include "mpc.hpp"
#include "trajectory.hpp"

namespace jetmpc {

struct Disturbance {
  double t_start = 0.0;
  double duration = 0.0;
  Wrench wrench;

  double t_end() const { return t_start + duration; }
  bool active(double t) const { return t >= t_start - 1e-12 && t < t_end() - 1e-12; }
};

struct HoverReference {
  Eigen::Vector3d x = Eigen::Vector3d(0.0, 0.0, 1.5);
  Eigen::Vector3d phi = Eigen::Vector3d::Zero();
};

struct MinJerkReference {
  std::vector<Waypoint> waypoints;
  Eigen::Vector3d phi = Eigen::Vector3d::Zero();
};

using ReferenceSpec = std::variant<HoverReference, MinJerkReference>;

inline ReferenceFunction make_reference_function(const ReferenceSpec& spec) {
  if (const auto* h = std::get_if<HoverReference>(&spec)) {
    const HoverReference hover = *h;
    return [hover](double) { return ReferenceSample{hover.x, Eigen::Vector3d::Zero(), hover.phi}; };
  }
  const auto& mj = std::get<MinJerkReference>(spec);
  auto traj = std::make_shared<MinJerkTrajectory>(mj.waypoints);
  const Eigen::Vector3d phi = mj.phi;
  return [traj, phi](double t) {
    const TrajectorySample s = traj->sample(t);
    return ReferenceSample{s.position, s.velocity, phi};
  };
}

struct MetricsWindow {
  double start = 0.0;
  std::optional<double> end;  ///< defaults to the scenario duration
};

struct Scenario {
  std::string name = "scenario";
  RobotModel model = default_robot_model();
  JetParams jets = linear_jet_params();   ///< controller-side (identified) jet model
  double plant_jet_speed = 1.1;           ///< plant jets = time_scaled(jets, speed)
  bool ideal_plant_jets = false;          ///< plant thrust follows the latched command instantly
  FeedbackLinearizationGains fl_gains;
  MpcConfig mpc;

  State initial;                          ///< thrust empty -> hover equilibrium
  Eigen::VectorXd initial_joints;         ///< empty -> zeros
  ReferenceSpec reference = HoverReference{};
  std::vector<Disturbance> disturbances;
  double disturbance_scale = 1.0;

  double duration = 10.0;
  double f_sim = 1000.0;
  double joint_servo_tau = 0.02;
  Ablation ablation = Ablation::kMultiRate;
  std::uint64_t seed = 0;
  MetricsWindow metrics_window;

  JetParams plant_jets() const { return time_scaled(jets, plant_jet_speed); }

  void validate() const {
    model.validate();
    jets.validate();
    mpc.validate();
    if (!(duration > 0.0)) throw ConfigError("scenario.duration", "must be positive");
    for (const double f : {mpc.f_mpc, mpc.f_jet, mpc.f_joint}) {
      const double ratio = f_sim / f;
      if (ratio < 1.0 || std::abs(ratio - std::round(ratio)) > 1e-9) {
        throw ConfigError("scenario.f_sim", "controller and actuator rates must divide f_sim");
      }
    }
    if (!(joint_servo_tau > 0.0)) throw ConfigError("scenario.joint_servo_tau", "must be positive");
    for (const auto& d : disturbances) {
      if (d.t_start < 0.0 || d.duration < 0.0 || d.t_end() > duration + 1e-9) {
        throw ConfigError("scenario.disturbances", "disturbance window outside [0, duration]");
      }
    }
    if (metrics_window.start < 0.0 || metrics_window.start >= window_end()) {
      throw ConfigError("scenario.metrics_window", "empty or negative window");
    }
    if (const auto* mj = std::get_if<MinJerkReference>(&reference)) {
      MinJerkTrajectory check(mj->waypoints);
      (void)check;
    }
  }

  double window_end() const { return metrics_window.end.value_or(duration); }
};

/// Thrusts balancing gravity with zero net torque (least-norm) at joints s.
inline Eigen::VectorXd hover_thrust(const RobotModel& model, const Eigen::VectorXd& s) {
  const AllocationMatrices a = allocation_matrices(forward_kinematics(model, s));
  Eigen::MatrixXd m(6, model.num_jets());
  m << a.lin, a.ang;
  Eigen::VectorXd rhs(6);
  rhs << 0.0, 0.0, model.mass * model.gravity, 0.0, 0.0, 0.0;
  return m.completeOrthogonalDecomposition().solve(rhs);
}

/// Auxiliary input holding thrust T at rest: h(T, 0) + g(T, 0) v = 0.
inline double equilibrium_input(const JetParams& jets, double thrust) {
  return -jets.drift(thrust, 0.0) / jets.gain(thrust, 0.0);
}

struct LogRecord {
  double t = 0.0;
  State state;
  Eigen::VectorXd s;        ///< actual joint positions
  Eigen::VectorXd s_cmd;    ///< joint command (zero-order hold of the MPC output)
  Eigen::VectorXd v_cmd;    ///< jet input latched at the plant (thrust in direct mode)
  Eigen::Vector3d x_ref = Eigen::Vector3d::Zero();
  Eigen::Vector3d phi_ref = Eigen::Vector3d::Zero();
  MpcDiagnostics mpc;       ///< last controller iteration
  bool disturbance_active = false;
};

struct MpcStepRecord {
  double t = 0.0;
  MpcDiagnostics diagnostics;
};

struct SolveTimeStats {
  double mean_ms = 0.0;
  double max_ms = 0.0;
  double stdev_ms = 0.0;
  double p99_ms = 0.0;
};

struct Metrics {
  std::string status = "completed";  ///< completed | crashed
  std::string crash_reason;
  double crash_time = -1.0;
  double window_start = 0.0;
  double window_end = 0.0;
  Eigen::Vector3d mae_x = Eigen::Vector3d::Zero();    ///< m
  Eigen::Vector3d mae_phi = Eigen::Vector3d::Zero();  ///< rad
  Eigen::Vector3d max_abs_x = Eigen::Vector3d::Zero();
  Eigen::Vector3d max_abs_phi = Eigen::Vector3d::Zero();
  double max_position_error = 0.0;  ///< max Euclidean CoM error
  double max_attitude_error = 0.0;  ///< max per-axis attitude error, rad
  std::vector<double> recovery_times;  ///< per disturbance; negative if never recovered
  SolveTimeStats solve_time;
  double mean_qp_iterations = 0.0;
  double max_primal_res = 0.0;
  double max_dual_res = 0.0;
  double max_hold_error = 0.0;
  int degraded_steps = 0;
  int mpc_steps = 0;
};

struct SimulationResult {
  std::vector<LogRecord> log;
  std::vector<MpcStepRecord> mpc_steps;
  Metrics metrics;
  bool crashed() const { return metrics.status != "completed"; }
};

inline constexpr double kRecoveryPositionTolerance = 0.1;                        // m
inline constexpr double kRecoveryAttitudeTolerance = 2.0 * std::numbers::pi / 180.0;  // rad
inline constexpr double kRecoveryHold = 1.0;                                      // s

inline SolveTimeStats solve_time_stats(const std::vector<MpcStepRecord>& steps) {
  SolveTimeStats s;
  if (steps.empty()) return s;
  std::vector<double> t;
  t.reserve(steps.size());
  for (const auto& r : steps) t.push_back(r.diagnostics.solve_time_ms);
  double sum = 0.0;
  for (double v : t) sum += v;
  s.mean_ms = sum / static_cast<double>(t.size());
  double var = 0.0;
  for (double v : t) var += (v - s.mean_ms) * (v - s.mean_ms);
  s.stdev_ms = std::sqrt(var / static_cast<double>(t.size()));
  std::sort(t.begin(), t.end());
  s.max_ms = t.back();
  const auto idx = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(t.size()))) - 1;
  s.p99_ms = t[std::min(idx, t.size() - 1)];
  return s;
}

/// Tracking and recovery metrics over [window.start, window.end].
inline Metrics compute_metrics(const std::vector<LogRecord>& log, double window_start,
                               double window_end,
                               const std::vector<Disturbance>& disturbances = {}) {
  Metrics m;
  m.window_start = window_start;
  m.window_end = window_end;
  std::size_t count = 0;
  for (const auto& r : log) {
    if (r.t < window_start - 1e-12 || r.t > window_end + 1e-12) continue;
    ++count;
    const Eigen::Vector3d ex = r.state.x - r.x_ref;
    Eigen::Vector3d ephi;
    for (int i = 0; i < 3; ++i) ephi[i] = wrap_angle(r.state.phi[i] - r.phi_ref[i]);
    m.mae_x += ex.cwiseAbs();
    m.mae_phi += ephi.cwiseAbs();
    m.max_abs_x = m.max_abs_x.cwiseMax(ex.cwiseAbs());
    m.max_abs_phi = m.max_abs_phi.cwiseMax(ephi.cwiseAbs());
    m.max_position_error = std::max(m.max_position_error, ex.norm());
    m.max_attitude_error = std::max(m.max_attitude_error, ephi.cwiseAbs().maxCoeff());
  }
  if (count == 0) throw InvalidArgument("compute_metrics: empty evaluation window");
  m.mae_x /= static_cast<double>(count);
  m.mae_phi /= static_cast<double>(count);

  for (const auto& d : disturbances) {
    double candidate = -1.0;
    double recovered = -1.0;
    for (const auto& r : log) {
      if (r.t < d.t_end() - 1e-12) continue;
      Eigen::Vector3d ephi;
      for (int i = 0; i < 3; ++i) ephi[i] = wrap_angle(r.state.phi[i] - r.phi_ref[i]);
      const bool ok = (r.state.x - r.x_ref).norm() < kRecoveryPositionTolerance &&
                      ephi.cwiseAbs().maxCoeff() < kRecoveryAttitudeTolerance;
      if (!ok) {
        candidate = -1.0;
        continue;
      }
      if (candidate < 0.0) candidate = r.t;
      if (r.t - candidate >= kRecoveryHold - 1e-9) {
        recovered = candidate - d.t_end();
        break;
      }
    }
    m.recovery_times.push_back(recovered);
  }
  return m;
}

namespace detail {

struct PlantState {
  State z;
  Eigen::VectorXd s;
};

}  // namespace detail

/**
 * Run one closed-loop scenario. Deterministic: the controller and plant are
 * single-threaded and no wall-clock quantity feeds back into the loop.
 */
inline SimulationResult simulate(const Scenario& scenario) {
  scenario.validate();
  const RobotModel& model = scenario.model;
  const int n_j = model.num_jets();
  const int n_s = model.n_s;
  const JetParams plant_jets = scenario.plant_jets();
  const bool direct = scenario.ablation == Ablation::kNoJetDynamics;

  const double dt = 1.0 / scenario.f_sim;
  const long steps = std::lround(scenario.duration * scenario.f_sim);
  const long mpc_every = std::lround(scenario.f_sim / scenario.mpc.f_mpc);
  const long jet_every = std::lround(scenario.f_sim / scenario.mpc.f_jet);
  const ReferenceFunction reference = make_reference_function(scenario.reference);

  detail::PlantState plant;
  plant.s = scenario.initial_joints.size() == n_s ? scenario.initial_joints
                                                   : Eigen::VectorXd::Zero(n_s);
  plant.z = scenario.initial;
  if (plant.z.thrust.size() != n_j) {
    plant.z.thrust = hover_thrust(model, plant.s);
    plant.z.thrust_rate = Eigen::VectorXd::Zero(n_j);
  }
  if (plant.z.thrust_rate.size() != n_j) plant.z.thrust_rate = Eigen::VectorXd::Zero(n_j);

  // Input the plant holds before the first latch.
  Eigen::VectorXd latched(n_j);
  Eigen::VectorXd ctrl_prev(n_j);
  for (int i = 0; i < n_j; ++i) {
    latched[i] = v_from_throttle(plant_jets,
                                 throttle_from_v(scenario.jets,
                                                 equilibrium_input(scenario.jets, plant.z.thrust[i])));
    ctrl_prev[i] = direct ? plant.z.thrust[i] : equilibrium_input(scenario.jets, plant.z.thrust[i]);
  }
  Eigen::VectorXd thrust_hold = plant.z.thrust;  // ideal-plant thrust

  MpcController controller(model, scenario.jets, scenario.mpc, scenario.ablation);
  controller.reset(ControlInput{plant.s, ctrl_prev});
  Eigen::VectorXd s_cmd = plant.s;
  Eigen::VectorXd pending = ctrl_prev;
  Eigen::VectorXd latched_cmd = ctrl_prev;

  SimulationResult result;
  result.log.reserve(static_cast<std::size_t>(steps + 1));
  MpcDiagnostics last_diag;

  auto crash = [&](double t, const std::string& why) {
    result.metrics.status = "crashed";
    result.metrics.crash_time = t;
    result.metrics.crash_reason = why;
  };

  auto derivative = [&](const detail::PlantState& p, const Eigen::VectorXd& v,
                        const Wrench& w) -> std::pair<Eigen::VectorXd, Eigen::VectorXd> {
    Eigen::VectorXd dz = dynamics(model, plant_jets, p.z, ControlInput{p.s, v}, w);
    if (scenario.ideal_plant_jets) dz.tail(2 * n_j).setZero();
    Eigen::VectorXd ds = (s_cmd - p.s) / scenario.joint_servo_tau;
    return {dz, ds};
  };

  for (long n = 0; n <= steps; ++n) {
    const double t = static_cast<double>(n) * dt;

    if (plant.z.x.z() < 0.0) {
      crash(t, "altitude below ground");
      break;
    }
    if (near_gimbal_lock(plant.z.phi.y())) {
      crash(t, "pitch singularity");
      break;
    }
    if (!plant.z.to_vector().allFinite()) {
      crash(t, "non-finite state");
      break;
    }

    if (n < steps && n % mpc_every == 0) {
      try {
        MpcCommand cmd = controller.step(plant.z, t, reference);
        last_diag = cmd.diagnostics;
        s_cmd = cmd.s;
        pending = cmd.v;
        result.mpc_steps.push_back({t, cmd.diagnostics});
      } catch (const SingularityError& e) {
        crash(t, e.what());
        break;
      }
    }
    if (n < steps && n % jet_every == 0) {
      latched_cmd = pending;
      for (int i = 0; i < n_j; ++i) {
        if (direct) {
          if (scenario.ideal_plant_jets) {
            thrust_hold[i] = std::clamp(pending[i], 0.0, plant_jets.t_max);
          } else {
            const double v_ctrl = fl_thrust_controller(scenario.jets, plant.z.thrust[i],
                                                       plant.z.thrust_rate[i], pending[i],
                                                       scenario.fl_gains);
            latched[i] = v_from_throttle(plant_jets, throttle_from_v(scenario.jets, v_ctrl));
          }
        } else {
          latched[i] = v_from_throttle(plant_jets, throttle_from_v(scenario.jets, pending[i]));
        }
      }
    }

    Wrench wrench;
    bool disturbed = false;
    for (const auto& d : scenario.disturbances) {
      if (d.active(t)) {
        wrench.force += scenario.disturbance_scale * d.wrench.force;
        wrench.torque += scenario.disturbance_scale * d.wrench.torque;
        disturbed = true;
      }
    }

    LogRecord rec;
    rec.t = t;
    rec.state = plant.z;
    rec.s = plant.s;
    rec.s_cmd = s_cmd;
    rec.v_cmd = latched_cmd;
    const ReferenceSample r = reference(t);
    rec.x_ref = r.x;
    rec.phi_ref = r.phi;
    rec.mpc = last_diag;
    rec.disturbance_active = disturbed;
    result.log.push_back(std::move(rec));
    if (n == steps) break;

    if (scenario.ideal_plant_jets) {
      plant.z.thrust = thrust_hold;
      plant.z.thrust_rate.setZero();
    }
    const Eigen::VectorXd v_plant = latched.cwiseMax(plant_jets.v_min).cwiseMin(plant_jets.v_max);
    try {
      auto advance = [&](const detail::PlantState& base, const Eigen::VectorXd& dz,
                         const Eigen::VectorXd& ds, double h) {
        detail::PlantState p = base;
        p.z = State::from_vector(base.z.to_vector() + h * dz, n_j);
        p.s = base.s + h * ds;
        return p;
      };
      const auto [k1z, k1s] = derivative(plant, v_plant, wrench);
      const auto [k2z, k2s] = derivative(advance(plant, k1z, k1s, 0.5 * dt), v_plant, wrench);
      const auto [k3z, k3s] = derivative(advance(plant, k2z, k2s, 0.5 * dt), v_plant, wrench);
      const auto [k4z, k4s] = derivative(advance(plant, k3z, k3s, dt), v_plant, wrench);
      plant = advance(plant, (k1z + 2.0 * k2z + 2.0 * k3z + k4z) / 6.0,
                      (k1s + 2.0 * k2s + 2.0 * k3s + k4s) / 6.0, dt);
    } catch (const SingularityError& e) {
      crash(t, e.what());
      break;
    }
    for (int i = 0; i < n_j; ++i) {
      double& thrust = plant.z.thrust[i];
      double& rate = plant.z.thrust_rate[i];
      if (thrust < 0.0) {
        thrust = 0.0;
        rate = std::max(rate, 0.0);
      } else if (thrust > plant_jets.t_max) {
        thrust = plant_jets.t_max;
        rate = std::min(rate, 0.0);
      }
    }
  }

  const double end = std::min(scenario.window_end(),
                              result.log.empty() ? 0.0 : result.log.back().t);
  const std::string status = result.metrics.status;
  const std::string reason = result.metrics.crash_reason;
  const double crash_time = result.metrics.crash_time;
  if (!result.log.empty() && end >= scenario.metrics_window.start) {
    std::vector<Disturbance> scaled = scenario.disturbances;
    result.metrics = compute_metrics(result.log, scenario.metrics_window.start, end, scaled);
  }
  result.metrics.status = status;
  result.metrics.crash_reason = reason;
  result.metrics.crash_time = crash_time;
  result.metrics.solve_time = solve_time_stats(result.mpc_steps);
  result.metrics.mpc_steps = static_cast<int>(result.mpc_steps.size());
  double iters = 0.0;
  for (const auto& s : result.mpc_steps) {
    const auto& d = s.diagnostics;
    iters += d.iterations;
    result.metrics.max_primal_res = std::max(result.metrics.max_primal_res, d.primal_res);
    result.metrics.max_dual_res = std::max(result.metrics.max_dual_res, d.dual_res);
    result.metrics.max_hold_error = std::max(result.metrics.max_hold_error, d.hold_error);
    if (d.degraded) ++result.metrics.degraded_steps;
  }
  if (!result.mpc_steps.empty()) {
    result.metrics.mean_qp_iterations = iters / static_cast<double>(result.mpc_steps.size());
  }
  return result;
}

}  // namespace jetmpc
