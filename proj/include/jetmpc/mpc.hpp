#pragma once

/**
 * @file mpc.hpp
 * @brief Multi-rate LPV MPC.
 *
 * Each iteration relinearises the centroidal + jet model at the measured
 * state, propagates it with forward Euler on a geometric (variable) timestep
 * schedule and solves the resulting sparse QP. Jet inputs are move-blocked
 * into segments of one jet period; at iterations between jet updates the
 * first jet segment is pinned to the command currently held by the jets.
 */

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "dynamics.hpp"
#include "errors.hpp"
#include "qp.hpp"

namespace jetmpc {

enum class Ablation { kMultiRate, kSingleRate, kNoJetDynamics };

inline const char* to_string(Ablation a) {
  switch (a) {
    case Ablation::kMultiRate: return "multi-rate";
    case Ablation::kSingleRate: return "single-rate";
    case Ablation::kNoJetDynamics: return "no-jet-dynamics";
  }
  return "unknown";
}

inline Ablation ablation_from_string(const std::string& s) {
  if (s == "multi-rate") return Ablation::kMultiRate;
  if (s == "single-rate") return Ablation::kSingleRate;
  if (s == "no-jet-dynamics") return Ablation::kNoJetDynamics;
  throw ConfigError("ablation", "unknown ablation '" + s + "'");
}

struct MpcWeights {
  Eigen::Vector3d x = Eigen::Vector3d::Constant(1000.0);
  Eigen::Vector3d h_p = Eigen::Vector3d::Constant(0.1);
  Eigen::Vector3d phi = Eigen::Vector3d::Constant(8000.0);
  Eigen::Vector3d h_w = Eigen::Vector3d::Constant(2.5);
  double du_joint = 100.0;
  double du_jet = 0.01;
  double du_thrust = 0.01;  ///< thrust-rate penalty when thrust is an input
  Eigen::Vector3d e_x = Eigen::Vector3d::Constant(8.0);
  Eigen::Vector3d e_phi = Eigen::Vector3d::Constant(125.0);

  void validate() const {
    const bool ok = (x.array() >= 0).all() && (h_p.array() >= 0).all() &&
                    (phi.array() >= 0).all() && (h_w.array() >= 0).all() &&
                    (e_x.array() >= 0).all() && (e_phi.array() >= 0).all() && du_joint >= 0 &&
                    du_jet >= 0 && du_thrust >= 0;
    detail::require(ok, "mpc.weights: weights must be nonnegative");
  }
};

struct MpcConfig {
  double horizon = 1.0;   ///< s
  int n_knots = 17;
  double dt0 = 0.005;     ///< s, first interval
  bool variable_timestep = true;
  double f_mpc = 200.0;
  double f_jet = 10.0;
  double f_joint = 1000.0;
  MpcWeights weights;
  SolverSettings solver;

  int rate_ratio() const { return static_cast<int>(std::lround(f_mpc / f_jet)); }

  void validate() const {
    if (!(horizon > 0.0) || n_knots < 1) throw ConfigError("mpc", "horizon and n_knots must be positive");
    if (!(f_mpc > 0.0 && f_jet > 0.0 && f_joint > 0.0)) throw ConfigError("mpc", "rates must be positive");
    if (std::abs(dt0 - 1.0 / f_mpc) > 1e-12) throw ConfigError("mpc.dt0", "dt0 must equal 1/f_mpc");
    const double ratio = f_mpc / f_jet;
    if (ratio < 1.0 || std::abs(ratio - std::round(ratio)) > 1e-9) {
      throw ConfigError("mpc.f_jet", "f_mpc must be an integer multiple of f_jet");
    }
    weights.validate();
    solver.validate();
  }
};

/// Interval lengths dt_k, k = 0..n_knots-1. Geometric dt0 * r^k with r found by
/// bisection, or uniform horizon / n_knots.
inline std::vector<double> timestep_schedule(const MpcConfig& config) {
  if (!(config.horizon > 0.0) || config.n_knots < 1) {
    throw ConfigError("mpc", "horizon and n_knots must be positive");
  }
  const int n = config.n_knots;
  std::vector<double> dt(static_cast<std::size_t>(n));
  if (!config.variable_timestep) {
    std::fill(dt.begin(), dt.end(), config.horizon / n);
    return dt;
  }
  auto total = [&](double r) {
    double s = 0.0, p = config.dt0;
    for (int k = 0; k < n; ++k, p *= r) s += p;
    return s;
  };
  double lo = 1.0, hi = 2.0;
  if (total(lo) > config.horizon + 1e-12 || total(hi) < config.horizon - 1e-12) {
    throw ConfigError("mpc", "no growth ratio in [1, 2] makes the schedule span the horizon");
  }
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    (total(mid) < config.horizon ? lo : hi) = mid;
  }
  const double r = 0.5 * (lo + hi);
  double p = config.dt0, sum = 0.0;
  for (int k = 0; k < n; ++k, p *= r) {
    dt[static_cast<std::size_t>(k)] = p;
    sum += p;
  }
  dt.back() += config.horizon - sum;  // absorb bisection residual
  return dt;
}

struct BlockingStructure {
  std::vector<int> segment_of_knot;  ///< jet segment for each knot, nondecreasing
  int num_segments = 0;
  bool hold_first_jet_input = false;
  Eigen::VectorXd u_prev;            ///< jet command currently held
};

/**
 * Assign knots to jet-input segments. Knot k opens a new segment when its
 * start time, measured from the last jet update, reaches the next multiple of
 * the jet period. With per_knot_jets every knot gets its own segment
 * (single-rate MPC).
 */
inline BlockingStructure blocking_structure(const std::vector<double>& schedule,
                                            const MpcConfig& config, long mpc_iteration,
                                            const Eigen::VectorXd& u_prev,
                                            bool per_knot_jets = false) {
  BlockingStructure b;
  const int n = static_cast<int>(schedule.size());
  b.segment_of_knot.resize(static_cast<std::size_t>(n));
  const double period = 1.0 / config.f_jet;
  // time since the last jet update, so segment edges land on the jet clock
  double t = per_knot_jets ? 0.0
                           : static_cast<double>(mpc_iteration % config.rate_ratio()) / config.f_mpc;
  long last_raw = -1;
  int seg = -1;
  for (int k = 0; k < n; ++k) {
    const long raw = per_knot_jets ? k : static_cast<long>(std::floor(t / period + 1e-9));
    if (raw != last_raw) {
      ++seg;
      last_raw = raw;
    }
    b.segment_of_knot[static_cast<std::size_t>(k)] = seg;
    t += schedule[static_cast<std::size_t>(k)];
  }
  b.num_segments = seg + 1;
  b.hold_first_jet_input = !per_knot_jets && (mpc_iteration % config.rate_ratio()) != 0;
  b.u_prev = u_prev;
  return b;
}

/// References sampled at knot times t_0..t_N (N + 1 samples).
struct Reference {
  std::vector<Eigen::Vector3d> x;
  std::vector<Eigen::Vector3d> phi;
  std::vector<Eigen::Vector3d> h_p;
  std::vector<Eigen::Vector3d> h_w;

  std::size_t size() const { return x.size(); }
};

/// Position of each decision-variable block inside the QP vector.
struct QpIndexMap {
  int n_state = 0;   ///< augmented state dimension
  int n_joint = 0;
  int n_jet = 0;
  int n_knots = 0;
  int n_segments = 0;
  std::vector<int> segment_of_knot;

  int state(int k) const { return k * n_state; }
  int joint(int k) const { return (n_knots + 1) * n_state + k * n_joint; }
  int jet_segment(int seg) const { return joint(n_knots) + seg * n_jet; }
  int jet(int k) const { return jet_segment(segment_of_knot[static_cast<std::size_t>(k)]); }
  int num_variables() const { return jet_segment(n_segments); }

  int dynamics_row(int k) const { return (k + 1) * n_state; }  ///< row block of z_{k+1}
  int num_equalities() const { return (n_knots + 1) * n_state; }
  int joint_bound_row(int k) const { return num_equalities() + k * n_joint; }
  int jet_bound_row(int seg) const { return joint_bound_row(n_knots) + seg * n_jet; }
  int num_constraints() const { return jet_bound_row(n_segments); }
};

struct MpcQp {
  SparseQp qp;
  QpIndexMap map;
};

/// Box limits of the inputs as seen by the MPC.
struct InputBounds {
  Eigen::VectorXd s_min, s_max;  ///< joints
  Eigen::VectorXd v_min, v_max;  ///< jet inputs (or thrust)
};

/**
 * Assemble the QP. `applied` is the input applied before this iteration and
 * anchors the first move penalty; the integral-error rows use the per-knot
 * references.
 */
inline MpcQp build_qp(const LinearModel& lm, const Eigen::VectorXd& z_aug, const Reference& ref,
                      const std::vector<double>& schedule, const BlockingStructure& blocking,
                      const MpcWeights& weights, const InputBounds& bounds,
                      const ControlInput& applied) {
  weights.validate();
  const StateLayout& L = lm.layout;
  const int nz = L.augmented_size();
  const int n_knots = static_cast<int>(schedule.size());
  const int n_s = static_cast<int>(bounds.s_min.size());
  const int n_j = L.n_jets;
  detail::require(lm.A.rows() == nz && lm.A.cols() == nz, "build_qp: A has wrong size");
  detail::require(lm.B.rows() == nz && lm.B.cols() == n_s + n_j, "build_qp: B has wrong size");
  detail::require(z_aug.size() == nz, "build_qp: augmented state has wrong size");
  detail::require(ref.size() == static_cast<std::size_t>(n_knots + 1) && ref.phi.size() == ref.size() &&
                      ref.h_p.size() == ref.size() && ref.h_w.size() == ref.size(),
                  "build_qp: reference must have n_knots + 1 samples");
  detail::require(blocking.segment_of_knot.size() == schedule.size(),
                  "build_qp: blocking does not match schedule");
  detail::require(applied.s.size() == n_s && applied.v.size() == n_j,
                  "build_qp: applied input dimension mismatch");

  MpcQp out;
  QpIndexMap& map = out.map;
  map.n_state = nz;
  map.n_joint = n_s;
  map.n_jet = n_j;
  map.n_knots = n_knots;
  map.n_segments = blocking.num_segments;
  map.segment_of_knot = blocking.segment_of_knot;
  const int nv = map.num_variables();
  const int nc = map.num_constraints();

  // --- constraints
  std::vector<Eigen::Triplet<double>> at;
  at.reserve(static_cast<std::size_t>(nz * (n_knots + 1) * 8 + nc));
  Eigen::VectorXd l(nc), u(nc);
  for (int i = 0; i < nz; ++i) at.emplace_back(i, map.state(0) + i, 1.0);
  l.head(nz) = z_aug;
  u.head(nz) = z_aug;

  const Eigen::MatrixXd b_s = lm.B.leftCols(n_s);
  const Eigen::MatrixXd b_v = lm.B.rightCols(n_j);
  for (int k = 0; k < n_knots; ++k) {
    const double dt = schedule[static_cast<std::size_t>(k)];
    const int row = map.dynamics_row(k);
    // z_{k+1} - (I + A dt) z_k - B_s dt s_k - B_v dt v_k = c_k dt
    for (int i = 0; i < nz; ++i) at.emplace_back(row + i, map.state(k + 1) + i, 1.0);
    for (int j = 0; j < nz; ++j) {
      for (int i = 0; i < nz; ++i) {
        double a = lm.A(i, j) * dt;
        if (i == j) a += 1.0;
        if (a != 0.0) at.emplace_back(row + i, map.state(k) + j, -a);
      }
    }
    for (int j = 0; j < n_s; ++j) {
      for (int i = 0; i < nz; ++i) {
        if (b_s(i, j) != 0.0) at.emplace_back(row + i, map.joint(k) + j, -b_s(i, j) * dt);
      }
    }
    for (int j = 0; j < n_j; ++j) {
      for (int i = 0; i < nz; ++i) {
        if (b_v(i, j) != 0.0) at.emplace_back(row + i, map.jet(k) + j, -b_v(i, j) * dt);
      }
    }
    Eigen::VectorXd c = lm.c;
    c.segment<3>(L.ex()) = -ref.x[static_cast<std::size_t>(k)];
    c.segment<3>(L.ephi()) = -ref.phi[static_cast<std::size_t>(k)];
    l.segment(row, nz) = c * dt;
    u.segment(row, nz) = c * dt;
  }

  for (int k = 0; k < n_knots; ++k) {
    const int row = map.joint_bound_row(k);
    for (int j = 0; j < n_s; ++j) at.emplace_back(row + j, map.joint(k) + j, 1.0);
    l.segment(row, n_s) = bounds.s_min;
    u.segment(row, n_s) = bounds.s_max;
  }
  for (int seg = 0; seg < map.n_segments; ++seg) {
    const int row = map.jet_bound_row(seg);
    for (int j = 0; j < n_j; ++j) at.emplace_back(row + j, map.jet_segment(seg) + j, 1.0);
    if (seg == 0 && blocking.hold_first_jet_input) {
      detail::require(blocking.u_prev.size() == n_j, "build_qp: u_prev dimension mismatch");
      const Eigen::VectorXd pin = blocking.u_prev.cwiseMax(bounds.v_min).cwiseMin(bounds.v_max);
      l.segment(row, n_j) = pin;
      u.segment(row, n_j) = pin;
    } else {
      l.segment(row, n_j) = bounds.v_min;
      u.segment(row, n_j) = bounds.v_max;
    }
  }
  out.qp.A.resize(nc, nv);
  out.qp.A.setFromTriplets(at.begin(), at.end());
  out.qp.l = std::move(l);
  out.qp.u = std::move(u);

  // --- cost: 0.5 x'Px + q'x
  std::vector<Eigen::Triplet<double>> pt;
  Eigen::VectorXd q = Eigen::VectorXd::Zero(nv);
  auto track = [&](int idx, double w, double r) {
    if (w == 0.0) return;
    pt.emplace_back(idx, idx, 2.0 * w);
    q[idx] += -2.0 * w * r;
  };
  for (int k = 1; k <= n_knots; ++k) {
    const int base = map.state(k);
    const auto kk = static_cast<std::size_t>(k);
    for (int i = 0; i < 3; ++i) {
      track(base + L.x + i, weights.x[i], ref.x[kk][i]);
      track(base + L.hp + i, weights.h_p[i], ref.h_p[kk][i]);
      track(base + L.phi + i, weights.phi[i], ref.phi[kk][i]);
      track(base + L.hw + i, weights.h_w[i], ref.h_w[kk][i]);
      track(base + L.ex() + i, weights.e_x[i], 0.0);
      track(base + L.ephi() + i, weights.e_phi[i], 0.0);
    }
  }
  // move penalties w |a - b|^2 on consecutive inputs; the first against `applied`
  auto move = [&](int a, int b, double w) {
    pt.emplace_back(a, a, 2.0 * w);
    pt.emplace_back(b, b, 2.0 * w);
    pt.emplace_back(a, b, -2.0 * w);
    pt.emplace_back(b, a, -2.0 * w);
  };
  const double w_s = weights.du_joint;
  if (w_s > 0.0) {
    for (int j = 0; j < n_s; ++j) {
      track(map.joint(0) + j, w_s, applied.s[j]);
      for (int k = 1; k < n_knots; ++k) move(map.joint(k) + j, map.joint(k - 1) + j, w_s);
    }
  }
  const double w_v = L.has_jet_states() ? weights.du_jet : weights.du_thrust;
  if (w_v > 0.0) {
    for (int j = 0; j < n_j; ++j) {
      track(map.jet_segment(0) + j, w_v, applied.v[j]);
      for (int seg = 1; seg < map.n_segments; ++seg) {
        move(map.jet_segment(seg) + j, map.jet_segment(seg - 1) + j, w_v);
      }
    }
  }
  out.qp.P.resize(nv, nv);
  out.qp.P.setFromTriplets(pt.begin(), pt.end());
  out.qp.q = std::move(q);
  return out;
}

/// Sample of the desired motion at one instant.
struct ReferenceSample {
  Eigen::Vector3d x = Eigen::Vector3d::Zero();
  Eigen::Vector3d x_dot = Eigen::Vector3d::Zero();
  Eigen::Vector3d phi = Eigen::Vector3d::Zero();
};

using ReferenceFunction = std::function<ReferenceSample(double)>;

struct MpcDiagnostics {
  double solve_time_ms = 0.0;
  int iterations = 0;
  double primal_res = 0.0;
  double dual_res = 0.0;
  double cost = 0.0;
  QpStatus status = QpStatus::kSolved;
  bool degraded = false;
  bool jet_updated = false;
  bool hold_active = false;
  double hold_error = 0.0;  ///< |v_seg0 - u_prev|_inf on hold iterations
};

struct MpcCommand {
  Eigen::VectorXd s;  ///< joint position command
  Eigen::VectorXd v;  ///< jet command (auxiliary input, or thrust in direct mode)
  MpcDiagnostics diagnostics;
};

/**
 * Receding-horizon controller. Single owner: holds the iteration counter, the
 * previously applied input, the integral errors and the warm-start cache.
 */
class MpcController {
 public:
  MpcController(RobotModel model, JetParams jets, MpcConfig config,
                Ablation ablation = Ablation::kMultiRate)
      : model_(std::move(model)),
        jets_(jets),
        config_(std::move(config)),
        ablation_(ablation),
        solver_(config_.solver) {
    model_.validate();
    jets_.validate();
    config_.validate();
    schedule_ = timestep_schedule(config_);
    bounds_.s_min = model_.s_min;
    bounds_.s_max = model_.s_max;
    const int n_j = model_.num_jets();
    if (direct_thrust()) {
      bounds_.v_min = Eigen::VectorXd::Zero(n_j);
      bounds_.v_max = Eigen::VectorXd::Constant(n_j, jets_.t_max);
    } else {
      bounds_.v_min = Eigen::VectorXd::Constant(n_j, jets_.v_min);
      bounds_.v_max = Eigen::VectorXd::Constant(n_j, jets_.v_max);
    }
    applied_.s = Eigen::VectorXd::Zero(model_.n_s);
    applied_.v = Eigen::VectorXd::Zero(n_j);
  }

  /// Set the input assumed applied before the first iteration.
  void reset(const ControlInput& applied) {
    detail::require(applied.s.size() == model_.n_s && applied.v.size() == model_.num_jets(),
                    "MpcController::reset: dimension mismatch");
    applied_ = applied;
    iteration_ = 0;
    e_x_.setZero();
    e_phi_.setZero();
    warm_.reset();
  }

  bool direct_thrust() const { return ablation_ == Ablation::kNoJetDynamics; }
  JetModelMode jet_mode() const {
    return direct_thrust() ? JetModelMode::kDirectThrust : JetModelMode::kSecondOrder;
  }
  Ablation ablation() const { return ablation_; }
  long iteration() const { return iteration_; }
  const ControlInput& applied() const { return applied_; }
  const std::vector<double>& schedule() const { return schedule_; }
  const MpcConfig& config() const { return config_; }
  const Eigen::Vector3d& integral_position_error() const { return e_x_; }
  const Eigen::Vector3d& integral_attitude_error() const { return e_phi_; }

  /// Last QP and its solution (for inspection and tests).
  const MpcQp& last_qp() const { return last_qp_; }
  const QpSolution& last_solution() const { return last_solution_; }
  const BlockingStructure& last_blocking() const { return last_blocking_; }

  Reference sample_reference(const ReferenceFunction& reference, double t,
                             const Eigen::Matrix3d& rotation) const {
    Reference ref;
    double tk = t;
    for (std::size_t k = 0; k <= schedule_.size(); ++k) {
      const ReferenceSample r = reference(tk);
      ref.x.push_back(r.x);
      ref.phi.push_back(r.phi);
      ref.h_p.push_back(model_.mass * rotation.transpose() * r.x_dot);
      ref.h_w.push_back(Eigen::Vector3d::Zero());
      if (k < schedule_.size()) tk += schedule_[k];
    }
    return ref;
  }

  /// One controller iteration at time t on the measured state.
  MpcCommand step(const State& z, double t, const ReferenceFunction& reference) {
    const auto t0 = std::chrono::steady_clock::now();
    const int n_j = model_.num_jets();
    const bool single_rate = ablation_ == Ablation::kSingleRate;
    const bool jet_update = single_rate || iteration_ % config_.rate_ratio() == 0;

    const ReferenceSample now = reference(t);
    const Eigen::Matrix3d rotation = rotation_from_euler(z.phi);
    const Reference ref = sample_reference(reference, t, rotation);

    State z_lin = z;
    if (direct_thrust()) z_lin.thrust = applied_.v;
    const LinearModel lm = linearize(model_, jets_, z_lin, applied_, {now.x, now.phi}, jet_mode(),
                                     e_x_, e_phi_);
    last_blocking_ = blocking_structure(schedule_, config_, iteration_, applied_.v, single_rate);
    last_qp_ = build_qp(lm, lm.z_c, ref, schedule_, last_blocking_, config_.weights, bounds_,
                        applied_);

    std::optional<WarmStart> warm;
    if (warm_ && warm_map_.n_state == last_qp_.map.n_state &&
        warm_map_.n_knots == last_qp_.map.n_knots) {
      warm = shifted_warm_start(*warm_, warm_map_, last_qp_.map, jet_update ? 1 : 0);
    }
    last_solution_ = solver_.solve(last_qp_.qp, warm);
    const QpSolution& sol = last_solution_;
    const QpIndexMap& map = last_qp_.map;

    MpcCommand cmd;
    MpcDiagnostics& d = cmd.diagnostics;
    d.iterations = sol.iterations;
    d.primal_res = sol.primal_res;
    d.dual_res = sol.dual_res;
    d.status = sol.status;
    d.hold_active = last_blocking_.hold_first_jet_input;
    d.degraded = sol.status != QpStatus::kSolved || !sol.x.allFinite();

    if (!d.degraded) {
      d.cost = qp_objective(last_qp_.qp, sol.x);
      cmd.s = sol.x.segment(map.joint(0), model_.n_s);
      const Eigen::VectorXd v0 = sol.x.segment(map.jet_segment(0), n_j);
      if (d.hold_active) d.hold_error = (v0 - applied_.v).lpNorm<Eigen::Infinity>();
      cmd.v = jet_update ? Eigen::VectorXd(v0.cwiseMax(bounds_.v_min).cwiseMin(bounds_.v_max))
                         : applied_.v;
      cmd.s = cmd.s.cwiseMax(bounds_.s_min).cwiseMin(bounds_.s_max);
      warm_ = sol;
      warm_map_ = map;
    } else {
      cmd.s = applied_.s;
      cmd.v = applied_.v;
      warm_.reset();
    }
    d.jet_updated = jet_update && !d.degraded;

    applied_.s = cmd.s;
    applied_.v = cmd.v;
    const double dt = 1.0 / config_.f_mpc;
    e_x_ += (z.x - now.x) * dt;
    e_phi_ += (z.phi - now.phi) * dt;
    ++iteration_;
    d.solve_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return cmd;
  }

 private:
  // Previous solution re-indexed onto `next`: states and joint inputs move one
  // knot ahead, jet segments move `seg_shift` segments ahead, and the tail
  // repeats the last entry.
  static WarmStart shifted_warm_start(const QpSolution& sol, const QpIndexMap& prev,
                                      const QpIndexMap& next, int seg_shift) {
    WarmStart w{Eigen::VectorXd(next.num_variables()), Eigen::VectorXd(next.num_constraints())};
    const int nz = next.n_state, ns = next.n_joint, nj = next.n_jet;
    const int n = next.n_knots;
    for (int k = 0; k <= n; ++k) {
      const int src = std::min(k + 1, n);
      w.x.segment(next.state(k), nz) = sol.x.segment(prev.state(src), nz);
      w.y.segment(k * nz, nz) = sol.y.segment(src * nz, nz);
    }
    for (int k = 0; k < n; ++k) {
      const int src = std::min(k + 1, n - 1);
      w.x.segment(next.joint(k), ns) = sol.x.segment(prev.joint(src), ns);
      w.y.segment(next.joint_bound_row(k), ns) = sol.y.segment(prev.joint_bound_row(src), ns);
    }
    for (int seg = 0; seg < next.n_segments; ++seg) {
      const int src = std::min(seg + seg_shift, prev.n_segments - 1);
      w.x.segment(next.jet_segment(seg), nj) = sol.x.segment(prev.jet_segment(src), nj);
      w.y.segment(next.jet_bound_row(seg), nj) = sol.y.segment(prev.jet_bound_row(src), nj);
    }
    return w;
  }

  RobotModel model_;
  JetParams jets_;
  MpcConfig config_;
  Ablation ablation_;
  QpSolver solver_;
  std::vector<double> schedule_;
  InputBounds bounds_;
  ControlInput applied_;
  long iteration_ = 0;
  Eigen::Vector3d e_x_ = Eigen::Vector3d::Zero();
  Eigen::Vector3d e_phi_ = Eigen::Vector3d::Zero();
  std::optional<QpSolution> warm_;
  QpIndexMap warm_map_;
  MpcQp last_qp_;
  QpSolution last_solution_;
  BlockingStructure last_blocking_;
};

}  // namespace jetmpc
