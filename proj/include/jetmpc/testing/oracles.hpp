#pragma once

// Independent reference computations used by the test suites and by
// `jetmpc selftest`. Nothing here is used by the controller itself.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "../dynamics.hpp"
#include "../qp.hpp"

namespace jetmpc::testing {

using VectorFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Central differences, step h * max(1, |x_i|).
inline Eigen::MatrixXd fd_jacobian(const VectorFunction& f, const Eigen::VectorXd& x,
                                   double h = 1e-6) {
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd jac(f0.size(), x.size());
  Eigen::VectorXd xp = x, xm = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(x[i]));
    xp[i] = x[i] + step;
    xm[i] = x[i] - step;
    jac.col(i) = (f(xp) - f(xm)) / (2.0 * step);
    xp[i] = xm[i] = x[i];
  }
  return jac;
}

/// Jet model with every drift and gain coefficient active.
inline JetParams nonlinear_jet_params() {
  JetParams p;
  p.c = {-4.0, -3.6, 1e-3, 2e-3, -1e-3};
  p.d = {4.0, 5e-3, 2e-3};
  p.e0 = 10.0;
  p.e1 = 1.5;
  return p;
}

/**
 * Augmented derivative with rotation, Euler-rate matrix, angular velocity and
 * inertia frozen at z_c, and everything else (joints, thrust, jet model)
 * evaluated exactly. Written out term by term from the body-frame equations.
 */
inline Eigen::VectorXd frozen_dynamics(const RobotModel& model, const JetParams& jets,
                                       const Eigen::VectorXd& z_c, const Eigen::VectorXd& z_aug,
                                       const Eigen::VectorXd& u, const ErrorReferences& refs) {
  const int n_j = model.num_jets();
  const int n_s = model.n_s;
  const Eigen::Vector3d phi_c = z_c.segment<3>(6);
  const Eigen::Vector3d hw_c = z_c.segment<3>(9);
  const Eigen::Matrix3d r = rotation_from_euler(phi_c);
  const Eigen::Matrix3d w = euler_rate_matrix(phi_c);
  const Eigen::Vector3d omega = model.inertia.inverse() * hw_c;

  const Eigen::Vector3d x = z_aug.segment<3>(0);
  const Eigen::Vector3d hp = z_aug.segment<3>(3);
  const Eigen::Vector3d phi = z_aug.segment<3>(6);
  const Eigen::Vector3d hw = z_aug.segment<3>(9);
  const Eigen::VectorXd thrust = z_aug.segment(12, n_j);
  const Eigen::VectorXd rate = z_aug.segment(12 + n_j, n_j);
  const Eigen::VectorXd s = u.head(n_s);
  const Eigen::VectorXd v = u.tail(n_j);

  Eigen::Vector3d force = Eigen::Vector3d::Zero();
  Eigen::Vector3d torque = Eigen::Vector3d::Zero();
  const JetFrames frames = forward_kinematics(model, s);
  for (int i = 0; i < n_j; ++i) {
    const Eigen::Vector3d f_i = thrust[i] * frames[static_cast<std::size_t>(i)].rotation.col(2);
    force += f_i;
    torque += frames[static_cast<std::size_t>(i)].arm.cross(f_i);
  }

  Eigen::VectorXd out(12 + 2 * n_j + 6);
  out.segment<3>(0) = r * hp / model.mass;
  out.segment<3>(3) = force - model.mass * model.gravity * r.transpose() * Eigen::Vector3d::UnitZ() -
                      omega.cross(hp);
  out.segment<3>(6) = w.inverse() * model.inertia.inverse() * hw;
  out.segment<3>(9) = torque - omega.cross(hw);
  out.segment(12, n_j) = rate;
  for (int i = 0; i < n_j; ++i) {
    const double t = thrust[i], td = rate[i];
    out[12 + n_j + i] = jets.c[0] * t + jets.c[1] * td + jets.c[2] * t * t + jets.c[3] * t * td +
                        jets.c[4] * td * td + (jets.d[0] + jets.d[1] * t + jets.d[2] * td) * v[i];
  }
  out.segment<3>(12 + 2 * n_j) = x - refs.x;
  out.segment<3>(15 + 2 * n_j) = phi - refs.phi;
  return out;
}

/// Random state/input inside the operating box (pitch kept away from +-90 deg).
struct OperatingPoint {
  State z;
  ControlInput u;
  ErrorReferences refs;
  Eigen::Vector3d e_x;
  Eigen::Vector3d e_phi;
};

inline OperatingPoint random_operating_point(const RobotModel& model, const JetParams& jets,
                                             std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  auto vec3 = [&](const Eigen::Vector3d& scale) {
    Eigen::Vector3d out;
    for (int i = 0; i < 3; ++i) out[i] = unit(rng) * scale[i];
    return out;
  };
  auto cube = [](double a) { return Eigen::Vector3d::Constant(a); };
  const int n_j = model.num_jets();
  OperatingPoint p;
  p.z = State(n_j);
  p.z.x = vec3(cube(2.0));
  p.z.h_p = vec3(cube(20.0));
  p.z.phi = vec3(Eigen::Vector3d(3.0, 1.2, 3.0));
  p.z.h_w = vec3(cube(3.0));
  p.u.s.resize(model.n_s);
  p.u.v.resize(n_j);
  for (int i = 0; i < n_j; ++i) {
    p.z.thrust[i] = frac(rng) * jets.t_max;
    p.z.thrust_rate[i] = unit(rng) * jets.tdot_max;
    p.u.v[i] = jets.v_min + frac(rng) * (jets.v_max - jets.v_min);
  }
  for (int k = 0; k < model.n_s; ++k) {
    p.u.s[k] = model.s_min[k] + frac(rng) * (model.s_max[k] - model.s_min[k]);
  }
  p.refs.x = vec3(cube(2.0));
  p.refs.phi = vec3(cube(0.5));
  p.e_x = vec3(cube(1.0));
  p.e_phi = vec3(cube(1.0));
  return p;
}

struct LinearizationCheck {
  int samples = 0;
  double max_a_error = 0.0;
  double max_b_error = 0.0;
  double max_tangency = 0.0;
};

/// linearize() against central differences of frozen_dynamics().
inline LinearizationCheck check_linearization(const RobotModel& model, const JetParams& jets,
                                              int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  LinearizationCheck out;
  for (int n = 0; n < samples; ++n) {
    const OperatingPoint p = random_operating_point(model, jets, rng);
    const LinearModel lm = linearize(model, jets, p.z, p.u, p.refs, JetModelMode::kSecondOrder,
                                     p.e_x, p.e_phi);
    const Eigen::VectorXd zc = p.z.to_vector();
    const Eigen::VectorXd uc = p.u.to_vector();
    const Eigen::VectorXd za = lm.z_c;
    const Eigen::MatrixXd a_fd = fd_jacobian(
        [&](const Eigen::VectorXd& z) { return frozen_dynamics(model, jets, zc, z, uc, p.refs); },
        za);
    const Eigen::MatrixXd b_fd = fd_jacobian(
        [&](const Eigen::VectorXd& u) { return frozen_dynamics(model, jets, zc, za, u, p.refs); },
        uc);
    const Eigen::VectorXd f = frozen_dynamics(model, jets, zc, za, uc, p.refs);
    out.max_a_error = std::max(out.max_a_error, (lm.A - a_fd).cwiseAbs().maxCoeff());
    out.max_b_error = std::max(out.max_b_error, (lm.B - b_fd).cwiseAbs().maxCoeff());
    const Eigen::VectorXd tangent = lm.A * lm.z_c + lm.B * lm.u_c + lm.c - f;
    out.max_tangency = std::max(out.max_tangency, tangent.cwiseAbs().maxCoeff());
    ++out.samples;
  }
  return out;
}

struct LambdaCheck {
  int samples = 0;
  double max_lin_error = 0.0;
  double max_ang_error = 0.0;
};

/// lambda_lin / lambda_ang against central differences of s -> A(s) T.
inline LambdaCheck check_lambda(const RobotModel& model, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  const int n_j = model.num_jets();
  LambdaCheck out;
  for (int n = 0; n < samples; ++n) {
    Eigen::VectorXd s(model.n_s), thrust(n_j);
    for (int k = 0; k < model.n_s; ++k) {
      s[k] = model.s_min[k] + frac(rng) * (model.s_max[k] - model.s_min[k]);
    }
    for (int i = 0; i < n_j; ++i) thrust[i] = 220.0 * frac(rng);
    auto wrench = [&](const Eigen::VectorXd& q) {
      const AllocationMatrices a = allocation_matrices(forward_kinematics(model, q));
      Eigen::VectorXd w(6);
      w << a.lin * thrust, a.ang * thrust;
      return w;
    };
    const Eigen::MatrixXd fd = fd_jacobian(wrench, s);
    const JetFrames frames = forward_kinematics(model, s);
    out.max_lin_error =
        std::max(out.max_lin_error, (lambda_lin(frames, thrust) - fd.topRows(3)).cwiseAbs().maxCoeff());
    out.max_ang_error = std::max(out.max_ang_error,
                                 (lambda_ang(frames, thrust) - fd.bottomRows(3)).cwiseAbs().maxCoeff());
    ++out.samples;
  }
  return out;
}

/**
 * Exact solution of a small strictly convex QP by enumerating every
 * assignment of each row to {inactive, at lower, at upper} and keeping the
 * feasible KKT point with nonnegative multipliers. Exponential in m.
 */
struct EnumerationResult {
  bool feasible = false;
  Eigen::VectorXd x;
  double objective = std::numeric_limits<double>::infinity();
};

inline EnumerationResult solve_by_enumeration(const Eigen::MatrixXd& p, const Eigen::VectorXd& q,
                                              const Eigen::MatrixXd& a, const Eigen::VectorXd& l,
                                              const Eigen::VectorXd& u, double tol = 1e-9) {
  const Eigen::Index n = q.size(), m = l.size();
  EnumerationResult best;
  // Equality rows are always active; other rows are inactive, at lower or at upper.
  std::vector<int> radix(static_cast<std::size_t>(m));
  long total = 1;
  for (Eigen::Index i = 0; i < m; ++i) {
    radix[static_cast<std::size_t>(i)] = l[i] == u[i] ? 1 : 3;
    total *= radix[static_cast<std::size_t>(i)];
  }
  std::vector<int> state(static_cast<std::size_t>(m), 0);
  for (long code = 0; code < total; ++code) {
    long c = code;
    std::vector<Eigen::Index> rows;
    bool skip = false;
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      if (radix[ui] == 1) {
        state[ui] = 1;
      } else {
        state[ui] = static_cast<int>(c % 3);
        c /= 3;
      }
      const int st = state[ui];
      if ((st == 1 && !std::isfinite(l[i])) || (st == 2 && !std::isfinite(u[i]))) skip = true;
      if (st != 0) rows.push_back(i);
    }
    if (skip || static_cast<Eigen::Index>(rows.size()) > n) continue;
    const auto k = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
    Eigen::VectorXd rhs(n + k);
    kkt.topLeftCorner(n, n) = p;
    rhs.head(n) = -q;
    for (Eigen::Index r = 0; r < k; ++r) {
      const Eigen::Index i = rows[static_cast<std::size_t>(r)];
      kkt.block(0, n + r, n, 1) = a.row(i).transpose();
      kkt.block(n + r, 0, 1, n) = a.row(i);
      rhs[n + r] = state[static_cast<std::size_t>(i)] == 1 ? l[i] : u[i];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (lu.rank() < n + k) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd x = sol.head(n);
    const Eigen::VectorXd ax = a * x;
    bool ok = true;
    for (Eigen::Index i = 0; i < m && ok; ++i) ok = ax[i] >= l[i] - tol && ax[i] <= u[i] + tol;
    // P x + q + A' lambda = 0: a lower bound needs lambda <= 0, an upper bound lambda >= 0.
    for (Eigen::Index r = 0; r < k && ok; ++r) {
      const Eigen::Index i = rows[static_cast<std::size_t>(r)];
      if (l[i] == u[i]) continue;
      const double lam = sol[n + r];
      ok = state[static_cast<std::size_t>(i)] == 1 ? lam <= tol : lam >= -tol;
    }
    if (!ok) continue;
    const double obj = 0.5 * x.dot(p * x) + q.dot(x);
    if (obj < best.objective) {
      best.feasible = true;
      best.objective = obj;
      best.x = x;
    }
  }
  return best;
}

struct RandomQp {
  Eigen::MatrixXd p, a;
  Eigen::VectorXd q, l, u;

  SparseQp sparse() const {
    SparseQp qp;
    qp.P = p.sparseView();
    qp.q = q;
    qp.A = a.sparseView();
    qp.l = l;
    qp.u = u;
    return qp;
  }
};

/// Strictly convex, feasible by construction (bounds bracket A x0). Rows are
/// general, variable boxes, one-sided or equalities.
inline RandomQp random_qp(int n, int m, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  RandomQp r;
  Eigen::MatrixXd m_ = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return g(rng); });
  r.p = m_ * m_.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
  r.q = Eigen::VectorXd::NullaryExpr(n, [&] { return 3.0 * g(rng); });
  r.a = Eigen::MatrixXd::NullaryExpr(m, n, [&] { return g(rng); });
  std::vector<int> vars(static_cast<std::size_t>(n));
  std::iota(vars.begin(), vars.end(), 0);
  std::shuffle(vars.begin(), vars.end(), rng);
  std::size_t boxed = 0;
  for (int i = 0; i < m; ++i) {
    if (frac(rng) < 0.4 && boxed < vars.size()) {  // variable box row, one per variable
      r.a.row(i).setZero();
      r.a(i, vars[boxed++]) = 1.0;
    }
  }
  const Eigen::VectorXd x0 = Eigen::VectorXd::NullaryExpr(n, [&] { return 0.3 * g(rng); });
  const Eigen::VectorXd ax0 = r.a * x0;
  r.l.resize(m);
  r.u.resize(m);
  int equalities = 0;
  for (int i = 0; i < m; ++i) {
    const double kind = frac(rng);
    if (kind < 0.15 && equalities < n - 1) {  // keep the equality set independent
      ++equalities;
      r.l[i] = r.u[i] = ax0[i];
    } else if (kind < 0.3) {
      r.l[i] = -kQpInfinity;
      r.u[i] = ax0[i] + frac(rng);
    } else if (kind < 0.45) {
      r.l[i] = ax0[i] - frac(rng);
      r.u[i] = kQpInfinity;
    } else {
      r.l[i] = ax0[i] - frac(rng);
      r.u[i] = ax0[i] + frac(rng);
    }
  }
  return r;
}

struct QpOracleCheck {
  int problems = 0;
  int solved = 0;
  double max_x_error = 0.0;
};

inline QpOracleCheck check_qp_solver(int problems, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim_n(2, 10), dim_m(1, 12);
  QpOracleCheck out;
  SolverSettings settings;
  settings.eps_abs = 1e-9;
  settings.eps_rel = 1e-9;
  settings.max_iter = 20000;
  for (int k = 0; k < problems; ++k) {
    const int n = dim_n(rng);
    const int m = dim_m(rng);
    const RandomQp r = random_qp(n, m, rng);
    const EnumerationResult ref = solve_by_enumeration(r.p, r.q, r.a, r.l, r.u);
    QpSolver solver(settings);
    const QpSolution sol = solver.solve(r.sparse());
    ++out.problems;
    if (sol.status == QpStatus::kSolved) ++out.solved;
    const double err = ref.feasible ? (sol.x - ref.x).cwiseAbs().maxCoeff() : kQpInfinity;
    out.max_x_error = std::max(out.max_x_error, err);
  }
  return out;
}

/// World-frame rates: d(m v)/dt, d(L)/dt and dR/dt = R S(omega) from a body-frame state.
struct WorldRates {
  Eigen::Vector3d momentum_rate;
  Eigen::Vector3d angular_momentum_rate;
};

inline WorldRates newton_euler_world(const RobotModel& model, const State& z, const ControlInput& u,
                                     const Wrench& w_ext = {}) {
  const Eigen::Matrix3d r = rotation_from_euler(z.phi);
  const JetFrames frames = forward_kinematics(model, u.s);
  WorldRates out;
  out.momentum_rate = w_ext.force - model.mass * model.gravity * Eigen::Vector3d::UnitZ();
  out.angular_momentum_rate = w_ext.torque;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Eigen::Vector3d f = z.thrust[static_cast<Eigen::Index>(i)] * frames[i].rotation.col(2);
    out.momentum_rate += r * f;
    out.angular_momentum_rate += r * frames[i].arm.cross(f);
  }
  return out;
}

/// Rest-to-rest quintic on [0, T] from the 6x6 boundary-condition system.
inline Eigen::Matrix<double, 6, 1> quintic_coefficients(double x0, double x1, double duration) {
  const double t = duration;
  Eigen::Matrix<double, 6, 6> m;
  m << 1, 0, 0, 0, 0, 0,
       0, 1, 0, 0, 0, 0,
       0, 0, 2, 0, 0, 0,
       1, t, t * t, std::pow(t, 3), std::pow(t, 4), std::pow(t, 5),
       0, 1, 2 * t, 3 * t * t, 4 * std::pow(t, 3), 5 * std::pow(t, 4),
       0, 0, 2, 6 * t, 12 * t * t, 20 * std::pow(t, 3);
  Eigen::Matrix<double, 6, 1> b;
  b << x0, 0, 0, x1, 0, 0;
  return m.fullPivLu().solve(b);
}

}  // namespace jetmpc::testing
