#pragma once

/**
 * @file qp.hpp
 * @brief Sparse convex QP solver based on the operator-splitting (ADMM)
 * scheme used by OSQP.
 *
 *   minimize    0.5 x'Px + q'x
 *   subject to  l <= A x <= u
 *
 * Equalities are encoded with l_i == u_i. The problem is equilibrated with
 * Ruiz scaling, each iteration solves the quasi-definite KKT system with a
 * sparse LDL' factorisation, and converged iterates are polished by solving
 * the equality-constrained problem on the guessed active set.
 *
 * Dual sign convention: P x + q + A'y = 0, y_i >= 0 on active upper bounds,
 * y_i <= 0 on active lower bounds.
 */

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "errors.hpp"

namespace jetmpc {

using SparseMatrix = Eigen::SparseMatrix<double>;

inline constexpr double kQpInfinity = std::numeric_limits<double>::infinity();

struct SparseQp {
  SparseMatrix P;  ///< full symmetric (both triangles stored)
  Eigen::VectorXd q;
  SparseMatrix A;
  Eigen::VectorXd l;
  Eigen::VectorXd u;

  Eigen::Index num_variables() const { return q.size(); }
  Eigen::Index num_constraints() const { return l.size(); }

  void validate() const {
    const Eigen::Index n = q.size();
    const Eigen::Index m = l.size();
    detail::require(P.rows() == n && P.cols() == n, "SparseQp: P must be n x n");
    detail::require(A.rows() == m && A.cols() == n, "SparseQp: A must be m x n");
    detail::require(u.size() == m, "SparseQp: l and u must have the same size");
    detail::require(q.allFinite(), "SparseQp: q must be finite");
    for (Eigen::Index i = 0; i < m; ++i) {
      detail::require(!std::isnan(l[i]) && !std::isnan(u[i]) && l[i] <= u[i],
                      "SparseQp: l <= u violated at row " + std::to_string(i));
    }
  }
};

enum class QpStatus { kSolved, kMaxIterations, kInfeasible };

inline const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::kSolved: return "solved";
    case QpStatus::kMaxIterations: return "max-iter";
    case QpStatus::kInfeasible: return "infeasible-detected";
  }
  return "unknown";
}

struct QpSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  QpStatus status = QpStatus::kMaxIterations;
  int iterations = 0;
  double primal_res = kQpInfinity;
  double dual_res = kQpInfinity;
  bool polished = false;
};

struct SolverSettings {
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;        ///< over-relaxation
  double eps_abs = 1e-5;
  double eps_rel = 1e-5;
  int max_iter = 4000;
  bool warm_start = true;
  int scaling_iterations = 10;
  bool polish = true;
  int check_interval = 5;
  double eps_infeasible = 1e-6;
  double rho_equality_scale = 1e3;  ///< rho multiplier on rows with l == u
  /// Polishing is attempted once the relative residual test passes at this
  /// looser tolerance; a polished point that satisfies the KKT conditions is optimal.
  double polish_tolerance = 1e-3;
  int polish_retry_interval = 50;
  bool adaptive_rho = true;
  int adaptive_rho_interval = 25;
  double adaptive_rho_tolerance = 5.0;  ///< refactor only when rho moves by this factor

  void validate() const {
    detail::require(rho > 0.0 && sigma > 0.0, "SolverSettings: rho and sigma must be positive");
    detail::require(alpha > 0.0 && alpha < 2.0, "SolverSettings: alpha must lie in (0, 2)");
    detail::require(eps_abs >= 0.0 && eps_rel >= 0.0, "SolverSettings: negative tolerance");
    detail::require(max_iter > 0 && check_interval > 0, "SolverSettings: bad iteration limits");
  }
};

struct KktResiduals {
  double primal = 0.0;
  double dual = 0.0;
};

/// primal = |clamp(Ax, l, u) - Ax|_inf, dual = |Px + q + A'y|_inf.
inline KktResiduals kkt_residuals(const SparseQp& qp, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& y) {
  detail::require(x.size() == qp.num_variables() && y.size() == qp.num_constraints(),
                  "kkt_residuals: dimension mismatch");
  KktResiduals r;
  if (qp.num_constraints() > 0) {
    const Eigen::VectorXd ax = qp.A * x;
    r.primal = (ax.cwiseMax(qp.l).cwiseMin(qp.u) - ax).lpNorm<Eigen::Infinity>();
  }
  Eigen::VectorXd g = qp.P * x + qp.q;
  if (qp.num_constraints() > 0) g += qp.A.transpose() * y;
  r.dual = g.size() > 0 ? g.lpNorm<Eigen::Infinity>() : 0.0;
  return r;
}

inline double qp_objective(const SparseQp& qp, const Eigen::VectorXd& x) {
  return 0.5 * x.dot(qp.P * x) + qp.q.dot(x);
}

struct WarmStart {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
};

/// Single-owner solver: holds the factorisation workspace between solves.
class QpSolver {
 public:
  explicit QpSolver(SolverSettings settings = {}) : settings_(settings) { settings_.validate(); }

  const SolverSettings& settings() const { return settings_; }
  SolverSettings& settings() { return settings_; }

  QpSolution solve(const SparseQp& qp, const std::optional<WarmStart>& warm = std::nullopt) {
    qp.validate();
    settings_.validate();
    const Eigen::Index n = qp.num_variables();
    const Eigen::Index m = qp.num_constraints();
    if (warm) {
      detail::require(warm->x.size() == n && warm->y.size() == m,
                      "QpSolver::solve: warm start dimension mismatch");
    }

    scale_problem(qp);
    set_rho_vector(warm && settings_.warm_start && settings_.adaptive_rho);
    factor_kkt();

    // iterates in scaled space
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
    if (warm && settings_.warm_start) {
      x = warm->x.cwiseQuotient(d_);
      y = cost_scale_ * warm->y.cwiseQuotient(e_);
      z = project(a_ * x);
    }

    Eigen::VectorXd rhs(n + m), sol(n + m);
    Eigen::VectorXd x_tilde(n), z_tilde(m), z_prev(m), x_prev(n), y_prev(m);
    int next_polish = 0;
    QpSolution out;

    for (int k = 1; k <= settings_.max_iter; ++k) {
      x_prev = x;
      z_prev = z;
      y_prev = y;

      rhs.head(n) = settings_.sigma * x - q_;
      rhs.tail(m) = z - y.cwiseQuotient(rho_);
      sol = active_->ldlt.solve(rhs);
      x_tilde = sol.head(n);
      z_tilde = z + (sol.tail(m) - y).cwiseQuotient(rho_);

      x = settings_.alpha * x_tilde + (1.0 - settings_.alpha) * x_prev;
      const Eigen::VectorXd z_relaxed = settings_.alpha * z_tilde + (1.0 - settings_.alpha) * z_prev;
      z = project(z_relaxed + y.cwiseQuotient(rho_));
      y += rho_.cwiseProduct(z_relaxed - z);

      if (k != 1 && k % settings_.check_interval != 0 && k != settings_.max_iter) continue;

      const Eigen::VectorXd xu = d_.cwiseProduct(x);
      const Eigen::VectorXd yu = e_.cwiseProduct(y) / cost_scale_;
      const Eigen::VectorXd zu = z.cwiseQuotient(e_);

      if (settings_.adaptive_rho && k % settings_.adaptive_rho_interval == 0) {
        update_rho(x, z, y);
      }
      if (settings_.polish && k >= next_polish &&
          converged_relative(qp, xu, yu, zu, settings_.polish_tolerance)) {
        next_polish = k + settings_.polish_retry_interval;
        if (auto polished = polish(qp, x, z, y)) {
          out.polished = true;
          out.status = QpStatus::kSolved;
          return finish(qp, out, polished->x, polished->y, k);
        }
      }
      if (converged_relative(qp, xu, yu, zu, settings_.eps_rel)) {
        const KktResiduals r = kkt_residuals(qp, xu, yu);
        if (r.primal <= settings_.eps_abs && r.dual <= settings_.eps_abs) {
          out.status = QpStatus::kSolved;
          return finish(qp, out, xu, yu, k);
        }
      } else if (infeasibility_detected(x - x_prev, y - y_prev)) {
        out.status = QpStatus::kInfeasible;
        return finish(qp, out, xu, yu, k);
      }
    }

    const Eigen::VectorXd xu = d_.cwiseProduct(x);
    const Eigen::VectorXd yu = e_.cwiseProduct(y) / cost_scale_;
    if (settings_.polish) {
      if (auto polished = polish(qp, x, z, y)) {
        out.polished = true;
        out.status = QpStatus::kSolved;
        return finish(qp, out, polished->x, polished->y, settings_.max_iter);
      }
    }
    out.status = QpStatus::kMaxIterations;
    return finish(qp, out, xu, yu, settings_.max_iter);
  }

 private:
  QpSolution& finish(const SparseQp& qp, QpSolution& out, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& y, int iterations) {
    out.x = x;
    out.y = y;
    out.iterations = iterations;
    const KktResiduals r = kkt_residuals(qp, x, y);
    out.primal_res = r.primal;
    out.dual_res = r.dual;
    return out;
  }

  static double clip_scale(double v) {
    if (!(v > 1e-4)) return 1.0;  // empty or tiny column: leave unscaled
    return std::clamp(v, 1e-4, 1e4);
  }

  // Ruiz equilibration of [P A'; A 0] followed by cost scaling.
  void scale_problem(const SparseQp& qp) {
    const Eigen::Index n = qp.num_variables();
    const Eigen::Index m = qp.num_constraints();
    p_ = qp.P;
    a_ = qp.A;
    p_.makeCompressed();
    a_.makeCompressed();
    q_ = qp.q;
    l_ = qp.l.cwiseMax(-kBoundCap).cwiseMin(kBoundCap);
    u_ = qp.u.cwiseMax(-kBoundCap).cwiseMin(kBoundCap);
    d_ = Eigen::VectorXd::Ones(n);
    e_ = Eigen::VectorXd::Ones(m);
    cost_scale_ = 1.0;

    Eigen::VectorXd col_norm(n), row_norm(m), dd(n), ee(m);
    for (int it = 0; it < settings_.scaling_iterations; ++it) {
      col_norm.setZero();
      row_norm.setZero();
      for (Eigen::Index j = 0; j < n; ++j) {
        for (SparseMatrix::InnerIterator itp(p_, j); itp; ++itp) {
          col_norm[j] = std::max(col_norm[j], std::abs(itp.value()));
        }
        for (SparseMatrix::InnerIterator ita(a_, j); ita; ++ita) {
          col_norm[j] = std::max(col_norm[j], std::abs(ita.value()));
          row_norm[ita.row()] = std::max(row_norm[ita.row()], std::abs(ita.value()));
        }
      }
      for (Eigen::Index j = 0; j < n; ++j) dd[j] = 1.0 / std::sqrt(clip_scale(col_norm[j]));
      for (Eigen::Index i = 0; i < m; ++i) ee[i] = 1.0 / std::sqrt(clip_scale(row_norm[i]));
      double mean_col = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        double pc = 0.0;
        for (SparseMatrix::InnerIterator itp(p_, j); itp; ++itp) {
          itp.valueRef() *= dd[itp.row()] * dd[j];
          pc = std::max(pc, std::abs(itp.value()));
        }
        mean_col += pc;
        for (SparseMatrix::InnerIterator ita(a_, j); ita; ++ita) {
          ita.valueRef() *= ee[ita.row()] * dd[j];
        }
      }
      if (n > 0) mean_col /= static_cast<double>(n);
      q_ = q_.cwiseProduct(dd);
      d_ = d_.cwiseProduct(dd);
      e_ = e_.cwiseProduct(ee);

      const double q_norm = n > 0 ? q_.lpNorm<Eigen::Infinity>() : 0.0;
      const double gamma = 1.0 / clip_scale(std::max(mean_col, q_norm));
      p_ *= gamma;
      q_ *= gamma;
      cost_scale_ *= gamma;
    }
    l_ = l_.cwiseProduct(e_);
    u_ = u_.cwiseProduct(e_);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (qp.l[i] <= -kBoundCap) l_[i] = -kBoundCap;
      if (qp.u[i] >= kBoundCap) u_[i] = kBoundCap;
    }
    equality_.assign(static_cast<std::size_t>(m), false);
    for (Eigen::Index i = 0; i < m; ++i) {
      equality_[static_cast<std::size_t>(i)] =
          std::isfinite(qp.l[i]) && std::isfinite(qp.u[i]) &&
          qp.u[i] - qp.l[i] <= 1e-12 * std::max(1.0, std::abs(qp.l[i]));
    }
  }

  // A warm-started solve keeps the step size adapted on the previous problem.
  void set_rho_vector(bool keep_adapted) {
    if (!keep_adapted || !has_adapted_rho_) rho_base_ = settings_.rho;
    fill_rho();
  }

  void fill_rho() {
    const Eigen::Index m = l_.size();
    rho_.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (l_[i] <= -kBoundCap && u_[i] >= kBoundCap) {
        rho_[i] = kRhoMin;
      } else if (equality_[static_cast<std::size_t>(i)]) {
        rho_[i] = rho_base_ * settings_.rho_equality_scale;
      } else {
        rho_[i] = rho_base_;
      }
    }
  }

  static SparseMatrix assemble_kkt(const SparseMatrix& p, const SparseMatrix& a,
                                   const Eigen::VectorXd& top_diag,
                                   const Eigen::VectorXd& bottom_diag) {
    const Eigen::Index n = p.rows();
    const Eigen::Index m = a.rows();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(p.nonZeros() + a.nonZeros() + n + m));
    for (Eigen::Index j = 0; j < n; ++j) {
      trip.emplace_back(j, j, top_diag[j]);
      for (SparseMatrix::InnerIterator it(p, j); it; ++it) {
        if (it.row() >= j) trip.emplace_back(it.row(), j, it.value());
      }
      for (SparseMatrix::InnerIterator it(a, j); it; ++it) {
        trip.emplace_back(n + it.row(), j, it.value());
      }
    }
    for (Eigen::Index i = 0; i < m; ++i) trip.emplace_back(n + i, n + i, bottom_diag[i]);
    SparseMatrix k(n + m, n + m);
    k.setFromTriplets(trip.begin(), trip.end());
    k.makeCompressed();
    return k;
  }

  // Balance primal and dual residuals (scaled space).
  void update_rho(const Eigen::VectorXd& x, const Eigen::VectorXd& z, const Eigen::VectorXd& y) {
    if (z.size() == 0) return;
    const Eigen::VectorXd ax = a_ * x;
    const Eigen::VectorXd px = p_ * x;
    const Eigen::VectorXd aty = a_.transpose() * y;
    const double prim = (ax - z).lpNorm<Eigen::Infinity>();
    const double prim_scale = std::max(ax.lpNorm<Eigen::Infinity>(), z.lpNorm<Eigen::Infinity>());
    const double dual = (px + q_ + aty).lpNorm<Eigen::Infinity>();
    const double dual_scale = std::max({px.lpNorm<Eigen::Infinity>(), aty.lpNorm<Eigen::Infinity>(),
                                        q_.lpNorm<Eigen::Infinity>()});
    const double tiny = 1e-12;
    const double ratio = (prim / (prim_scale + tiny)) / (dual / (dual_scale + tiny) + tiny);
    const double rho_new = std::clamp(rho_base_ * std::sqrt(ratio), kRhoFloor, kRhoCeil);
    if (rho_new > rho_base_ * settings_.adaptive_rho_tolerance ||
        rho_new < rho_base_ / settings_.adaptive_rho_tolerance) {
      rho_base_ = rho_new;
      has_adapted_rho_ = true;
      fill_rho();
      factor_kkt();
    }
  }

  void factor_kkt() {
    const Eigen::Index n = p_.rows();
    kkt_ = assemble_kkt(p_, a_, Eigen::VectorXd::Constant(n, settings_.sigma),
                        -rho_.cwiseInverse());
    active_ = nullptr;
    for (auto& f : cache_) {
      if (f->outer.size() == kkt_.cols() + 1 &&
          f->inner.size() == static_cast<std::size_t>(kkt_.nonZeros()) &&
          std::equal(kkt_.outerIndexPtr(), kkt_.outerIndexPtr() + kkt_.cols() + 1, f->outer.data()) &&
          std::equal(kkt_.innerIndexPtr(), kkt_.innerIndexPtr() + kkt_.nonZeros(), f->inner.begin())) {
        active_ = f.get();
        break;
      }
    }
    if (!active_) {
      if (cache_.size() >= kPatternCacheSize) cache_.erase(cache_.begin());
      auto f = std::make_unique<Factorization>();
      f->outer = Eigen::Map<const Eigen::VectorXi>(kkt_.outerIndexPtr(), kkt_.cols() + 1);
      f->inner.assign(kkt_.innerIndexPtr(), kkt_.innerIndexPtr() + kkt_.nonZeros());
      f->ldlt.analyzePattern(kkt_);
      active_ = f.get();
      cache_.push_back(std::move(f));
    }
    active_->ldlt.factorize(kkt_);
    if (active_->ldlt.info() != Eigen::Success) {
      cache_.clear();
      active_ = nullptr;
      throw NumericalError("QpSolver: KKT factorisation failed");
    }
  }

  Eigen::VectorXd project(const Eigen::VectorXd& v) const { return v.cwiseMax(l_).cwiseMin(u_); }

  bool converged_relative(const SparseQp& qp, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& z, double eps_rel) const {
    const Eigen::Index m = qp.num_constraints();
    double prim = 0.0, prim_scale = 0.0;
    Eigen::VectorXd aty;
    if (m > 0) {
      const Eigen::VectorXd ax = qp.A * x;
      prim = (ax - z).lpNorm<Eigen::Infinity>();
      prim_scale = std::max(ax.lpNorm<Eigen::Infinity>(), z.lpNorm<Eigen::Infinity>());
      aty = qp.A.transpose() * y;
    } else {
      aty = Eigen::VectorXd::Zero(x.size());
    }
    const Eigen::VectorXd px = qp.P * x;
    const Eigen::VectorXd g = px + qp.q + aty;
    const double dual = g.size() ? g.lpNorm<Eigen::Infinity>() : 0.0;
    const double dual_scale =
        g.size() ? std::max({px.lpNorm<Eigen::Infinity>(), aty.lpNorm<Eigen::Infinity>(),
                             qp.q.lpNorm<Eigen::Infinity>()})
                 : 0.0;
    return prim <= settings_.eps_abs + eps_rel * prim_scale &&
           dual <= settings_.eps_abs + eps_rel * dual_scale;
  }

  // One-step delta certificates (scaled space).
  bool infeasibility_detected(const Eigen::VectorXd& dx, const Eigen::VectorXd& dy) const {
    const double eps = settings_.eps_infeasible;
    const Eigen::Index m = dy.size();
    const double dy_norm = m ? dy.lpNorm<Eigen::Infinity>() : 0.0;
    if (dy_norm > kDeltaFloor) {
      const Eigen::VectorXd dy_unscaled = e_.cwiseProduct(dy);
      const double dyn = dy_unscaled.lpNorm<Eigen::Infinity>();
      const Eigen::VectorXd atdy = d_.cwiseInverse().cwiseProduct(a_.transpose() * dy);
      double support = 0.0;
      bool finite_support = true;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (dy[i] > 0.0) {
          if (u_[i] >= kBoundCap) { finite_support = false; break; }
          support += u_[i] * dy[i];
        } else if (dy[i] < 0.0) {
          if (l_[i] <= -kBoundCap) { finite_support = false; break; }
          support += l_[i] * dy[i];
        }
      }
      if (finite_support && atdy.lpNorm<Eigen::Infinity>() <= eps * dyn &&
          support < -eps * dyn) {
        return true;
      }
    }
    const double dx_norm = dx.size() ? dx.lpNorm<Eigen::Infinity>() : 0.0;
    if (dx_norm > kDeltaFloor) {
      const double dxn = d_.cwiseProduct(dx).lpNorm<Eigen::Infinity>();
      const Eigen::VectorXd pdx = d_.cwiseInverse().cwiseProduct(p_ * dx) / cost_scale_;
      const double qdx = q_.dot(dx) / cost_scale_;
      if (pdx.lpNorm<Eigen::Infinity>() <= eps * dxn && qdx < -eps * dxn) {
        const Eigen::VectorXd adx = e_.cwiseInverse().cwiseProduct(a_ * dx);
        for (Eigen::Index i = 0; i < m; ++i) {
          const bool up_inf = u_[i] >= kBoundCap;
          const bool lo_inf = l_[i] <= -kBoundCap;
          if (up_inf && lo_inf) continue;
          if (up_inf && adx[i] >= -eps * dxn) continue;
          if (lo_inf && adx[i] <= eps * dxn) continue;
          if (std::abs(adx[i]) <= eps * dxn) continue;
          return false;
        }
        return true;
      }
    }
    return false;
  }

  /// Solve the equality-constrained problem on the guessed active set (scaled
  /// space, regularised + iterative refinement). Returns unscaled (x, y) when
  /// the result is feasible, sign-consistent and meets eps_abs.
  std::optional<WarmStart> polish(const SparseQp& qp, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& z, const Eigen::VectorXd& y) {
    const Eigen::Index n = x.size();
    const Eigen::Index m = z.size();
    std::vector<Eigen::Index> active;
    std::vector<int> side;  // -1 lower, +1 upper, 0 equality
    for (Eigen::Index i = 0; i < m; ++i) {
      if (equality_[static_cast<std::size_t>(i)]) {
        active.push_back(i);
        side.push_back(0);
      } else if (z[i] - l_[i] < -y[i] && l_[i] > -kBoundCap) {
        active.push_back(i);
        side.push_back(-1);
      } else if (u_[i] - z[i] < y[i] && u_[i] < kBoundCap) {
        active.push_back(i);
        side.push_back(1);
      }
    }
    // Same sparsity as the ADMM system: inactive rows keep their structure
    // with zero values and a unit diagonal, so the symbolic analysis is reused.
    std::vector<char> is_active(static_cast<std::size_t>(m), 0);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    for (std::size_t r = 0; r < active.size(); ++r) {
      const Eigen::Index i = active[r];
      is_active[static_cast<std::size_t>(i)] = 1;
      b[i] = side[r] > 0 ? u_[i] : l_[i];
    }
    SparseMatrix a_act = a_;
    for (Eigen::Index j = 0; j < n; ++j) {
      for (SparseMatrix::InnerIterator it(a_act, j); it; ++it) {
        if (!is_active[static_cast<std::size_t>(it.row())]) it.valueRef() = 0.0;
      }
    }
    Eigen::VectorXd bottom_reg(m), bottom_exact(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const bool act = is_active[static_cast<std::size_t>(i)] != 0;
      bottom_reg[i] = act ? -kPolishDelta : -1.0;
      bottom_exact[i] = act ? 0.0 : -1.0;
    }
    const SparseMatrix k_reg =
        assemble_kkt(p_, a_act, Eigen::VectorXd::Constant(n, kPolishDelta), bottom_reg);
    const SparseMatrix k_exact = assemble_kkt(p_, a_act, Eigen::VectorXd::Zero(n), bottom_exact);
    auto& polish_ldlt = active_->polish;
    if (!active_->polish_analyzed) {
      polish_ldlt.analyzePattern(k_reg);
      active_->polish_analyzed = true;
    }
    polish_ldlt.factorize(k_reg);
    if (polish_ldlt.info() != Eigen::Success) return std::nullopt;

    Eigen::VectorXd rhs(n + m);
    rhs << -q_, b;
    Eigen::VectorXd sol = polish_ldlt.solve(rhs);
    const double rhs_norm = std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
    for (int it = 0; it < kPolishRefine; ++it) {
      const Eigen::VectorXd resid = rhs - k_exact.selfadjointView<Eigen::Lower>() * sol;
      if (resid.lpNorm<Eigen::Infinity>() <= 1e-13 * rhs_norm) break;
      sol += polish_ldlt.solve(resid);
    }
    if (!sol.allFinite()) return std::nullopt;

    Eigen::VectorXd ys = Eigen::VectorXd::Zero(m);
    for (std::size_t r = 0; r < active.size(); ++r) {
      const Eigen::Index i = active[r];
      const double yi = sol[n + i];
      if ((side[r] < 0 && yi > 0.0) || (side[r] > 0 && yi < 0.0)) {
        // wrong-sign multiplier: active-set guess is not optimal
        if (std::abs(yi) > settings_.eps_abs) return std::nullopt;
      }
      ys[i] = yi;
    }
    WarmStart out{d_.cwiseProduct(sol.head(n)), e_.cwiseProduct(ys) / cost_scale_};
    const KktResiduals r = kkt_residuals(qp, out.x, out.y);
    if (!(r.primal <= settings_.eps_abs && r.dual <= settings_.eps_abs)) return std::nullopt;
    return out;
  }

  static constexpr double kBoundCap = 1e20;
  static constexpr double kRhoMin = 1e-6;
  static constexpr double kDeltaFloor = 1e-12;
  static constexpr double kRhoFloor = 1e-6;
  static constexpr double kRhoCeil = 1e6;
  static constexpr double kPolishDelta = 1e-9;
  static constexpr int kPolishRefine = 3;

  SolverSettings settings_;
  SparseMatrix p_, a_, kkt_;
  Eigen::VectorXd q_, l_, u_, d_, e_, rho_;
  std::vector<bool> equality_;
  double cost_scale_ = 1.0;
  double rho_base_ = 0.1;
  bool has_adapted_rho_ = false;
  // Symbolic analyses keyed by KKT sparsity pattern; the MPC cycles through
  // one layout per phase of the jet period.
  struct Factorization {
    Eigen::VectorXi outer;
    std::vector<int> inner;
    Eigen::SimplicialLDLT<SparseMatrix> ldlt;
    Eigen::SimplicialLDLT<SparseMatrix> polish;
    bool polish_analyzed = false;
  };
  static constexpr std::size_t kPatternCacheSize = 32;
  std::vector<std::unique_ptr<Factorization>> cache_;
  Factorization* active_ = nullptr;
};

}  // namespace jetmpc
