// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fail.
//
//   jetmpc_acceptance --scenarios DIR --out DIR

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include <jetmpc/config.hpp>
#include <jetmpc/sim.hpp>
#include <jetmpc/testing/oracles.hpp>

namespace fs = std::filesystem;
using namespace jetmpc;

namespace {

// tolerances
constexpr double kJacobianTol = 1e-5;
constexpr double kTangencyTol = 1e-10;
constexpr double kLinearizationBudgetS = 30.0;
constexpr double kQpOracleTol = 1e-4;
constexpr double kKktTol = 1e-5;
constexpr double kHoldTol = 1e-6;
constexpr double kJetPeriod = 0.1;
constexpr double kHoverPositionTol = 0.05;
constexpr double kHoverAttitudeTol = 1.0 * std::numbers::pi / 180.0;
constexpr double kHoverBudgetS = 60.0;
constexpr double kRecoveryBudgetS = 8.0;
constexpr double kOrientationGain = 2.0;
constexpr double kNoJetPositionFactor = 5.0;
constexpr double kSolveMeanMs = 5.0;
constexpr double kSolveP99Ms = 10.0;

int g_failures = 0;

void report(bool pass, const std::string& name, const std::string& detail) {
  std::cout << (pass ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
  if (!pass) ++g_failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Run {
  Scenario scenario;
  SimulationResult result;
  double wall_s = 0.0;
  fs::path dir;
};

Run run_scenario(const fs::path& scenarios, const std::string& name, const fs::path& out,
                 const std::string& leaf, std::optional<Ablation> ablation = std::nullopt) {
  Run r;
  r.scenario = load_scenario(read_json_file(scenarios / (name + ".json")));
  if (ablation) r.scenario.ablation = *ablation;
  r.dir = out / leaf;
  const auto t0 = std::chrono::steady_clock::now();
  r.result = simulate(r.scenario);
  r.wall_s = seconds_since(t0);
  write_run_directory(r.dir, r.scenario, r.result);
  std::cerr << "  ran " << leaf << " (" << r.result.metrics.status << ", " << fmt("%.1f", r.wall_s)
            << " s)\n";
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool on_jet_clock(double t) {
  const double k = std::round(t / kJetPeriod);
  return std::abs(t - k * kJetPeriod) < 1e-9;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"jetmpc acceptance checks"};
  std::string scenarios_dir, out_dir = "acceptance-runs";
  app.add_option("--scenarios", scenarios_dir, "Bundled scenario directory")->required();
  app.add_option("--out", out_dir, "Where run directories are written");
  CLI11_PARSE(app, argc, argv);
  const fs::path scenarios(scenarios_dir), out(out_dir);
  fs::create_directories(out);

  // -- linearization fidelity
  {
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = testing::check_linearization(default_robot_model(), testing::nonlinear_jet_params(),
                                                1000, 1);
    const double wall = seconds_since(t0);
    report(r.max_a_error <= kJacobianTol && r.max_b_error <= kJacobianTol &&
               r.max_tangency <= kTangencyTol && wall <= kLinearizationBudgetS,
           "linearization fidelity",
           fmt("%d points, |dA| %.2e |dB| %.2e (tol %.0e), tangency %.2e (tol %.0e), %.1f s", r.samples,
               r.max_a_error, r.max_b_error, kJacobianTol, r.max_tangency, kTangencyTol, wall));
  }

  // -- lambda oracle
  {
    const auto r = testing::check_lambda(default_robot_model(), 1000, 2);
    report(r.max_lin_error <= kJacobianTol && r.max_ang_error <= kJacobianTol, "lambda oracle",
           fmt("%d configurations, lin %.2e ang %.2e (tol %.0e)", r.samples, r.max_lin_error,
               r.max_ang_error, kJacobianTol));
  }

  std::cerr << "running closed-loop scenarios\n";
  const Run hover = run_scenario(scenarios, "hover", out, "hover");
  const Run hover2 = run_scenario(scenarios, "hover", out, "hover-repeat");
  const Run dist = run_scenario(scenarios, "disturbance", out, "disturbance");
  const Run multi = run_scenario(scenarios, "minjerk", out, "minjerk-multi-rate", Ablation::kMultiRate);
  const Run single = run_scenario(scenarios, "minjerk", out, "minjerk-single-rate", Ablation::kSingleRate);
  const Run nojet = run_scenario(scenarios, "ablation-nojet", out, "minjerk-no-jet-dynamics");

  // -- QP oracle equivalence + KKT on the MPC stream
  {
    const auto r = testing::check_qp_solver(50, 3);
    const Metrics& m = multi.result.metrics;
    const bool stream_ok = !multi.result.crashed() && m.degraded_steps == 0 &&
                           m.max_primal_res <= kKktTol && m.max_dual_res <= kKktTol;
    report(r.solved == r.problems && r.max_x_error <= kQpOracleTol && stream_ok, "QP solver oracle",
           fmt("%d/%d random QPs solved, |dx| %.2e (tol %.0e); minjerk stream %d QPs, %d degraded, "
               "primal %.2e dual %.2e (tol %.0e)",
               r.solved, r.problems, r.max_x_error, kQpOracleTol, m.mpc_steps, m.degraded_steps,
               m.max_primal_res, m.max_dual_res, kKktTol));
  }

  // -- multi-rate exactness
  {
    const auto& log = multi.result.log;
    int off_clock_changes = 0, updates = 0, missed_updates = 0;
    double min_plateau = 1e9, max_plateau = 0.0, last_update = 0.0;
    for (std::size_t k = 1; k < log.size(); ++k) {
      const double t = log[k].t;
      if (log[k].v_cmd != log[k - 1].v_cmd && !on_jet_clock(t)) ++off_clock_changes;
      if (on_jet_clock(t) && log[k].mpc.jet_updated) {
        if (updates > 0) {
          min_plateau = std::min(min_plateau, t - last_update);
          max_plateau = std::max(max_plateau, t - last_update);
        }
        last_update = t;
        ++updates;
      } else if (on_jet_clock(t) && !log[k].mpc.jet_updated && t < log.back().t) {
        // the final sample closes the run and has no controller iteration of its own
        ++missed_updates;
      }
    }
    const Metrics& m = multi.result.metrics;
    const bool plateaus = updates > 1 && std::abs(min_plateau - kJetPeriod) < 1e-9 &&
                          std::abs(max_plateau - kJetPeriod) < 1e-9;
    report(!multi.result.crashed() && off_clock_changes == 0 && missed_updates == 0 && plateaus &&
               m.max_hold_error <= kHoldTol,
           "multi-rate exactness",
           fmt("%d jet updates, plateau %.4f..%.4f s, %d off-clock changes, %d missed updates, "
               "hold error %.2e (tol %.0e)",
               updates, min_plateau, max_plateau, off_clock_changes, missed_updates, m.max_hold_error,
               kHoldTol));
  }

  // -- hover
  {
    const Metrics& m = hover.result.metrics;
    const double pos = m.max_abs_x.maxCoeff(), att = m.max_abs_phi.maxCoeff();
    report(!hover.result.crashed() && pos <= kHoverPositionTol && att <= kHoverAttitudeTol &&
               hover.wall_s <= kHoverBudgetS,
           "hover",
           fmt("%s, max |x - x_ref| %.4f m (tol %.2f), max attitude %.4f deg (tol 1), %.1f s wall",
               m.status.c_str(), pos, kHoverPositionTol, att * 180.0 / std::numbers::pi, hover.wall_s));
  }

  // -- disturbance recovery
  {
    const Metrics& m = dist.result.metrics;
    const double rec = m.recovery_times.empty() ? -1.0 : m.recovery_times.front();
    const bool finite = std::isfinite(m.max_position_error) && std::isfinite(m.max_attitude_error);
    report(!dist.result.crashed() && finite && rec >= 0.0 && rec <= kRecoveryBudgetS,
           "disturbance recovery",
           fmt("%s, disturbance scale %.2f, peak excursion %.3f m / %.2f deg, recovery %.2f s (limit %.0f)",
               m.status.c_str(), dist.scenario.disturbance_scale, m.max_position_error,
               m.max_attitude_error * 180.0 / std::numbers::pi, rec, kRecoveryBudgetS));
  }

  // -- minimum-jerk tracking and ablation ordering
  {
    const Metrics& a = multi.result.metrics;
    const Metrics& b = single.result.metrics;
    Eigen::Matrix<double, 6, 1> ma, mb;
    ma << a.mae_x, a.mae_phi;
    mb << b.mae_x, b.mae_phi;
    int no_worse = 0;
    double best_gain = 0.0;
    for (int i = 0; i < 6; ++i) {
      if (ma[i] <= mb[i]) ++no_worse;
      if (i >= 3 && ma[i] > 0.0) best_gain = std::max(best_gain, mb[i] / ma[i]);
    }
    const Metrics& c = nojet.result.metrics;
    const double pos_multi = a.mae_x.sum(), pos_nojet = c.mae_x.sum();
    const bool nojet_ok = nojet.result.crashed() || pos_nojet > kNoJetPositionFactor * pos_multi;
    const bool both = !multi.result.crashed() && !single.result.crashed();
    report(both && no_worse >= 4 && best_gain >= kOrientationGain && nojet_ok,
           "min-jerk ablation ordering",
           fmt("multi-rate <= single-rate on %d/6 axes (need 4), best orientation ratio %.2fx (need "
               "%.0fx); no-jet-dynamics %s%s",
               no_worse, best_gain, kOrientationGain, c.status.c_str(),
               nojet.result.crashed() ? (" (" + c.crash_reason + ")").c_str()
                                      : fmt(", position MAE %.1fx multi-rate", pos_nojet / pos_multi).c_str()));
  }

  // -- real-time budget
  {
    const auto& s = multi.result.metrics.solve_time;
    report(s.mean_ms <= kSolveMeanMs && s.p99_ms <= kSolveP99Ms, "real-time budget",
           fmt("17-knot multi-rate MPC on minjerk: mean %.3f ms (limit %.0f), p99 %.3f ms (limit %.0f)",
               s.mean_ms, kSolveMeanMs, s.p99_ms, kSolveP99Ms));
  }

  // -- determinism
  {
    const std::string a = slurp(hover.dir / "log.csv"), b = slurp(hover2.dir / "log.csv");
    report(!a.empty() && a == b, "determinism",
           fmt("two hover runs, log.csv %zu bytes, %s", a.size(), a == b ? "byte-identical" : "differ"));
  }

  std::cout << (g_failures == 0 ? "all criteria passed" : std::to_string(g_failures) + " criteria failed")
            << std::endl;
  return g_failures == 0 ? 0 : 1;
}
