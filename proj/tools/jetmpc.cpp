// jetmpc: scenario runner, run comparison and oracle self-test.
//
//   jetmpc run --scenario FILE [--ablation NAME]... [--set k=v]... [--out DIR]
//              [--seed N] [--repeat N] [--jobs N]
//   jetmpc compare DIR... [--json]
//   jetmpc selftest
//   jetmpc template
//
// JETMPC_LOG=quiet|info|debug controls stderr verbosity (default info).

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include <jetmpc/config.hpp>
#include <jetmpc/report.hpp>
#include <jetmpc/sim.hpp>
#include <jetmpc/testing/oracles.hpp>

namespace fs = std::filesystem;
using namespace jetmpc;

namespace {

enum class Verbosity { kQuiet, kInfo, kDebug };

Verbosity verbosity() {
  const char* env = std::getenv("JETMPC_LOG");
  if (!env) return Verbosity::kInfo;
  const std::string v = env;
  if (v == "quiet" || v == "0") return Verbosity::kQuiet;
  if (v == "debug" || v == "2") return Verbosity::kDebug;
  return Verbosity::kInfo;
}

std::mutex g_log_mutex;

void log(Verbosity level, const std::string& msg) {
  if (level > verbosity()) return;
  std::lock_guard<std::mutex> lock(g_log_mutex);
  std::cerr << msg << '\n';
}

struct Job {
  Scenario scenario;
  fs::path dir;
  std::string label;
};

struct JobResult {
  bool ok = false;
  bool crashed = false;
  std::string error;
};

JobResult run_job(const Job& job) {
  JobResult r;
  try {
    log(Verbosity::kDebug, "starting " + job.label + " -> " + job.dir.string());
    const SimulationResult sim = simulate(job.scenario);
    write_run_directory(job.dir, job.scenario, sim);
    r.ok = true;
    r.crashed = sim.crashed();
    log(Verbosity::kInfo, job.label + ": " + sim.metrics.status +
                              (r.crashed ? " (" + sim.metrics.crash_reason + ")" : "") + " -> " +
                              job.dir.string());
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

int cmd_run(const std::string& scenario_file, std::vector<std::string> ablations,
            const std::vector<std::string>& overrides, std::string out, long seed, int repeat,
            int jobs) {
  Json doc = read_json_file(scenario_file);
  if (seed >= 0) {
    if (!doc.contains("scenario") || !doc["scenario"].is_object()) {
      throw ConfigError("scenario", "missing required section");
    }
    doc["scenario"]["seed"] = seed;
  }
  const Scenario base = load_scenario(doc, overrides);
  if (ablations.empty()) ablations.push_back(to_string(base.ablation));
  if (out.empty()) out = (fs::path("runs") / base.name).string();

  std::vector<Job> queue;
  const bool nested = ablations.size() > 1 || repeat > 1;
  for (const auto& name : ablations) {
    const Ablation a = ablation_from_string(name);
    for (int k = 0; k < repeat; ++k) {
      Job job;
      job.scenario = base;
      job.scenario.ablation = a;
      std::string leaf = name;
      if (repeat > 1) leaf += "-r" + std::to_string(k);
      job.dir = nested ? fs::path(out) / leaf : fs::path(out);
      job.label = base.name + "/" + leaf;
      queue.push_back(std::move(job));
    }
  }

  std::vector<JobResult> results(queue.size());
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(queue.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < queue.size(); i = next++) results[i] = run_job(queue[i]);
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  int status = 0;
  std::vector<fs::path> dirs;
  for (std::size_t i = 0; i < queue.size(); ++i) {
    if (!results[i].ok) {
      std::cerr << "error: " << queue[i].label << ": " << results[i].error << '\n';
      status = 1;
      continue;
    }
    if (results[i].crashed && status == 0) status = 2;
    dirs.push_back(queue[i].dir);
  }
  if (dirs.size() == 1) {
    std::ifstream summary(dirs.front() / "summary.txt");
    std::cout << summary.rdbuf();
  } else if (!dirs.empty()) {
    std::cout << format_table(compare_runs(dirs));
  }
  return status;
}

int cmd_compare(const std::vector<std::string>& dirs, bool as_json) {
  std::vector<fs::path> paths(dirs.begin(), dirs.end());
  const ComparisonTable t = compare_runs(paths);
  for (const auto& w : t.warnings) std::cerr << "warning: " << w << '\n';
  if (as_json) {
    std::cout << table_to_json(t).dump(2) << '\n';
  } else {
    std::cout << format_table(t);
  }
  return t.rows.empty() ? 1 : 0;
}

int cmd_selftest() {
  int failures = 0;
  auto report = [&](bool pass, const std::string& line) {
    std::cout << (pass ? "PASS " : "FAIL ") << line << '\n';
    if (!pass) ++failures;
  };
  const RobotModel model = default_robot_model();
  const JetParams jets = testing::nonlinear_jet_params();

  const auto lin = testing::check_linearization(model, jets, 1000, 1);
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "linearization vs finite differences (%d points): |dA| %.2e  |dB| %.2e  tangency %.2e",
                lin.samples, lin.max_a_error, lin.max_b_error, lin.max_tangency);
  report(lin.max_a_error <= 1e-5 && lin.max_b_error <= 1e-5 && lin.max_tangency <= 1e-10, buf);

  const auto lam = testing::check_lambda(model, 1000, 2);
  std::snprintf(buf, sizeof(buf), "lambda vs finite differences (%d configurations): lin %.2e  ang %.2e",
                lam.samples, lam.max_lin_error, lam.max_ang_error);
  report(lam.max_lin_error <= 1e-5 && lam.max_ang_error <= 1e-5, buf);

  const auto qp = testing::check_qp_solver(50, 3);
  std::snprintf(buf, sizeof(buf), "QP solver vs active-set enumeration (%d problems, %d solved): |dx| %.2e",
                qp.problems, qp.solved, qp.max_x_error);
  report(qp.solved == qp.problems && qp.max_x_error <= 1e-4, buf);
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-rate LPV MPC for a jet-powered flying robot"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Simulate a scenario and write a run directory");
  std::string scenario_file, out;
  std::vector<std::string> ablations, overrides;
  long seed = -1;
  int repeat = 1;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  run->add_option("--scenario", scenario_file, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  run->add_option("--ablation", ablations, "multi-rate | single-rate | no-jet-dynamics (repeatable)")
      ->check(CLI::IsMember({"multi-rate", "single-rate", "no-jet-dynamics"}));
  run->add_option("--set", overrides, "Override a resolved config entry, e.g. mpc.weights.du_jet=0.5");
  run->add_option("--out", out, "Output directory (default runs/<scenario name>)");
  run->add_option("--seed", seed, "Seed recorded in the run")->check(CLI::NonNegativeNumber);
  run->add_option("--repeat", repeat, "Independent repetitions per ablation")->check(CLI::PositiveNumber);
  run->add_option("--jobs", jobs, "Parallel jobs")->check(CLI::PositiveNumber);

  auto* compare = app.add_subcommand("compare", "Per-axis MAE table over run directories");
  std::vector<std::string> dirs;
  bool as_json = false;
  compare->add_option("dirs", dirs, "Run directories")->required();
  compare->add_flag("--json", as_json, "Emit JSON instead of text");

  auto* selftest = app.add_subcommand("selftest", "Finite-difference and QP oracle checks");
  auto* tmpl = app.add_subcommand("template", "Print the default scenario document");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(scenario_file, ablations, overrides, out, seed, repeat, jobs);
    if (*compare) return cmd_compare(dirs, as_json);
    if (*selftest) return cmd_selftest();
    if (*tmpl) {
      std::cout << to_json(Scenario{}).dump(2) << '\n';
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
