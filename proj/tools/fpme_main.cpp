// Command-line front end. Everything an experiment needs comes from a JSON
// config (grid, operator, problem, time, solver, suite, output, seed); flags
// carry only paths and profile switches, so a result is reproducible from the
// config echo embedded in its output files alone.
//
// Exit codes: 0 pass, 1 criterion/check failure, 2 configuration error,
// 3 solver non-convergence.

#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fpme/acceptance.hpp"
#include "fpme/analytic.hpp"
#include "fpme/config.hpp"
#include "fpme/diagnostics.hpp"
#include "fpme/evolution.hpp"
#include "fpme/io.hpp"
#include "fpme/selftest.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNoConvergence = 3;

namespace fs = std::filesystem;

fpme::ExperimentConfig load_or_default(const std::string& path) {
  if (path.empty()) return fpme::ExperimentConfig{};
  return fpme::load_config(path);
}

int cmd_selftest(const std::string& config_path) {
  fpme::ExperimentConfig cfg = load_or_default(config_path);
  const std::uint64_t seed = cfg.seed.value_or(12345);
  std::vector<fpme::SelftestEntry> entries = fpme::operator_selftest(cfg.grid, seed);

  nlohmann::json arr = nlohmann::json::array();
  for (const fpme::SelftestEntry& e : entries) {
    std::printf("%s %-40s measured=%.3e bound=%.3e\n", e.pass ? "PASS" : "FAIL", e.name.c_str(),
                e.measured, e.bound);
    arr.push_back({{"name", e.name}, {"measured", e.measured}, {"bound", e.bound},
                   {"pass", e.pass}});
  }
  fs::create_directories(cfg.output_dir);
  fpme::write_json(fs::path(cfg.output_dir) / "selftest.json",
                   {{"schema_version", fpme::kSchemaVersion},
                    {"config", fpme::effective_echo(cfg)},
                    {"entries", arr}});
  const bool ok = fpme::selftest_all_pass(entries);
  std::printf("%s (%zu entries)\n", ok ? "SELFTEST PASS" : "SELFTEST FAIL", entries.size());
  return ok ? kExitPass : kExitFailure;
}

int cmd_resolve(const std::string& config_path) {
  fpme::ExperimentConfig cfg = fpme::load_config(config_path);
  const double eps = cfg.epsilon();
  fpme::OperatorPlan op = fpme::make_operator_plan(cfg);
  fpme::Field g = fpme::make_datum(cfg);

  fpme::ResolventProblem prob{eps,         cfg.m,        g, &op, cfg.tol, cfg.max_iter,
                              cfg.armijo_decrease, cfg.armijo_backtrack};
  fpme::ResolventSolution sol = fpme::solve_resolvent(prob);

  fs::create_directories(cfg.output_dir);
  const fs::path dir(cfg.output_dir);
  if (cfg.output_binary) fpme::write_field(dir / "solution.field", sol.u);
  if (cfg.output_csv) fpme::write_field_csv(dir / "solution.csv", sol.u);
  fpme::write_json(dir / "report.json", {{"schema_version", fpme::kSchemaVersion},
                                         {"config", fpme::effective_echo(cfg)},
                                         {"epsilon", eps},
                                         {"report", fpme::to_json(sol.report)}});
  std::printf("%s method=%s iterations=%d residual=%.3e -> %s\n",
              sol.report.converged ? "converged" : "NOT CONVERGED", sol.report.method.c_str(),
              sol.report.iterations, sol.report.final_residual, cfg.output_dir.c_str());
  return sol.report.converged ? kExitPass : kExitNoConvergence;
}

int cmd_evolve(const std::string& config_path) {
  fpme::ExperimentConfig cfg = fpme::load_config(config_path);
  fpme::OperatorPlan op = fpme::make_operator_plan(cfg);
  fpme::EvolutionConfig ecfg = fpme::make_evolution_config(cfg, op);
  fpme::Field f = fpme::make_datum(cfg);

  const fs::path dir(cfg.output_dir);
  try {
    fpme::Trajectory traj = fpme::evolve(f, ecfg);
    fpme::write_trajectory(dir, traj, fpme::effective_echo(cfg));
    if (cfg.output_csv)
      for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "snapshot_%04zu.csv", i);
        fpme::write_field_csv(dir / name, traj.snapshots[i]);
      }
    if (cfg.m == 1.0) {
      // the exact evolution exists; record the comparison alongside
      std::ofstream os(dir / "exact_comparison.csv");
      os.precision(17);
      os << "t,rel_l1_error\n";
      for (std::size_t i = 0; i < traj.times.size(); ++i) {
        fpme::Field exact = fpme::evolve_linear_exact(f, traj.times[i], op.spectral());
        os << traj.times[i] << ","
           << fpme::lp_norm(traj.snapshots[i] - exact, 1.0) /
                  std::max(fpme::lp_norm(exact, 1.0), 1e-300)
           << "\n";
      }
    }
    std::printf("evolved %d steps to T=%g (%zu snapshots) -> %s\n", ecfg.n_steps, ecfg.T,
                traj.snapshots.size(), cfg.output_dir.c_str());
    return kExitPass;
  } catch (const fpme::StepFailed& err) {
    fpme::write_trajectory(dir, err.partial, fpme::effective_echo(cfg));
    std::fprintf(stderr, "%s (partial trajectory written to %s)\n", err.what(),
                 cfg.output_dir.c_str());
    return kExitNoConvergence;
  }
}

int cmd_verify(const std::string& config_path, const std::string& trajectory_dir) {
  fpme::ExperimentConfig cfg = fpme::load_config(config_path);
  if (cfg.suite.empty())
    throw fpme::ConfigError("config: verify needs a non-empty suite section");

  fpme::LoadedTrajectory loaded = fpme::read_trajectory(trajectory_dir);
  if (loaded.snapshots.empty())
    throw fpme::ConfigError("verify: trajectory at " + trajectory_dir + " has no snapshots");
  if (!(loaded.snapshots.front().grid == cfg.grid))
    throw fpme::ConfigError("verify: trajectory grid does not match the config grid");

  fpme::OperatorPlan op = fpme::make_operator_plan(cfg);
  fpme::EvolutionConfig ecfg = fpme::make_evolution_config(cfg, op);

  fpme::Trajectory traj;
  traj.config = ecfg;
  traj.times = loaded.times;
  traj.snapshots = loaded.snapshots;
  for (std::size_t i = 0; i < traj.times.size(); ++i)
    traj.series.push_back(fpme::measure_series(traj.times[i], traj.snapshots[i], cfg.m));

  std::vector<fpme::DiagnosticsReport> reports;
  for (const fpme::SuiteCheck& chk : cfg.suite) {
    try {
      if (chk.name == "mass-conservation") {
        reports.push_back(fpme::check_mass(traj, chk.tolerance.value_or(1e-8)));
      } else if (chk.name == "convex-decay") {
        reports.push_back(fpme::check_lp_decay(traj, {1.0, 2.0, cfg.m + 1.0, fpme::kInfinityNorm},
                                               chk.tolerance.value_or(1e-9)));
      } else if (chk.name == "retention") {
        reports.push_back(fpme::check_retention(traj, chk.tolerance.value_or(0.0)));
      } else if (chk.name == "fast-diffusion-growth-bound") {
        reports.push_back(
            fpme::check_fast_diffusion_growth_bound(traj, chk.tolerance.value_or(0.0)));
      } else if (chk.name == "time-derivative-bound") {
        reports.push_back(fpme::check_time_derivative_bound(traj, chk.tolerance.value_or(0.05)));
      } else if (chk.name == "instantaneous-positivity") {
        reports.push_back(fpme::check_positivity(traj, 0.0));
      } else if (chk.name == "contraction-battery") {
        fpme::BatteryResult res = fpme::contraction_battery(
            op, {cfg.m}, 20, ecfg.epsilon(), cfg.tol, *cfg.seed);
        reports.push_back(res.report);
      } else if (chk.name == "two-point-inequality-and-convolution-identity") {
        reports.push_back(fpme::appendix_checks({0.5, 1.5, 2.0, 5.0}, 10000, *cfg.seed));
      } else {
        throw fpme::ConfigError("config: unknown suite check '" + chk.name + "'");
      }
    } catch (const std::invalid_argument& err) {
      throw fpme::ConfigError("verify: check '" + chk.name + "' not applicable: " + err.what());
    }
  }

  fpme::write_diagnostics(fs::path(trajectory_dir) / "diagnostics.json", reports,
                          fpme::effective_echo(cfg));
  bool all = true;
  std::printf("%-44s %-6s %s\n", "check", "result", "tolerance");
  for (const fpme::DiagnosticsReport& rep : reports) {
    std::printf("%-44s %-6s %.3e\n", rep.check.c_str(), rep.pass ? "pass" : "FAIL",
                rep.tolerance);
    all = all && rep.pass;
  }
  std::printf("%s (%zu checks, diagnostics.json written)\n", all ? "VERIFY PASS" : "VERIFY FAIL",
              reports.size());
  return all ? kExitPass : kExitFailure;
}

int cmd_profile(const std::string& config_path) {
  fpme::ExperimentConfig cfg = fpme::load_config(config_path);
  const double tau = cfg.datum.get("tau", 1.0);
  fpme::SpectralPlan plan(cfg.grid);
  fpme::ProfileCalibration cal = fpme::extinction_profile_solve(cfg.grid, tau, plan);

  fs::create_directories(cfg.output_dir);
  const fs::path dir(cfg.output_dir);
  if (cfg.output_binary) fpme::write_field(dir / "profile.field", cal.profile);
  if (cfg.output_csv) fpme::write_field_csv(dir / "profile.csv", cal.profile);
  fpme::write_json(dir / "profile.json", {{"schema_version", fpme::kSchemaVersion},
                                          {"config", fpme::effective_echo(cfg)},
                                          {"tau", tau},
                                          {"amplitude", cal.amplitude},
                                          {"ratio_spread", cal.ratio_spread},
                                          {"eigen_residual", cal.eigen_residual},
                                          {"region_points", cal.region_points}});
  std::printf("tau=%g A=%.6f spread=%.3e eigen_residual=%.3e -> %s\n", tau, cal.amplitude,
              cal.ratio_spread, cal.eigen_residual, cfg.output_dir.c_str());
  return kExitPass;
}

int cmd_acceptance(const std::string& config_path, bool smoke, std::optional<std::uint64_t> seed) {
  std::uint64_t effective_seed = 987654321;
  std::string output_dir;
  if (!config_path.empty()) {
    fpme::ExperimentConfig cfg = fpme::load_config(config_path);
    if (cfg.seed) effective_seed = *cfg.seed;
    output_dir = cfg.output_dir;
  }
  if (seed) effective_seed = *seed;

  std::vector<fpme::CriterionResult> results =
      fpme::run_acceptance(smoke, effective_seed, std::cout);
  if (!output_dir.empty()) {
    nlohmann::json arr = nlohmann::json::array();
    for (const fpme::CriterionResult& r : results)
      arr.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
    fs::create_directories(output_dir);
    fpme::write_json(fs::path(output_dir) / "acceptance.json",
                     {{"schema_version", fpme::kSchemaVersion},
                      {"profile", smoke ? "smoke" : "full"},
                      {"seed", effective_seed},
                      {"criteria", arr}});
  }
  for (const fpme::CriterionResult& r : results)
    if (!r.pass) return kExitFailure;
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"implicit-stepping laboratory for the half-laplacian porous-medium flow"};
  app.require_subcommand(1);

  std::string config_path, trajectory_dir;
  bool smoke = false;
  std::optional<std::uint64_t> seed_flag;

  CLI::App* selftest = app.add_subcommand("selftest", "operator cross-validation battery");
  selftest->add_option("-c,--config", config_path, "config JSON (default: built-in grid)");

  CLI::App* resolve = app.add_subcommand("resolve", "single implicit step u + eps*Lambda(u^m) = g");
  resolve->add_option("-c,--config", config_path, "config JSON")->required();

  CLI::App* evolve = app.add_subcommand("evolve", "run the implicit time discretization");
  evolve->add_option("-c,--config", config_path, "config JSON")->required();

  CLI::App* verify = app.add_subcommand("verify", "run a diagnostic suite over a trajectory");
  verify->add_option("-c,--config", config_path, "config JSON with a suite section")->required();
  verify->add_option("-t,--trajectory", trajectory_dir, "trajectory directory")->required();

  CLI::App* profile = app.add_subcommand("profile", "calibrate the vanishing-solution profile");
  profile->add_option("-c,--config", config_path, "config JSON (2d grid, datum params tau)")
      ->required();

  CLI::App* acceptance = app.add_subcommand("acceptance", "run the full acceptance battery");
  acceptance->add_option("-c,--config", config_path, "optional config (seed, output dir)");
  acceptance->add_flag("--smoke", smoke, "reduced-resolution profile with looser bounds");
  acceptance->add_option("--seed", seed_flag, "override the randomized-check seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kExitConfig;
  }

  try {
    if (selftest->parsed()) return cmd_selftest(config_path);
    if (resolve->parsed()) return cmd_resolve(config_path);
    if (evolve->parsed()) return cmd_evolve(config_path);
    if (verify->parsed()) return cmd_verify(config_path, trajectory_dir);
    if (profile->parsed()) return cmd_profile(config_path);
    if (acceptance->parsed()) return cmd_acceptance(config_path, smoke, seed_flag);
  } catch (const fpme::ConfigError& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitConfig;
  } catch (const fpme::StepFailed& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitNoConvergence;
  } catch (const fpme::NonFiniteEncountered& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitNoConvergence;
  } catch (const fpme::RatioNotConstant& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitFailure;
  } catch (const std::invalid_argument& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitConfig;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitConfig;
  }
  return kExitConfig;
}
