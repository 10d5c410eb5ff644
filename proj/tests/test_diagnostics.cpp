#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>

#include "fpme/diagnostics.hpp"

using namespace fpme;

namespace {

const GridSpec& line_grid() {
  static GridSpec g = make_grid(1, 20.0, 128);
  return g;
}

const OperatorPlan& line_op() {
  static OperatorPlan op(line_grid(), BackendTag::spectral);
  return op;
}

Trajectory run(double m, const Field& f, int n_steps = 16, double T = 1.0, int stride = 1) {
  EvolutionConfig cfg{m, T, n_steps, &line_op(), 1e-10, 5000, stride};
  return evolve(f, cfg);
}

Field gaussian(double amp = 1.0, double center = 0.0) {
  return sample(line_grid(), DatumSpec{"gaussian", {{"sigma", 1.5}, {"amp", amp},
                                                    {"center_x", center}}});
}

}  // namespace

TEST_CASE("mass conservation check") {
  Trajectory traj = run(2.0, gaussian());
  DiagnosticsReport rep = check_mass(traj, 1e-7);
  CHECK(rep.pass);
  CHECK(rep.check == "mass-conservation");

  // the reported drift is what the series itself shows
  const double m0 = traj.series.front().mass;
  double worst = 0.0;
  for (const SeriesRow& row : traj.series)
    worst = std::max(worst, std::fabs(row.mass - m0) / std::fabs(m0));
  CHECK(rep.margins.at("max_relative_drift") == Catch::Approx(worst).margin(1e-18));

  // an impossible tolerance flips the verdict without changing the margin
  DiagnosticsReport tight = check_mass(traj, 0.0);
  CHECK_FALSE(tight.pass);
  CHECK(tight.margins.at("max_relative_drift") == rep.margins.at("max_relative_drift"));

  SECTION("refuses the mass absorbing backend") {
    GridSpec g2 = make_grid(2, 10.0, 32);
    OperatorPlan riesz(g2, BackendTag::riesz);
    Field f = sample(g2, DatumSpec{"bump", {{"radius", 3.0}}});
    EvolutionConfig cfg{2.0, 0.25, 2, &riesz, 1e-8, 5000, 1};
    Trajectory tr = evolve(f, cfg);
    CHECK_THROWS_AS(check_mass(tr, 1e-6), std::invalid_argument);
  }
}

TEST_CASE("l1 contraction between paired runs") {
  Trajectory a = run(2.0, gaussian(1.0));

  SECTION("identical runs have zero difference at every time") {
    Trajectory b = run(2.0, gaussian(1.0));
    DiagnosticsReport rep = check_l1_contraction(a, b);
    CHECK(rep.pass);
    CHECK(std::fabs(rep.margins.at("min_margin")) <= rep.tolerance);
    CHECK(std::fabs(rep.margins.at("min_one_sided_margin")) <= rep.tolerance);
  }

  SECTION("separated data contract") {
    Trajectory b = run(2.0, gaussian(1.0, 2.5));
    DiagnosticsReport rep = check_l1_contraction(a, b);
    CHECK(rep.pass);
    CHECK(rep.margins.at("min_margin") >= -rep.tolerance);
  }

  SECTION("mismatched discretizations are rejected") {
    OperatorPlan other(line_grid(), BackendTag::spectral);
    EvolutionConfig cfg{2.0, 1.0, 16, &other, 1e-10, 5000, 1};
    Trajectory c = evolve(gaussian(1.0), cfg);
    CHECK_THROWS_AS(check_l1_contraction(a, c), std::invalid_argument);

    Trajectory d = run(2.0, gaussian(1.0), 16, 1.0, 2);  // different snapshot times
    CHECK_THROWS_AS(check_l1_contraction(a, d), std::invalid_argument);
  }
}

TEST_CASE("order preservation between ordered runs") {
  Trajectory lo = run(0.7, gaussian(1.0));
  Trajectory hi = run(0.7, gaussian(2.0));
  DiagnosticsReport rep = check_order_preservation(lo, hi);
  CHECK(rep.pass);
  CHECK(rep.margins.at("min_pointwise_margin") >= -rep.tolerance);

  Trajectory strided = run(0.7, gaussian(2.0), 16, 1.0, 4);
  CHECK_THROWS_AS(check_order_preservation(lo, strided), std::invalid_argument);
}

TEST_CASE("convex functional decay") {
  SECTION("constants are steady states, every functional is flat") {
    Field c = sample(line_grid(), DatumSpec{"constant", {{"value", 0.8}}});
    Trajectory traj = run(2.0, c, 8);
    DiagnosticsReport rep = check_lp_decay(traj, {1.0, 2.0, 3.0}, 1e-8);
    CHECK(rep.pass);
    for (const auto& [key, v] : rep.margins) CHECK(v <= 1e-8);
  }

  SECTION("gaussian datum decays across the catalogue") {
    Trajectory traj = run(2.0, gaussian());
    DiagnosticsReport rep = check_lp_decay(traj, {1.0, 2.0, 3.0, kInfinityNorm}, 1e-6);
    CHECK(rep.pass);
    CHECK(rep.margins.count("max_increase_p=1") == 1);
    CHECK(rep.margins.count("max_increase_sup") == 1);
    CHECK(rep.margins.count("max_increase_shifted_square") == 1);
    CHECK(rep.margins.count("max_increase_exp") == 1);
  }
}

TEST_CASE("pointwise retention for slow diffusion") {
  Trajectory traj = run(2.0, gaussian());
  DiagnosticsReport rep = check_retention(traj);
  CHECK(rep.pass);
  CHECK(rep.margins.at("min_pointwise_margin") >= -rep.tolerance);

  Trajectory fast = run(0.7, gaussian());
  CHECK_THROWS_AS(check_retention(fast), std::invalid_argument);
}

TEST_CASE("growth bound for fast diffusion") {
  Trajectory traj = run(0.7, gaussian());
  DiagnosticsReport rep = check_fast_diffusion_growth_bound(traj);
  CHECK(rep.pass);
  CHECK(rep.margins.at("min_pointwise_margin") >= -rep.tolerance);

  Trajectory slow = run(2.0, gaussian());
  CHECK_THROWS_AS(check_fast_diffusion_growth_bound(slow), std::invalid_argument);
}

TEST_CASE("time derivative bound") {
  for (double m : {2.0, 0.7}) {
    Trajectory traj = run(m, gaussian());
    DiagnosticsReport rep = check_time_derivative_bound(traj, 0.0);
    CHECK(rep.pass);
    // measured rates sit well inside the bound at this scale
    CHECK(rep.margins.at("max_ratio") < 0.5);
  }
  Trajectory linear = run(1.0, gaussian());
  CHECK_THROWS_AS(check_time_derivative_bound(linear, 0.0), std::invalid_argument);
}

TEST_CASE("smoothing exponent fit") {
  SECTION("exact linear evolution of the unit mass kernel") {
    GridSpec g = make_grid(1, 400.0, 8192);
    OperatorPlan op(g, BackendTag::spectral);
    Field f = sample(g, DatumSpec{"poisson-kernel", {{"s", 1.0}}});
    EvolutionConfig cfg{1.0, 1.0, 1, &op, 1e-10, 5000, 1};

    SmoothingFit fit = fit_smoothing_exponent(f, cfg, 10.0, 60.0);
    CHECK(fit.gamma_theory == Catch::Approx(1.0).epsilon(1e-15));
    // sup(t) = 1/(pi (1 + t)): the log-log slope approaches -1 from above
    CHECK(fit.fitted_slope < -0.9);
    CHECK(fit.fitted_slope > -1.0);
    CHECK(fit.r_squared > 0.999);
    CHECK_FALSE(fit.inconclusive);
    CHECK(fit.c_min <= fit.c_max);
    CHECK(fit.c_max < 1.0);

    // a window still inside the crossover fails a strict r^2 gate
    SmoothingFit rough = fit_smoothing_exponent(f, cfg, 3.0, 20.0, 0.9995);
    CHECK(rough.inconclusive);
  }

  SECTION("nonlinear path reports the theoretical rate alongside the fit") {
    EvolutionConfig cfg{2.0, 1.0, 16, &line_op(), 1e-10, 5000, 1};
    SmoothingFit fit = fit_smoothing_exponent(gaussian(), cfg, 0.25, 1.0);
    CHECK(fit.gamma_theory == Catch::Approx(0.5).epsilon(1e-15));
    CHECK(std::isfinite(fit.fitted_slope));
    CHECK(fit.fitted_slope < 0.0);

    CHECK_THROWS_AS(fit_smoothing_exponent(gaussian(), cfg, 0.9, 0.95), std::invalid_argument);
  }

  SECTION("window validation") {
    EvolutionConfig cfg{2.0, 1.0, 16, &line_op(), 1e-10, 5000, 1};
    CHECK_THROWS_AS(fit_smoothing_exponent(gaussian(), cfg, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(fit_smoothing_exponent(gaussian(), cfg, 0.5, 0.5), std::invalid_argument);
  }
}

TEST_CASE("extinction experiment") {
  GridSpec g = make_grid(2, 20.0, 48);
  OperatorPlan riesz(g, BackendTag::riesz);
  Field f = sample(g, DatumSpec{"bump", {{"radius", 4.0}, {"amp", 0.5}}});

  SECTION("vanishes in finite time below the critical exponent") {
    EvolutionConfig cfg{1.0 / 3.0, 2.0, 16, &riesz, 1e-8, 5000, 1};
    ExtinctionResult res = extinction_experiment(f, cfg, 5e-2);
    CHECK(res.extinct);
    CHECK(res.t_extinct <= 2.0);
    CHECK(res.final_sup < 5e-2);
    CHECK(res.j_strictly_decreasing);
    CHECK(res.bulk_max_ratio < 0.0);
    CHECK(res.decay_constant == -res.bulk_max_ratio);
    // the extrapolated vanishing time lands past the last recorded step
    CHECK(res.extrapolated_time > res.t_extinct - 2.0 / 16);
    CHECK(res.report.pass);
    CHECK(res.sup_series.size() == res.j_series.size());
  }

  SECTION("applicability guards") {
    EvolutionConfig above{2.0, 1.0, 8, &riesz, 1e-8, 5000, 1};
    CHECK_THROWS_AS(extinction_experiment(f, above, 1e-3), std::invalid_argument);

    OperatorPlan spectral(g, BackendTag::spectral);
    EvolutionConfig wrong_backend{1.0 / 3.0, 1.0, 8, &spectral, 1e-8, 5000, 1};
    CHECK_THROWS_AS(extinction_experiment(f, wrong_backend, 1e-3), std::invalid_argument);

    EvolutionConfig cfg1{0.0, 1.0, 8, &line_op(), 1e-8, 5000, 1};
    CHECK_THROWS_AS(extinction_experiment(gaussian(), cfg1, 1e-3), std::invalid_argument);
  }
}

TEST_CASE("instantaneous positivity from compact support") {
  Field bump = sample(line_grid(), DatumSpec{"bump", {{"radius", 3.0}}});
  // the datum itself vanishes outside the support
  double datum_min = 1e300;
  for (double v : bump.values) datum_min = std::min(datum_min, v);
  CHECK(datum_min == 0.0);

  Trajectory traj = run(1.0, bump, 8, 0.5);
  DiagnosticsReport rep = check_positivity(traj, 0.1);
  CHECK(rep.pass);
  CHECK(rep.margins.at("min_over_all_recorded_times") > 0.0);
  CHECK(rep.margins.at("min_at_first_recorded_time") >=
        rep.margins.at("min_over_all_recorded_times"));

  CHECK_THROWS_AS(check_positivity(traj, 2.0), std::invalid_argument);
}

TEST_CASE("continuous dependence on the exponent") {
  Field f = gaussian();

  SECTION("ladder approaching the target") {
    DiagnosticsReport rep = continuous_dependence_sweep(
        f, {0.95, 0.85, 0.78, 0.72}, 0.7, 0.1, line_op(), 5e-3);
    CHECK(rep.pass);
    CHECK(rep.margins.at("monotone_decreasing") == 1.0);
    CHECK(rep.margins.at("final_distance_relative") < 5e-3);
    CHECK(rep.margins.at("distance_0") > rep.margins.at("distance_3"));
  }

  SECTION("the target itself reproduces the reference") {
    DiagnosticsReport rep = continuous_dependence_sweep(f, {0.7}, 0.7, 0.1, line_op(), 1e-9);
    CHECK(rep.pass);
    CHECK(rep.margins.at("final_distance_relative") <= 1e-9);
  }

  SECTION("guards") {
    GridSpec g2 = make_grid(2, 10.0, 32);
    OperatorPlan op2(g2, BackendTag::spectral);
    Field f2 = sample(g2, DatumSpec{"gaussian", {}});
    // below the planar critical exponent 1/2
    CHECK_THROWS_AS(continuous_dependence_sweep(f2, {0.8, 0.4}, 0.7, 0.1, op2, 1e-3),
                    std::invalid_argument);
    CHECK_THROWS_AS(continuous_dependence_sweep(f2, {0.8}, 0.4, 0.1, op2, 1e-3),
                    std::invalid_argument);
    // ladder wandering away from the target
    CHECK_THROWS_AS(continuous_dependence_sweep(f, {0.8, 0.9}, 0.7, 0.1, line_op(), 1e-3),
                    std::invalid_argument);
  }
}

TEST_CASE("two point inequality and convolution identity") {
  DiagnosticsReport rep = appendix_checks({0.5, 2.0}, 2000, 42);
  CHECK(rep.pass);
  CHECK(rep.margins.at("convolution_identity_error") <= 1e-12);
  CHECK(rep.margins.at("min_ratio_m=0.5") >= rep.margins.at("guard_m=0.500000"));
  CHECK(rep.margins.at("min_ratio_m=2") >= rep.margins.at("guard_m=2.000000"));

  // the near-1 constant 4m/(m+1)^2 caps the guard
  CHECK(rep.margins.at("guard_m=0.500000") ==
        Catch::Approx(0.99 * 4.0 * 0.5 / 2.25).epsilon(1e-14));

  DiagnosticsReport again = appendix_checks({0.5, 2.0}, 2000, 42);
  CHECK(again.margins == rep.margins);

  DiagnosticsReport other_seed = appendix_checks({0.5, 2.0}, 2000, 7);
  CHECK(other_seed.pass);
  CHECK(other_seed.margins.at("convolution_identity_error") <= 1e-12);
}

TEST_CASE("energy inequality over a run") {
  for (double m : {2.0, 0.7}) {
    EvolutionConfig cfg{m, 0.5, 8, &line_op(), 1e-10, 5000, 1};
    DiagnosticsReport rep = check_energy_inequality(gaussian(), cfg);
    CHECK(rep.pass);
    CHECK(rep.margins.at("per_step_decrease") == 1.0);
    CHECK(rep.margins.at("cumulative_slack_rel") <= 1e-6);
  }
}

TEST_CASE("randomized contraction battery") {
  GridSpec g = make_grid(1, 10.0, 32);
  OperatorPlan op(g, BackendTag::spectral);
  BatteryResult res = contraction_battery(op, {0.7, 2.0}, 2, 0.05, 1e-10, 2024);
  CHECK(res.report.pass);
  CHECK(res.trials == 4);
  CHECK(res.min_contraction_margin >= -res.report.tolerance);
  CHECK(res.min_order_margin >= -res.report.tolerance);

  BatteryResult rerun = contraction_battery(op, {0.7, 2.0}, 2, 0.05, 1e-10, 2024);
  CHECK(rerun.min_contraction_margin == res.min_contraction_margin);
  CHECK(rerun.min_order_margin == res.min_order_margin);
}
