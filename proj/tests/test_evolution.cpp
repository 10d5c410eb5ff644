#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fpme/backend.hpp"
#include "fpme/evolution.hpp"

using namespace fpme;
using Catch::Approx;

namespace {

EvolutionConfig make_cfg(const OperatorPlan* op, double m, double T, int n_steps,
                         double tol = 1e-10) {
  EvolutionConfig cfg;
  cfg.m = m;
  cfg.T = T;
  cfg.n_steps = n_steps;
  cfg.op = op;
  cfg.tol = tol;
  return cfg;
}

}  // namespace

TEST_CASE("config validation") {
  GridSpec g = make_grid(1, 10.0, 32);
  OperatorPlan op(g, BackendTag::spectral);
  Field f = make_field(g, 1.0);

  CHECK_THROWS_AS(evolve(f, make_cfg(&op, -1.0, 1.0, 4)), std::invalid_argument);
  CHECK_THROWS_AS(evolve(f, make_cfg(&op, 2.0, 0.0, 4)), std::invalid_argument);
  CHECK_THROWS_AS(evolve(f, make_cfg(&op, 2.0, 1.0, 0)), std::invalid_argument);
  CHECK_THROWS_AS(evolve(f, make_cfg(nullptr, 2.0, 1.0, 4)), std::invalid_argument);
  EvolutionConfig bad_stride = make_cfg(&op, 2.0, 1.0, 4);
  bad_stride.snapshot_stride = 0;
  CHECK_THROWS_AS(evolve(f, bad_stride), std::invalid_argument);
  Field wrong = make_field(make_grid(1, 10.0, 64), 1.0);
  CHECK_THROWS_AS(evolve(wrong, make_cfg(&op, 2.0, 1.0, 4)), std::invalid_argument);
  CHECK(make_cfg(&op, 2.0, 1.0, 8).epsilon() == Approx(0.125));
}

TEST_CASE("constants are steady states") {
  GridSpec g = make_grid(1, 10.0, 64);
  OperatorPlan op(g, BackendTag::spectral);
  Field f = sample(g, DatumSpec{"constant", {{"value", 0.8}}});
  Trajectory traj = evolve(f, make_cfg(&op, 2.0, 1.0, 8));
  REQUIRE(traj.snapshots.size() == 9);
  for (const Field& u : traj.snapshots)
    for (double v : u.values) CHECK(v == Approx(0.8).epsilon(1e-9));
}

TEST_CASE("linear evolution matches the exact semigroup") {
  GridSpec g = make_grid(1, 20.0, 256);
  OperatorPlan op(g, BackendTag::spectral);
  SpectralPlan plan(g);
  Field f = sample(g, DatumSpec{"gaussian", {}});
  const double T = 1.0;

  SECTION("exact evolution basics") {
    Field at0 = evolve_linear_exact(f, 0.0, plan);
    for (std::size_t i = 0; i < f.values.size(); ++i)
      CHECK(at0.values[i] == f.values[i]);
    CHECK_THROWS_AS(evolve_linear_exact(f, -1.0, plan), std::invalid_argument);

    Field both = evolve_linear_exact(f, 0.9, plan);
    Field chained = evolve_linear_exact(evolve_linear_exact(f, 0.4, plan), 0.5, plan);
    for (std::size_t i = 0; i < f.values.size(); ++i)
      CHECK(both.values[i] == Approx(chained.values[i]).margin(1e-14));
  }
  SECTION("implicit stepping converges at first order") {
    Field exact = evolve_linear_exact(f, T, plan);
    auto final_err = [&](int ns) {
      Trajectory traj = evolve(f, make_cfg(&op, 1.0, T, ns));
      return lp_norm(traj.snapshots.back() - exact, 1.0);
    };
    const double e32 = final_err(32);
    const double e64 = final_err(64);
    CHECK(e32 / lp_norm(exact, 1.0) < 0.05);
    CHECK(e32 / e64 == Approx(2.0).epsilon(0.2));
  }
}

TEST_CASE("trajectory bookkeeping") {
  GridSpec g = make_grid(1, 10.0, 64);
  OperatorPlan op(g, BackendTag::spectral);
  Field f = sample(g, DatumSpec{"gaussian", {}});

  SECTION("snapshot stride records the subsequence, series records all") {
    EvolutionConfig cfg = make_cfg(&op, 2.0, 1.0, 8);
    cfg.snapshot_stride = 3;
    Trajectory traj = evolve(f, cfg);
    // t=0, then k=3, 6, and the forced final step 8
    REQUIRE(traj.times.size() == 4);
    CHECK(traj.times[1] == Approx(3.0 / 8.0));
    CHECK(traj.times[2] == Approx(6.0 / 8.0));
    CHECK(traj.times[3] == Approx(1.0));
    CHECK(traj.snapshots.size() == 4);
    CHECK(traj.series.size() == 9);
    CHECK(traj.reports.size() == 8);
    for (const SolveReport& r : traj.reports) CHECK(r.converged);
    for (std::size_t i = 0; i + 1 < traj.times.size(); ++i)
      CHECK(traj.times[i] < traj.times[i + 1]);
  }
  SECTION("series rows carry the norm catalogue") {
    Trajectory traj = evolve(f, make_cfg(&op, 2.0, 0.5, 4));
    const SeriesRow& r0 = traj.series.front();
    CHECK(r0.t == 0.0);
    CHECK(r0.mass == Approx(mass(f)));
    CHECK(r0.l1 == Approx(lp_norm(f, 1.0)));
    CHECK(r0.l2 == Approx(lp_norm(f, 2.0)));
    CHECK(r0.lmp1 == Approx(lp_norm(f, 3.0)));
    CHECK(r0.linf == Approx(sup_norm(f)));
  }
}

TEST_CASE("evolution invariants") {
  GridSpec g = make_grid(1, 10.0, 64);
  OperatorPlan op(g, BackendTag::spectral);
  Field f = sample(g, DatumSpec{"gaussian", {}});
  const double tol = 1e-10;

  for (double m : {0.7, 2.0}) {
    INFO("m=" << m);
    Trajectory traj = evolve(f, make_cfg(&op, m, 1.0, 16, tol));
    const double slack =
        slack_conversion(g) * tol * static_cast<double>(traj.series.size());
    for (const SeriesRow& row : traj.series) {
      CHECK(row.mass == Approx(traj.series.front().mass).margin(slack));
    }
    for (std::size_t i = 0; i + 1 < traj.series.size(); ++i) {
      CHECK(traj.series[i + 1].l1 <= traj.series[i].l1 + slack);
      CHECK(traj.series[i + 1].linf <= traj.series[i].linf + slack);
      CHECK(traj.series[i + 1].lmp1 <= traj.series[i].lmp1 + slack);
    }
  }

  SECTION("cumulative energy identity") {
    const double m = 2.0;
    EvolutionConfig cfg = make_cfg(&op, m, 1.0, 16, tol);
    Trajectory traj = evolve(f, cfg);
    // sum of eps * seminorm of W_k plus the final power norm stays below the
    // initial power norm, up to slack
    const double eps = cfg.epsilon();
    double dissipated = 0.0;
    for (const Field& u : traj.snapshots) {
      if (&u == &traj.snapshots.front()) continue;
      dissipated += eps * op.spectral().seminorm_sq(odd_power(u, m));
    }
    const double p = m + 1.0;
    const double before = std::pow(lp_norm(f, p), p) / p;
    const double after = std::pow(lp_norm(traj.snapshots.back(), p), p) / p;
    CHECK(dissipated + after <= before + 1e-6);
  }
}

TEST_CASE("a failed step aborts with the partial trajectory") {
  GridSpec g = make_grid(1, 10.0, 64);
  OperatorPlan op(g, BackendTag::spectral);
  Field f = sample(g, DatumSpec{"gaussian", {}});
  EvolutionConfig cfg = make_cfg(&op, 2.0, 1.0, 4, 1e-13);
  cfg.max_iter = 1;

  try {
    evolve(f, cfg);
    FAIL("expected StepFailed");
  } catch (const StepFailed& e) {
    CHECK(e.partial.failed);
    CHECK(e.partial.failed_step == 1);
    REQUIRE(e.partial.snapshots.size() == 1);
    CHECK(e.partial.reports.size() == 1);
    CHECK_FALSE(e.partial.reports.back().converged);
  }
}

TEST_CASE("refinement in the time step") {
  GridSpec g = make_grid(1, 20.0, 128);
  OperatorPlan op(g, BackendTag::spectral);
  Field f = sample(g, DatumSpec{"gaussian", {}});

  SECTION("step counts must nest") {
    EvolutionConfig cfg = make_cfg(&op, 1.0, 1.0, 4);
    CHECK_THROWS_AS(refine_in_epsilon(f, cfg, {8}), std::invalid_argument);
    CHECK_THROWS_AS(refine_in_epsilon(f, cfg, {8, 12}), std::invalid_argument);
    CHECK_THROWS_AS(refine_in_epsilon(f, cfg, {8, 4}), std::invalid_argument);
  }
  SECTION("linear case converges at first order against the exact solution") {
    ConvergenceTable table =
        refine_in_epsilon(f, make_cfg(&op, 1.0, 1.0, 4), {8, 16, 32, 64});
    CHECK(table.against_exact);
    REQUIRE(table.orders.size() == 3);
    for (double o : table.orders) CHECK((o > 0.8 && o < 1.2));
  }
  SECTION("nonlinear case is Cauchy in the step") {
    ConvergenceTable table =
        refine_in_epsilon(f, make_cfg(&op, 2.0, 1.0, 4), {8, 16, 32, 64});
    CHECK_FALSE(table.against_exact);
    REQUIRE(table.errors.size() == 3);
    for (std::size_t i = 0; i + 1 < table.errors.size(); ++i)
      CHECK(table.errors[i] / table.errors[i + 1] >= 1.5);
  }
  SECTION("constant datum gives vanishing differences") {
    Field c = sample(g, DatumSpec{"constant", {{"value", 1.0}}});
    ConvergenceTable table = refine_in_epsilon(c, make_cfg(&op, 2.0, 1.0, 4), {4, 8, 16});
    for (double e : table.errors) CHECK(e < 1e-8);
  }
}
