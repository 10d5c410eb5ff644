#pragma once

// Implicit time discretization: chain resolvent steps u_k + eps*Lambda(u_k^m)
// = u_{k-1} with uniform eps = T / n_steps, recording per-step diagnostics
// series every step and field snapshots at a configured stride. Each solve is
// warm-started from the previous step's W. A step that fails to converge
// aborts the run (invariant checks must never see unconverged states).
// The exact m = 1 evolution e^{-t |xi|} is provided for cross-validation.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "fpme/resolvent.hpp"

namespace fpme {

struct EvolutionConfig {
  double m = 2.0;
  double T = 1.0;               // horizon
  int n_steps = 64;             // eps = T / n_steps
  const OperatorPlan* op = nullptr;
  double tol = 1e-9;
  int max_iter = 5000;
  int snapshot_stride = 1;      // record u every this many steps

  double epsilon() const { return T / n_steps; }
  void validate() const {
    if (!(m > 0.0)) throw std::invalid_argument("evolve: m must be positive");
    if (!(T > 0.0)) throw std::invalid_argument("evolve: T must be positive");
    if (n_steps <= 0) throw std::invalid_argument("evolve: n_steps must be positive");
    if (snapshot_stride <= 0) throw std::invalid_argument("evolve: stride must be positive");
    if (op == nullptr) throw std::invalid_argument("evolve: missing operator");
  }
};

struct SeriesRow {
  double t, mass, l1, l2, lmp1, linf;
};

struct Trajectory {
  EvolutionConfig config;
  std::vector<double> times;      // recorded snapshot times, starting at 0
  std::vector<Field> snapshots;   // snapshots[0] is the initial datum
  std::vector<SolveReport> reports;  // one per step, in step order
  std::vector<SeriesRow> series;     // every step, including t = 0
  bool failed = false;
  int failed_step = 0;
};

struct StepFailed : std::runtime_error {
  Trajectory partial;
  explicit StepFailed(int k, Trajectory traj)
      : std::runtime_error("evolve: step " + std::to_string(k) + " did not converge"),
        partial(std::move(traj)) {}
};

inline SeriesRow measure_series(double t, const Field& u, double m) {
  return SeriesRow{t,       mass(u),           lp_norm(u, 1.0), lp_norm(u, 2.0),
                   lp_norm(u, m + 1.0), sup_norm(u)};
}

inline Trajectory evolve(const Field& f, const EvolutionConfig& cfg) {
  cfg.validate();
  if (!(cfg.op->grid() == f.grid)) throw std::invalid_argument("evolve: grid mismatch");
  if (!all_finite(f)) throw std::invalid_argument("evolve: datum not finite");

  Trajectory traj;
  traj.config = cfg;
  traj.times.push_back(0.0);
  traj.snapshots.push_back(f);
  traj.series.push_back(measure_series(0.0, f, cfg.m));

  const double eps = cfg.epsilon();
  Field u = f;
  const Field* warm = nullptr;
  Field warm_store = make_field(f.grid);
  for (int k = 1; k <= cfg.n_steps; ++k) {
    ResolventProblem prob{eps, cfg.m, u, cfg.op, cfg.tol, cfg.max_iter};
    ResolventSolution sol = solve_resolvent(prob, warm);
    traj.reports.push_back(sol.report);
    if (!sol.report.converged) {
      traj.failed = true;
      traj.failed_step = k;
      throw StepFailed(k, std::move(traj));
    }
    u = sol.u;
    warm_store = sol.W;
    warm = &warm_store;
    const double t = static_cast<double>(k) * eps;
    traj.series.push_back(measure_series(t, u, cfg.m));
    if (k % cfg.snapshot_stride == 0 || k == cfg.n_steps) {
      traj.times.push_back(t);
      traj.snapshots.push_back(u);
    }
  }
  return traj;
}

// exact m = 1 evolution on the periodic surrogate (the same machinery as the
// harmonic extension, with height t)
inline Field evolve_linear_exact(const Field& f, double t, const SpectralPlan& plan) {
  if (t < 0.0) throw std::invalid_argument("evolve_linear_exact: t must be nonnegative");
  if (t == 0.0) return f;
  return plan.poisson_extend(f, t);
}

struct ConvergenceTable {
  std::vector<int> step_counts;
  std::vector<double> errors;   // vs exact (m = 1) or successive differences
  std::vector<double> orders;   // log2 ratio of successive errors
  bool against_exact = false;
};

// Run the evolution at each step count and report the final-time L1 error
// ladder: against the exact solution for m = 1, successive Cauchy differences
// otherwise. Step counts must be strictly increasing, each dividing the next.
inline ConvergenceTable refine_in_epsilon(const Field& f, const EvolutionConfig& base,
                                          const std::vector<int>& step_counts) {
  if (step_counts.size() < 2)
    throw std::invalid_argument("refine_in_epsilon: need at least two step counts");
  for (std::size_t i = 0; i + 1 < step_counts.size(); ++i) {
    if (!(step_counts[i] < step_counts[i + 1]) || step_counts[i + 1] % step_counts[i] != 0)
      throw std::invalid_argument(
          "refine_in_epsilon: step counts must increase and divide the next");
  }
  ConvergenceTable table;
  table.step_counts = step_counts;
  table.against_exact = base.m == 1.0;

  std::vector<Field> finals;
  for (int ns : step_counts) {
    EvolutionConfig cfg = base;
    cfg.n_steps = ns;
    cfg.snapshot_stride = ns;  // only the final snapshot is needed
    Trajectory traj = evolve(f, cfg);
    finals.push_back(traj.snapshots.back());
  }
  if (table.against_exact) {
    const Field exact = evolve_linear_exact(f, base.T, base.op->spectral());
    for (const Field& u : finals) table.errors.push_back(lp_norm(u - exact, 1.0));
  } else {
    for (std::size_t i = 0; i + 1 < finals.size(); ++i)
      table.errors.push_back(lp_norm(finals[i] - finals[i + 1], 1.0));
  }
  for (std::size_t i = 0; i + 1 < table.errors.size(); ++i) {
    const double num = table.errors[i], den = table.errors[i + 1];
    table.orders.push_back(den > 0.0 ? std::log2(num / den) : 0.0);
  }
  return table;
}

}  // namespace fpme
