#pragma once

// Executable form of every quantitative estimate the construction satisfies:
// each check takes a trajectory (or runs its own solves), measures the margin
// by which the estimate holds, and reports pass/fail against an explicit
// slack. Inequalities hold for exact solutions; discretization converts them
// to inequalities-up-to-slack, and every slack here is an explicit function
// of the resolvent tolerance, the step count, and the grid measure.

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fpme/analytic.hpp"
#include "fpme/evolution.hpp"
#include "fpme/resolvent.hpp"
#include "fpme/rng.hpp"

namespace fpme {

struct DiagnosticsReport {
  std::string check;
  std::string inputs;
  std::map<std::string, double> margins;
  double tolerance = 0.0;
  bool pass = false;
  std::string notes;
};

namespace detail {

inline std::string trajectory_summary(const Trajectory& traj) {
  std::ostringstream os;
  os << "m=" << traj.config.m << " T=" << traj.config.T << " steps=" << traj.config.n_steps
     << " backend=" << backend_name(traj.config.op->tag());
  return os.str();
}

// conservative pointwise slack accumulated over a whole run
inline double run_slack(const Trajectory& traj) {
  return slack_conversion(traj.snapshots.front().grid) * traj.config.tol *
         static_cast<double>(traj.config.n_steps);
}

}  // namespace detail

// ---------------------------------------------------------------- mass

inline DiagnosticsReport check_mass(const Trajectory& traj, double tol) {
  if (traj.config.op->tag() == BackendTag::riesz)
    throw std::invalid_argument(
        "check_mass: the zero-exterior backend absorbs mass at the boundary by design; "
        "use a mass-conserving backend");
  DiagnosticsReport rep;
  rep.check = "mass-conservation";
  rep.inputs = detail::trajectory_summary(traj);
  rep.tolerance = tol;
  const double m0 = traj.series.front().mass;
  const double floor = std::max(std::fabs(m0), 1e-14);
  double worst = 0.0;
  for (const SeriesRow& row : traj.series)
    worst = std::max(worst, std::fabs(row.mass - m0) / floor);
  rep.margins["max_relative_drift"] = worst;
  rep.pass = worst <= tol;
  return rep;
}

// ---------------------------------------------------------------- contraction

// || (u1 - u2)(t) ||_1 nonincreasing in t, together with the one-sided
// positive-part version, across two runs sharing the discretization.
inline DiagnosticsReport check_l1_contraction(const Trajectory& a, const Trajectory& b) {
  if (!(a.config.m == b.config.m && a.config.T == b.config.T &&
        a.config.n_steps == b.config.n_steps && a.config.op == b.config.op))
    throw std::invalid_argument("check_l1_contraction: mismatched configurations");
  if (a.times != b.times)
    throw std::invalid_argument("check_l1_contraction: mismatched snapshot times");

  DiagnosticsReport rep;
  rep.check = "l1-contraction";
  rep.inputs = detail::trajectory_summary(a);
  const double slack = slack_conversion(a.snapshots.front().grid) *
                       (a.config.tol + b.config.tol) *
                       static_cast<double>(a.config.n_steps);
  rep.tolerance = slack;

  double worst_two_sided = 1e300, worst_one_sided = 1e300;
  for (std::size_t i = 0; i < a.times.size(); ++i) {
    for (std::size_t j = i + 1; j < a.times.size(); ++j) {
      const Field di = a.snapshots[i] - b.snapshots[i];
      const Field dj = a.snapshots[j] - b.snapshots[j];
      worst_two_sided = std::min(worst_two_sided, lp_norm(di, 1.0) - lp_norm(dj, 1.0));
      worst_one_sided = std::min(worst_one_sided, positive_part_l1(di) - positive_part_l1(dj));
    }
  }
  rep.margins["min_margin"] = worst_two_sided;
  rep.margins["min_one_sided_margin"] = worst_one_sided;
  rep.pass = worst_two_sided >= -slack && worst_one_sided >= -slack;
  return rep;
}

// pointwise order preservation between two ordered runs: f1 <= f2 pointwise
// implies u1 <= u2 pointwise up to slack
inline DiagnosticsReport check_order_preservation(const Trajectory& lo, const Trajectory& hi) {
  if (lo.times != hi.times)
    throw std::invalid_argument("check_order_preservation: mismatched snapshot times");
  DiagnosticsReport rep;
  rep.check = "order-preservation";
  rep.inputs = detail::trajectory_summary(lo);
  const double slack = detail::run_slack(lo) + detail::run_slack(hi);
  rep.tolerance = slack;
  double worst = 1e300;
  for (std::size_t i = 0; i < lo.times.size(); ++i) {
    const Field d = hi.snapshots[i] - lo.snapshots[i];
    for (double v : d.values) worst = std::min(worst, v);
  }
  rep.margins["min_pointwise_margin"] = worst;
  rep.pass = worst >= -slack;
  return rep;
}

// ---------------------------------------------------------------- decay

// every convex nonnegative Psi gives a nonincreasing integral; catalogue:
// |s|^p for the requested exponents, a shifted square, and e^{|s|} - 1
inline DiagnosticsReport check_lp_decay(const Trajectory& traj,
                                        const std::vector<double>& exponents, double tol) {
  DiagnosticsReport rep;
  rep.check = "convex-decay";
  rep.inputs = detail::trajectory_summary(traj);
  rep.tolerance = tol;
  rep.pass = true;

  const double meas = traj.snapshots.front().grid.cell_measure();
  const double shift = 0.5 * sup_norm(traj.snapshots.front());

  auto run = [&](const std::string& label, auto&& psi) {
    double prev = 0.0;
    double worst = 0.0;
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
      double s = 0.0;
      for (double v : traj.snapshots[k].values) s += psi(v);
      s *= meas;
      if (k > 0) worst = std::max(worst, s - prev);
      prev = s;
    }
    const double scale = std::max(1.0, std::fabs(prev));
    rep.margins[label] = worst / scale;
    if (worst / scale > tol) rep.pass = false;
  };

  for (double p : exponents) {
    std::ostringstream os;
    os << "max_increase_p=" << p;
    if (p == kInfinityNorm || std::isinf(p)) {
      double prev = 0.0, worst = 0.0;
      for (std::size_t k = 0; k < traj.series.size(); ++k) {
        const double s = traj.series[k].linf;
        if (k > 0) worst = std::max(worst, s - prev);
        prev = s;
      }
      rep.margins["max_increase_sup"] = worst / std::max(1.0, prev);
      if (worst / std::max(1.0, prev) > tol) rep.pass = false;
      continue;
    }
    run(os.str(), [p](double v) { return std::pow(std::fabs(v), p); });
  }
  run("max_increase_shifted_square",
      [shift](double v) { const double d = std::max(v - shift, 0.0); return d * d; });
  run("max_increase_exp", [](double v) { return std::expm1(std::fabs(v)); });
  return rep;
}

// ---------------------------------------------------------------- monotonicity

// pointwise lower bound u(t2) >= (t1/t2)^{1/(m-1)} u(t1) for m > 1, over all
// recorded pairs of positive times
inline DiagnosticsReport check_retention(const Trajectory& traj, double extra_slack = 0.0) {
  if (!(traj.config.m > 1.0))
    throw std::invalid_argument("check_retention: requires m > 1");
  DiagnosticsReport rep;
  rep.check = "retention";
  rep.inputs = detail::trajectory_summary(traj);
  const double slack = detail::run_slack(traj) + extra_slack;
  rep.tolerance = slack;
  const double expo = 1.0 / (traj.config.m - 1.0);
  double worst = 1e300;
  for (std::size_t i = 1; i < traj.times.size(); ++i) {
    for (std::size_t j = i + 1; j < traj.times.size(); ++j) {
      const double factor = std::pow(traj.times[i] / traj.times[j], expo);
      const Field& u1 = traj.snapshots[i];
      const Field& u2 = traj.snapshots[j];
      for (std::size_t idx = 0; idx < u1.values.size(); ++idx)
        worst = std::min(worst, u2.values[idx] - factor * u1.values[idx]);
    }
  }
  rep.margins["min_pointwise_margin"] = worst;
  rep.pass = worst >= -slack;
  return rep;
}

// the reversed bound in the singular range m < 1:
// u(t2) <= (t2/t1)^{1/(1-m)} u(t1), i.e. growth is at most the scaling rate
inline DiagnosticsReport check_fast_diffusion_growth_bound(const Trajectory& traj,
                                                           double extra_slack = 0.0) {
  if (!(traj.config.m < 1.0))
    throw std::invalid_argument("check_fast_diffusion_growth_bound: requires m < 1");
  DiagnosticsReport rep;
  rep.check = "fast-diffusion-growth-bound";
  rep.inputs = detail::trajectory_summary(traj);
  const double slack = detail::run_slack(traj) + extra_slack;
  rep.tolerance = slack;
  const double expo = 1.0 / (1.0 - traj.config.m);
  double worst = 1e300;
  for (std::size_t i = 1; i < traj.times.size(); ++i) {
    for (std::size_t j = i + 1; j < traj.times.size(); ++j) {
      const double factor = std::pow(traj.times[j] / traj.times[i], expo);
      const Field& u1 = traj.snapshots[i];
      const Field& u2 = traj.snapshots[j];
      for (std::size_t idx = 0; idx < u1.values.size(); ++idx)
        worst = std::min(worst, factor * u1.values[idx] - u2.values[idx]);
    }
  }
  rep.margins["min_pointwise_margin"] = worst;
  rep.pass = worst >= -slack;
  return rep;
}

// || u_{k+1} - u_k ||_1 / eps <= 2 ||f||_1 / (|m-1| t_k) * (1 + tol)
inline DiagnosticsReport check_time_derivative_bound(const Trajectory& traj, double tol) {
  if (traj.config.m == 1.0)
    throw std::invalid_argument("check_time_derivative_bound: requires m != 1");
  DiagnosticsReport rep;
  rep.check = "time-derivative-bound";
  rep.inputs = detail::trajectory_summary(traj);
  rep.tolerance = tol;
  const double f_l1 = traj.series.front().l1;
  const double c = 2.0 / std::fabs(traj.config.m - 1.0);
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < traj.times.size(); ++i) {
    const double t1 = traj.times[i], t2 = traj.times[i + 1];
    const double rate = lp_norm(traj.snapshots[i + 1] - traj.snapshots[i], 1.0) / (t2 - t1);
    const double bound = c * f_l1 / t1;
    worst = std::max(worst, rate / bound);
  }
  rep.margins["max_ratio"] = worst;
  rep.pass = worst <= 1.0 + tol;
  return rep;
}

// ---------------------------------------------------------------- smoothing

struct SmoothingFit {
  double m = 0.0;
  int dim = 0;
  double gamma_theory = 0.0;  // (m - 1 + 1/N)^{-1}, always computed, never stored elsewhere
  double fitted_slope = 0.0;
  double window_lo = 0.0, window_hi = 0.0;
  double r_squared = 0.0;
  double c_min = 0.0, c_max = 0.0;  // sup * t^gamma / ||f||_1^{gamma/N} over the window
  bool inconclusive = false;        // decay regime not reached (low r^2)
};

inline SmoothingFit fit_smoothing_exponent(const Field& f, const EvolutionConfig& cfg,
                                           double window_lo, double window_hi,
                                           double r2_threshold = 0.99) {
  if (!(window_lo > 0.0 && window_hi > window_lo))
    throw std::invalid_argument("smoothing fit: bad window");
  const int dim = f.grid.dim;
  SmoothingFit fit;
  fit.m = cfg.m;
  fit.dim = dim;
  fit.gamma_theory = 1.0 / (cfg.m - 1.0 + 1.0 / dim);
  fit.window_lo = window_lo;
  fit.window_hi = window_hi;

  std::vector<double> ts, sups;
  if (cfg.m == 1.0) {
    // exact evolution sampled geometrically across the window
    const SpectralPlan& plan = cfg.op->spectral();
    const int count = 25;
    for (int i = 0; i < count; ++i) {
      const double t =
          window_lo * std::pow(window_hi / window_lo, static_cast<double>(i) / (count - 1));
      ts.push_back(t);
      sups.push_back(sup_norm(evolve_linear_exact(f, t, plan)));
    }
  } else {
    Trajectory traj = evolve(f, cfg);
    for (const SeriesRow& row : traj.series)
      if (row.t >= window_lo && row.t <= window_hi) {
        ts.push_back(row.t);
        sups.push_back(row.linf);
      }
    if (ts.size() < 8) throw std::invalid_argument("smoothing fit: window outside trajectory");
  }

  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  const double n = static_cast<double>(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double x = std::log(ts[i]), y = std::log(sups[i]);
    sx += x; sy += y; sxx += x * x; sxy += x * y; syy += y * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double y = std::log(sups[i]);
    const double e = y - (slope * std::log(ts[i]) + intercept);
    ss_res += e * e;
    ss_tot += (y - sy / n) * (y - sy / n);
  }
  fit.fitted_slope = slope;
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  fit.inconclusive = fit.r_squared < r2_threshold;

  const double f_l1 = lp_norm(f, 1.0);
  const double scale = std::pow(f_l1, fit.gamma_theory / dim);
  fit.c_min = 1e300;
  fit.c_max = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double c = sups[i] * std::pow(ts[i], fit.gamma_theory) / scale;
    fit.c_min = std::min(fit.c_min, c);
    fit.c_max = std::max(fit.c_max, c);
  }
  return fit;
}

// ---------------------------------------------------------------- extinction

struct ExtinctionResult {
  bool extinct = false;      // sup dropped below the threshold within the horizon
  double t_extinct = 0.0;
  double final_sup = 0.0;
  bool j_strictly_decreasing = false;
  double decay_constant = 0.0;   // C with J' + C J^{(N-1)/N} <= 0 over the bulk
  double bulk_max_ratio = 0.0;   // max over the bulk of J'/J^{(N-1)/N} (want < 0)
  double extrapolated_time = 0.0;
  std::vector<double> sup_series;
  std::vector<double> j_series;
  DiagnosticsReport report;
};

// Run the evolution below the critical exponent and measure the decay of
// J(t) = int u^{pm+1} with p = (N(1-m)-1)/m. The zero-exterior backend is
// required: extinction is driven by mass escaping to infinity, which the
// periodic surrogate cannot represent.
inline ExtinctionResult extinction_experiment(const Field& f, const EvolutionConfig& cfg,
                                              double sup_threshold = 1e-3) {
  const int dim = f.grid.dim;
  if (dim != 2) throw std::invalid_argument("extinction experiment: dim must be 2");
  if (!(cfg.m < critical_exponent(dim)))
    throw std::invalid_argument("extinction experiment: requires m below the critical exponent");
  if (cfg.op->tag() != BackendTag::riesz)
    throw std::invalid_argument("extinction experiment: requires the zero-exterior backend");
  cfg.validate();

  const double m = cfg.m;
  const double p = (dim * (1.0 - m) - 1.0) / m;
  const double jexp = p * m + 1.0;
  const double meas = f.grid.cell_measure();
  const double eps = cfg.epsilon();

  auto jval = [&](const Field& u) {
    double s = 0.0;
    for (double v : u.values) s += std::pow(std::max(v, 0.0), jexp);
    return meas * s;
  };

  ExtinctionResult res;
  res.j_series.push_back(jval(f));
  res.sup_series.push_back(sup_norm(f));

  Field u = f;
  const Field* warm = nullptr;
  Field warm_store = make_field(f.grid);
  std::vector<double> times{0.0};
  for (int k = 1; k <= cfg.n_steps; ++k) {
    ResolventProblem prob{eps, m, u, cfg.op, cfg.tol, cfg.max_iter};
    ResolventSolution sol = solve_resolvent(prob, warm);
    if (!sol.report.converged) throw std::runtime_error("extinction experiment: step failed");
    u = sol.u;
    warm_store = sol.W;
    warm = &warm_store;
    times.push_back(k * eps);
    res.j_series.push_back(jval(u));
    res.sup_series.push_back(sup_norm(u));
    if (res.sup_series.back() < sup_threshold) {
      res.extinct = true;
      res.t_extinct = k * eps;
      break;
    }
  }
  res.final_sup = res.sup_series.back();

  res.j_strictly_decreasing = true;
  for (std::size_t k = 0; k + 1 < res.j_series.size(); ++k)
    if (!(res.j_series[k + 1] < res.j_series[k])) res.j_strictly_decreasing = false;

  const double jpow = (dim - 1.0) / dim;
  std::vector<double> ratios;
  for (std::size_t k = 0; k + 1 < res.j_series.size(); ++k)
    ratios.push_back((res.j_series[k + 1] - res.j_series[k]) /
                     (eps * std::pow(res.j_series[k], jpow)));
  const std::size_t bulk = ratios.size() > 1 ? static_cast<std::size_t>(0.8 * ratios.size())
                                             : ratios.size();
  double worst = -1e300;
  for (std::size_t k = 0; k < bulk; ++k) worst = std::max(worst, ratios[k]);
  res.bulk_max_ratio = worst;
  res.decay_constant = -worst;

  // extrapolate the vanishing time from the tail of z = sup^{1-m}, which the
  // separable solution makes exactly linear in t
  const std::size_t count = std::min<std::size_t>(8, res.sup_series.size());
  const std::size_t off = res.sup_series.size() - count;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = off; k < res.sup_series.size(); ++k) {
    const double x = times[k];
    const double y = std::pow(res.sup_series[k], 1.0 - m);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  const double nn = static_cast<double>(count);
  const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / nn;
  res.extrapolated_time = slope < 0.0 ? -intercept / slope : 0.0;

  DiagnosticsReport rep;
  rep.check = "finite-time-extinction";
  std::ostringstream os;
  os << "m=" << m << " steps=" << cfg.n_steps << " horizon=" << cfg.T;
  rep.inputs = os.str();
  rep.margins["final_sup"] = res.final_sup;
  rep.margins["bulk_max_ratio"] = res.bulk_max_ratio;
  rep.margins["decay_constant"] = res.decay_constant;
  rep.margins["extrapolated_time"] = res.extrapolated_time;
  rep.tolerance = sup_threshold;
  rep.pass = res.extinct && res.j_strictly_decreasing && res.bulk_max_ratio < 0.0;
  res.report = rep;
  return res;
}

// ---------------------------------------------------------------- positivity

inline DiagnosticsReport check_positivity(const Trajectory& traj, double t_min) {
  DiagnosticsReport rep;
  rep.check = "instantaneous-positivity";
  rep.inputs = detail::trajectory_summary(traj);
  rep.tolerance = 0.0;
  double global_min = 1e300;
  double first_min = 0.0;
  bool seen = false;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    if (traj.times[i] <= 0.0 || traj.times[i] < t_min) continue;
    double mn = 1e300;
    for (double v : traj.snapshots[i].values) mn = std::min(mn, v);
    if (!seen) {
      first_min = mn;
      seen = true;
    }
    std::ostringstream key;
    key << "min_at_t=" << traj.times[i];
    rep.margins[key.str()] = mn;
    global_min = std::min(global_min, mn);
  }
  if (!seen) throw std::invalid_argument("check_positivity: no recorded time >= t_min");
  rep.margins["min_at_first_recorded_time"] = first_min;
  rep.margins["min_over_all_recorded_times"] = global_min;
  rep.pass = global_min > 0.0;
  return rep;
}

// ---------------------------------------------------------------- dependence on m

inline DiagnosticsReport continuous_dependence_sweep(const Field& g,
                                                     const std::vector<double>& m_ladder,
                                                     double m_bar, double eps,
                                                     const OperatorPlan& op,
                                                     double final_tol_rel = 1e-3) {
  const double mstar = critical_exponent(g.grid.dim);
  for (double m : m_ladder)
    if (!(m > mstar))
      throw std::invalid_argument("continuous dependence: ladder entry at or below critical");
  if (!(m_bar > mstar))
    throw std::invalid_argument("continuous dependence: target below critical");
  for (std::size_t i = 0; i + 1 < m_ladder.size(); ++i)
    if (!(std::fabs(m_ladder[i + 1] - m_bar) < std::fabs(m_ladder[i] - m_bar)))
      throw std::invalid_argument("continuous dependence: ladder must approach the target");

  DiagnosticsReport rep;
  rep.check = "continuous-dependence-in-m";
  std::ostringstream os;
  os << "m_bar=" << m_bar << " eps=" << eps << " ladder_size=" << m_ladder.size();
  rep.inputs = os.str();
  rep.tolerance = final_tol_rel;

  ResolventProblem base{eps, m_bar, g, &op, 1e-11, 5000};
  ResolventSolution ref = solve_resolvent(base);

  std::vector<double> dists;
  for (double m : m_ladder) {
    ResolventProblem prob{eps, m, g, &op, 1e-11, 5000};
    ResolventSolution sol = solve_resolvent(prob);
    dists.push_back(lp_norm(sol.u - ref.u, 1.0));
  }
  bool decreasing = true;
  for (std::size_t i = 0; i + 1 < dists.size(); ++i)
    if (!(dists[i + 1] < dists[i])) decreasing = false;
  const double final_rel = dists.back() / lp_norm(g, 1.0);
  rep.margins["monotone_decreasing"] = decreasing ? 1.0 : 0.0;
  rep.margins["final_distance_relative"] = final_rel;
  for (std::size_t i = 0; i < dists.size(); ++i)
    rep.margins["distance_" + std::to_string(i)] = dists[i];
  rep.pass = decreasing && final_rel <= final_tol_rel;
  return rep;
}

// ---------------------------------------------------------------- calculus lemmas

// (a) two-point inequality (x^m - 1)(x - 1) >= c (x^{(m+1)/2} - 1)^2 with the
//     near-1 constant c = 4m/(m+1)^2; the guard 0.99 reflects that the
//     constant is proved positive with that endpoint limit, not claimed as
//     the global minimum. The "+" variant replaces every -1 by +1.
// (b) discrete convolution identity sum (h * eta * eta) g = sum (h * eta)(g * eta)
//     for a symmetric kernel eta, checked with direct O(n^2) sums.
inline DiagnosticsReport appendix_checks(const std::vector<double>& m_values,
                                         std::size_t sample_count, std::uint64_t seed) {
  DiagnosticsReport rep;
  rep.check = "two-point-inequality-and-convolution-identity";
  std::ostringstream os;
  os << "samples=" << sample_count << " seed=" << seed;
  rep.inputs = os.str();
  rep.tolerance = 0.0;
  rep.pass = true;

  for (double m : m_values) {
    const double guard = 0.99 * std::min(1.0, 4.0 * m / ((m + 1.0) * (m + 1.0)));
    double worst = 1e300, worst_plus = 1e300;
    const double lo = std::log(1.0 + 1e-9), hi = std::log(1e6);
    for (std::size_t i = 0; i < sample_count; ++i) {
      const double lx = lo + (hi - lo) * static_cast<double>(i) /
                                 static_cast<double>(sample_count - 1);
      const double F = std::expm1(m * lx) * std::expm1(lx);
      const double G = std::expm1(0.5 * (m + 1.0) * lx);
      worst = std::min(worst, F / (G * G));
      const double Fp = (std::exp(m * lx) + 1.0) * (std::exp(lx) + 1.0);
      const double Gp = std::exp(0.5 * (m + 1.0) * lx) + 1.0;
      worst_plus = std::min(worst_plus, Fp / (Gp * Gp));
    }
    std::ostringstream key;
    key << "min_ratio_m=" << m;
    rep.margins[key.str()] = worst;
    rep.margins["guard_m=" + std::to_string(m)] = guard;
    if (worst < guard || worst_plus < guard) rep.pass = false;
  }

  // discrete convolution identity, independent of the FFT machinery
  const std::size_t n = 64;
  SplitMix64 rng(seed);
  std::vector<double> g(n), h(n), eta(n, 0.0);
  for (double& v : g) v = rng.uniform(-1.0, 1.0);
  for (double& v : h) v = rng.uniform(-1.0, 1.0);
  // symmetric triangle kernel
  eta[0] = 3.0 / 9.0;
  eta[1] = eta[n - 1] = 2.0 / 9.0;
  eta[2] = eta[n - 2] = 1.0 / 9.0;
  auto conv = [n](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out[i] += a[j] * b[(i + n - j) % n];
    return out;
  };
  const std::vector<double> he = conv(h, eta);
  const std::vector<double> ge = conv(g, eta);
  const std::vector<double> hee = conv(he, eta);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lhs += hee[i] * g[i];
    rhs += he[i] * ge[i];
  }
  const double identity_err = std::fabs(lhs - rhs) / std::max(1.0, std::fabs(rhs));
  rep.margins["convolution_identity_error"] = identity_err;
  if (identity_err > 1e-12) rep.pass = false;
  return rep;
}

// ---------------------------------------------------------------- energy

// per-step L^{m+1} decrease plus the cumulative inequality
//   sum_k eps <W_k, Lambda W_k> + ||u_n||_{m+1}^{m+1}/(m+1)
//     <= ||f||_{m+1}^{m+1}/(m+1) + slack
inline DiagnosticsReport check_energy_inequality(const Field& f, const EvolutionConfig& cfg,
                                                 double rel_slack = 1e-6) {
  cfg.validate();
  DiagnosticsReport rep;
  rep.check = "energy-inequality";
  std::ostringstream os;
  os << "m=" << cfg.m << " steps=" << cfg.n_steps << " backend=" << backend_name(cfg.op->tag());
  rep.inputs = os.str();
  rep.tolerance = rel_slack;

  const double eps = cfg.epsilon();
  const double mp1 = cfg.m + 1.0;
  Field u = f;
  const Field* warm = nullptr;
  Field warm_store = make_field(f.grid);
  double dissipation = 0.0;
  bool per_step_ok = true;
  for (int k = 1; k <= cfg.n_steps; ++k) {
    ResolventProblem prob{eps, cfg.m, u, cfg.op, cfg.tol, cfg.max_iter};
    ResolventSolution sol = solve_resolvent(prob, warm);
    if (!sol.report.converged) throw std::runtime_error("energy check: step failed");
    dissipation += eps * cfg.op->energy_form(sol.W);
    if (lp_norm(sol.u, mp1) > lp_norm(u, mp1) * (1.0 + 1e-12) + 1e-300) per_step_ok = false;
    u = sol.u;
    warm_store = sol.W;
    warm = &warm_store;
  }
  const double initial = std::pow(lp_norm(f, mp1), mp1) / mp1;
  const double final_term = std::pow(lp_norm(u, mp1), mp1) / mp1;
  const double lhs = dissipation + final_term;
  const double slack_rel = (lhs - initial) / std::fabs(initial);
  rep.margins["per_step_decrease"] = per_step_ok ? 1.0 : 0.0;
  rep.margins["cumulative_slack_rel"] = slack_rel;
  rep.pass = per_step_ok && slack_rel <= rel_slack;
  return rep;
}

// ---------------------------------------------------------------- batteries

struct BatteryResult {
  double min_contraction_margin = 1e300;
  double min_order_margin = 1e300;
  int trials = 0;
  DiagnosticsReport report;
};

// randomized single-step contraction and order-preservation battery
inline BatteryResult contraction_battery(const OperatorPlan& op,
                                         const std::vector<double>& m_values, int trials,
                                         double eps, double tol, std::uint64_t seed) {
  SplitMix64 rng(seed);
  const GridSpec& g = op.grid();
  BatteryResult res;
  const double slack = slack_conversion(g) * 2.0 * tol;
  for (double m : m_values) {
    for (int trial = 0; trial < trials; ++trial) {
      Field g1 = random_field(g, rng);
      Field g2 = random_field(g, rng);
      ResolventProblem p1{eps, m, g1, &op, tol, 5000};
      ResolventProblem p2{eps, m, g2, &op, tol, 5000};
      ResolventSolution s1 = solve_resolvent(p1);
      ResolventSolution s2 = solve_resolvent(p2);
      const double margin =
          positive_part_l1(g1 - g2) - positive_part_l1(s1.u - s2.u);
      res.min_contraction_margin = std::min(res.min_contraction_margin, margin);

      Field g3 = g1;
      for (double& v : g3.values) v += rng.uniform(0.0, 1.0);
      ResolventProblem p3{eps, m, g3, &op, tol, 5000};
      ResolventSolution s3 = solve_resolvent(p3);
      double order = 1e300;
      for (std::size_t i = 0; i < g1.values.size(); ++i)
        order = std::min(order, s3.u.values[i] - s1.u.values[i]);
      res.min_order_margin = std::min(res.min_order_margin, order);
      ++res.trials;
    }
  }
  DiagnosticsReport rep;
  rep.check = "contraction-battery";
  std::ostringstream os;
  os << "trials=" << res.trials << " eps=" << eps << " seed=" << seed;
  rep.inputs = os.str();
  rep.tolerance = slack;
  rep.margins["min_contraction_margin"] = res.min_contraction_margin;
  rep.margins["min_order_margin"] = res.min_order_margin;
  rep.pass = res.min_contraction_margin >= -slack && res.min_order_margin >= -slack;
  res.report = rep;
  return res;
}

}  // namespace fpme
