#pragma once

// Operator cross-validation battery: every closed-form identity and
// cross-backend agreement the three realizations are expected to satisfy,
// evaluated on a configurable grid (plus two fixed-grid closed-form oracles).
// Deliberately small grids are expected to fail the agreement entries; that
// is the point of making the grid configurable.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fpme/analytic.hpp"
#include "fpme/backend.hpp"
#include "fpme/grid.hpp"
#include "fpme/rng.hpp"

namespace fpme {

struct SelftestEntry {
  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  bool pass = false;
};

namespace detail {

inline double rel_sup_window(const Field& got, const Field& want, double window_half_width) {
  double err = 0.0, ref = 0.0;
  const std::size_t n = got.grid.points_per_dim;
  for (std::size_t i = 0; i < got.values.size(); ++i) {
    const double x = got.grid.coord(got.grid.dim == 1 ? i : i / n);
    const double y = got.grid.dim == 1 ? 0.0 : got.grid.coord(i % n);
    if (std::fabs(x) > window_half_width || std::fabs(y) > window_half_width) continue;
    err = std::max(err, std::fabs(got.values[i] - want.values[i]));
    ref = std::max(ref, std::fabs(want.values[i]));
  }
  return err / ref;
}

}  // namespace detail

inline std::vector<SelftestEntry> operator_selftest(const GridSpec& g, std::uint64_t seed) {
  const double pi = 3.14159265358979323846;
  std::vector<SelftestEntry> out;
  auto push = [&](const std::string& name, double measured, double bound, bool pass) {
    out.push_back(SelftestEntry{name, measured, bound, pass});
  };

  OperatorPlan spectral(g, BackendTag::spectral);
  OperatorPlan riesz(g, BackendTag::riesz);
  OperatorPlan dtn(g, BackendTag::dtn);
  SplitMix64 rng(seed);
  const double mode_scale = g.dim == 1 ? 1.0 : std::sqrt(2.0);

  // eigenfunctions of the multiplier, up to the aliasing limit
  {
    double worst = 0.0;
    const int kmax = std::min<int>(8, static_cast<int>(g.points_per_dim) / 2 - 1);
    for (int k = 1; k <= kmax; ++k) {
      Field u = sample(g, DatumSpec{"cosine-mode", {{"k", static_cast<double>(k)}}});
      const double lambda = mode_scale * k * pi / g.half_width;
      Field got = spectral.apply(u);
      double err = 0.0;
      for (std::size_t i = 0; i < u.values.size(); ++i)
        err = std::max(err, std::fabs(got.values[i] - lambda * u.values[i]));
      worst = std::max(worst, err / lambda);
    }
    push("spectral-eigenfunctions", worst, 1e-12, worst <= 1e-12);
  }

  const Field gaussian = sample(g, DatumSpec{"gaussian", {{"sigma", 1.0}}});
  const Field ones = sample(g, DatumSpec{"constant", {{"value", 1.0}}});

  {
    const double v = sup_norm(spectral.apply(ones));
    push("spectral-constant-annihilated", v, 1e-12, v <= 1e-12);
  }
  {
    const double v = std::fabs(mass(spectral.apply(gaussian)));
    push("spectral-zero-mean-output", v, 1e-12, v <= 1e-12);
  }
  {
    Field u = random_field(g, rng), v = random_field(g, rng);
    const double a = inner(u, spectral.apply(v));
    const double b = inner(spectral.apply(u), v);
    const double rel = std::fabs(a - b) / std::max(std::fabs(a), 1e-300);
    push("spectral-symmetry", rel, 1e-10, rel <= 1e-10);
    const double form = inner(u, spectral.apply(u));
    push("spectral-form-nonnegative", form, 0.0, form >= -1e-12);
    const double sem = spectral.spectral().seminorm_sq(u);
    const double rel2 = std::fabs(sem - form) / std::max(sem, 1e-300);
    push("seminorm-matches-form", rel2, 1e-10, rel2 <= 1e-10);
  }
  {
    Field w = sample(g, DatumSpec{"cosine-mode", {{"k", 1.0}}});
    const double sem = spectral.spectral().seminorm_sq(w);
    const double want = mode_scale * (pi / g.half_width) * lp_norm(w, 2.0) * lp_norm(w, 2.0);
    const double rel = std::fabs(sem - want) / want;
    push("seminorm-single-mode", rel, 1e-12, rel <= 1e-12);
  }

  // the zero-exterior realization keeps only the truncation tail on constants
  {
    Field t = riesz.apply(ones);
    double mn = 1e300;
    for (double v : t.values) mn = std::min(mn, v);
    push("riesz-constant-tail-positive", mn, 0.0, mn > 0.0);
    const std::size_t center = g.dim == 1 ? g.points_per_dim / 2
                                          : (g.points_per_dim / 2) * g.points_per_dim +
                                                g.points_per_dim / 2;
    const double ratio = t.values[center] / t.values[0];
    push("riesz-constant-tail-decays-inward", ratio, 1.0, ratio < 1.0);
  }

  {
    const Field a = spectral.apply(gaussian);
    const Field b = riesz.apply(gaussian);
    const double rel = detail::rel_sup_window(b, a, g.half_width / 2.0);
    push("riesz-vs-spectral-gaussian", rel, 0.02, rel <= 0.02);
    const Field c = dtn.apply(gaussian);
    const double rel2 = detail::rel_sup_window(c, a, g.half_width);
    push("dtn-vs-spectral-gaussian", rel2, 0.005, rel2 <= 0.005);
  }

  {
    const int k = std::min<int>(3, static_cast<int>(g.points_per_dim) / 2 - 1);
    Field u = sample(g, DatumSpec{"cosine-mode", {{"k", static_cast<double>(k)}}});
    Field got = dtn.apply(u);
    const double lambda = mode_scale * k * pi / g.half_width;
    double err = 0.0;
    for (std::size_t i = 0; i < u.values.size(); ++i)
      err = std::max(err, std::fabs(got.values[i] - lambda * u.values[i]));
    push("dtn-mode", err / lambda, 0.005, err / lambda <= 0.005);
  }
  {
    // halving the evaluation heights halves the extrapolation error
    OperatorOptions fine_opt;
    fine_opt.dtn_levels = {2.5e-4, 5e-4};
    OperatorPlan dtn_fine(g, BackendTag::dtn, fine_opt);
    const Field a = spectral.apply(gaussian);
    const double e_coarse = detail::rel_sup_window(dtn.apply(gaussian), a, g.half_width);
    const double e_fine = detail::rel_sup_window(dtn_fine.apply(gaussian), a, g.half_width);
    const double ratio = e_fine / std::max(e_coarse, 1e-300);
    push("dtn-level-halving-improves", ratio, 1.0, ratio < 1.0);
  }

  {
    Field c = spectral.spectral().poisson_extend(ones, 0.7);
    double err = 0.0;
    for (double v : c.values) err = std::max(err, std::fabs(v - 1.0));
    push("extension-preserves-constant", err, 1e-12, err <= 1e-12);

    Field u = sample(g, DatumSpec{"cosine-mode", {{"k", 1.0}}});
    Field got = spectral.spectral().poisson_extend(u, 0.7);
    const double decay = std::exp(-0.7 * mode_scale * pi / g.half_width);
    double err2 = 0.0;
    for (std::size_t i = 0; i < u.values.size(); ++i)
      err2 = std::max(err2, std::fabs(got.values[i] - decay * u.values[i]));
    push("extension-mode-decay", err2 / decay, 1e-12, err2 / decay <= 1e-12);

    Field two = spectral.spectral().poisson_extend(
        spectral.spectral().poisson_extend(gaussian, 0.3), 0.4);
    Field one = spectral.spectral().poisson_extend(gaussian, 0.7);
    const double rel = sup_norm(two - one) / sup_norm(one);
    push("extension-semigroup", rel, 1e-12, rel <= 1e-12);

    Field p = sample(g, DatumSpec{"poisson-kernel", {{"s", 1.0}}});
    Field shifted = spectral.spectral().poisson_extend(p, 0.5);
    Field want = sample(g, DatumSpec{"poisson-kernel", {{"s", 1.5}}});
    const double rel2 = sup_norm(shifted - want) / sup_norm(want);
    push("extension-shifts-kernel-parameter", rel2, 0.01, rel2 <= 0.01);
  }

  // fixed-grid closed-form oracles (independent of the configured grid)
  {
    const GridSpec g1 = make_grid(1, 40.0, 2048);
    RieszPlan plan(g1);
    Field p = sample(g1, DatumSpec{"poisson-kernel", {{"s", 1.0}}});
    Field got = plan.apply(p);
    Field want = poisson_kernel_half_laplacian_1d(g1, 1.0);
    const double rel = detail::rel_sup_window(got, want, 10.0);
    push("riesz-poisson-kernel-closed-form", rel, 0.02, rel <= 0.02);
  }
  {
    const GridSpec coarse = make_grid(1, 20.0, 512);
    const GridSpec fine = make_grid(1, 20.0, 4096);
    SpectralPlan sp(coarse);
    RieszPlan rp(fine);
    Field fc = sample(coarse, DatumSpec{"gaussian", {{"sigma", 1.0}}});
    Field ff = sample(fine, DatumSpec{"gaussian", {{"sigma", 1.0}}});
    Field a = sp.apply(fc);
    Field b = rp.apply(ff);
    const std::size_t stride = fine.points_per_dim / coarse.points_per_dim;
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < coarse.points_per_dim; ++i) {
      if (std::fabs(coarse.coord(i)) > 10.0) continue;
      err = std::max(err, std::fabs(a.values[i] - b.values[i * stride]));
      ref = std::max(ref, std::fabs(a.values[i]));
    }
    push("spectral-vs-highres-riesz-quadrature", err / ref, 0.01, err / ref <= 0.01);
  }
  {
    // normalization closed forms against the gamma-function definition
    const double c1 = std::tgamma(1.0) / std::pow(pi, 1.0);
    const double c2 = std::tgamma(1.5) / std::pow(pi, 1.5);
    const double r1 = std::fabs(riesz_normalization(1) - c1) / c1;
    const double r2 = std::fabs(riesz_normalization(2) - c2) / c2;
    const double worst = std::max(r1, r2);
    push("riesz-normalization-gamma-identity", worst, 1e-14, worst <= 1e-14);
  }

  return out;
}

inline bool selftest_all_pass(const std::vector<SelftestEntry>& entries) {
  for (const SelftestEntry& e : entries)
    if (!e.pass) return false;
  return true;
}

}  // namespace fpme
