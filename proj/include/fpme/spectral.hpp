#pragma once

// Fourier-multiplier realization of the half laplacian on the periodic
// surrogate of R^N: the symbol is |xi| with xi_k = (pi/L) * k over the
// symmetric integer frequency range, so cos(k pi x / L) are exact
// eigenfunctions with eigenvalue k pi / L. The same machinery provides the
// harmonic-extension semigroup e^{-y |xi|} (equal to the exact m=1 evolution
// with y = t), the H^{1/2} energy form, and exact solves of diagonal
// problems (a*Lambda + b*I) W = rhs used by the implicit-step solvers.

#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "fpme/fft.hpp"
#include "fpme/grid.hpp"

namespace fpme {

class SpectralPlan {
 public:
  explicit SpectralPlan(const GridSpec& g)
      : grid_(g),
        ft_(std::make_shared<RealTransform>(g.dim, g.points_per_dim,
                                            g.dim == 2 ? g.points_per_dim : 0)) {
    const double pi = 3.14159265358979323846;
    const double base = pi / g.half_width;
    const std::size_t n = g.points_per_dim;
    multiplier_.resize(ft_->complex_size());
    if (g.dim == 1) {
      for (std::size_t k = 0; k <= n / 2; ++k) multiplier_[k] = base * static_cast<double>(k);
    } else {
      const std::size_t pc = ft_->packed_cols();
      for (std::size_t a = 0; a < n; ++a) {
        // signed frequency index along the unpacked axis
        const double ka = a <= n / 2 ? static_cast<double>(a)
                                     : static_cast<double>(a) - static_cast<double>(n);
        for (std::size_t b = 0; b < pc; ++b) {
          const double kb = static_cast<double>(b);
          multiplier_[a * pc + b] = base * std::hypot(ka, kb);
        }
      }
    }
    scratch_.resize(ft_->complex_size());
  }

  const GridSpec& grid() const { return grid_; }
  const std::vector<double>& multiplier() const { return multiplier_; }

  // out = ifft( m_k * fft(u) ) for an arbitrary packed multiplier array
  Field apply_multiplier(const Field& u, const std::vector<double>& m) const {
    require_grid(u);
    if (m.size() != multiplier_.size())
      throw std::invalid_argument("spectral: multiplier size mismatch");
    Field out = make_field(grid_);
    ft_->forward(u.values.data(), scratch_.data());
    for (std::size_t k = 0; k < scratch_.size(); ++k) scratch_[k] *= m[k];
    ft_->backward(scratch_.data(), out.values.data());
    return out;
  }

  // out = ifft( f(multiplier_k) * fft(u) ); f must map 0 to a finite value
  Field apply_symbol(const Field& u, const std::function<double(double)>& f) const {
    require_grid(u);
    Field out = make_field(grid_);
    ft_->forward(u.values.data(), scratch_.data());
    for (std::size_t k = 0; k < scratch_.size(); ++k) scratch_[k] *= f(multiplier_[k]);
    ft_->backward(scratch_.data(), out.values.data());
    return out;
  }

  // half laplacian: symbol |xi|
  Field apply(const Field& u) const {
    return apply_symbol(u, [](double s) { return s; });
  }

  // harmonic extension to height y > 0: symbol e^{-y |xi|}
  Field poisson_extend(const Field& u, double y) const {
    if (!(y > 0.0)) throw std::invalid_argument("poisson_extend: y must be positive");
    return apply_symbol(u, [y](double s) { return std::exp(-y * s); });
  }

  // exact solve of (a*Lambda + b*I) out = rhs, b > 0, a >= 0
  Field diagonal_resolve(const Field& rhs, double a, double b) const {
    return apply_symbol(rhs, [a, b](double s) { return 1.0 / (a * s + b); });
  }

  // <w, Lambda w> under the discrete inner product h^dim * sum
  double seminorm_sq(const Field& w) const {
    require_grid(w);
    ft_->forward(w.values.data(), scratch_.data());
    const std::size_t n = grid_.points_per_dim;
    const std::size_t pc = ft_->packed_cols();
    double s = 0.0;
    for (std::size_t i = 0; i < scratch_.size(); ++i) {
      // packed r2c layout stores only half the conjugate-symmetric modes;
      // interior columns stand for two modes
      const std::size_t col = grid_.dim == 1 ? i : i % pc;
      const double weight = (col == 0 || col == n / 2) ? 1.0 : 2.0;
      s += weight * multiplier_[i] * std::norm(scratch_[i]);
    }
    return grid_.cell_measure() * s / static_cast<double>(grid_.size());
  }

 private:
  void require_grid(const Field& u) const {
    if (!(u.grid == grid_)) throw std::invalid_argument("spectral: grid mismatch");
  }

  GridSpec grid_;
  std::shared_ptr<RealTransform> ft_;
  std::vector<double> multiplier_;
  mutable std::vector<std::complex<double>> scratch_;
};

inline Field half_laplacian_spectral(const Field& u, const SpectralPlan& plan) {
  return plan.apply(u);
}

inline Field poisson_extend(const Field& u, double y, const SpectralPlan& plan) {
  return plan.poisson_extend(u, y);
}

inline double h_half_seminorm_sq(const Field& w, const SpectralPlan& plan) {
  return plan.seminorm_sq(w);
}

// One-sided difference estimate of the Dirichlet-to-Neumann derivative
// -d/dy E(u)(x,0), extrapolated to y=0 over the given levels (Neville over
// the nodes y_i applied per Fourier mode). Converges to the half laplacian.
inline Field dtn_finite_difference(const Field& u, const std::vector<double>& y_levels,
                                   const SpectralPlan& plan) {
  if (y_levels.empty()) throw std::invalid_argument("dtn: y_levels must be nonempty");
  for (std::size_t i = 0; i < y_levels.size(); ++i) {
    if (!(y_levels[i] >= 1e-6)) throw std::invalid_argument("dtn: levels must be >= 1e-6");
    if (i > 0 && !(y_levels[i] > y_levels[i - 1]))
      throw std::invalid_argument("dtn: levels must be strictly increasing");
  }
  return plan.apply_symbol(u, [&y_levels](double s) {
    std::vector<double> tab(y_levels.size());
    for (std::size_t i = 0; i < tab.size(); ++i)
      tab[i] = (1.0 - std::exp(-y_levels[i] * s)) / y_levels[i];
    for (std::size_t j = 1; j < tab.size(); ++j)
      for (std::size_t i = 0; i + j < tab.size(); ++i)
        tab[i] = (y_levels[i + j] * tab[i] - y_levels[i] * tab[i + 1]) /
                 (y_levels[i + j] - y_levels[i]);
    return tab[0];
  });
}

// Diagonal plan for the extrapolated Dirichlet-to-Neumann multiplier, usable
// wherever a fixed symbol is needed (resolvent solves with the dtn backend).
class DtnPlan {
 public:
  DtnPlan(const GridSpec& g, std::vector<double> y_levels)
      : base_(g), levels_(std::move(y_levels)) {
    // validate via the same path as the one-shot form
    Field probe = make_field(g);
    dtn_finite_difference(probe, levels_, base_);
    multiplier_.resize(base_.multiplier().size());
    for (std::size_t k = 0; k < multiplier_.size(); ++k) {
      const double s = base_.multiplier()[k];
      std::vector<double> tab(levels_.size());
      for (std::size_t i = 0; i < tab.size(); ++i)
        tab[i] = (1.0 - std::exp(-levels_[i] * s)) / levels_[i];
      for (std::size_t j = 1; j < tab.size(); ++j)
        for (std::size_t i = 0; i + j < tab.size(); ++i)
          tab[i] = (levels_[i + j] * tab[i] - levels_[i] * tab[i + 1]) /
                   (levels_[i + j] - levels_[i]);
      multiplier_[k] = tab[0];
    }
  }

  const GridSpec& grid() const { return base_.grid(); }
  const SpectralPlan& base() const { return base_; }
  const std::vector<double>& levels() const { return levels_; }
  const std::vector<double>& multiplier() const { return multiplier_; }

  Field apply(const Field& u) const { return base_.apply_multiplier(u, multiplier_); }

  Field diagonal_resolve(const Field& rhs, double a, double b) const {
    std::vector<double> inv(multiplier_.size());
    for (std::size_t k = 0; k < inv.size(); ++k) inv[k] = 1.0 / (a * multiplier_[k] + b);
    return base_.apply_multiplier(rhs, inv);
  }

 private:
  SpectralPlan base_;
  std::vector<double> levels_;
  std::vector<double> multiplier_;
};

}  // namespace fpme
