#pragma once

// Discrete fields on a truncated box [-L,L)^dim, dim in {1,2}, with the
// uniform lattice x_i = -L + i*h, h = 2L/n. All quadrature is the rectangle
// rule h^dim * sum, which is spectrally accurate for periodic data and keeps
// the discrete identities used by the diagnostics exact.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace fpme {

struct GridSpec {
  int dim = 1;                     // 1 or 2
  double half_width = 0.0;         // L > 0; the box is [-L,L)^dim
  std::size_t points_per_dim = 0;  // n, even

  double spacing() const { return 2.0 * half_width / static_cast<double>(points_per_dim); }
  std::size_t size() const { return dim == 1 ? points_per_dim : points_per_dim * points_per_dim; }
  double cell_measure() const {
    const double h = spacing();
    return dim == 1 ? h : h * h;
  }
  // lattice coordinate along one axis
  double coord(std::size_t i) const { return -half_width + spacing() * static_cast<double>(i); }

  bool operator==(const GridSpec&) const = default;
};

inline GridSpec make_grid(int dim, double half_width, std::size_t points_per_dim) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("grid: dim must be 1 or 2");
  if (!(half_width > 0.0)) throw std::invalid_argument("grid: half_width must be positive");
  if (points_per_dim == 0 || points_per_dim % 2 != 0)
    throw std::invalid_argument("grid: points_per_dim must be positive and even");
  return GridSpec{dim, half_width, points_per_dim};
}

struct Field {
  GridSpec grid;
  std::vector<double> values;  // row-major: index = i*n + j in 2d
};

inline Field make_field(const GridSpec& g, double fill = 0.0) {
  return Field{g, std::vector<double>(g.size(), fill)};
}

inline void require_same_grid(const Field& a, const Field& b) {
  if (!(a.grid == b.grid)) throw std::invalid_argument("field: grid mismatch");
}

inline bool all_finite(const Field& u) {
  return std::all_of(u.values.begin(), u.values.end(),
                     [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------- reductions

inline double mass(const Field& u) {
  double s = 0.0;
  for (double v : u.values) s += v;
  return u.grid.cell_measure() * s;
}

inline double positive_part_l1(const Field& u) {
  double s = 0.0;
  for (double v : u.values) s += std::max(v, 0.0);
  return u.grid.cell_measure() * s;
}

constexpr double kInfinityNorm = -1.0;  // marker accepted by lp_norm

inline double lp_norm(const Field& u, double p) {
  if (p == kInfinityNorm || std::isinf(p)) {
    double m = 0.0;
    for (double v : u.values) m = std::max(m, std::fabs(v));
    return m;
  }
  if (p < 1.0) throw std::invalid_argument("lp_norm: p must be >= 1 or the infinity marker");
  double s = 0.0;
  for (double v : u.values) s += std::pow(std::fabs(v), p);
  return std::pow(u.grid.cell_measure() * s, 1.0 / p);
}

inline double sup_norm(const Field& u) { return lp_norm(u, kInfinityNorm); }

// discrete inner product h^dim * sum(a*b)
inline double inner(const Field& a, const Field& b) {
  require_same_grid(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
  return a.grid.cell_measure() * s;
}

// ---------------------------------------------------------------- pointwise

inline double odd_power_value(double v, double p) {
  if (v == 0.0) return 0.0;
  return v > 0.0 ? std::pow(v, p) : -std::pow(-v, p);
}

struct OddPowerSpec {
  double exponent;  // > 0; applied as sign(v)*|v|^p
};

inline Field odd_power(const Field& u, const OddPowerSpec& p) {
  if (!(p.exponent > 0.0)) throw std::invalid_argument("odd_power: exponent must be positive");
  Field out = u;
  for (double& v : out.values) v = odd_power_value(v, p.exponent);
  return out;
}

inline Field odd_power(const Field& u, double exponent) { return odd_power(u, OddPowerSpec{exponent}); }

// out = a*u + b*v
inline Field axpby(double a, const Field& u, double b, const Field& v) {
  require_same_grid(u, v);
  Field out = make_field(u.grid);
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = a * u.values[i] + b * v.values[i];
  return out;
}

inline Field operator-(const Field& u, const Field& v) { return axpby(1.0, u, -1.0, v); }
inline Field operator+(const Field& u, const Field& v) { return axpby(1.0, u, 1.0, v); }
inline Field operator*(double a, const Field& u) {
  Field out = u;
  for (double& v : out.values) v *= a;
  return out;
}

// ---------------------------------------------------------------- catalogue

// Analytic datum catalogue. Radially symmetric forms use r = |x|.
//   constant:          c
//   cosine-mode:       cos(k*pi*x/L)  (product of axis modes in 2d)
//   gaussian:          amp * exp(-|x-c|^2 / (2 sigma^2))
//   bump:              amp * exp(1 - 1/(1-(r/radius)^2)) inside r < radius, else 0
//   indicator:         amp on r <= radius, else 0
//   poisson-kernel:    C_N * s / (s^2 + r^2)^((N+1)/2), C_1 = 1/pi, C_2 = 1/(2 pi)
//   separable-profile: amp * (tau^2 + r^2)^(-(N+1)/2)
struct DatumSpec {
  std::string name;
  std::map<std::string, double> params;

  double get(const std::string& key, double fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }
  double require(const std::string& key) const {
    auto it = params.find(key);
    if (it == params.end())
      throw std::invalid_argument("datum '" + name + "': missing parameter '" + key + "'");
    return it->second;
  }
};

inline double riesz_normalization(int dim) {
  // C_N = Gamma((N+1)/2) / pi^((N+1)/2); closed forms 1/pi and 1/(2 pi)
  const double pi = 3.14159265358979323846;
  return dim == 1 ? 1.0 / pi : 1.0 / (2.0 * pi);
}

inline Field sample(const GridSpec& g, const DatumSpec& d) {
  const double pi = 3.14159265358979323846;
  Field out = make_field(g);
  const std::size_t n = g.points_per_dim;

  auto positive = [&](const char* key, double v) {
    if (!(v > 0.0))
      throw std::invalid_argument("datum '" + d.name + "': parameter '" + key + "' must be positive");
    return v;
  };

  auto for_each_point = [&](auto&& f) {
    if (g.dim == 1) {
      for (std::size_t i = 0; i < n; ++i) out.values[i] = f(g.coord(i), 0.0);
    } else {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          out.values[i * n + j] = f(g.coord(i), g.coord(j));
    }
  };

  if (d.name == "constant") {
    const double c = d.get("value", 0.0);
    for_each_point([&](double, double) { return c; });
  } else if (d.name == "cosine-mode") {
    const double k = d.get("k", 1.0);
    if (k != std::floor(k) || k < 0.0)
      throw std::invalid_argument("datum 'cosine-mode': k must be a nonnegative integer");
    const double w = k * pi / g.half_width;
    if (g.dim == 1) {
      for_each_point([&](double x, double) { return std::cos(w * x); });
    } else {
      for_each_point([&](double x, double y) { return std::cos(w * x) * std::cos(w * y); });
    }
  } else if (d.name == "gaussian") {
    const double s = positive("sigma", d.get("sigma", 1.0));
    const double amp = d.get("amp", 1.0);
    const double cx = d.get("center_x", 0.0), cy = d.get("center_y", 0.0);
    for_each_point([&](double x, double y) {
      const double r2 = (x - cx) * (x - cx) + (g.dim == 2 ? (y - cy) * (y - cy) : 0.0);
      return amp * std::exp(-r2 / (2.0 * s * s));
    });
  } else if (d.name == "bump") {
    const double R = positive("radius", d.get("radius", 1.0));
    const double amp = d.get("amp", 1.0);
    for_each_point([&](double x, double y) {
      const double s2 = (x * x + (g.dim == 2 ? y * y : 0.0)) / (R * R);
      return s2 < 1.0 ? amp * std::exp(1.0 - 1.0 / (1.0 - s2)) : 0.0;
    });
  } else if (d.name == "indicator") {
    const double R = positive("radius", d.get("radius", 1.0));
    const double amp = d.get("amp", 1.0);
    for_each_point([&](double x, double y) {
      const double r2 = x * x + (g.dim == 2 ? y * y : 0.0);
      return r2 <= R * R ? amp : 0.0;
    });
  } else if (d.name == "poisson-kernel") {
    const double s = positive("s", d.get("s", 1.0));
    const double c = riesz_normalization(g.dim);
    const double expo = 0.5 * (g.dim + 1);
    for_each_point([&](double x, double y) {
      const double r2 = x * x + (g.dim == 2 ? y * y : 0.0);
      return c * s / std::pow(s * s + r2, expo);
    });
  } else if (d.name == "separable-profile") {
    const double tau = positive("tau", d.get("tau", 1.0));
    const double amp = d.get("amp", 1.0);
    const double expo = 0.5 * (g.dim + 1);
    for_each_point([&](double x, double y) {
      const double r2 = x * x + (g.dim == 2 ? y * y : 0.0);
      return amp * std::pow(tau * tau + r2, -expo);
    });
  } else {
    throw std::invalid_argument("unknown datum descriptor '" + d.name + "'");
  }
  return out;
}

}  // namespace fpme
