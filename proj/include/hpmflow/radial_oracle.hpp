#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <string>

#include "hpmflow/errors.hpp"
#include "hpmflow/image_io.hpp"
#include "hpmflow/scalar_field.hpp"

namespace hpmflow {

struct Rational {
  long long num;
  long long den;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

// Coefficients of the radial shrinking-cone series
//   u(r, t) = (r - 1) + sum_{k>=1} c_k t^k / r^(2k-1),
// i.e. c_k = binom(1/2, k) * 2^k, the Maclaurin coefficients of
// sqrt(r^2 + 2t) - 1 in t.
inline const std::array<Rational, 10>& radial_series_table() {
  static const std::array<Rational, 10> table = {{
      {1, 1},        // k = 0 multiplies the r term of the cone
      {1, 1},        // t / r
      {-1, 2},       // -t^2 / (2 r^3)
      {1, 2},        // t^3 / (2 r^5)
      {-5, 8},       // -5 t^4 / (8 r^7)
      {7, 8},        // 7 t^5 / (8 r^9)
      {-21, 16},     // ...
      {33, 16},
      {-429, 128},
      {715, 128},
  }};
  return table;
}

inline Rational series_coefficient(std::size_t k) {
  if (k > 9)
    throw contract_violation("series_coefficient: k must lie in [0, 9], got " +
                             std::to_string(k));
  return radial_series_table()[k];
}

// Closed-form solution of the curvature flow started from the cone
// sqrt(x^2+y^2) - 1. Valid where x^2 + y^2 + 2t > 0.
inline double exact_solution(double x, double y, double t) {
  return std::sqrt(x * x + y * y + 2.0 * t) - 1.0;
}

// Single term c_k t^k / r^(2k-1) of the ten-term sum (the k = 0 term is
// r - 1). Exposed so divergence outside the trust region can be examined.
inline double radial_series_term(std::size_t k, double x, double y, double t) {
  const double r2 = x * x + y * y;
  if (!(r2 > 0.0))
    throw contract_violation("radial_series_term: needs x^2 + y^2 > 0");
  const double r = std::sqrt(r2);
  if (k == 0) return r - 1.0;
  const double c = series_coefficient(k).value();
  return c * std::pow(t / r2, static_cast<double>(k)) * r;
}

// The ten-term partial sum evaluated literally. Outside 2t < r^2 the terms
// grow; no guard is applied, so divergence can be studied directly.
inline double ten_term_approx(double x, double y, double t) {
  const double r2 = x * x + y * y;
  if (!(r2 > 0.0))
    throw contract_violation("ten_term_approx: needs x^2 + y^2 > 0");
  const double r = std::sqrt(r2);
  const double s = t / r2;
  const auto& c = radial_series_table();
  double acc = c[9].value();
  for (std::size_t k = 9; k-- > 0;) acc = acc * s + c[k].value();
  return r * acc - 1.0;
}

// Square evaluation window with the half-pixel offset built in:
// x_i = cx + (i - n/2 + 0.5) * spacing. The offset keeps r = 0 off the grid
// for origin-centered windows; arbitrary centers are validated below.
struct SurfaceGridSpec {
  std::size_t n = 65;
  double spacing = 0.5;
  double cx = 0.0;
  double cy = 0.0;

  double coord_x(std::size_t i) const {
    return cx + (static_cast<double>(i) - static_cast<double>(n / 2) + 0.5) * spacing;
  }
  double coord_y(std::size_t j) const {
    return cy + (static_cast<double>(j) - static_cast<double>(n / 2) + 0.5) * spacing;
  }
};

namespace detail {

inline void require_origin_free(const SurfaceGridSpec& g, const char* who) {
  for (std::size_t j = 0; j < g.n; ++j)
    for (std::size_t i = 0; i < g.n; ++i) {
      const double x = g.coord_x(i);
      const double y = g.coord_y(j);
      if (x * x + y * y == 0.0)
        throw contract_violation(std::string(who) +
                                 ": grid places a pixel at the origin");
    }
}

}  // namespace detail

// The kink of the cone must fall between pixel centers: every consumer of
// this surface divides by r somewhere.
inline ScalarField sample_initial_cone(const SurfaceGridSpec& g) {
  detail::require_origin_free(g, "sample_initial_cone");
  ScalarField f(g.n, g.n, g.spacing);
  for (std::size_t j = 0; j < g.n; ++j) {
    const double y = g.coord_y(j);
    for (std::size_t i = 0; i < g.n; ++i) {
      const double x = g.coord_x(i);
      f.at(i, j) = std::sqrt(x * x + y * y) - 1.0;
    }
  }
  return f;
}

namespace detail {

inline void write_xyz_csv(const ScalarField& f, const SurfaceGridSpec& g,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open " + path + " for writing");
  out.precision(17);
  out << "x,y,value\n";
  for (std::size_t j = 0; j < g.n; ++j)
    for (std::size_t i = 0; i < g.n; ++i)
      out << g.coord_x(i) << ',' << g.coord_y(j) << ',' << f.at(i, j) << '\n';
  if (!out) throw io_error("write failed for " + path);
}

// Min-max normalized 8-bit heatmap plus a sidecar recording the range.
inline void write_heatmap(const ScalarField& f, const std::string& stem) {
  const double lo = f.min_value();
  const double hi = f.max_value();
  Image img;
  img.width = f.width();
  img.height = f.height();
  img.intensities.resize(f.size());
  const double scale = (hi > lo) ? 1.0 / (hi - lo) : 0.0;
  for (std::size_t p = 0; p < f.size(); ++p)
    img.intensities[p] = (f.values()[p] - lo) * scale;
  save_image(img, stem + ".pgm");
  std::ofstream side(stem + "_range.txt");
  if (!side) throw io_error("cannot open " + stem + "_range.txt for writing");
  side.precision(17);
  side << lo << ' ' << hi << '\n';
  if (!side) throw io_error("write failed for " + stem + "_range.txt");
}

}  // namespace detail

// Evaluates the ten-term sum on the window and writes <stem>.csv (x,y,value
// rows), <stem>.pgm (min-max normalized heatmap), and <stem>_range.txt.
inline ScalarField emit_surface(double t, const SurfaceGridSpec& g,
                                const std::string& stem) {
  detail::require_origin_free(g, "emit_surface");
  ScalarField f(g.n, g.n, g.spacing);
  for (std::size_t j = 0; j < g.n; ++j) {
    const double y = g.coord_y(j);
    for (std::size_t i = 0; i < g.n; ++i)
      f.at(i, j) = ten_term_approx(g.coord_x(i), y, t);
  }
  detail::write_xyz_csv(f, g, stem + ".csv");
  detail::write_heatmap(f, stem);
  return f;
}

}  // namespace hpmflow
