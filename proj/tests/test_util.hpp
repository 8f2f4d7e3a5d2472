#pragma once

#include <cmath>
#include <random>

#include "hpmflow/scalar_field.hpp"
#include "hpmflow/time_poly_field.hpp"

namespace testutil {

inline hpmflow::ScalarField random_field(std::size_t w, std::size_t h,
                                         double spacing, std::uint64_t seed,
                                         double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  hpmflow::ScalarField f(w, h, spacing);
  for (double& v : f.values()) v = dist(rng);
  return f;
}

inline hpmflow::TimePolyField random_poly(std::size_t w, std::size_t h,
                                          double spacing, std::size_t order,
                                          std::uint64_t seed, double lo = -1.0,
                                          double hi = 1.0) {
  std::vector<hpmflow::ScalarField> coeffs;
  for (std::size_t k = 0; k <= order; ++k)
    coeffs.push_back(random_field(w, h, spacing, seed + 1000 * (k + 1), lo, hi));
  return hpmflow::TimePolyField(std::move(coeffs));
}

inline bool bitwise_equal(const hpmflow::ScalarField& a,
                          const hpmflow::ScalarField& b) {
  if (a.width() != b.width() || a.height() != b.height()) return false;
  for (std::size_t p = 0; p < a.size(); ++p)
    if (a.values()[p] != b.values()[p]) return false;
  return true;
}

inline double max_abs_diff(const hpmflow::ScalarField& a,
                           const hpmflow::ScalarField& b) {
  double m = 0.0;
  for (std::size_t p = 0; p < a.size(); ++p)
    m = std::max(m, std::fabs(a.values()[p] - b.values()[p]));
  return m;
}

inline double max_rel_diff(const hpmflow::ScalarField& a,
                           const hpmflow::ScalarField& b) {
  double m = 0.0;
  for (std::size_t p = 0; p < a.size(); ++p) {
    const double denom =
        std::max({std::fabs(a.values()[p]), std::fabs(b.values()[p]), 1e-300});
    m = std::max(m, std::fabs(a.values()[p] - b.values()[p]) / denom);
  }
  return m;
}

}  // namespace testutil
