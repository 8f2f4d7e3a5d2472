#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "hpmflow/errors.hpp"
#include "hpmflow/parallel.hpp"
#include "hpmflow/scalar_field.hpp"

namespace hpmflow {

// Truncated power series in t with ScalarField coefficients: coeffs[k]
// multiplies t^k. All coefficients share one shape.
class TimePolyField {
 public:
  explicit TimePolyField(std::vector<ScalarField> coeffs)
      : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty())
      throw dimension_mismatch("TimePolyField needs at least one coefficient");
    for (std::size_t k = 1; k < coeffs_.size(); ++k)
      coeffs_[0].require_same_shape(coeffs_[k], "TimePolyField");
  }

  static TimePolyField constant(ScalarField f) {
    std::vector<ScalarField> c;
    c.push_back(std::move(f));
    return TimePolyField(std::move(c));
  }

  static TimePolyField zeros(std::size_t order, std::size_t width,
                             std::size_t height, double spacing) {
    std::vector<ScalarField> c(order + 1,
                               ScalarField(width, height, spacing, 0.0));
    return TimePolyField(std::move(c));
  }

  std::size_t order() const { return coeffs_.size() - 1; }
  std::size_t width() const { return coeffs_[0].width(); }
  std::size_t height() const { return coeffs_[0].height(); }
  double spacing() const { return coeffs_[0].spacing(); }

  const ScalarField& coeff(std::size_t k) const { return coeffs_.at(k); }
  ScalarField& coeff(std::size_t k) { return coeffs_.at(k); }

  void append(ScalarField f) {
    coeffs_[0].require_same_shape(f, "TimePolyField::append");
    coeffs_.push_back(std::move(f));
  }

 private:
  std::vector<ScalarField> coeffs_;
};

inline TimePolyField poly_add(const TimePolyField& a, const TimePolyField& b) {
  a.coeff(0).require_same_shape(b.coeff(0), "poly_add");
  const std::size_t order = std::max(a.order(), b.order());
  const std::size_t w = a.width(), h = a.height();
  std::vector<ScalarField> out;
  out.reserve(order + 1);
  for (std::size_t k = 0; k <= order; ++k) {
    ScalarField c(w, h, a.spacing());
    const bool ia = k <= a.order();
    const bool ib = k <= b.order();
    const double* ap = ia ? a.coeff(k).values().data() : nullptr;
    const double* bp = ib ? b.coeff(k).values().data() : nullptr;
    double* cp = c.values().data();
    parallel_for_rows(h, w, [&](std::size_t y) {
      const std::size_t base = y * w;
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t p = base + x;
        cp[p] = (ia ? ap[p] : 0.0) + (ib ? bp[p] : 0.0);
      }
    });
    out.push_back(std::move(c));
  }
  return TimePolyField(std::move(out));
}

// Truncated Cauchy product. Per pixel the inner sum runs over ascending i,
// which keeps results bitwise independent of the parallel schedule.
inline TimePolyField poly_mul(const TimePolyField& a, const TimePolyField& b,
                              std::size_t out_order) {
  a.coeff(0).require_same_shape(b.coeff(0), "poly_mul");
  const std::size_t w = a.width(), h = a.height();
  std::vector<const double*> ap(a.order() + 1), bp(b.order() + 1);
  for (std::size_t k = 0; k <= a.order(); ++k) ap[k] = a.coeff(k).values().data();
  for (std::size_t k = 0; k <= b.order(); ++k) bp[k] = b.coeff(k).values().data();
  std::vector<ScalarField> out;
  out.reserve(out_order + 1);
  for (std::size_t k = 0; k <= out_order; ++k) {
    ScalarField c(w, h, a.spacing());
    double* cp = c.values().data();
    const std::size_t i_lo = (k > b.order()) ? k - b.order() : 0;
    const std::size_t i_hi = std::min(k, a.order());
    parallel_for_rows(h, w, [&](std::size_t y) {
      const std::size_t base = y * w;
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t p = base + x;
        double s = 0.0;
        for (std::size_t i = i_lo; i <= i_hi; ++i) s += ap[i][p] * bp[k - i][p];
        cp[p] = s;
      }
    });
    out.push_back(std::move(c));
  }
  return TimePolyField(std::move(out));
}

// Power-series reciprocal: r_0 = 1/a_0, r_k = -(sum_{j=1..k} a_j r_{k-j})/a_0.
// The constant term must stay at least eps in magnitude at every pixel.
inline TimePolyField poly_reciprocal(const TimePolyField& a,
                                     std::size_t out_order, double eps) {
  const std::size_t w = a.width(), h = a.height();
  const double* a0 = a.coeff(0).values().data();
  const std::size_t n = a.coeff(0).size();
  for (std::size_t p = 0; p < n; ++p) {
    if (!(std::fabs(a0[p]) >= eps))
      throw degenerate_denominator(
          "poly_reciprocal: constant term magnitude " +
          std::to_string(std::fabs(a0[p])) + " below " + std::to_string(eps) +
          " at pixel " + std::to_string(p));
  }
  std::vector<const double*> ap(a.order() + 1);
  for (std::size_t k = 0; k <= a.order(); ++k) ap[k] = a.coeff(k).values().data();
  std::vector<ScalarField> out;
  out.reserve(out_order + 1);
  {
    ScalarField r0(w, h, a.spacing());
    double* rp = r0.values().data();
    parallel_for_rows(h, w, [&](std::size_t y) {
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t p = y * w + x;
        rp[p] = 1.0 / a0[p];
      }
    });
    out.push_back(std::move(r0));
  }
  std::vector<const double*> rp(1, out[0].values().data());
  for (std::size_t k = 1; k <= out_order; ++k) {
    ScalarField rk(w, h, a.spacing());
    double* dst = rk.values().data();
    parallel_for_rows(h, w, [&](std::size_t y) {
      const std::size_t base = y * w;
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t p = base + x;
        double s = 0.0;
        const std::size_t j_hi = std::min(k, a.order());
        for (std::size_t j = 1; j <= j_hi; ++j) s += ap[j][p] * rp[k - j][p];
        dst[p] = -s / a0[p];
      }
    });
    out.push_back(std::move(rk));
    rp.push_back(out.back().values().data());
  }
  return TimePolyField(std::move(out));
}

inline TimePolyField poly_integrate_t(const TimePolyField& a) {
  const std::size_t w = a.width(), h = a.height();
  std::vector<ScalarField> out;
  out.reserve(a.order() + 2);
  out.emplace_back(w, h, a.spacing(), 0.0);
  for (std::size_t k = 0; k <= a.order(); ++k) {
    ScalarField c(w, h, a.spacing());
    const double* src = a.coeff(k).values().data();
    double* dst = c.values().data();
    const double inv = 1.0 / static_cast<double>(k + 1);
    parallel_for_rows(h, w, [&](std::size_t y) {
      const std::size_t base = y * w;
      for (std::size_t x = 0; x < w; ++x) dst[base + x] = src[base + x] * inv;
    });
    out.push_back(std::move(c));
  }
  return TimePolyField(std::move(out));
}

inline ScalarField poly_eval(const TimePolyField& a, double t) {
  if (!(t >= 0.0))
    throw contract_violation("poly_eval: t must be nonnegative, got " +
                             std::to_string(t));
  const std::size_t w = a.width(), h = a.height();
  const std::size_t N = a.order();
  std::vector<const double*> ap(N + 1);
  for (std::size_t k = 0; k <= N; ++k) ap[k] = a.coeff(k).values().data();
  ScalarField out(w, h, a.spacing());
  double* dst = out.values().data();
  parallel_for_rows(h, w, [&](std::size_t y) {
    const std::size_t base = y * w;
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t p = base + x;
      double s = ap[N][p];
      for (std::size_t k = N; k-- > 0;) s = s * t + ap[k][p];
      dst[p] = s;
    }
  });
  return out;
}

// One CSV per coefficient degree, named <stem>_k<degree>.csv.
inline void dump_coefficients(const TimePolyField& a, const std::string& stem) {
  for (std::size_t k = 0; k <= a.order(); ++k)
    a.coeff(k).write_csv(stem + "_k" + std::to_string(k) + ".csv");
}

}  // namespace hpmflow
