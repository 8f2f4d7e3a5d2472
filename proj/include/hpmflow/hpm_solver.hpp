#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "hpmflow/errors.hpp"
#include "hpmflow/pde_operators.hpp"
#include "hpmflow/scalar_field.hpp"
#include "hpmflow/time_poly_field.hpp"

namespace hpmflow {

enum class RhsKind { curvature, pm_divergence };

// Selects which right-hand side drives the series and carries the parameters
// that belong to the operator rather than to the solver.
struct RhsSpec {
  RhsKind kind = RhsKind::curvature;
  DiffusivityKind diffusivity = DiffusivityKind::rational;
  double sigma = 1.0;
};

struct HpmConfig {
  std::size_t order = 10;     // series truncation N
  double eps = 1e-4;          // curvature denominator regularization
  double ratio_cap = 0.25;    // max allowed |t*c_{k+1}| / |c_k| at the step
  std::size_t max_restarts = 40000;
  double k = 0.1;             // contrast parameter forwarded to DiffusivitySpec

  void validate() const {
    if (order < 1) throw contract_violation("HpmConfig: order must be >= 1");
    if (!(eps > 0.0)) throw contract_violation("HpmConfig: eps must be positive");
    if (!(ratio_cap > 0.0) || !(ratio_cap < 1.0))
      throw contract_violation("HpmConfig: ratio_cap must lie in (0,1)");
    if (max_restarts < 1)
      throw contract_violation("HpmConfig: max_restarts must be >= 1");
  }
};

struct SeriesSolution {
  TimePolyField series;
  double trust_radius;  // positive, possibly infinity
  RhsKind rhs_kind;
};

namespace detail {

inline TimePolyField eval_rhs(const TimePolyField& s, const RhsSpec& rhs,
                              const HpmConfig& cfg, std::size_t out_order) {
  if (rhs.kind == RhsKind::curvature)
    return curvature_rhs(s, cfg.eps, out_order);
  DiffusivitySpec d{rhs.diffusivity, cfg.k};
  return pm_divergence_rhs(s, d, rhs.sigma);
}

// Ratio test on coefficient max-abs norms: t* = cap * min_k m_k / m_{k+1}
// over k with m_{k+1} > 0; infinity when every higher coefficient vanishes.
inline double ratio_trust_radius(const TimePolyField& series, double cap) {
  double t_star = std::numeric_limits<double>::infinity();
  double m_prev = series.coeff(0).max_abs();
  for (std::size_t k = 1; k <= series.order(); ++k) {
    const double m_k = series.coeff(k).max_abs();
    if (m_k > 0.0) t_star = std::min(t_star, cap * m_prev / m_k);
    m_prev = m_k;
  }
  return t_star;
}

}  // namespace detail

// Order-by-order coefficient matching: starting from the truncation
// S_k = sum_{i<=k} v_i t^i, the degree-k coefficient of rhs(S_k) integrates
// in t to v_{k+1} = [t^k] rhs(S_k) / (k+1). Higher coefficients of S never
// influence lower extraction orders, so the recursion is exact for the
// truncated algebra.
inline SeriesSolution build_series(const ScalarField& u0, const RhsSpec& rhs,
                                   const HpmConfig& cfg) {
  cfg.validate();
  if (!u0.all_finite())
    throw contract_violation("build_series: initial field has non-finite values");
  const std::size_t w = u0.width(), h = u0.height();
  TimePolyField series = TimePolyField::constant(u0);
  for (std::size_t k = 0; k < cfg.order; ++k) {
    TimePolyField r = detail::eval_rhs(series, rhs, cfg, k);
    const ScalarField& rk = r.coeff(std::min(k, r.order()));
    ScalarField vk1(w, h, u0.spacing());
    const double* src = rk.values().data();
    double* dst = vk1.values().data();
    const double inv = 1.0 / static_cast<double>(k + 1);
    parallel_for_rows(h, w, [&](std::size_t y) {
      const std::size_t base = y * w;
      for (std::size_t x = 0; x < w; ++x) dst[base + x] = src[base + x] * inv;
    });
    if (!vk1.all_finite())
      throw series_blowup("build_series: non-finite coefficient at degree " +
                              std::to_string(k + 1),
                          k + 1);
    series.append(std::move(vk1));
  }
  const double t_star = detail::ratio_trust_radius(series, cfg.ratio_cap);
  return {std::move(series), t_star, rhs.kind};
}

inline double estimate_trust_radius(const SeriesSolution& sol,
                                    const HpmConfig& cfg) {
  cfg.validate();
  if (sol.series.order() < 1)
    throw contract_violation(
        "estimate_trust_radius: series must have order >= 1");
  return detail::ratio_trust_radius(sol.series, cfg.ratio_cap);
}

struct AdvanceTraceRow {
  std::size_t restart;
  double t;
  double dt;
  double trust_radius;
  double top_coeff_max;
};

struct AdvanceResult {
  ScalarField u;
  std::size_t restarts;
};

// Restarted series stepping: build a series from the current field, step by
// min(trust radius, remaining time), repeat until the target time is reached.
inline AdvanceResult advance(const ScalarField& u0, double T,
                             const RhsSpec& rhs, const HpmConfig& cfg,
                             std::vector<AdvanceTraceRow>* trace = nullptr) {
  cfg.validate();
  if (!(T >= 0.0))
    throw contract_violation("advance: T must be nonnegative");
  ScalarField u = u0;
  double t = 0.0;
  std::size_t restarts = 0;
  while (t < T) {
    if (restarts >= cfg.max_restarts)
      throw restart_limit_exceeded(
          "advance: restart limit " + std::to_string(cfg.max_restarts) +
          " reached at t = " + std::to_string(t) + " of " + std::to_string(T));
    SeriesSolution sol = build_series(u, rhs, cfg);
    const double remaining = T - t;
    double dt;
    if (sol.trust_radius >= remaining) {
      dt = remaining;
      t = T;
    } else {
      dt = sol.trust_radius;
      if (!(dt > 0.0))
        throw restart_limit_exceeded(
            "advance: trust radius collapsed to zero at t = " +
            std::to_string(t));
      t += dt;
    }
    u = poly_eval(sol.series, dt);
    ++restarts;
    if (trace)
      trace->push_back({restarts, t, dt, sol.trust_radius,
                        sol.series.coeff(sol.series.order()).max_abs()});
  }
  return {std::move(u), restarts};
}

inline void write_trace_csv(const std::vector<AdvanceTraceRow>& rows,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open " + path + " for writing");
  out.precision(17);
  out << "restart,t,dt,trust_radius,top_coeff_max\n";
  for (const auto& r : rows)
    out << r.restart << ',' << r.t << ',' << r.dt << ',' << r.trust_radius
        << ',' << r.top_coeff_max << '\n';
  if (!out) throw io_error("write failed for " + path);
}

}  // namespace hpmflow
