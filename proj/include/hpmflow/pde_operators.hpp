#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "hpmflow/errors.hpp"
#include "hpmflow/parallel.hpp"
#include "hpmflow/scalar_field.hpp"
#include "hpmflow/time_poly_field.hpp"

namespace hpmflow {

enum class DiffusivityKind { rational, exponential, constant_one };

struct DiffusivitySpec {
  DiffusivityKind kind = DiffusivityKind::rational;
  double k = 0.1;
};

namespace detail {

// Whole-sample reflection (u[-1] = u[1]): used by the difference stencils so
// the centered normal difference vanishes at the boundary (discrete Neumann).
inline std::size_t mirror_stencil(std::ptrdiff_t i, std::size_t n) {
  if (i < 0) return static_cast<std::size_t>(-i);
  if (i >= static_cast<std::ptrdiff_t>(n))
    return 2 * n - 2 - static_cast<std::size_t>(i);
  return static_cast<std::size_t>(i);
}

// Half-sample reflection (u[-1] = u[0]): used by convolution; with a
// normalized symmetric kernel this extension preserves the field mean
// exactly, which whole-sample reflection does not.
inline std::size_t mirror_convolve(std::ptrdiff_t i, std::size_t n) {
  if (i < 0) return static_cast<std::size_t>(-1 - i);
  if (i >= static_cast<std::ptrdiff_t>(n))
    return 2 * n - 1 - static_cast<std::size_t>(i);
  return static_cast<std::size_t>(i);
}

inline void require_stencil_ready(const ScalarField& u, const char* who) {
  if (u.width() < 3 || u.height() < 3)
    throw dimension_mismatch(std::string(who) + ": field must be at least 3x3");
}

}  // namespace detail

struct GradientPair {
  ScalarField x;
  ScalarField y;
};

// Central differences with whole-sample mirror padding; both components are
// exactly zero on their respective boundary lines.
inline GradientPair gradient(const ScalarField& u) {
  detail::require_stencil_ready(u, "gradient");
  const std::size_t w = u.width(), h = u.height();
  const double inv2h = 1.0 / (2.0 * u.spacing());
  ScalarField gx(w, h, u.spacing()), gy(w, h, u.spacing());
  double* gxp = gx.values().data();
  double* gyp = gy.values().data();
  parallel_for_rows(h, w, [&](std::size_t y) {
    const double* rm = u.row(detail::mirror_stencil(
        static_cast<std::ptrdiff_t>(y) - 1, h));
    const double* r0 = u.row(y);
    const double* rp = u.row(detail::mirror_stencil(
        static_cast<std::ptrdiff_t>(y) + 1, h));
    const std::size_t base = y * w;
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t xl = detail::mirror_stencil(
          static_cast<std::ptrdiff_t>(x) - 1, w);
      const std::size_t xr = detail::mirror_stencil(
          static_cast<std::ptrdiff_t>(x) + 1, w);
      gxp[base + x] = (r0[xr] - r0[xl]) * inv2h;
      gyp[base + x] = (rp[x] - rm[x]) * inv2h;
    }
  });
  return {std::move(gx), std::move(gy)};
}

// Negative adjoint of the mirrored central-difference gradient: boundary flux
// entries are dropped and the interior flux is centrally differenced with
// zero padding. Interior pixels see plain central differences; column sums
// vanish identically, so div-form time stepping conserves total intensity to
// roundoff and the composed operator satisfies a discrete maximum principle.
inline ScalarField divergence(const ScalarField& fx, const ScalarField& fy) {
  fx.require_same_shape(fy, "divergence");
  detail::require_stencil_ready(fx, "divergence");
  const std::size_t w = fx.width(), h = fx.height();
  const double inv2h = 1.0 / (2.0 * fx.spacing());
  ScalarField out(w, h, fx.spacing());
  double* op = out.values().data();
  parallel_for_rows(h, w, [&](std::size_t y) {
    const double* fxr = fx.row(y);
    const std::size_t base = y * w;
    for (std::size_t x = 0; x < w; ++x) {
      const double left = (x >= 2) ? fxr[x - 1] : 0.0;
      const double right = (x + 2 <= w - 1) ? fxr[x + 1] : 0.0;
      op[base + x] = (right - left) * inv2h;
    }
    const double* below = (y >= 2) ? fy.row(y - 1) : nullptr;
    const double* above = (y + 2 <= h - 1) ? fy.row(y + 1) : nullptr;
    for (std::size_t x = 0; x < w; ++x) {
      const double lo = below ? below[x] : 0.0;
      const double hi = above ? above[x] : 0.0;
      op[base + x] += (hi - lo) * inv2h;
    }
  });
  return out;
}

// Narrow 3-point second differences along one axis, mirror padded. The
// neighbor pair is summed before the center is subtracted; with that grouping
// a quarter-turn of the input only commutes an addition, so the rotated
// stencil reproduces its unrotated counterpart bitwise.
inline ScalarField second_diff_x(const ScalarField& u) {
  detail::require_stencil_ready(u, "second_diff_x");
  const std::size_t w = u.width(), h = u.height();
  const double invh2 = 1.0 / (u.spacing() * u.spacing());
  ScalarField out(w, h, u.spacing());
  double* op = out.values().data();
  parallel_for_rows(h, w, [&](std::size_t y) {
    const double* r0 = u.row(y);
    const std::size_t base = y * w;
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t xl = detail::mirror_stencil(
          static_cast<std::ptrdiff_t>(x) - 1, w);
      const std::size_t xr = detail::mirror_stencil(
          static_cast<std::ptrdiff_t>(x) + 1, w);
      op[base + x] = ((r0[xr] + r0[xl]) - 2.0 * r0[x]) * invh2;
    }
  });
  return out;
}

inline ScalarField second_diff_y(const ScalarField& u) {
  detail::require_stencil_ready(u, "second_diff_y");
  const std::size_t w = u.width(), h = u.height();
  const double invh2 = 1.0 / (u.spacing() * u.spacing());
  ScalarField out(w, h, u.spacing());
  double* op = out.values().data();
  parallel_for_rows(h, w, [&](std::size_t y) {
    const double* rm = u.row(detail::mirror_stencil(
        static_cast<std::ptrdiff_t>(y) - 1, h));
    const double* r0 = u.row(y);
    const double* rp = u.row(detail::mirror_stencil(
        static_cast<std::ptrdiff_t>(y) + 1, h));
    const std::size_t base = y * w;
    for (std::size_t x = 0; x < w; ++x)
      op[base + x] = ((rp[x] + rm[x]) - 2.0 * r0[x]) * invh2;
  });
  return out;
}

// Mixed derivative as the four-corner cross. This equals applying the x
// central difference and then the y central difference, but the operands are
// grouped as (NE+SW) - (NW+SE) so a 90-degree rotation of the input permutes
// the summands of commutative additions only; the rotation-equivariance of
// the curvature operator then holds bitwise, not just to roundoff.
inline ScalarField cross_diff_xy(const ScalarField& u) {
  detail::require_stencil_ready(u, "cross_diff_xy");
  const std::size_t w = u.width(), h = u.height();
  const double inv4h2 = 1.0 / (4.0 * u.spacing() * u.spacing());
  ScalarField out(w, h, u.spacing());
  double* op = out.values().data();
  parallel_for_rows(h, w, [&](std::size_t y) {
    const double* rm = u.row(detail::mirror_stencil(
        static_cast<std::ptrdiff_t>(y) - 1, h));
    const double* rp = u.row(detail::mirror_stencil(
        static_cast<std::ptrdiff_t>(y) + 1, h));
    const std::size_t base = y * w;
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t xl = detail::mirror_stencil(
          static_cast<std::ptrdiff_t>(x) - 1, w);
      const std::size_t xr = detail::mirror_stencil(
          static_cast<std::ptrdiff_t>(x) + 1, w);
      op[base + x] = ((rp[xr] + rm[xl]) - (rm[xr] + rp[xl])) * inv4h2;
    }
  });
  return out;
}

// Diffusivity g(s2) for a single squared gradient magnitude.
inline double diffusivity_eval(const DiffusivitySpec& spec, double s2) {
  if (s2 < 0.0)
    throw contract_violation(
        "diffusivity_eval: negative squared gradient input");
  if (spec.kind != DiffusivityKind::constant_one && !(spec.k > 0.0))
    throw contract_violation(
        "diffusivity_eval: contrast parameter k must be positive");
  switch (spec.kind) {
    case DiffusivityKind::rational:
      return 1.0 / (1.0 + s2 / (spec.k * spec.k));
    case DiffusivityKind::exponential:
      return std::exp(-s2 / (spec.k * spec.k));
    case DiffusivityKind::constant_one:
      return 1.0;
  }
  throw contract_violation("diffusivity_eval: unknown diffusivity kind");
}

// Pointwise diffusivity g(s2) for a field of squared gradient magnitudes.
inline ScalarField diffusivity_eval(const DiffusivitySpec& spec,
                                    const ScalarField& s2) {
  const double* sp = s2.values().data();
  for (std::size_t p = 0; p < s2.size(); ++p)
    if (sp[p] < 0.0)
      throw contract_violation(
          "diffusivity_eval: negative squared gradient input");
  if (spec.kind != DiffusivityKind::constant_one && !(spec.k > 0.0))
    throw contract_violation("diffusivity_eval: contrast parameter k must be positive");
  const std::size_t w = s2.width(), h = s2.height();
  ScalarField g(w, h, s2.spacing());
  double* gp = g.values().data();
  const double inv_k2 =
      (spec.kind == DiffusivityKind::constant_one) ? 0.0 : 1.0 / (spec.k * spec.k);
  switch (spec.kind) {
    case DiffusivityKind::rational:
      parallel_for_rows(h, w, [&](std::size_t y) {
        for (std::size_t x = 0; x < w; ++x) {
          const std::size_t p = y * w + x;
          gp[p] = 1.0 / (1.0 + sp[p] * inv_k2);
        }
      });
      break;
    case DiffusivityKind::exponential:
      parallel_for_rows(h, w, [&](std::size_t y) {
        for (std::size_t x = 0; x < w; ++x) {
          const std::size_t p = y * w + x;
          gp[p] = std::exp(-sp[p] * inv_k2);
        }
      });
      break;
    case DiffusivityKind::constant_one:
      parallel_for_rows(h, w, [&](std::size_t y) {
        for (std::size_t x = 0; x < w; ++x) gp[y * w + x] = 1.0;
      });
      break;
  }
  return g;
}

// Normalized symmetric 1-D Gaussian taps, radius ceil(3*sigma).
// sigma <= 0 degenerates to the identity kernel.
inline std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) return {1.0};
  const std::size_t radius = static_cast<std::size_t>(std::ceil(3.0 * sigma));
  std::vector<double> taps(radius + 1);
  for (std::size_t j = 0; j <= radius; ++j)
    taps[j] = std::exp(-static_cast<double>(j) * static_cast<double>(j) /
                       (2.0 * sigma * sigma));
  double sum = taps[0];
  for (std::size_t j = 1; j <= radius; ++j) sum += 2.0 * taps[j];
  for (double& t : taps) t /= sum;
  return taps;  // taps[|j|], j = -radius..radius
}

// Separable Gaussian smoothing with half-sample mirror padding; equals the
// direct 2-D mirrored convolution and preserves the mean exactly.
inline ScalarField gaussian_convolve(const ScalarField& u, double sigma) {
  const std::vector<double> taps = gaussian_kernel(sigma);
  if (taps.size() == 1) return u;
  const std::ptrdiff_t radius = static_cast<std::ptrdiff_t>(taps.size()) - 1;
  const std::size_t w = u.width(), h = u.height();
  ScalarField pass1(w, h, u.spacing());
  double* p1 = pass1.values().data();
  parallel_for_rows(h, w, [&](std::size_t y) {
    const double* r0 = u.row(y);
    const std::size_t base = y * w;
    for (std::size_t x = 0; x < w; ++x) {
      double s = 0.0;
      for (std::ptrdiff_t j = -radius; j <= radius; ++j) {
        const std::size_t xs = detail::mirror_convolve(
            static_cast<std::ptrdiff_t>(x) + j, w);
        s += taps[static_cast<std::size_t>(j < 0 ? -j : j)] * r0[xs];
      }
      p1[base + x] = s;
    }
  });
  ScalarField out(w, h, u.spacing());
  double* op = out.values().data();
  parallel_for_rows(h, w, [&](std::size_t y) {
    const std::size_t base = y * w;
    for (std::size_t x = 0; x < w; ++x) {
      double s = 0.0;
      for (std::ptrdiff_t j = -radius; j <= radius; ++j) {
        const std::size_t ys = detail::mirror_convolve(
            static_cast<std::ptrdiff_t>(y) + j, h);
        s += taps[static_cast<std::size_t>(j < 0 ? -j : j)] * p1[ys * w + x];
      }
      op[base + x] = s;
    }
  });
  return out;
}

namespace detail {

inline TimePolyField apply_coefficientwise(const TimePolyField& u,
                                           std::size_t upto,
                                           ScalarField (*op)(const ScalarField&)) {
  std::vector<ScalarField> out;
  out.reserve(upto + 1);
  for (std::size_t k = 0; k <= upto; ++k) out.push_back(op(u.coeff(k)));
  return TimePolyField(std::move(out));
}

}  // namespace detail

// Geometric curvature-flow right-hand side in truncated series arithmetic:
//   (u_y^2 u_xx - 2 u_x u_y u_xy + u_x^2 u_yy) / (u_x^2 + u_y^2 + eps^2).
// Numerator and denominator are grouped symmetrically in x/y so that
// rotating the input by 90 degrees rotates the output bitwise.
inline TimePolyField curvature_rhs(const TimePolyField& u, double eps,
                                   std::size_t out_order) {
  if (!(eps > 0.0))
    throw contract_violation("curvature_rhs: eps must be positive");
  const std::size_t upto = std::min(u.order(), out_order);
  const std::size_t w = u.width(), h = u.height();

  std::vector<ScalarField> gx, gy;
  gx.reserve(upto + 1);
  gy.reserve(upto + 1);
  for (std::size_t k = 0; k <= upto; ++k) {
    GradientPair g = gradient(u.coeff(k));
    gx.push_back(std::move(g.x));
    gy.push_back(std::move(g.y));
  }
  TimePolyField ux{std::move(gx)}, uy{std::move(gy)};
  TimePolyField uxx =
      detail::apply_coefficientwise(u, upto, &second_diff_x);
  TimePolyField uyy =
      detail::apply_coefficientwise(u, upto, &second_diff_y);
  TimePolyField uxy =
      detail::apply_coefficientwise(u, upto, &cross_diff_xy);

  TimePolyField ux2 = poly_mul(ux, ux, out_order);
  TimePolyField uy2 = poly_mul(uy, uy, out_order);
  TimePolyField t_xx = poly_mul(uy2, uxx, out_order);
  TimePolyField t_yy = poly_mul(ux2, uyy, out_order);
  TimePolyField t_xy =
      poly_mul(poly_mul(ux, uy, out_order), uxy, out_order);

  std::vector<ScalarField> num_coeffs;
  num_coeffs.reserve(out_order + 1);
  for (std::size_t k = 0; k <= out_order; ++k) {
    ScalarField c(w, h, u.spacing());
    const double* axx = t_xx.coeff(k).values().data();
    const double* ayy = t_yy.coeff(k).values().data();
    const double* axy = t_xy.coeff(k).values().data();
    double* cp = c.values().data();
    parallel_for_rows(h, w, [&](std::size_t y) {
      const std::size_t base = y * w;
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t p = base + x;
        cp[p] = (axx[p] + ayy[p]) - 2.0 * axy[p];
      }
    });
    num_coeffs.push_back(std::move(c));
  }
  TimePolyField num{std::move(num_coeffs)};

  TimePolyField den = poly_add(ux2, uy2);
  {
    double* d0 = den.coeff(0).values().data();
    const double e2 = eps * eps;
    parallel_for_rows(h, w, [&](std::size_t y) {
      for (std::size_t x = 0; x < w; ++x) d0[y * w + x] += e2;
    });
  }
  TimePolyField recip = poly_reciprocal(den, out_order, 0.5 * eps * eps);
  return poly_mul(num, recip, out_order);
}

// Perona-Malik divergence form with the diffusivity frozen at the series
// constant term: G = g(|grad G_sigma * u_0|^2) is evaluated once, then every
// coefficient k is mapped to div(G * grad v_k). Freezing keeps the operator
// linear across the series; the solver refreshes G at every restart.
inline TimePolyField pm_divergence_rhs(const TimePolyField& u,
                                       const DiffusivitySpec& spec,
                                       double sigma) {
  const std::size_t w = u.width(), h = u.height();
  const ScalarField& u0 = u.coeff(0);
  ScalarField smoothed = sigma > 0.0 ? gaussian_convolve(u0, sigma) : u0;
  GradientPair g0 = gradient(smoothed);
  ScalarField s2(w, h, u.spacing());
  {
    const double* gx = g0.x.values().data();
    const double* gy = g0.y.values().data();
    double* sp = s2.values().data();
    parallel_for_rows(h, w, [&](std::size_t y) {
      const std::size_t base = y * w;
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t p = base + x;
        sp[p] = gx[p] * gx[p] + gy[p] * gy[p];
      }
    });
  }
  ScalarField G = diffusivity_eval(spec, s2);
  const double* Gp = G.values().data();

  std::vector<ScalarField> out;
  out.reserve(u.order() + 1);
  for (std::size_t k = 0; k <= u.order(); ++k) {
    GradientPair gk = gradient(u.coeff(k));
    double* fx = gk.x.values().data();
    double* fy = gk.y.values().data();
    parallel_for_rows(h, w, [&](std::size_t y) {
      const std::size_t base = y * w;
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t p = base + x;
        fx[p] *= Gp[p];
        fy[p] *= Gp[p];
      }
    });
    out.push_back(divergence(gk.x, gk.y));
  }
  return TimePolyField(std::move(out));
}

}  // namespace hpmflow
