#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "hpmflow/errors.hpp"
#include "hpmflow/pipeline.hpp"
#include "test_util.hpp"

using namespace hpmflow;

namespace {

Image make_step_edge(std::size_t n) {
  Image img;
  img.width = n;
  img.height = n;
  img.intensities.resize(n * n);
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x)
      img.intensities[y * n + x] = (x < n / 2) ? 0.15 : 0.85;
  return img;
}

Image make_smooth_bump(std::size_t n) {
  Image img;
  img.width = n;
  img.height = n;
  img.intensities.resize(n * n);
  const double c = static_cast<double>(n - 1) / 2.0;
  const double s = static_cast<double>(n) / 5.0;
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) {
      const double dx = static_cast<double>(x) - c;
      const double dy = static_cast<double>(y) - c;
      img.intensities[y * n + x] =
          0.35 + 0.45 * std::exp(-(dx * dx + dy * dy) / (2.0 * s * s));
    }
  return img;
}

bool images_identical(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height) return false;
  for (std::size_t p = 0; p < a.intensities.size(); ++p)
    if (a.intensities[p] != b.intensities[p]) return false;
  return true;
}

double image_mean(const Image& img) {
  double s = 0.0;
  for (double v : img.intensities) s += v;
  return s / static_cast<double>(img.intensities.size());
}

// largest horizontal jump across the vertical midline, a proxy for how much
// of the step edge survives
double edge_strength(const Image& img) {
  const std::size_t n = img.width;
  double strongest = 0.0;
  for (std::size_t y = 0; y < img.height; ++y) {
    const std::size_t x = n / 2;
    strongest = std::max(strongest,
                         std::fabs(img.intensities[y * n + x] -
                                   img.intensities[y * n + x - 1]));
  }
  return strongest;
}

double image_tv(const Image& img) { return total_variation(img); }

}  // namespace

TEST_CASE("zero noise leaves the image untouched") {
  const Image img = make_smooth_bump(16);
  const Image out = add_noise(img, NoiseSpec{0.0, 7});
  CHECK(images_identical(out, img));
}

TEST_CASE("noise is a pure function of the seed") {
  const Image img = make_smooth_bump(16);
  const Image a = add_noise(img, NoiseSpec{0.05, 42});
  const Image b = add_noise(img, NoiseSpec{0.05, 42});
  CHECK(images_identical(a, b));
  const Image c = add_noise(img, NoiseSpec{0.05, 43});
  CHECK(!images_identical(a, c));
}

TEST_CASE("noise has the requested standard deviation") {
  Image flat;
  flat.width = 256;
  flat.height = 256;
  flat.intensities.assign(256 * 256, 0.5);
  const Image noisy = add_noise(flat, NoiseSpec{0.05, 11});
  double sum = 0.0, sq = 0.0;
  for (double v : noisy.intensities) {
    const double d = v - 0.5;
    sum += d;
    sq += d * d;
  }
  const double count = static_cast<double>(noisy.intensities.size());
  const double mean = sum / count;
  const double stdev = std::sqrt(sq / count - mean * mean);
  CHECK(std::fabs(stdev - 0.05) < 0.05 * 0.03);
  CHECK(std::fabs(mean) < 0.001);
}

TEST_CASE("negative noise levels are rejected") {
  const Image img = make_smooth_bump(8);
  CHECK_THROWS_AS(add_noise(img, NoiseSpec{-0.1, 0}), contract_violation);
}

TEST_CASE("metric values on known pairs") {
  const Image img = make_smooth_bump(12);
  const Metrics same = compute_metrics(img, img);
  CHECK(same.mse == 0.0);
  CHECK(same.psnr == 99.0);

  Image shifted = img;
  for (double& v : shifted.intensities) v += 0.1;
  const Metrics off = compute_metrics(img, shifted);
  CHECK(std::fabs(off.mse - 0.01) < 1e-12);
  CHECK(std::fabs(off.psnr - 20.0) < 1e-12);
}

TEST_CASE("metrics agree with a two-pass reference") {
  const Image a = make_smooth_bump(16);
  Image b = a;
  for (std::size_t p = 0; p < b.intensities.size(); ++p)
    b.intensities[p] +=
        0.02 * std::sin(static_cast<double>(p) * 0.7);
  const Metrics m = compute_metrics(a, b);
  double sq = 0.0;
  for (std::size_t p = 0; p < a.intensities.size(); ++p) {
    const double d = a.intensities[p] - b.intensities[p];
    sq += d * d;
  }
  const double mse = sq / static_cast<double>(a.intensities.size());
  CHECK(std::fabs(m.mse - mse) < 1e-12);
  CHECK(std::fabs(m.psnr - (-10.0 * std::log10(mse))) < 1e-12);
}

TEST_CASE("metrics require matching shapes") {
  const Image a = make_smooth_bump(8);
  const Image b = make_smooth_bump(9);
  CHECK_THROWS_AS(compute_metrics(a, b), dimension_mismatch);
}

TEST_CASE("denoising for zero time is the identity") {
  const Image img = make_step_edge(24);
  const DiffusivitySpec spec{DiffusivityKind::rational, 0.1};
  HpmConfig cfg;
  const Image out = denoise_hpm(img, 0.0, spec, 1.0, cfg);
  CHECK(images_identical(out, img));

  const Image fd = denoise_fd_baseline(img, 0.0, spec, 1.0, 1e-3);
  CHECK(images_identical(fd, img));
}

TEST_CASE("edge-aware smoothing improves a noisy step edge") {
  const Image clean = make_step_edge(64);
  const Image noisy = add_noise(clean, NoiseSpec{0.05, 31});
  const DiffusivitySpec spec{DiffusivityKind::rational, 0.1};
  HpmConfig cfg;
  const Image out = denoise_hpm(noisy, 1.0, spec, 1.0, cfg);
  const double psnr_before = compute_metrics(clean, noisy).psnr;
  const double psnr_after = compute_metrics(clean, out).psnr;
  CHECK(psnr_after > psnr_before + 1.0);
}

TEST_CASE("series and explicit solvers agree in the near-linear limit") {
  const Image img = make_smooth_bump(33);
  const DiffusivitySpec flat{DiffusivityKind::rational, 1e8};
  HpmConfig cfg;
  cfg.k = 1e8;
  const Image hpm = denoise_hpm(img, 0.5, flat, 0.0, cfg);
  const Image fd = denoise_fd_baseline(img, 0.5, flat, 0.0, 1e-3);
  double worst = 0.0;
  for (std::size_t p = 0; p < hpm.intensities.size(); ++p)
    worst = std::max(worst,
                     std::fabs(hpm.intensities[p] - fd.intensities[p]));
  CHECK(worst < 1e-2);
}

TEST_CASE("series and explicit solvers agree for the edge-aware flow") {
  const Image clean = make_step_edge(32);
  const Image noisy = add_noise(clean, NoiseSpec{0.05, 57});
  const DiffusivitySpec spec{DiffusivityKind::rational, 0.1};
  HpmConfig cfg;
  const Image hpm = denoise_hpm(noisy, 1.0, spec, 1.0, cfg);
  const Image fd = denoise_fd_baseline(noisy, 1.0, spec, 1.0, 1e-3);
  double worst = 0.0;
  for (std::size_t p = 0; p < hpm.intensities.size(); ++p)
    worst = std::max(worst,
                     std::fabs(hpm.intensities[p] - fd.intensities[p]));
  CHECK(worst < 5e-2);
}

TEST_CASE("the near-linear limit matches gaussian smoothing inside") {
  const Image img = make_smooth_bump(33);
  const DiffusivitySpec flat{DiffusivityKind::rational, 1e8};
  HpmConfig cfg;
  cfg.k = 1e8;
  const double T = 0.5;
  const Image hpm = denoise_hpm(img, T, flat, 0.0, cfg);
  const ScalarField blur =
      gaussian_convolve(to_field(img), std::sqrt(2.0 * T));
  double worst = 0.0;
  const std::size_t n = img.width;
  for (std::size_t y = 4; y + 4 < n; ++y)
    for (std::size_t x = 4; x + 4 < n; ++x)
      worst = std::max(
          worst, std::fabs(hpm.intensities[y * n + x] - blur.at(x, y)));
  CHECK(worst < 5e-3);
}

TEST_CASE("the explicit solver detects an unstable step size") {
  // the wide conservative stencil is stable for dt up to h^2 = 1, so the
  // step has to exceed that; broadband noise feeds the growing modes
  Image flat_img;
  flat_img.width = flat_img.height = 32;
  flat_img.intensities.assign(32 * 32, 0.5);
  const Image img = add_noise(flat_img, NoiseSpec{0.05, 7});
  const DiffusivitySpec flat{DiffusivityKind::rational, 1e8};
  CHECK_THROWS_AS(denoise_fd_baseline(img, 40.0, flat, 0.0, 2.0),
                  unstable_step);
}

TEST_CASE("edge-aware smoothing conserves the mean") {
  const Image clean = make_step_edge(48);
  const Image noisy = add_noise(clean, NoiseSpec{0.03, 71});
  const DiffusivitySpec spec{DiffusivityKind::rational, 0.1};
  HpmConfig cfg;
  const Image hpm = denoise_hpm(noisy, 0.5, spec, 1.0, cfg);
  const Image fd = denoise_fd_baseline(noisy, 0.5, spec, 1.0, 1e-3);
  const double m0 = image_mean(noisy);
  CHECK(std::fabs(image_mean(hpm) - m0) < 1e-4 * std::fabs(m0));
  CHECK(std::fabs(image_mean(fd) - m0) < 1e-4 * std::fabs(m0));
}

TEST_CASE("smoothing does not increase total variation") {
  const Image clean = make_step_edge(48);
  const Image noisy = add_noise(clean, NoiseSpec{0.05, 83});
  const DiffusivitySpec spec{DiffusivityKind::rational, 0.1};
  HpmConfig cfg;
  const Image out = denoise_hpm(noisy, 1.0, spec, 1.0, cfg);
  CHECK(image_tv(out) <= 1.01 * image_tv(noisy));
}

TEST_CASE("edge-aware flow keeps edges sharper than the linear flow") {
  const Image clean = make_step_edge(64);
  const Image noisy = add_noise(clean, NoiseSpec{0.05, 97});
  HpmConfig cfg;
  const Image pm = denoise_hpm(
      noisy, 1.0, DiffusivitySpec{DiffusivityKind::rational, 0.1}, 1.0, cfg);
  HpmConfig heat_cfg;
  heat_cfg.k = 1e8;
  const Image heat = denoise_hpm(
      noisy, 1.0, DiffusivitySpec{DiffusivityKind::rational, 1e8}, 1.0,
      heat_cfg);
  CHECK(edge_strength(pm) > 1.2 * edge_strength(heat));
}

TEST_CASE("curvature selection runs the geometric flow") {
  const Image img = make_smooth_bump(24);
  const DiffusivitySpec spec{DiffusivityKind::constant_one, 0.1};
  HpmConfig cfg;
  const Image hpm = denoise_hpm(img, 0.1, spec, 0.0, cfg);
  const Image fd = denoise_fd_baseline(img, 0.1, spec, 0.0, 1e-3);
  double worst = 0.0;
  for (std::size_t p = 0; p < hpm.intensities.size(); ++p)
    worst = std::max(worst,
                     std::fabs(hpm.intensities[p] - fd.intensities[p]));
  CHECK(worst < 5e-2);
  // the geometric flow is not conservative, so the two paths must both
  // move the mean the same way rather than preserving it
  CHECK(!images_identical(hpm, img));
}

TEST_CASE("invalid baseline parameters are rejected") {
  const Image img = make_smooth_bump(8);
  const DiffusivitySpec spec{DiffusivityKind::rational, 0.1};
  CHECK_THROWS_AS(denoise_fd_baseline(img, 1.0, spec, 0.0, 0.0),
                  contract_violation);
  CHECK_THROWS_AS(denoise_fd_baseline(img, -1.0, spec, 0.0, 1e-3),
                  contract_violation);
}
