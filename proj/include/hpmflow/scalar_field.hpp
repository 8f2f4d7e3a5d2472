#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "hpmflow/errors.hpp"

namespace hpmflow {

// Rectangular grid of doubles. Stencil code needs interior points, so the
// minimum size is 3x3. Row-major storage, index (x, y) -> y*width + x.
class ScalarField {
 public:
  ScalarField(std::size_t width, std::size_t height, double spacing = 1.0,
              double fill = 0.0)
      : width_(width),
        height_(height),
        spacing_(spacing),
        data_(width * height, fill) {
    if (width_ < 3 || height_ < 3)
      throw dimension_mismatch("ScalarField must be at least 3x3, got " +
                               std::to_string(width_) + "x" +
                               std::to_string(height_));
    if (!(spacing_ > 0.0) || !std::isfinite(spacing_))
      throw contract_violation("ScalarField spacing must be positive and finite");
  }

  ScalarField(std::size_t width, std::size_t height, double spacing,
              std::vector<double> values)
      : ScalarField(width, height, spacing) {
    if (values.size() != data_.size())
      throw dimension_mismatch("ScalarField value count " +
                               std::to_string(values.size()) +
                               " does not match " + std::to_string(width_) +
                               "x" + std::to_string(height_));
    data_ = std::move(values);
  }

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  double spacing() const { return spacing_; }

  double at(std::size_t x, std::size_t y) const { return data_[y * width_ + x]; }
  double& at(std::size_t x, std::size_t y) { return data_[y * width_ + x]; }
  const double* row(std::size_t y) const { return data_.data() + y * width_; }
  double* row(std::size_t y) { return data_.data() + y * width_; }
  const std::vector<double>& values() const { return data_; }
  std::vector<double>& values() { return data_; }

  bool same_shape(const ScalarField& o) const {
    return width_ == o.width_ && height_ == o.height_ && spacing_ == o.spacing_;
  }

  void require_same_shape(const ScalarField& o, const char* who) const {
    if (!same_shape(o))
      throw dimension_mismatch(std::string(who) + ": field shapes differ (" +
                               std::to_string(width_) + "x" +
                               std::to_string(height_) + " h=" +
                               std::to_string(spacing_) + " vs " +
                               std::to_string(o.width_) + "x" +
                               std::to_string(o.height_) + " h=" +
                               std::to_string(o.spacing_) + ")");
  }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  double min_value() const {
    double m = data_[0];
    for (double v : data_) m = std::min(m, v);
    return m;
  }

  double max_value() const {
    double m = data_[0];
    for (double v : data_) m = std::max(m, v);
    return m;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::fabs(v));
    return m;
  }

  // Serial, fixed-order accumulation so the result never depends on the
  // parallel schedule.
  double sum() const {
    double s = 0.0;
    for (double v : data_) s += v;
    return s;
  }

  // Grid dump, rows = y, columns = x.
  void write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open " + path + " for writing");
    out.precision(17);
    for (std::size_t y = 0; y < height_; ++y) {
      const double* r = row(y);
      for (std::size_t x = 0; x < width_; ++x) {
        if (x) out << ',';
        out << r[x];
      }
      out << '\n';
    }
    if (!out) throw io_error("write failed for " + path);
  }

 private:
  std::size_t width_;
  std::size_t height_;
  double spacing_;
  std::vector<double> data_;
};

}  // namespace hpmflow
