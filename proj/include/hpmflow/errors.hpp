#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hpmflow {

class error : public std::runtime_error {
 public:
  explicit error(const std::string& what) : std::runtime_error(what) {}
};

class dimension_mismatch : public error {
 public:
  using error::error;
};

class contract_violation : public error {
 public:
  using error::error;
};

class degenerate_denominator : public error {
 public:
  using error::error;
};

class series_blowup : public error {
 public:
  series_blowup(const std::string& what, std::size_t degree)
      : error(what), degree_(degree) {}
  std::size_t degree() const noexcept { return degree_; }

 private:
  std::size_t degree_;
};

class unstable_step : public error {
 public:
  using error::error;
};

class restart_limit_exceeded : public error {
 public:
  using error::error;
};

class io_error : public error {
 public:
  using error::error;
};

class config_error : public error {
 public:
  using error::error;
};

}  // namespace hpmflow
