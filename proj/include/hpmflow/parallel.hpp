#pragma once

#include <cstdlib>
#include <cstddef>
#include <string>
#include <thread>
#include <vector>

namespace hpmflow {

// Fields smaller than this run serially even when HPM_THREADS asks for more;
// per-call thread spawning would dominate at small sizes.
inline constexpr std::size_t parallel_min_pixels = 16384;

inline unsigned requested_threads() {
  const char* env = std::getenv("HPM_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  long v = std::strtol(env, &end, 10);
  if (end == env || v <= 1) return 1;
  if (v > 256) v = 256;
  return static_cast<unsigned>(v);
}

// Runs body(y) for y in [0, height). Rows are assigned to workers in fixed
// contiguous blocks, and every row is written by exactly one worker, so the
// result is bitwise independent of the thread count. Reductions must not go
// through here; keep them serial.
template <class F>
void parallel_for_rows(std::size_t height, std::size_t width, F&& body) {
  const unsigned nt = requested_threads();
  if (nt <= 1 || height * width < parallel_min_pixels || height < 2) {
    for (std::size_t y = 0; y < height; ++y) body(y);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(nt, height);
  const std::size_t chunk = (height + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t y0 = w * chunk;
    const std::size_t y1 = std::min(height, y0 + chunk);
    if (y0 >= y1) break;
    pool.emplace_back([y0, y1, &body] {
      for (std::size_t y = y0; y < y1; ++y) body(y);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace hpmflow
