#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "msf/error.hpp"

namespace msf {

struct GradCheckOptions {
  double eps = 1e-5;
  // Coordinates probed per parameter buffer; buffers at or below this size are
  // checked exhaustively.
  std::size_t samples_per_buffer = 24;
  std::uint64_t seed = 0;
  // Denominator floor so that coordinates whose true gradient is ~0 are judged
  // on absolute error instead of blowing up the ratio.
  double abs_floor = 1e-5;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
  std::size_t worst_buffer = 0;
  std::size_t worst_index = 0;
};

// Compares `analytic` against central differences of `loss` at the current
// `params`. Every probed coordinate is restored bit-exactly before the next one.
inline GradCheckReport grad_check(const std::function<double()>& loss,
                                  const std::vector<std::span<double>>& params,
                                  const std::vector<std::span<const double>>& analytic,
                                  const GradCheckOptions& options = {}) {
  if (params.size() != analytic.size()) throw ShapeError("grad_check: buffer count mismatch");
  if (!(options.eps >= 1e-6 && options.eps <= 1e-4)) {
    throw ConfigError("grad_check: eps must lie in [1e-6, 1e-4]");
  }
  std::mt19937_64 rng(options.seed);
  GradCheckReport report;
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto p = params[b];
    if (p.size() != analytic[b].size()) throw ShapeError("grad_check: buffer shape mismatch");
    std::vector<std::size_t> coords(p.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (coords.size() > options.samples_per_buffer) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.samples_per_buffer);
    }
    for (std::size_t k : coords) {
      const double saved = p[k];
      p[k] = saved + options.eps;
      const double plus = loss();
      p[k] = saved - options.eps;
      const double minus = loss();
      p[k] = saved;
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        throw NumericError("grad_check: non-finite loss while probing parameters");
      }
      const double numeric = (plus - minus) / (2.0 * options.eps);
      const double exact = analytic[b][k];
      const double denom = std::max({std::abs(numeric), std::abs(exact), options.abs_floor});
      const double rel = std::abs(numeric - exact) / denom;
      ++report.checked;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_buffer = b;
        report.worst_index = k;
      }
    }
  }
  return report;
}

}  // namespace msf
