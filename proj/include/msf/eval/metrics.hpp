#pragma once

#include <span>
#include <string>

#include "msf/error.hpp"
#include "msf/eval/split.hpp"

namespace msf {

// Accuracies in percent.
struct GzslMetrics {
  double acc_s = 0.0;
  double acc_u = 0.0;
  double h = 0.0;
};

inline double harmonic_mean(double a, double b) {
  if (a + b == 0.0) return 0.0;
  return 2.0 * a * b / (a + b);
}

inline double zsl_accuracy(std::span<const ClassId> predictions, std::span<const ClassId> truths) {
  if (predictions.size() != truths.size()) throw ShapeError("zsl_accuracy: prediction/truth count mismatch");
  if (truths.empty()) throw EmptyInputError("zsl_accuracy: empty evaluation set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) correct += predictions[i] == truths[i] ? 1 : 0;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(truths.size());
}

// Per-partition accuracies (partition chosen by the true class) and their
// harmonic mean.
inline GzslMetrics gzsl_metrics(std::span<const ClassId> predictions, std::span<const ClassId> truths,
                                const SplitSpec& split) {
  if (predictions.size() != truths.size()) throw ShapeError("gzsl_metrics: prediction/truth count mismatch");
  std::size_t seen_total = 0, seen_correct = 0, unseen_total = 0, unseen_correct = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const bool correct = predictions[i] == truths[i];
    if (split.is_seen(truths[i])) {
      ++seen_total;
      seen_correct += correct ? 1 : 0;
    } else if (split.is_unseen(truths[i])) {
      ++unseen_total;
      unseen_correct += correct ? 1 : 0;
    } else {
      throw LookupError("gzsl_metrics: class " + std::to_string(truths[i]) + " is in neither partition");
    }
  }
  if (seen_total == 0 || unseen_total == 0) {
    throw EmptyInputError("gzsl_metrics: test set lacks " + std::string(seen_total == 0 ? "seen" : "unseen") +
                          " samples");
  }
  GzslMetrics m;
  m.acc_s = 100.0 * static_cast<double>(seen_correct) / static_cast<double>(seen_total);
  m.acc_u = 100.0 * static_cast<double>(unseen_correct) / static_cast<double>(unseen_total);
  m.h = harmonic_mean(m.acc_s, m.acc_u);
  return m;
}

}  // namespace msf
