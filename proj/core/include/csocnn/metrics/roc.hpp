#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "csocnn/nn/tensor.hpp"

namespace csocnn::metrics {

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  // a sample is predicted positive iff score >= threshold

  friend bool operator==(const RocPoint&, const RocPoint&) = default;
};

struct RocCurve {
  std::vector<RocPoint> points;  // from (0,0) at +inf to (1,1) at the lowest score
  double auc = 0.0;
};

// Sweeps the sorted unique scores in descending order. Throws DegenerateClass
// when there are no positives or no negatives.
RocCurve roc_from_scores(std::span<const double> scores, std::span<const bool> positive);

// One-vs-rest curve for `class_index`, scored by that class's probability
// column of the (n, K) matrix.
RocCurve roc_curve(std::span<const int> true_labels, const nn::Tensor& probabilities,
                   std::size_t class_index);

// All classes pooled: every (sample, class) cell is one binary decision.
RocCurve roc_curve_micro(std::span<const int> true_labels, const nn::Tensor& probabilities);

double trapezoid_auc(std::span<const RocPoint> points);

// Columns: fpr,tpr,threshold
void write_roc_csv(std::ostream& out, const RocCurve& curve);

}  // namespace csocnn::metrics
