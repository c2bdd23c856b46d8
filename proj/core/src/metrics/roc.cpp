#include "csocnn/metrics/roc.hpp"

#include <algorithm>
#include <limits>
#include <memory>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "csocnn/error.hpp"

namespace csocnn::metrics {

double trapezoid_auc(std::span<const RocPoint> points) {
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    area += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) / 2.0;
  }
  return area;
}

RocCurve roc_from_scores(std::span<const double> scores, std::span<const bool> positive) {
  if (scores.size() != positive.size()) throw ShapeError("score and label counts differ");
  const auto pos = static_cast<std::size_t>(std::count(positive.begin(), positive.end(), true));
  const std::size_t neg = positive.size() - pos;
  if (pos == 0) throw DegenerateClass("ROC needs at least one positive sample");
  if (neg == 0) throw DegenerateClass("ROC needs at least one negative sample");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == s; ++i) {
      if (positive[order[i]]) {
        ++tp;
      } else {
        ++fp;
      }
    }
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                            static_cast<double>(tp) / static_cast<double>(pos), s});
  }
  curve.auc = trapezoid_auc(curve.points);
  return curve;
}

RocCurve roc_curve(std::span<const int> true_labels, const nn::Tensor& probabilities,
                   std::size_t class_index) {
  if (probabilities.rank() != 2 || probabilities.dim(0) != true_labels.size()) {
    throw ShapeError("probabilities must be (n, K) with one row per label");
  }
  const std::size_t k = probabilities.dim(1);
  if (class_index >= k) throw LabelError("class index out of range");
  std::vector<double> scores(true_labels.size());
  auto positive = std::make_unique<bool[]>(true_labels.size());
  for (std::size_t i = 0; i < true_labels.size(); ++i) {
    scores[i] = static_cast<double>(probabilities[i * k + class_index]);
    positive[i] = true_labels[i] == static_cast<int>(class_index);
  }
  return roc_from_scores(scores, std::span<const bool>(positive.get(), true_labels.size()));
}

RocCurve roc_curve_micro(std::span<const int> true_labels, const nn::Tensor& probabilities) {
  if (probabilities.rank() != 2 || probabilities.dim(0) != true_labels.size()) {
    throw ShapeError("probabilities must be (n, K) with one row per label");
  }
  const std::size_t n = true_labels.size(), k = probabilities.dim(1);
  std::vector<double> scores(n * k);
  auto positive = std::make_unique<bool[]>(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      scores[i * k + c] = static_cast<double>(probabilities[i * k + c]);
      positive[i * k + c] = true_labels[i] == static_cast<int>(c);
    }
  }
  return roc_from_scores(scores, std::span<const bool>(positive.get(), n * k));
}

void write_roc_csv(std::ostream& out, const RocCurve& curve) {
  out << "fpr,tpr,threshold\n";
  for (const auto& p : curve.points) {
    out << fmt::format("{:.17g},{:.17g},{:.17g}\n", p.fpr, p.tpr, p.threshold);
  }
}

}  // namespace csocnn::metrics
