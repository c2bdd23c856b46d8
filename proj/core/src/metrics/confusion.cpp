#include "csocnn/metrics/confusion.hpp"

#include <array>
#include <ostream>
#include <utility>

#include "csocnn/error.hpp"

namespace csocnn::metrics {

namespace {

Metric ratio(std::uint64_t num, std::uint64_t den, ZeroDivision policy) {
  if (den == 0) return policy == ZeroDivision::coerce_zero ? Metric(0.0) : std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

Metric apply_policy(Metric value, ZeroDivision policy) {
  if (!value && policy == ZeroDivision::coerce_zero) return 0.0;
  return value;
}

Metric macro_mean(const std::vector<ClassMetrics>& rows, Metric ClassMetrics::*field) {
  double sum = 0.0;
  for (const auto& r : rows) {
    if (!(r.*field)) return std::nullopt;
    sum += *(r.*field);
  }
  return sum / static_cast<double>(rows.size());
}

Metric weighted_mean(const std::vector<ClassMetrics>& rows, Metric ClassMetrics::*field,
                     std::uint64_t total) {
  double sum = 0.0;
  for (const auto& r : rows) {
    if (r.support == 0) continue;
    if (!(r.*field)) return std::nullopt;
    sum += static_cast<double>(r.support) * *(r.*field);
  }
  return sum / static_cast<double>(total);
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes, std::vector<std::string> class_names)
    : k_(num_classes), names_(std::move(class_names)), counts_(num_classes * num_classes, 0) {
  if (k_ == 0) throw ShapeError("confusion matrix needs at least one class");
  if (names_.empty()) {
    for (std::size_t c = 0; c < k_; ++c) names_.push_back(std::to_string(c));
  }
  if (names_.size() != k_) throw ShapeError("class name count differs from class count");
}

ConfusionMatrix ConfusionMatrix::from_counts(const std::vector<std::vector<std::uint64_t>>& counts,
                                             std::vector<std::string> class_names) {
  ConfusionMatrix cm(counts.size(), std::move(class_names));
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i].size() != counts.size()) throw ShapeError("confusion counts must be square");
    for (std::size_t j = 0; j < counts.size(); ++j) cm.counts_[i * cm.k_ + j] = counts[i][j];
  }
  return cm;
}

void ConfusionMatrix::add(int true_class, int predicted, std::uint64_t count) {
  const auto k = static_cast<int>(k_);
  if (true_class < 0 || true_class >= k || predicted < 0 || predicted >= k) {
    throw LabelError("label pair (" + std::to_string(true_class) + ", " +
                     std::to_string(predicted) + ") outside [0, " + std::to_string(k) + ")");
  }
  counts_[static_cast<std::size_t>(true_class) * k_ + static_cast<std::size_t>(predicted)] +=
      count;
}

std::uint64_t ConfusionMatrix::total() const noexcept {
  std::uint64_t t = 0;
  for (auto c : counts_) t += c;
  return t;
}

std::uint64_t ConfusionMatrix::trace() const noexcept {
  std::uint64_t t = 0;
  for (std::size_t c = 0; c < k_; ++c) t += counts_[c * k_ + c];
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t c) const {
  std::uint64_t t = 0;
  for (std::size_t j = 0; j < k_; ++j) t += counts_[c * k_ + j];
  return t;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t c) const {
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < k_; ++i) t += counts_[i * k_ + c];
  return t;
}

void ConfusionMatrix::write_csv(std::ostream& out) const {
  out << "true\\predicted";
  for (const auto& n : names_) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < k_; ++i) {
    out << names_[i];
    for (std::size_t j = 0; j < k_; ++j) out << ',' << counts_[i * k_ + j];
    out << '\n';
  }
}

ConfusionMatrix confusion(std::span<const int> true_labels, std::span<const int> predicted_labels,
                          std::size_t num_classes, std::vector<std::string> class_names) {
  if (true_labels.size() != predicted_labels.size()) {
    throw ShapeError("true and predicted label counts differ");
  }
  ConfusionMatrix cm(num_classes, std::move(class_names));
  for (std::size_t i = 0; i < true_labels.size(); ++i) cm.add(true_labels[i], predicted_labels[i]);
  return cm;
}

BasicRates basic_rates(const ConfusionMatrix& cm, std::size_t class_index) {
  if (class_index >= cm.num_classes()) {
    throw LabelError("class index " + std::to_string(class_index) + " out of range");
  }
  BasicRates r;
  r.tp = cm(class_index, class_index);
  r.fn = cm.row_sum(class_index) - r.tp;
  r.fp = cm.col_sum(class_index) - r.tp;
  r.tn = cm.total() - r.tp - r.fn - r.fp;
  return r;
}

double require_defined(const Metric& value, const std::string& what) {
  if (!value) throw UndefinedMetric(what + " is undefined (zero denominator)");
  return *value;
}

Metric f1_score(const Metric& precision, const Metric& recall) {
  if (!precision || !recall) return std::nullopt;
  const double p = *precision, r = *recall;
  if (p + r == 0.0) return std::nullopt;
  return 2.0 * p * r / (p + r);
}

Metric cohen_kappa(double observed, double chance) {
  if (chance == 1.0) return std::nullopt;
  return (observed - chance) / (1.0 - chance);
}

ScalarMetrics scalar_metrics(const ConfusionMatrix& cm, ZeroDivision policy) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw UndefinedMetric("metrics of an empty confusion matrix");
  const std::size_t k = cm.num_classes();

  ScalarMetrics m;
  m.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);
  m.observed_agreement = m.accuracy;
  std::uint64_t chance_num = 0;
  for (std::size_t c = 0; c < k; ++c) chance_num += cm.row_sum(c) * cm.col_sum(c);
  m.chance_agreement =
      static_cast<double>(chance_num) / (static_cast<double>(total) * static_cast<double>(total));
  m.kappa = apply_policy(cohen_kappa(m.observed_agreement, m.chance_agreement), policy);

  BasicRates sum;
  for (std::size_t c = 0; c < k; ++c) {
    const auto r = basic_rates(cm, c);
    sum.tp += r.tp;
    sum.fp += r.fp;
    sum.tn += r.tn;
    sum.fn += r.fn;
    ClassMetrics row;
    row.precision = ratio(r.tp, r.tp + r.fp, policy);
    row.recall = ratio(r.tp, r.tp + r.fn, policy);
    row.f1 = apply_policy(f1_score(row.precision, row.recall), policy);
    row.specificity = ratio(r.tn, r.tn + r.fp, policy);
    row.npv = ratio(r.tn, r.tn + r.fn, policy);
    row.support = r.tp + r.fn;
    m.per_class.push_back(row);
  }

  using Field = std::pair<Metric ClassMetrics::*, Metric AverageMetrics::*>;
  const std::array<Field, 5> fields{{{&ClassMetrics::precision, &AverageMetrics::precision},
                                     {&ClassMetrics::recall, &AverageMetrics::recall},
                                     {&ClassMetrics::f1, &AverageMetrics::f1},
                                     {&ClassMetrics::specificity, &AverageMetrics::specificity},
                                     {&ClassMetrics::npv, &AverageMetrics::npv}}};
  for (const auto& [from, to] : fields) {
    m.macro.*to = apply_policy(macro_mean(m.per_class, from), policy);
    m.weighted.*to = apply_policy(weighted_mean(m.per_class, from, total), policy);
  }

  m.micro.precision = ratio(sum.tp, sum.tp + sum.fp, policy);
  m.micro.recall = ratio(sum.tp, sum.tp + sum.fn, policy);
  m.micro.f1 = apply_policy(f1_score(m.micro.precision, m.micro.recall), policy);
  m.micro.specificity = ratio(sum.tn, sum.tn + sum.fp, policy);
  m.micro.npv = ratio(sum.tn, sum.tn + sum.fn, policy);
  return m;
}

}  // namespace csocnn::metrics
