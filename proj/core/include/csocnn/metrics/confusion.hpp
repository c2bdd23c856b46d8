#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace csocnn::metrics {

// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes, std::vector<std::string> class_names = {});

  // Throws ShapeError unless `counts` is square and non-empty.
  static ConfusionMatrix from_counts(const std::vector<std::vector<std::uint64_t>>& counts,
                                     std::vector<std::string> class_names = {});

  std::size_t num_classes() const noexcept { return k_; }
  const std::vector<std::string>& class_names() const noexcept { return names_; }

  std::uint64_t operator()(std::size_t true_class, std::size_t predicted) const {
    return counts_[true_class * k_ + predicted];
  }
  // Throws LabelError when either label is outside [0, k).
  void add(int true_class, int predicted, std::uint64_t count = 1);

  std::uint64_t total() const noexcept;
  std::uint64_t trace() const noexcept;
  std::uint64_t row_sum(std::size_t c) const;
  std::uint64_t col_sum(std::size_t c) const;

  // Header: true\predicted,<names...>; one row per true class.
  void write_csv(std::ostream& out) const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t k_;
  std::vector<std::string> names_;
  std::vector<std::uint64_t> counts_;
};

ConfusionMatrix confusion(std::span<const int> true_labels, std::span<const int> predicted_labels,
                          std::size_t num_classes, std::vector<std::string> class_names = {});

struct BasicRates {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  friend bool operator==(const BasicRates&, const BasicRates&) = default;
};

// One-vs-rest counts for `class_index`. Throws LabelError on a bad index.
BasicRates basic_rates(const ConfusionMatrix& cm, std::size_t class_index);

// A ratio with a zero denominator is undefined; `coerce_zero` reports it as 0.
enum class ZeroDivision { undefined, coerce_zero };

using Metric = std::optional<double>;

// Returns the value or throws UndefinedMetric naming `what`.
double require_defined(const Metric& value, const std::string& what);

struct ClassMetrics {
  Metric precision;  // also reported as PPV
  Metric recall;     // also reported as sensitivity
  Metric f1;
  Metric specificity;
  Metric npv;
  std::uint64_t support = 0;

  const Metric& ppv() const noexcept { return precision; }
  const Metric& sensitivity() const noexcept { return recall; }
};

struct AverageMetrics {
  Metric precision;
  Metric recall;
  Metric f1;
  Metric specificity;
  Metric npv;
};

struct ScalarMetrics {
  double accuracy = 0.0;
  double observed_agreement = 0.0;  // p_o
  double chance_agreement = 0.0;    // p_e
  Metric kappa;
  std::vector<ClassMetrics> per_class;
  AverageMetrics macro;
  AverageMetrics weighted;
  AverageMetrics micro;
};

// Throws UndefinedMetric on an empty matrix.
ScalarMetrics scalar_metrics(const ConfusionMatrix& cm,
                             ZeroDivision policy = ZeroDivision::undefined);

// Harmonic mean; undefined when either input is undefined or both are zero.
Metric f1_score(const Metric& precision, const Metric& recall);

// Cohen's kappa from observed and chance agreement; undefined when p_e == 1.
Metric cohen_kappa(double observed, double chance);

}  // namespace csocnn::metrics
