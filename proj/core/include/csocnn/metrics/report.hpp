#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "csocnn/metrics/confusion.hpp"

namespace csocnn::metrics {

struct ReportRow {
  std::string label;
  Metric precision;
  Metric recall;
  Metric f1;
  std::uint64_t support = 0;
};

struct ClassReport {
  std::vector<ReportRow> classes;
  double accuracy = 0.0;
  std::uint64_t total = 0;
  ReportRow macro;
  ReportRow weighted;

  // Precision / Recall / F1-score / Support columns, values at two decimals,
  // then accuracy, macro avg and weighted avg lines.
  std::string to_text() const;
};

// Rows for classes without support are kept so the layout matches the codec.
ClassReport class_report(const ConfusionMatrix& cm, ZeroDivision policy = ZeroDivision::undefined);

// The performance record: train/validation/test accuracy plus the scalar
// metrics, each aggregate labeled macro, weighted and micro. Undefined values
// are written as null.
nlohmann::json performance_record(double training_accuracy, double validation_accuracy,
                                  const ScalarMetrics& test);

// Field names present in every performance record.
const std::vector<std::string>& performance_field_names();

}  // namespace csocnn::metrics
