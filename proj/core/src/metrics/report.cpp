#include "csocnn/metrics/report.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace csocnn::metrics {

namespace {

std::string cell(const Metric& m) { return m ? fmt::format("{:.2f}", *m) : "undef"; }

nlohmann::json maybe(const Metric& m) { return m ? nlohmann::json(*m) : nlohmann::json(nullptr); }

nlohmann::json aggregates(const ScalarMetrics& s, Metric AverageMetrics::*field) {
  return {{"macro", maybe(s.macro.*field)},
          {"weighted", maybe(s.weighted.*field)},
          {"micro", maybe(s.micro.*field)}};
}

}  // namespace

ClassReport class_report(const ConfusionMatrix& cm, ZeroDivision policy) {
  const auto s = scalar_metrics(cm, policy);
  ClassReport r;
  r.accuracy = s.accuracy;
  r.total = cm.total();
  for (std::size_t c = 0; c < cm.num_classes(); ++c) {
    const auto& m = s.per_class[c];
    r.classes.push_back({cm.class_names()[c], m.precision, m.recall, m.f1, m.support});
  }
  r.macro = {"macro avg", s.macro.precision, s.macro.recall, s.macro.f1, r.total};
  r.weighted = {"weighted avg", s.weighted.precision, s.weighted.recall, s.weighted.f1, r.total};
  return r;
}

std::string ClassReport::to_text() const {
  std::size_t width = std::string("weighted avg").size();
  for (const auto& row : classes) width = std::max(width, row.label.size());

  std::string out = fmt::format("{:>{}} {:>10} {:>10} {:>10} {:>10}\n\n", "", width, "Precision",
                                "Recall", "F1-score", "Support");
  auto line = [&](const ReportRow& row) {
    return fmt::format("{:>{}} {:>10} {:>10} {:>10} {:>10}\n", row.label, width,
                       cell(row.precision), cell(row.recall), cell(row.f1), row.support);
  };
  for (const auto& row : classes) out += line(row);
  out += '\n';
  out += fmt::format("{:>{}} {:>10} {:>10} {:>10.2f} {:>10}\n", "accuracy", width, "", "",
                     accuracy, total);
  out += line(macro);
  out += line(weighted);
  return out;
}

nlohmann::json performance_record(double training_accuracy, double validation_accuracy,
                                  const ScalarMetrics& test) {
  nlohmann::json per_class = nlohmann::json::array();
  for (const auto& c : test.per_class) {
    per_class.push_back({{"precision", maybe(c.precision)},
                         {"recall", maybe(c.recall)},
                         {"f1", maybe(c.f1)},
                         {"sensitivity", maybe(c.sensitivity())},
                         {"specificity", maybe(c.specificity)},
                         {"ppv", maybe(c.ppv())},
                         {"npv", maybe(c.npv)},
                         {"support", c.support}});
  }
  return {{"training_accuracy", training_accuracy},
          {"validating_accuracy", validation_accuracy},
          {"testing_accuracy", test.accuracy},
          {"precision_score", aggregates(test, &AverageMetrics::precision)},
          {"recall_score", aggregates(test, &AverageMetrics::recall)},
          {"f1_score", aggregates(test, &AverageMetrics::f1)},
          {"sensitivity", aggregates(test, &AverageMetrics::recall)},
          {"specificity", aggregates(test, &AverageMetrics::specificity)},
          {"ppv", aggregates(test, &AverageMetrics::precision)},
          {"npv", aggregates(test, &AverageMetrics::npv)},
          {"kappa_score", maybe(test.kappa)},
          {"per_class", std::move(per_class)}};
}

const std::vector<std::string>& performance_field_names() {
  static const std::vector<std::string> names{
      "training_accuracy", "validating_accuracy", "testing_accuracy", "precision_score",
      "recall_score",      "f1_score",            "sensitivity",      "specificity",
      "ppv",               "npv",                 "kappa_score"};
  return names;
}

}  // namespace csocnn::metrics
