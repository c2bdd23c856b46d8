#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "csocnn/data/dataset.hpp"
#include "csocnn/data/scaler.hpp"
#include "csocnn/nn/model_io.hpp"
#include "csocnn/nn/network.hpp"

namespace csocnn::detect {

enum class ScoreKind { non_benign_mass, one_minus_max_prob };
enum class Verdict { normal, anomalous };

std::string to_string(ScoreKind kind);
std::string to_string(Verdict verdict);
// Throws PreconditionError on an unknown name.
ScoreKind score_kind_from_string(std::string_view name);

struct DetectionPolicy {
  double threshold = 0.5;
  ScoreKind score_kind = ScoreKind::non_benign_mass;
  std::size_t benign_class_index = 0;

  // Throws PreconditionError when the threshold leaves [0, 1] or the benign
  // index is not a valid class.
  void validate(std::size_t num_classes) const;
};

struct Detection {
  double score = 0.0;
  Verdict verdict = Verdict::normal;
  int predicted_class = 0;
  std::vector<double> probabilities;
};

double anomaly_score(std::span<const float> probabilities, const DetectionPolicy& policy);

// anomalous iff score > threshold
Verdict verdict_for(double score, double threshold);

Detection detect(std::span<const float> probabilities, const DetectionPolicy& policy);

struct CalibrationTarget {
  enum class Kind { max_f1, fpr_at };
  Kind kind = Kind::max_f1;
  double max_fpr = 0.0;  // for fpr_at

  static CalibrationTarget max_f1() { return {Kind::max_f1, 0.0}; }
  static CalibrationTarget fpr_at(double x) { return {Kind::fpr_at, x}; }
};

// Candidate thresholds are 0 and every distinct score. max_f1 maximizes the
// anomalous-class F1 and takes the lowest threshold on ties; fpr_at(x) takes
// the lowest threshold whose false-positive rate is at most x. Throws
// DegenerateClass unless both classes are present.
double calibrate_from_scores(std::span<const double> scores, std::span<const bool> anomalous,
                             const CalibrationTarget& target);

// Scores raw flow records: imputation and scaling use the statistics the
// model was trained with.
class Detector {
 public:
  // Throws ScalerMismatch when the model's recorded scaler fingerprint
  // differs from `stats`.
  Detector(nn::ModelFile model, data::ScalerStats stats, DetectionPolicy policy);

  // Uses the scaler statistics embedded in the model metadata. Throws
  // ModelFormatError when they are absent.
  static Detector from_model(nn::ModelFile model, DetectionPolicy policy);

  const DetectionPolicy& policy() const noexcept { return policy_; }
  void set_threshold(double threshold);
  const std::vector<std::string>& class_names() const noexcept { return model_.class_names; }
  const nn::Network& network() const noexcept { return model_.network; }
  const data::ScalerStats& scaler() const noexcept { return stats_; }

  Detection score(const data::FlowRecord& record) const;
  std::vector<Detection> score_batch(std::span<const data::FlowRecord> records) const;

  // Labels of `records` are class codes; the benign class is the negative one.
  double calibrate_threshold(std::span<const data::FlowRecord> records,
                             const CalibrationTarget& target) const;

 private:
  nn::ModelFile model_;
  data::ScalerStats stats_;
  DetectionPolicy policy_;
};

// Metadata keys used by model files that carry scaler statistics.
inline constexpr const char* kScalerKey = "scaler";
inline constexpr const char* kScalerFingerprintKey = "scaler_fingerprint";

}  // namespace csocnn::detect
