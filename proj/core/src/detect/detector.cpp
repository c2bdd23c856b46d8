#include "csocnn/detect/detector.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "csocnn/error.hpp"

namespace csocnn::detect {

std::string to_string(ScoreKind kind) {
  return kind == ScoreKind::non_benign_mass ? "non_benign_mass" : "one_minus_max_prob";
}

std::string to_string(Verdict verdict) {
  return verdict == Verdict::normal ? "normal" : "anomalous";
}

ScoreKind score_kind_from_string(std::string_view name) {
  if (name == "non_benign_mass") return ScoreKind::non_benign_mass;
  if (name == "one_minus_max_prob") return ScoreKind::one_minus_max_prob;
  throw PreconditionError("unknown score kind '" + std::string(name) + "'");
}

void DetectionPolicy::validate(std::size_t num_classes) const {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw PreconditionError("threshold must lie in [0, 1]");
  }
  if (benign_class_index >= num_classes) {
    throw PreconditionError("benign class index " + std::to_string(benign_class_index) +
                            " is not a valid class");
  }
}

double anomaly_score(std::span<const float> probabilities, const DetectionPolicy& policy) {
  if (probabilities.empty()) throw ShapeError("empty probability vector");
  double s = 0.0;
  if (policy.score_kind == ScoreKind::non_benign_mass) {
    if (policy.benign_class_index >= probabilities.size()) {
      throw PreconditionError("benign class index out of range");
    }
    s = 1.0 - static_cast<double>(probabilities[policy.benign_class_index]);
  } else {
    s = 1.0 - static_cast<double>(*std::max_element(probabilities.begin(), probabilities.end()));
  }
  return std::clamp(s, 0.0, 1.0);
}

Verdict verdict_for(double score, double threshold) {
  return score > threshold ? Verdict::anomalous : Verdict::normal;
}

Detection detect(std::span<const float> probabilities, const DetectionPolicy& policy) {
  Detection d;
  d.score = anomaly_score(probabilities, policy);
  d.verdict = verdict_for(d.score, policy.threshold);
  d.predicted_class = static_cast<int>(
      std::max_element(probabilities.begin(), probabilities.end()) - probabilities.begin());
  d.probabilities.assign(probabilities.begin(), probabilities.end());
  return d;
}

double calibrate_from_scores(std::span<const double> scores, std::span<const bool> anomalous,
                             const CalibrationTarget& target) {
  if (scores.size() != anomalous.size()) throw ShapeError("score and label counts differ");
  const auto positives =
      static_cast<std::size_t>(std::count(anomalous.begin(), anomalous.end(), true));
  const std::size_t negatives = anomalous.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw DegenerateClass("calibration needs both benign and non-benign records");
  }

  std::vector<double> candidates(scores.begin(), scores.end());
  candidates.push_back(0.0);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  double best_threshold = candidates.front();
  double best_f1 = -1.0;
  for (double t : candidates) {
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (verdict_for(scores[i], t) != Verdict::anomalous) continue;
      if (anomalous[i]) {
        ++tp;
      } else {
        ++fp;
      }
    }
    if (target.kind == CalibrationTarget::Kind::fpr_at) {
      const double fpr = static_cast<double>(fp) / static_cast<double>(negatives);
      if (fpr <= target.max_fpr) return t;
      continue;
    }
    const std::size_t fn = positives - tp;
    const double f1 = tp == 0 ? 0.0
                              : 2.0 * static_cast<double>(tp) /
                                    static_cast<double>(2 * tp + fp + fn);
    if (f1 > best_f1) {
      best_f1 = f1;
      best_threshold = t;
    }
  }
  if (target.kind == CalibrationTarget::Kind::fpr_at) {
    // The largest candidate flags nothing, so this is reached only for x < 0.
    throw PreconditionError("false-positive target must be non-negative");
  }
  return best_threshold;
}

Detector::Detector(nn::ModelFile model, data::ScalerStats stats, DetectionPolicy policy)
    : model_(std::move(model)), stats_(std::move(stats)), policy_(policy) {
  policy_.validate(model_.network.num_classes());
  const auto& meta = model_.metadata;
  if (!meta.is_object() || !meta.contains(kScalerFingerprintKey)) {
    throw ScalerMismatch("model records no scaler fingerprint; retrain or re-export the model");
  }
  const auto expected = meta.at(kScalerFingerprintKey).get<std::string>();
  if (expected != stats_.fingerprint()) {
    throw ScalerMismatch("scaler statistics " + stats_.fingerprint() +
                         " do not match the model's " + expected +
                         "; use the scaler.json written next to the model");
  }
  if (stats_.num_features() != model_.network.input_shape().front()) {
    throw ScalerMismatch("scaler feature count differs from the model input");
  }
}

Detector Detector::from_model(nn::ModelFile model, DetectionPolicy policy) {
  if (!model.metadata.is_object() || !model.metadata.contains(kScalerKey)) {
    throw ModelFormatError("model metadata carries no scaler statistics");
  }
  auto stats = data::ScalerStats::from_json(model.metadata.at(kScalerKey));
  return Detector(std::move(model), std::move(stats), policy);
}

void Detector::set_threshold(double threshold) {
  DetectionPolicy next = policy_;
  next.threshold = threshold;
  next.validate(model_.network.num_classes());
  policy_ = next;
}

Detection Detector::score(const data::FlowRecord& record) const {
  return std::move(score_batch(std::span(&record, 1)).front());
}

std::vector<Detection> Detector::score_batch(std::span<const data::FlowRecord> records) const {
  std::vector<data::FlowRecord> scaled(records.begin(), records.end());
  data::apply_scaler(scaled, stats_);
  const auto input = data::to_network_input(std::span<const data::FlowRecord>(scaled),
                                            stats_.num_features());
  std::vector<Detection> out;
  out.reserve(records.size());
  if (records.empty()) return out;
  const auto probs = model_.network.predict(input.batch);
  const std::size_t k = probs.dim(1);
  for (std::size_t i = 0; i < records.size(); ++i) {
    out.push_back(detect(probs.data().subspan(i * k, k), policy_));
  }
  return out;
}

double Detector::calibrate_threshold(std::span<const data::FlowRecord> records,
                                     const CalibrationTarget& target) const {
  const auto detections = score_batch(records);
  std::vector<double> scores;
  auto anomalous = std::make_unique<bool[]>(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    scores.push_back(detections[i].score);
    anomalous[i] = records[i].label != static_cast<int>(policy_.benign_class_index);
  }
  return calibrate_from_scores(scores, std::span<const bool>(anomalous.get(), records.size()),
                               target);
}

}  // namespace csocnn::detect
