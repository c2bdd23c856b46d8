#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "csocnn/data/dataset.hpp"

namespace csocnn::data {

// Per-column statistics of the training split, computed over finite values.
struct ScalerStats {
  std::vector<double> min;
  std::vector<double> max;
  std::vector<double> median;

  std::size_t num_features() const noexcept { return min.size(); }
  // Stable hex digest of the statistics; models record it so inference can
  // refuse records scaled with different statistics.
  std::string fingerprint() const;

  nlohmann::json to_json() const;
  // Throws FormatError on malformed input or a fingerprint mismatch.
  static ScalerStats from_json(const nlohmann::json& j);

  friend bool operator==(const ScalerStats&, const ScalerStats&) = default;
};

struct CleaningReport {
  std::size_t nan_replaced = 0;     // -> column median
  std::size_t posinf_replaced = 0;  // -> column max
  std::size_t neginf_replaced = 0;  // -> column min
  std::size_t clamped = 0;          // scaled value fell outside [0, 1]

  std::size_t replaced() const noexcept {
    return nan_replaced + posinf_replaced + neginf_replaced;
  }
  CleaningReport& operator+=(const CleaningReport& o);
};

// Throws PreconditionError on an empty or ragged training partition.
ScalerStats fit_scaler(std::span<const FlowRecord> train);

// Imputes non-finite values, min-max scales with `stats`, clamps to [0, 1].
// Constant columns map to 0.
CleaningReport apply_scaler(std::span<FlowRecord> records, const ScalerStats& stats);

struct CleanScaleResult {
  std::vector<FlowRecord> records;
  ScalerStats stats;
  CleaningReport report;
};

// Fits on `train` and transforms it.
CleanScaleResult clean_and_scale(std::vector<FlowRecord> train);

}  // namespace csocnn::data
