#include "csocnn/data/scaler.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>

#include <fmt/format.h>

#include "csocnn/error.hpp"

namespace csocnn::data {

CleaningReport& CleaningReport::operator+=(const CleaningReport& o) {
  nan_replaced += o.nan_replaced;
  posinf_replaced += o.posinf_replaced;
  neginf_replaced += o.neginf_replaced;
  clamped += o.clamped;
  return *this;
}

std::string ScalerStats::fingerprint() const {
  // FNV-1a over the raw bit patterns.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffu;
      h *= 0x100000001b3ULL;
    }
  };
  mix(min.size());
  for (const auto* column : {&min, &max, &median}) {
    for (double v : *column) mix(std::bit_cast<std::uint64_t>(v));
  }
  return fmt::format("{:016x}", h);
}

nlohmann::json ScalerStats::to_json() const {
  return {{"kind", "minmax"},
          {"version", 1},
          {"fingerprint", fingerprint()},
          {"min", min},
          {"max", max},
          {"median", median}};
}

ScalerStats ScalerStats::from_json(const nlohmann::json& j) {
  ScalerStats s;
  try {
    s.min = j.at("min").get<std::vector<double>>();
    s.max = j.at("max").get<std::vector<double>>();
    s.median = j.at("median").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed scaler statistics: ") + e.what());
  }
  if (s.max.size() != s.min.size() || s.median.size() != s.min.size()) {
    throw FormatError("scaler statistics columns have different lengths");
  }
  if (j.contains("fingerprint") && j.at("fingerprint").get<std::string>() != s.fingerprint()) {
    throw FormatError("scaler statistics fingerprint does not match their contents");
  }
  return s;
}

ScalerStats fit_scaler(std::span<const FlowRecord> train) {
  if (train.empty()) throw PreconditionError("cannot fit a scaler on an empty partition");
  const std::size_t d = train.front().features.size();
  ScalerStats s;
  s.min.assign(d, 0.0);
  s.max.assign(d, 0.0);
  s.median.assign(d, 0.0);
  std::vector<double> column;
  column.reserve(train.size());
  for (std::size_t k = 0; k < d; ++k) {
    column.clear();
    for (const auto& r : train) {
      if (r.features.size() != d) throw PreconditionError("ragged training records");
      if (std::isfinite(r.features[k])) column.push_back(r.features[k]);
    }
    if (column.empty()) continue;
    const auto [lo, hi] = std::minmax_element(column.begin(), column.end());
    s.min[k] = *lo;
    s.max[k] = *hi;
    const std::size_t mid = column.size() / 2;
    std::nth_element(column.begin(), column.begin() + static_cast<std::ptrdiff_t>(mid),
                     column.end());
    double median = column[mid];
    if (column.size() % 2 == 0) {
      const double lower =
          *std::max_element(column.begin(), column.begin() + static_cast<std::ptrdiff_t>(mid));
      median = lower + (median - lower) / 2.0;
    }
    s.median[k] = median;
  }
  return s;
}

CleaningReport apply_scaler(std::span<FlowRecord> records, const ScalerStats& stats) {
  CleaningReport report;
  const std::size_t d = stats.num_features();
  for (auto& r : records) {
    if (r.features.size() != d) {
      throw ShapeError("record has " + std::to_string(r.features.size()) +
                       " features, scaler expects " + std::to_string(d));
    }
    for (std::size_t k = 0; k < d; ++k) {
      double& v = r.features[k];
      if (std::isnan(v)) {
        v = stats.median[k];
        ++report.nan_replaced;
      } else if (std::isinf(v)) {
        if (v > 0) {
          v = stats.max[k];
          ++report.posinf_replaced;
        } else {
          v = stats.min[k];
          ++report.neginf_replaced;
        }
      }
      const double range = stats.max[k] - stats.min[k];
      double scaled = range > 0.0 ? (v - stats.min[k]) / range : 0.0;
      if (scaled < 0.0 || scaled > 1.0) {
        scaled = std::clamp(scaled, 0.0, 1.0);
        ++report.clamped;
      }
      v = scaled;
    }
  }
  return report;
}

CleanScaleResult clean_and_scale(std::vector<FlowRecord> train) {
  CleanScaleResult result;
  result.stats = fit_scaler(train);
  result.report = apply_scaler(train, result.stats);
  result.records = std::move(train);
  return result;
}

}  // namespace csocnn::data
