#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "csocnn/nn/tensor.hpp"

namespace csocnn::data {

inline constexpr std::size_t kFlowFeatureCount = 75;

struct FlowRecord {
  std::vector<double> features;
  int label = 0;

  friend bool operator==(const FlowRecord&, const FlowRecord&) = default;
};

// Ordered class names <-> codes 0..K-1.
class LabelCodec {
 public:
  LabelCodec() = default;
  // Throws LabelError on duplicate names.
  explicit LabelCodec(std::vector<std::string> names);

  // Benign, Data, Establish, Lateral, Reconn.
  static LabelCodec apt_stages();

  int encode(std::string_view name) const;
  const std::string& decode(int code) const;
  bool contains(std::string_view name) const;
  std::size_t size() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }

  friend bool operator==(const LabelCodec&, const LabelCodec&) = default;

 private:
  std::vector<std::string> names_;
};

struct CsvSchema {
  std::string label_column = "Label";
  // Number of numeric feature columns expected after dropping the label and
  // ignored columns; 0 accepts any count.
  std::size_t expected_features = kFlowFeatureCount;
  // Fixed class order. Empty means "sorted unique labels seen in the file".
  std::vector<std::string> class_names;
  // Non-feature columns (identifiers, addresses, timestamps) to skip.
  std::vector<std::string> ignore_columns;
  // When false a missing label column is allowed (inference streams).
  bool require_label = true;
};

struct LoadStats {
  std::size_t rows = 0;
  std::size_t nan_values = 0;          // literal NaN cells
  std::size_t inf_values = 0;          // +-Inf cells
  std::size_t unparseable_values = 0;  // cells that are not numbers; loaded as NaN
};

struct Dataset {
  std::vector<std::string> feature_names;
  LabelCodec codec;
  std::vector<FlowRecord> records;
  LoadStats stats;
};

// Streaming reader: header on construction, one record per next().
class CsvReader {
 public:
  struct Row {
    std::vector<double> features;
    std::optional<std::string> label;
    std::size_t line = 0;
  };

  // Throws SchemaError when the header does not satisfy the schema.
  CsvReader(std::istream& in, CsvSchema schema);

  // Throws ParseError (with the 1-based line number) on a ragged row.
  std::optional<Row> next();

  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  bool has_label() const noexcept { return label_index_.has_value(); }
  const LoadStats& stats() const noexcept { return stats_; }

 private:
  std::istream& in_;
  CsvSchema schema_;
  std::vector<std::string> feature_names_;
  std::vector<std::size_t> feature_index_;
  std::optional<std::size_t> label_index_;
  std::size_t columns_ = 0;
  std::size_t line_ = 0;
  LoadStats stats_;
};

std::vector<std::string> split_csv_line(std::string_view line);

Dataset parse_csv(std::istream& in, const CsvSchema& schema);
// Throws IoError if the file cannot be opened.
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);

// Header is feature names then `label_column`; values round-trip exactly.
// With include_label false the label column is omitted.
void write_csv(std::ostream& out, const Dataset& ds, std::string_view label_column = "Label",
               bool include_label = true);

// Network batch built from cleaned records.
template <typename T>
struct BasicNetworkInput {
  nn::BasicTensor<T> batch;  // (n, features, 1, 1)
  std::vector<int> labels;
};
using NetworkInput = BasicNetworkInput<float>;

// Feature k of record i lands at element (i, k, 0, 0).
template <typename T = float>
BasicNetworkInput<T> to_network_input(std::span<const FlowRecord> records,
                                      std::size_t num_features = kFlowFeatureCount);

extern template BasicNetworkInput<float> to_network_input<float>(std::span<const FlowRecord>,
                                                                 std::size_t);
extern template BasicNetworkInput<double> to_network_input<double>(std::span<const FlowRecord>,
                                                                   std::size_t);

}  // namespace csocnn::data
