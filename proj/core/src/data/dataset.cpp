#include "csocnn/data/dataset.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <istream>
#include <set>

#include <fmt/format.h>

#include "csocnn/error.hpp"

namespace csocnn::data {

LabelCodec::LabelCodec(std::vector<std::string> names) : names_(std::move(names)) {
  std::set<std::string_view> seen;
  for (const auto& n : names_) {
    if (!seen.insert(n).second) throw LabelError("duplicate class name '" + n + "'");
  }
}

LabelCodec LabelCodec::apt_stages() {
  return LabelCodec({"Benign", "Data", "Establish", "Lateral", "Reconn"});
}

int LabelCodec::encode(std::string_view name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw LabelError("unknown class '" + std::string(name) + "'");
  return static_cast<int>(it - names_.begin());
}

const std::string& LabelCodec::decode(int code) const {
  if (code < 0 || static_cast<std::size_t>(code) >= names_.size()) {
    throw LabelError("class code " + std::to_string(code) + " outside [0, " +
                     std::to_string(names_.size()) + ")");
  }
  return names_[static_cast<std::size_t>(code)];
}

bool LabelCodec::contains(std::string_view name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

enum class CellKind { number, nan, inf, garbage };

CellKind parse_cell(std::string_view text, double& out) {
  const std::string cell(trim(text));
  if (cell.empty()) {
    out = std::nan("");
    return CellKind::garbage;
  }
  char* end = nullptr;
  errno = 0;
  out = std::strtod(cell.c_str(), &end);
  if (end != cell.c_str() + cell.size()) {
    out = std::nan("");
    return CellKind::garbage;
  }
  if (std::isnan(out)) return CellKind::nan;
  if (std::isinf(out)) return CellKind::inf;
  return CellKind::number;
}

}  // namespace

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else if (ch != '\r' || i + 1 != line.size()) {
      current.push_back(ch);
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

CsvReader::CsvReader(std::istream& in, CsvSchema schema) : in_(in), schema_(std::move(schema)) {
  std::string header;
  if (!std::getline(in_, header)) throw SchemaError("CSV input has no header row");
  line_ = 1;
  if (header.size() >= 3 && header.compare(0, 3, "\xEF\xBB\xBF") == 0) header.erase(0, 3);
  const auto names = split_csv_line(header);
  columns_ = names.size();
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::string name(trim(names[i]));
    if (name == schema_.label_column) {
      if (label_index_) throw SchemaError("label column '" + name + "' appears twice");
      label_index_ = i;
    } else if (std::find(schema_.ignore_columns.begin(), schema_.ignore_columns.end(), name) ==
               schema_.ignore_columns.end()) {
      feature_names_.push_back(name);
      feature_index_.push_back(i);
    }
  }
  if (!label_index_ && schema_.require_label) {
    throw SchemaError("missing label column '" + schema_.label_column + "'");
  }
  if (schema_.expected_features != 0 && feature_index_.size() != schema_.expected_features) {
    throw SchemaError("expected " + std::to_string(schema_.expected_features) +
                      " feature columns, found " + std::to_string(feature_index_.size()));
  }
}

std::optional<CsvReader::Row> CsvReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != columns_) {
      throw ParseError("expected " + std::to_string(columns_) + " fields, found " +
                           std::to_string(fields.size()),
                       line_);
    }
    Row row;
    row.line = line_;
    row.features.resize(feature_index_.size());
    for (std::size_t k = 0; k < feature_index_.size(); ++k) {
      switch (parse_cell(fields[feature_index_[k]], row.features[k])) {
        case CellKind::number: break;
        case CellKind::nan: ++stats_.nan_values; break;
        case CellKind::inf: ++stats_.inf_values; break;
        case CellKind::garbage: ++stats_.unparseable_values; break;
      }
    }
    if (label_index_) {
      const std::string label(trim(fields[*label_index_]));
      if (label.empty()) throw ParseError("empty class label", line_);
      row.label = label;
    }
    ++stats_.rows;
    return row;
  }
  return std::nullopt;
}

Dataset parse_csv(std::istream& in, const CsvSchema& schema) {
  CsvReader reader(in, schema);
  Dataset ds;
  ds.feature_names = reader.feature_names();

  std::vector<std::string> labels;
  std::vector<std::size_t> lines;
  while (auto row = reader.next()) {
    ds.records.push_back({std::move(row->features), 0});
    labels.push_back(row->label.value_or(""));
    lines.push_back(row->line);
  }
  ds.stats = reader.stats();

  if (!schema.class_names.empty()) {
    ds.codec = LabelCodec(schema.class_names);
  } else if (reader.has_label()) {
    std::vector<std::string> names(labels);
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    ds.codec = LabelCodec(std::move(names));
  }
  if (reader.has_label()) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (!ds.codec.contains(labels[i])) {
        throw ParseError("unknown class label '" + labels[i] + "'", lines[i]);
      }
      ds.records[i].label = ds.codec.encode(labels[i]);
    }
  }
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return parse_csv(in, schema);
}

void write_csv(std::ostream& out, const Dataset& ds, std::string_view label_column,
               bool include_label) {
  std::string line;
  for (std::size_t k = 0; k < ds.feature_names.size(); ++k) {
    if (k) line += ',';
    line += ds.feature_names[k];
  }
  if (include_label) line += fmt::format(",{}", label_column);
  out << line << '\n';
  for (const auto& r : ds.records) {
    if (r.features.size() != ds.feature_names.size()) {
      throw ShapeError("record width differs from the feature names");
    }
    line.clear();
    for (std::size_t k = 0; k < r.features.size(); ++k) {
      if (k) line += ',';
      line += fmt::format("{}", r.features[k]);
    }
    if (include_label) line += "," + ds.codec.decode(r.label);
    out << line << '\n';
  }
}

template <typename T>
BasicNetworkInput<T> to_network_input(std::span<const FlowRecord> records,
                                      std::size_t num_features) {
  if (!records.empty()) num_features = records.front().features.size();
  BasicNetworkInput<T> out;
  std::vector<T> values;
  values.reserve(records.size() * num_features);
  out.labels.reserve(records.size());
  for (const auto& r : records) {
    if (r.features.size() != num_features) {
      throw ShapeError("record has " + std::to_string(r.features.size()) + " features, expected " +
                       std::to_string(num_features));
    }
    for (double v : r.features) values.push_back(static_cast<T>(v));
    out.labels.push_back(r.label);
  }
  out.batch = nn::BasicTensor<T>({records.size(), num_features, 1, 1}, std::move(values));
  return out;
}

template BasicNetworkInput<float> to_network_input<float>(std::span<const FlowRecord>,
                                                          std::size_t);
template BasicNetworkInput<double> to_network_input<double>(std::span<const FlowRecord>,
                                                            std::size_t);

}  // namespace csocnn::data
