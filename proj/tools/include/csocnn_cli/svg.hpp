#pragma once

#include <string>
#include <vector>

namespace csocnn::cli::svg {

// Values are kept as the exact text written to the sibling CSV so the chart
// can be checked against it; `x`/`y` are their parsed values.
struct Point {
  std::string x_text;
  std::string y_text;
  double x = 0.0;
  double y = 0.0;
};

struct Series {
  std::string name;
  std::vector<Point> points;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  bool diagonal = false;  // dashed y = x reference line (ROC)
};

// Standalone SVG document. Each series is a <g data-series="..."> holding a
// polyline and a data-points attribute with the CSV text pairs.
std::string render(const LineChart& chart);

struct Heatmap {
  std::string title;
  std::vector<std::string> labels;           // row and column labels
  std::vector<std::vector<std::string>> cells;  // CSV text of each count
};

std::string render(const Heatmap& map);

std::string escape(const std::string& text);

}  // namespace csocnn::cli::svg
