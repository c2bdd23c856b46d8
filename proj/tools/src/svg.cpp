#include "csocnn_cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace csocnn::cli::svg {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 160, kTop = 40, kBottom = 60;
constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string header(double w, double h) {
  return fmt::format(
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n",
      w, h);
}

std::string num(double v) { return fmt::format("{:.2f}", v); }

}  // namespace

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string render(const LineChart& chart) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : chart.series) {
    for (const auto& p : s.points) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) continue;
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
    }
  }
  if (!(x0 <= x1)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x0 == x1) x0 -= 0.5, x1 += 0.5;
  if (y0 == y1) y0 -= 0.5, y1 += 0.5;

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return kTop + ph - (y - y0) / (y1 - y0) * ph; };

  std::string out = header(kWidth, kHeight);
  out += fmt::format("<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
                     num(kLeft + pw / 2), escape(chart.title));
  out += fmt::format(
      "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\"/>\n",
      num(kLeft), num(kTop), num(pw), num(ph));
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4.0, fy = y0 + (y1 - y0) * i / 4.0;
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{:.3g}</text>\n",
                       num(sx(fx)), num(kTop + ph + 18), fx);
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3g}</text>\n",
                       num(kLeft - 6), num(sy(fy) + 4), fy);
  }
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                     num(kLeft + pw / 2), num(kHeight - 15), escape(chart.x_label));
  out += fmt::format(
      "<text x=\"18\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {0})\">{1}"
      "</text>\n",
      num(kTop + ph / 2), escape(chart.y_label));
  if (chart.diagonal) {
    out += fmt::format(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#999\" stroke-dasharray=\"4 4\"/>\n",
        num(sx(std::max(x0, y0))), num(sy(std::max(x0, y0))), num(sx(std::min(x1, y1))),
        num(sy(std::min(x1, y1))));
  }

  for (std::size_t i = 0; i < chart.series.size(); ++i) {
    const auto& s = chart.series[i];
    const char* color = kPalette[i % std::size(kPalette)];
    std::string points, data;
    for (const auto& p : s.points) {
      if (!data.empty()) data += ' ';
      data += p.x_text + ',' + p.y_text;
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) continue;
      if (!points.empty()) points += ' ';
      points += num(sx(p.x)) + ',' + num(sy(p.y));
    }
    out += fmt::format("<g data-series=\"{}\" data-points=\"{}\">\n", escape(s.name),
                       escape(data));
    out += fmt::format(
        "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", color,
        points);
    const double ly = kTop + 14 + 18 * static_cast<double>(i);
    out += fmt::format(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
        num(kLeft + pw + 12), num(ly), num(kLeft + pw + 32), num(ly), color);
    out += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n</g>\n", num(kLeft + pw + 38),
                       num(ly + 4), escape(s.name));
  }
  out += "</svg>\n";
  return out;
}

std::string render(const Heatmap& map) {
  const std::size_t k = map.labels.size();
  const double cell = 64, left = 120, top = 60;
  const double w = left + cell * static_cast<double>(k) + 20;
  const double h = top + cell * static_cast<double>(k) + 50;

  double peak = 0.0;
  for (const auto& row : map.cells) {
    for (const auto& c : row) peak = std::max(peak, std::stod(c));
  }

  std::string out = header(w, h);
  out += fmt::format("<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
                     num(w / 2), escape(map.title));
  for (std::size_t i = 0; i < k; ++i) {
    const double y = top + cell * static_cast<double>(i);
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", num(left - 8),
                       num(y + cell / 2 + 4), escape(map.labels[i]));
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                       num(left + cell * static_cast<double>(i) + cell / 2), num(top - 8),
                       escape(map.labels[i]));
    for (std::size_t j = 0; j < k; ++j) {
      const double x = left + cell * static_cast<double>(j);
      const double v = std::stod(map.cells[i][j]);
      const double t = peak > 0 ? v / peak : 0.0;
      const int shade = static_cast<int>(std::lround(255 - 200 * t));
      out += fmt::format(
          "<g data-row=\"{}\" data-col=\"{}\" data-value=\"{}\">"
          "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"rgb({},{},255)\" "
          "stroke=\"white\"/>"
          "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"{}\">{}</text></g>\n",
          i, j, escape(map.cells[i][j]), num(x), num(y), num(cell), num(cell), shade, shade,
          num(x + cell / 2), num(y + cell / 2 + 4), t > 0.6 ? "white" : "black",
          escape(map.cells[i][j]));
    }
  }
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">Predicted</text>\n",
                     num(left + cell * static_cast<double>(k) / 2), num(h - 15));
  out += "</svg>\n";
  return out;
}

}  // namespace csocnn::cli::svg
