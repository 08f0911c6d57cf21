#pragma once

#include <string>
#include <utility>
#include <vector>

namespace gse::svg {

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
  std::string color = "#1f6fb2";
  bool line = false;  // polyline instead of markers
};

/// Static SVG 1.1 chart with axes, tick labels, and a small legend.
/// Written atomically (temp file + rename).
void write_chart(const std::string& path, const std::string& title,
                 const std::vector<Series>& series, const std::string& x_label,
                 const std::string& y_label);

}  // namespace gse::svg
