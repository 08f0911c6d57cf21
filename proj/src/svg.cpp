#include "gse/svg.hpp"

#include "gse/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace gse::svg {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kMargin = 56.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_chart(const std::string& path, const std::string& title,
                 const std::vector<Series>& series, const std::string& x_label,
                 const std::string& y_label) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    for (auto [x, y] : s.points) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (!(xmin <= xmax)) {
    xmin = 0.0;
    xmax = 1.0;
    ymin = 0.0;
    ymax = 1.0;
  }
  if (xmax - xmin < 1e-12) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax - ymin < 1e-12) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  auto px = [&](double x) {
    return kMargin + (x - xmin) / (xmax - xmin) * (kWidth - 2 * kMargin);
  };
  auto py = [&](double y) {
    return kHeight - kMargin - (y - ymin) / (ymax - ymin) * (kHeight - 2 * kMargin);
  };

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">" << escape(title) << "</text>\n";

  // axes with four ticks each
  out << "<g stroke=\"#333\" stroke-width=\"1\" fill=\"none\">"
      << "<path d=\"M" << kMargin << ' ' << kMargin << " L" << kMargin << ' '
      << kHeight - kMargin << " L" << kWidth - kMargin << ' ' << kHeight - kMargin << "\"/></g>\n";
  out << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
  for (int t = 0; t <= 4; ++t) {
    double fx = xmin + (xmax - xmin) * t / 4.0;
    double fy = ymin + (ymax - ymin) * t / 4.0;
    out << "<line x1=\"" << px(fx) << "\" y1=\"" << kHeight - kMargin << "\" x2=\"" << px(fx)
        << "\" y2=\"" << kHeight - kMargin + 4 << "\" stroke=\"#333\"/>"
        << "<text x=\"" << px(fx) << "\" y=\"" << kHeight - kMargin + 16
        << "\" text-anchor=\"middle\">" << num(fx) << "</text>\n";
    out << "<line x1=\"" << kMargin - 4 << "\" y1=\"" << py(fy) << "\" x2=\"" << kMargin
        << "\" y2=\"" << py(fy) << "\" stroke=\"#333\"/>"
        << "<text x=\"" << kMargin - 6 << "\" y=\"" << py(fy) + 4
        << "\" text-anchor=\"end\">" << num(fy) << "</text>\n";
  }
  out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n";
  out << "<text x=\"14\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" "
      << "transform=\"rotate(-90 14 " << kHeight / 2 << ")\">" << escape(y_label) << "</text>\n";
  out << "</g>\n";

  double legend_y = kMargin + 4;
  for (const auto& s : series) {
    if (s.line) {
      out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
      for (auto [x, y] : s.points) out << num(px(x)) << ',' << num(py(y)) << ' ';
      out << "\"/>\n";
    }
    if (!s.line || s.points.size() == 1) {
      for (auto [x, y] : s.points) {
        out << "<circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y))
            << "\" r=\"2\" fill=\"" << s.color << "\" fill-opacity=\"0.7\"/>\n";
      }
    }
    if (!s.label.empty()) {
      out << "<circle cx=\"" << kWidth - kMargin - 110 << "\" cy=\"" << legend_y
          << "\" r=\"3.5\" fill=\"" << s.color << "\"/>"
          << "<text x=\"" << kWidth - kMargin - 100 << "\" y=\"" << legend_y + 4
          << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape(s.label) << "</text>\n";
      legend_y += 18;
    }
  }
  out << "</svg>\n";

  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw IoError("cannot open '" + tmp + "' for writing");
    f << out.str();
    if (!f) throw IoError("write failed for '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw IoError("cannot rename '" + tmp + "' to '" + path + "'");
  }
}

}  // namespace gse::svg
