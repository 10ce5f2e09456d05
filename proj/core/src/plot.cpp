#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "rbpn/evaluation.hpp"

namespace rbpn {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 400;
constexpr int kLeft = 70;
constexpr int kRight = 170;
constexpr int kTop = 40;
constexpr int kBottom = 50;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

Range padded(double lo, double hi) {
  if (!(lo < hi)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

void frame(std::ostringstream& out, const std::string& title, const std::string& x_label, const std::string& y_label,
           const Range& yr) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
      << "</text>\n";
  const int x0 = kLeft;
  const int x1 = kWidth - kRight;
  const int y0 = kHeight - kBottom;
  const int y1 = kTop;
  out << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0 << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1 << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    const double y = y0 - (y0 - y1) * i / 4.0;
    out << "<line x1=\"" << x0 - 4 << "\" y1=\"" << y << "\" x2=\"" << x1 << "\" y2=\"" << y
        << "\" stroke=\"#ddd\"/>\n"
        << "<text x=\"" << x0 - 8 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << num(v) << "</text>\n";
  }
  out << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
      << escape(x_label) << "</text>\n"
      << "<text transform=\"translate(18," << (y0 + y1) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(y_label) << "</text>\n";
}

}  // namespace

std::string line_plot_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<std::pair<std::string, std::vector<SeriesPoint>>>& series) {
  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -xmin;
  double ymin = xmin;
  double ymax = -xmin;
  for (const auto& [name, pts] : series) {
    for (const SeriesPoint& p : pts) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
  }
  if (!std::isfinite(xmin)) {
    xmin = 0.0;
    xmax = 1.0;
    ymin = 0.0;
    ymax = 1.0;
  }
  const Range xr = padded(xmin, xmax);
  const Range yr = padded(ymin, ymax);
  std::ostringstream out;
  frame(out, title, x_label, y_label, yr);
  const int x0 = kLeft;
  const int x1 = kWidth - kRight;
  const int y0 = kHeight - kBottom;
  const int y1 = kTop;
  const auto px = [&](double x) { return x0 + (x1 - x0) * (x - xr.lo) / (xr.hi - xr.lo); };
  const auto py = [&](double y) { return y0 - (y0 - y1) * (y - yr.lo) / (yr.hi - yr.lo); };
  for (int i = 0; i <= 4; ++i) {
    const double v = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    out << "<text x=\"" << px(v) << "\" y=\"" << y0 + 16 << "\" text-anchor=\"middle\">" << num(v) << "</text>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % std::size(kColors)];
    const auto& [name, pts] = series[s];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const SeriesPoint& p : pts) out << px(p.x) << "," << py(p.y) << " ";
    out << "\"/>\n";
    for (const SeriesPoint& p : pts) {
      out << "<circle cx=\"" << px(p.x) << "\" cy=\"" << py(p.y) << "\" r=\"3.5\" fill=\"" << color << "\"/>\n";
    }
    const int ly = kTop + 10 + static_cast<int>(s) * 18;
    out << "<line x1=\"" << x1 + 15 << "\" y1=\"" << ly << "\" x2=\"" << x1 + 35 << "\" y2=\"" << ly
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << x1 + 40 << "\" y=\"" << ly + 4 << "\">" << escape(name) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string bar_plot_svg(const std::string& title, const std::string& y_label,
                         const std::vector<std::pair<std::string, double>>& bars) {
  double ymin = std::numeric_limits<double>::infinity();
  double ymax = -ymin;
  for (const auto& [name, v] : bars) {
    ymin = std::min(ymin, v);
    ymax = std::max(ymax, v);
  }
  if (!std::isfinite(ymin)) {
    ymin = 0.0;
    ymax = 1.0;
  }
  // Bars start a little below the smallest value so differences stay visible.
  const Range yr = padded(ymin - 0.25 * (ymax - ymin + 1.0), ymax);
  std::ostringstream out;
  frame(out, title, "", y_label, yr);
  const int x0 = kLeft;
  const int x1 = kWidth - kRight;
  const int y0 = kHeight - kBottom;
  const int y1 = kTop;
  const double slot = bars.empty() ? 0.0 : static_cast<double>(x1 - x0) / static_cast<double>(bars.size());
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const auto& [name, v] = bars[i];
    const double top = y0 - (y0 - y1) * (v - yr.lo) / (yr.hi - yr.lo);
    const double left = x0 + slot * static_cast<double>(i) + slot * 0.15;
    out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << slot * 0.7 << "\" height=\"" << y0 - top
        << "\" fill=\"" << kColors[i % std::size(kColors)] << "\"/>\n"
        << "<text x=\"" << left + slot * 0.35 << "\" y=\"" << top - 5 << "\" text-anchor=\"middle\">" << num(v)
        << "</text>\n"
        << "<text x=\"" << left + slot * 0.35 << "\" y=\"" << y0 + 16 << "\" text-anchor=\"middle\">"
        << escape(name) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace rbpn
