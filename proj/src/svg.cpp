#include "propslam/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace propslam {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// 1, 2, 5 steps.
double nice_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= raw) return m * mag;
  }
  return 10.0 * mag;
}

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2"};

}  // namespace

std::string line_chart_svg(const std::vector<Series>& series, const std::string& x_label,
                           const std::string& y_label) {
  const double width = 720, height = 420;
  const double left = 70, right = 170, top = 20, bottom = 50;
  const double pw = width - left - right, ph = height - top - bottom;

  std::size_t n = 1;
  double ymax = 0.0;
  for (const auto& s : series) {
    n = std::max(n, s.values.size());
    for (double v : s.values) {
      if (std::isfinite(v)) ymax = std::max(ymax, v);
    }
  }
  if (ymax <= 0.0) ymax = 1.0;
  const double ystep = nice_step(ymax, 5);
  ymax = std::ceil(ymax / ystep) * ystep;
  const double xmax = n > 1 ? static_cast<double>(n - 1) : 1.0;
  const double xstep = nice_step(xmax, 8);

  auto px = [&](double x) { return left + pw * x / xmax; };
  auto py = [&](double y) { return top + ph * (1.0 - y / ymax); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (double y = 0.0; y <= ymax + 1e-9 * ymax; y += ystep) {
    os << "<line x1=\"" << num(left) << "\" y1=\"" << num(py(y)) << "\" x2=\"" << num(left + pw) << "\" y2=\""
       << num(py(y)) << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << num(left - 6) << "\" y=\"" << num(py(y) + 4) << "\" text-anchor=\"end\">" << tick(y)
       << "</text>\n";
  }
  for (double x = 0.0; x <= xmax + 1e-9; x += xstep) {
    os << "<text x=\"" << num(px(x)) << "\" y=\"" << num(top + ph + 16) << "\" text-anchor=\"middle\">" << tick(x)
       << "</text>\n";
  }
  os << "<polyline points=\"" << num(left) << ',' << num(top) << ' ' << num(left) << ',' << num(top + ph) << ' '
     << num(left + pw) << ',' << num(top + ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(height - 10) << "\" text-anchor=\"middle\">"
     << escape(x_label) << "</text>\n";
  os << "<text transform=\"translate(16," << num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape(y_label) << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % std::size(kPalette)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < series[i].values.size(); ++k) {
      if (k) os << ' ';
      os << num(px(static_cast<double>(k))) << ',' << num(py(series[i].values[k]));
    }
    os << "\"/>\n";
    const double ly = top + 16 + 18 * static_cast<double>(i);
    os << "<line x1=\"" << num(left + pw + 12) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(left + pw + 32)
       << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << num(left + pw + 38) << "\" y=\"" << num(ly) << "\">" << escape(series[i].name)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace propslam
