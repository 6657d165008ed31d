#include "bsa/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace bsa::svg {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

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

// "Nice" tick spacing of roughly n intervals over [lo, hi].
double tickStep(double lo, double hi, int n) {
  const double raw = (hi - lo) / n;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) return m * mag;
  }
  return 10.0 * mag;
}

void range(const std::vector<double>& v, double& lo, double& hi) {
  for (double x : v) {
    if (!std::isfinite(x)) continue;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
}

}  // namespace

std::string lineChart(const std::string& title, const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series, int width, int height) {
  const double left = 70, right = 20, top = 40, bottom = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    range(s.x, x0, x1);
    range(s.y, y0, y1);
  }
  if (!(x1 > x0)) {
    x0 = std::isfinite(x0) ? x0 - 1 : 0;
    x1 = x0 + 2;
  }
  if (!(y1 > y0)) {
    y0 = std::isfinite(y0) ? y0 - 1 : 0;
    y1 = y0 + 2;
  }
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  const double pw = width - left - right, ph = height - top - bottom;
  auto X = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto Y = [&](double y) { return top + (y1 - y) / (y1 - y0) * ph; };

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
                  std::to_string(height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(width / 2.0) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + escape(title) +
       "</text>\n";

  const double xs = tickStep(x0, x1, 8), ys = tickStep(y0, y1, 6);
  for (double t = std::ceil(x0 / xs) * xs; t <= x1 + 1e-9 * xs; t += xs) {
    s += "<line x1=\"" + num(X(t)) + "\" y1=\"" + num(top) + "\" x2=\"" + num(X(t)) + "\" y2=\"" + num(top + ph) +
         "\" stroke=\"#eee\"/>\n";
    s += "<text x=\"" + num(X(t)) + "\" y=\"" + num(top + ph + 16) + "\" text-anchor=\"middle\">" + tick(t) +
         "</text>\n";
  }
  for (double t = std::ceil(y0 / ys) * ys; t <= y1 + 1e-9 * ys; t += ys) {
    s += "<line x1=\"" + num(left) + "\" y1=\"" + num(Y(t)) + "\" x2=\"" + num(left + pw) + "\" y2=\"" + num(Y(t)) +
         "\" stroke=\"#eee\"/>\n";
    s += "<text x=\"" + num(left - 6) + "\" y=\"" + num(Y(t) + 4) + "\" text-anchor=\"end\">" + tick(t) +
         "</text>\n";
  }
  s += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  s += "<text x=\"" + num(left + pw / 2) + "\" y=\"" + num(height - 10.0) + "\" text-anchor=\"middle\">" +
       escape(x_label) + "</text>\n";
  s += "<text transform=\"translate(16," + num(top + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
       escape(y_label) + "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& sr = series[k];
    const char* color = kPalette[k % (sizeof kPalette / sizeof *kPalette)];
    std::string pts;
    const std::size_t n = std::min(sr.x.size(), sr.y.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(sr.x[i]) || !std::isfinite(sr.y[i])) continue;
      pts += num(X(sr.x[i])) + "," + num(Y(sr.y[i])) + " ";
    }
    s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + pts +
         "\"/>\n";
    const double ly = top + 14 + 16.0 * static_cast<double>(k);
    s += "<line x1=\"" + num(left + pw - 120) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" + num(left + pw - 100) +
         "\" y2=\"" + num(ly - 4) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + num(left + pw - 95) + "\" y=\"" + num(ly) + "\">" + escape(sr.label) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

std::string sketch(const std::string& title, const std::vector<Pose>& poses, int size) {
  double reach = 1e-3;
  for (const auto& p : poses) {
    reach = std::max({reach, std::hypot(p.elbow.first, p.elbow.second), std::hypot(p.tip.first, p.tip.second)});
  }
  reach *= 1.1;
  const double margin = 30;
  const double scale = (size - 2 * margin) / (2 * reach);
  auto X = [&](double x) { return size / 2.0 + x * scale; };
  auto Y = [&](double y) { return size / 2.0 - y * scale; };

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(size) + "\" height=\"" +
                  std::to_string(size) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(size / 2.0) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" + escape(title) +
       "</text>\n";
  const std::size_t n = poses.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = poses[i];
    const int shade = n > 1 ? static_cast<int>(200 - 200.0 * static_cast<double>(i) / static_cast<double>(n - 1)) : 0;
    char color[16];
    std::snprintf(color, sizeof color, "#%02x%02x%02x", shade, shade, shade);
    s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" points=\"" + num(X(0)) +
         "," + num(Y(0)) + " " + num(X(p.elbow.first)) + "," + num(Y(p.elbow.second)) + " " + num(X(p.tip.first)) +
         "," + num(Y(p.tip.second)) + "\"/>\n";
    s += "<circle cx=\"" + num(X(p.tip.first)) + "\" cy=\"" + num(Y(p.tip.second)) + "\" r=\"3\" fill=\"" + color +
         "\"/>\n";
  }
  s += "<circle cx=\"" + num(X(0)) + "\" cy=\"" + num(Y(0)) + "\" r=\"4\" fill=\"black\"/>\n";
  s += "</svg>\n";
  return s;
}

}  // namespace bsa::svg
