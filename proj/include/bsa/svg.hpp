#pragma once

#include <string>
#include <utility>
#include <vector>

namespace bsa::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Static line chart with axes, tick labels and a legend.
std::string lineChart(const std::string& title, const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series, int width = 720, int height = 400);

/// One pendulum pose: base, elbow and tip positions [m].
struct Pose {
  double t = 0.0;
  std::pair<double, double> elbow;
  std::pair<double, double> tip;
};

/// Overlaid stick figures, later poses drawn darker, in equal-aspect axes.
std::string sketch(const std::string& title, const std::vector<Pose>& poses, int size = 480);

}  // namespace bsa::svg
