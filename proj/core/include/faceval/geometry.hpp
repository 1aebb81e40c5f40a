#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace faceval {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// Axis-aligned box in corner form, real-valued pixel coordinates.
/// Areas are continuous: area = (x_max - x_min) * (y_max - y_min).
struct Box {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  bool valid() const { return x_min < x_max && y_min < y_max; }

  friend bool operator==(const Box&, const Box&) = default;
};

/// Five facial landmarks, fixed order: left eye, right eye, nose tip,
/// left mouth corner, right mouth corner (viewer's perspective).
using Landmarks = std::array<Point, 5>;

/// Intersection over union of two boxes; 0 when disjoint.
inline double iou(const Box& a, const Box& b) {
  const double ix = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double iy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  return inter / (a.area() + b.area() - inter);
}

}  // namespace faceval
