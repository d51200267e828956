#pragma once

#include <algorithm>

namespace placedet {

// Axis-aligned box in pixel coordinates, top-left origin.
struct BoundingBox {
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;

  double area() const { return w * h; }
  double x2() const { return x + w; }
  double y2() const { return y + h; }
  bool valid() const { return w > 0 && h > 0; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

inline double intersection_area(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::min(a.x2(), b.x2()) - std::max(a.x, b.x);
  const double ih = std::min(a.y2(), b.y2()) - std::max(a.y, b.y);
  if (iw <= 0 || ih <= 0) return 0.0;
  return iw * ih;
}

// Intersection over union; 0 for degenerate unions.
inline double iou(const BoundingBox& a, const BoundingBox& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0) return 0.0;
  return inter / uni;
}

}  // namespace placedet
