#pragma once

#include <algorithm>
#include <cmath>

#include "scanet/common.hpp"

namespace scanet {

// Axis-aligned box, top-left corner (x, y) plus width/height, in pixels.
// The all-zero box is the absence sentinel used by annotations, tracker
// output and the evaluator.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  BBox() = default;
  BBox(double x_, double y_, double w_, double h_) : x(x_), y(y_), w(w_), h(h_) {}

  bool is_absent() const { return x == 0.0 && y == 0.0 && w == 0.0 && h == 0.0; }
  double cx() const { return x + w / 2.0; }
  double cy() const { return y + h / 2.0; }
  double area() const { return w * h; }
  double x2() const { return x + w; }
  double y2() const { return y + h; }

  static BBox absent() { return BBox(); }
  static BBox from_center(double cx, double cy, double w, double h) {
    return BBox(cx - w / 2.0, cy - h / 2.0, w, h);
  }

  bool operator==(const BBox& o) const { return x == o.x && y == o.y && w == o.w && h == o.h; }
};

// Square crop geometry mapping between image pixels and a resampled crop.
struct CropWindow {
  double cx = 0.0;    // window center, image px
  double cy = 0.0;
  double side = 1.0;  // square side, image px
  int out_size = 1;   // resampled square size, px

  double scale() const { return static_cast<double>(out_size) / side; }
  double x0() const { return cx - side / 2.0; }
  double y0() const { return cy - side / 2.0; }

  double to_crop_x(double img_x) const { return (img_x - x0()) * scale(); }
  double to_crop_y(double img_y) const { return (img_y - y0()) * scale(); }
  double to_image_x(double crop_x) const { return crop_x / scale() + x0(); }
  double to_image_y(double crop_y) const { return crop_y / scale() + y0(); }

  BBox box_to_crop(const BBox& b) const {
    return BBox(to_crop_x(b.x), to_crop_y(b.y), b.w * scale(), b.h * scale());
  }
  BBox box_to_image(const BBox& b) const {
    return BBox(to_image_x(b.x), to_image_y(b.y), b.w / scale(), b.h / scale());
  }
};

namespace boxgeom {

// Intersection over union. Callers handle absence; degenerate (zero-area)
// unions return 0.
double iou(const BBox& a, const BBox& b);

// Generalized IoU in [-1, 1]; returns 0 for a degenerate enclosing box.
double giou(const BBox& a, const BBox& b);

// Euclidean distance between box centers, pixels.
double center_distance(const BBox& a, const BBox& b);

// Center distance with each component divided by the ground-truth box size,
// so the value is invariant under joint rescaling of prediction and truth.
double normalized_center_distance(const BBox& pred, const BBox& gt);

// Square window centered on the box with side = factor * sqrt(w*h),
// clamped to at least one pixel.
CropWindow crop_window(const BBox& box, double context_factor, int out_size);

// Clamp a box to a rectangular extent; degenerates to a zero-size box at the
// border rather than inverting.
BBox clamp_box(const BBox& b, double x0, double y0, double x1, double y1);

}  // namespace boxgeom
}  // namespace scanet
