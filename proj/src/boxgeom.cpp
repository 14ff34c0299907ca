#include "scanet/boxgeom.hpp"

namespace scanet::boxgeom {

namespace {
void check_valid(const BBox& b, const char* who) {
  check(b.w >= 0.0 && b.h >= 0.0, std::string(who) + ": negative box size");
}
}  // namespace

double iou(const BBox& a, const BBox& b) {
  check_valid(a, "iou");
  check_valid(b, "iou");
  const double ix = std::max(0.0, std::min(a.x2(), b.x2()) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y2(), b.y2()) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

double giou(const BBox& a, const BBox& b) {
  check_valid(a, "giou");
  check_valid(b, "giou");
  const double ix = std::max(0.0, std::min(a.x2(), b.x2()) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y2(), b.y2()) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  const double ex = std::max(a.x2(), b.x2()) - std::min(a.x, b.x);
  const double ey = std::max(a.y2(), b.y2()) - std::min(a.y, b.y);
  const double enclosing = ex * ey;
  if (enclosing <= 0.0) return 0.0;
  const double iou_val = uni > 0.0 ? inter / uni : 0.0;
  return iou_val - (enclosing - uni) / enclosing;
}

double center_distance(const BBox& a, const BBox& b) {
  check_valid(a, "center_distance");
  check_valid(b, "center_distance");
  return std::hypot(a.cx() - b.cx(), a.cy() - b.cy());
}

double normalized_center_distance(const BBox& pred, const BBox& gt) {
  check_valid(pred, "normalized_center_distance");
  check(gt.w > 0.0 && gt.h > 0.0, "normalized_center_distance: degenerate ground truth");
  const double dx = (pred.cx() - gt.cx()) / gt.w;
  const double dy = (pred.cy() - gt.cy()) / gt.h;
  return std::hypot(dx, dy);
}

CropWindow crop_window(const BBox& box, double context_factor, int out_size) {
  check(!box.is_absent(), "crop_window: absent box (substitute the last known box)");
  check_valid(box, "crop_window");
  check(context_factor > 0.0, "crop_window: context_factor must be positive");
  check(out_size > 0, "crop_window: out_size must be positive");
  CropWindow win;
  win.cx = box.cx();
  win.cy = box.cy();
  win.side = std::max(1.0, context_factor * std::sqrt(box.w * box.h));
  win.out_size = out_size;
  return win;
}

BBox clamp_box(const BBox& b, double x0, double y0, double x1, double y1) {
  const double bx0 = std::clamp(b.x, x0, x1);
  const double by0 = std::clamp(b.y, y0, y1);
  const double bx1 = std::clamp(b.x2(), x0, x1);
  const double by1 = std::clamp(b.y2(), y0, y1);
  return BBox(bx0, by0, std::max(0.0, bx1 - bx0), std::max(0.0, by1 - by0));
}

}  // namespace scanet::boxgeom
