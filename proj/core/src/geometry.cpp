#include "srn/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace srn {

float normalize_yaw(float yaw) {
  double y = std::fmod(static_cast<double>(yaw), 2.0 * M_PI);
  if (y <= -M_PI) y += 2.0 * M_PI;
  if (y > M_PI) y -= 2.0 * M_PI;
  return static_cast<float>(y);
}

namespace geom {

std::array<Vec2, 4> box_corners_bev(const Box3D& box) {
  const double c = std::cos(static_cast<double>(box.yaw));
  const double s = std::sin(static_cast<double>(box.yaw));
  const double hl = 0.5 * box.l, hw = 0.5 * box.w;
  const double lx[4] = {hl, -hl, -hl, hl};
  const double ly[4] = {hw, hw, -hw, -hw};
  std::array<Vec2, 4> out;
  for (int i = 0; i < 4; ++i)
    out[i] = Vec2{box.cx + c * lx[i] - s * ly[i], box.cy + s * lx[i] + c * ly[i]};
  return out;
}

double polygon_area(const std::vector<Vec2>& poly) {
  if (poly.size() < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    twice += p.x * q.y - q.x * p.y;
  }
  return 0.5 * std::abs(twice);
}

namespace {

double side(const Vec2& a, const Vec2& b, const Vec2& p) {
  return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
}

Vec2 line_intersect(const Vec2& a, const Vec2& b, const Vec2& p, const Vec2& q) {
  const double a1 = b.y - a.y, b1 = a.x - b.x, c1 = a1 * a.x + b1 * a.y;
  const double a2 = q.y - p.y, b2 = p.x - q.x, c2 = a2 * p.x + b2 * p.y;
  const double det = a1 * b2 - a2 * b1;
  if (det == 0.0) return p;  // parallel; degenerate sliver, area contribution ~0
  return Vec2{(b2 * c1 - b1 * c2) / det, (a1 * c2 - a2 * c1) / det};
}

}  // namespace

std::vector<Vec2> clip_convex(const std::vector<Vec2>& subject, const std::vector<Vec2>& clip) {
  std::vector<Vec2> poly = subject;
  for (std::size_t i = 0; i < clip.size() && !poly.empty(); ++i) {
    const Vec2& a = clip[i];
    const Vec2& b = clip[(i + 1) % clip.size()];
    std::vector<Vec2> next;
    next.reserve(poly.size() + 1);
    for (std::size_t j = 0; j < poly.size(); ++j) {
      const Vec2& p = poly[j];
      const Vec2& q = poly[(j + 1) % poly.size()];
      const bool p_in = side(a, b, p) >= 0.0;
      const bool q_in = side(a, b, q) >= 0.0;
      if (p_in) next.push_back(p);
      if (p_in != q_in) next.push_back(line_intersect(a, b, p, q));
    }
    poly = std::move(next);
  }
  return poly;
}

double intersection_area_bev(const Box3D& a, const Box3D& b) {
  const auto ca = box_corners_bev(a);
  const auto cb = box_corners_bev(b);
  const std::vector<Vec2> pa(ca.begin(), ca.end());
  const std::vector<Vec2> pb(cb.begin(), cb.end());
  return polygon_area(clip_convex(pa, pb));
}

}  // namespace geom

double rotated_iou_bev(const Box3D& a, const Box3D& b) {
  const double area_a = static_cast<double>(a.l) * a.w;
  const double area_b = static_cast<double>(b.l) * b.w;
  if (area_a <= 0.0 || area_b <= 0.0) return 0.0;
  const double inter = geom::intersection_area_bev(a, b);
  const double uni = area_a + area_b - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double iou_3d(const Box3D& a, const Box3D& b) {
  const double vol_a = static_cast<double>(a.l) * a.w * a.h;
  const double vol_b = static_cast<double>(b.l) * b.w * b.h;
  if (vol_a <= 0.0 || vol_b <= 0.0) return 0.0;
  const double z_lo = std::max(a.cz - 0.5 * a.h, b.cz - 0.5 * b.h);
  const double z_hi = std::min(a.cz + 0.5 * a.h, b.cz + 0.5 * b.h);
  const double overlap = std::max(0.0, z_hi - z_lo);
  if (overlap == 0.0) return 0.0;
  const double inter = geom::intersection_area_bev(a, b) * overlap;
  const double uni = vol_a + vol_b - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

}  // namespace srn
