#pragma once

#include <array>
#include <vector>

#include "srn/box.hpp"

namespace srn {

/// Intersection-over-union of the two yaw-rotated BEV rectangles, computed
/// exactly by convex polygon clipping. Zero-area boxes give 0.
double rotated_iou_bev(const Box3D& a, const Box3D& b);

/// BEV intersection area times vertical overlap over the volume union.
double iou_3d(const Box3D& a, const Box3D& b);

namespace geom {

struct Vec2 {
  double x = 0.0, y = 0.0;
};

/// BEV corners in counterclockwise order.
std::array<Vec2, 4> box_corners_bev(const Box3D& box);

double polygon_area(const std::vector<Vec2>& poly);

/// Sutherland-Hodgman clip of a convex polygon by a convex CCW clip polygon.
std::vector<Vec2> clip_convex(const std::vector<Vec2>& subject, const std::vector<Vec2>& clip);

double intersection_area_bev(const Box3D& a, const Box3D& b);

}  // namespace geom

}  // namespace srn
