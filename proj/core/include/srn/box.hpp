#pragma once

#include <cstdint>

namespace srn {

/// Oriented 3D box: center in meters, positive dimensions, yaw in (-pi, pi]
/// about the vertical axis (l along heading at yaw 0).
struct Box3D {
  float cx = 0.0f, cy = 0.0f, cz = 0.0f;
  float l = 0.0f, w = 0.0f, h = 0.0f;
  float yaw = 0.0f;
};

float normalize_yaw(float yaw);

struct Detection {
  Box3D box;
  float score = 0.0f;  // in [0, 1]
  std::uint64_t frame_id = 0;
};

}  // namespace srn
