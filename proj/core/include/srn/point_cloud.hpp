#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace srn {

/// One radar return: position in meters, linear power (>= 0), Doppler in m/s.
struct RadarPoint {
  float x = 0.0f;
  float y = 0.0f;
  float z = 0.0f;
  float power = 0.0f;
  float doppler = 0.0f;

  bool operator==(const RadarPoint&) const = default;
};

struct RadarPointCloud {
  std::vector<RadarPoint> points;
  std::uint64_t frame_id = 0;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

inline bool same_points(const RadarPointCloud& a, const RadarPointCloud& b) {
  return a.points == b.points;
}

/// Binary format: magic "RPC5" | u32 LE point count | count records of five
/// f32 LE (x, y, z, power, doppler). Point order is preserved. The loader
/// also accepts CSV files with header "x,y,z,power,doppler".
void save_point_cloud(const RadarPointCloud& cloud, const std::filesystem::path& path);
RadarPointCloud load_point_cloud(const std::filesystem::path& path, std::uint64_t frame_id = 0);

}  // namespace srn
