#pragma once

#include <cstdint>

#include "srn/point_cloud.hpp"
#include "srn/tensor.hpp"

namespace srn {

enum class VoxelEncoding {
  // 3 channels: occupancy {0,1}, mean power / frame max power, mean doppler.
  kOccupancyPowerDoppler,
};

struct VoxelGridSpec {
  float x_min = 0.0f, x_max = 32.0f;
  float y_min = -16.0f, y_max = 16.0f;
  float z_min = -2.0f, z_max = 2.0f;
  int nz = 8, ny = 64, nx = 64;
  VoxelEncoding encoding = VoxelEncoding::kOccupancyPowerDoppler;

  void validate() const;
  int channels() const { return 3; }
};

struct VoxelFeatureGrid {
  Tensor values;                   // (C, Z, Y, X)
  std::uint64_t dropped = 0;       // points outside the grid bounds
  std::uint64_t binned = 0;        // points that landed in a voxel
};

/// Bins every in-bounds point into exactly one voxel and encodes per-voxel
/// features. Out-of-bounds points are dropped and counted, never an error.
/// Voxels containing no points are all-zero across channels.
VoxelFeatureGrid voxelize(const RadarPointCloud& cloud, const VoxelGridSpec& spec);

}  // namespace srn
