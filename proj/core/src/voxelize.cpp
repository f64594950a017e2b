#include "srn/voxelize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace srn {

void VoxelGridSpec::validate() const {
  if (!(x_max > x_min) || !(y_max > y_min) || !(z_max > z_min))
    throw std::invalid_argument("voxel grid: max bound must exceed min bound on every axis");
  if (nz < 1 || ny < 1 || nx < 1)
    throw std::invalid_argument("voxel grid: voxel counts must be >= 1");
}

VoxelFeatureGrid voxelize(const RadarPointCloud& cloud, const VoxelGridSpec& spec) {
  spec.validate();

  VoxelFeatureGrid grid;
  grid.values = Tensor({spec.channels(), spec.nz, spec.ny, spec.nx});

  const std::size_t cells = static_cast<std::size_t>(spec.nz) * spec.ny * spec.nx;
  std::vector<std::uint32_t> count(cells, 0);
  std::vector<double> power_sum(cells, 0.0);
  std::vector<double> doppler_sum(cells, 0.0);

  float max_power = 0.0f;
  for (const RadarPoint& p : cloud.points) max_power = std::max(max_power, p.power);
  const float power_norm = max_power > 0.0f ? max_power : 1.0f;

  const float sx = static_cast<float>(spec.nx) / (spec.x_max - spec.x_min);
  const float sy = static_cast<float>(spec.ny) / (spec.y_max - spec.y_min);
  const float sz = static_cast<float>(spec.nz) / (spec.z_max - spec.z_min);

  for (const RadarPoint& p : cloud.points) {
    const int ix = static_cast<int>(std::floor((p.x - spec.x_min) * sx));
    const int iy = static_cast<int>(std::floor((p.y - spec.y_min) * sy));
    const int iz = static_cast<int>(std::floor((p.z - spec.z_min) * sz));
    if (ix < 0 || ix >= spec.nx || iy < 0 || iy >= spec.ny || iz < 0 || iz >= spec.nz) {
      ++grid.dropped;
      continue;
    }
    const std::size_t cell = (static_cast<std::size_t>(iz) * spec.ny + iy) * spec.nx + ix;
    ++count[cell];
    power_sum[cell] += p.power;
    doppler_sum[cell] += p.doppler;
    ++grid.binned;
  }

  float* occ = grid.values.data();
  float* pow_ch = occ + cells;
  float* dop_ch = pow_ch + cells;
  for (std::size_t c = 0; c < cells; ++c) {
    if (count[c] == 0) continue;
    occ[c] = 1.0f;
    pow_ch[c] = static_cast<float>(power_sum[c] / count[c]) / power_norm;
    dop_ch[c] = static_cast<float>(doppler_sum[c] / count[c]);
  }
  return grid;
}

}  // namespace srn
