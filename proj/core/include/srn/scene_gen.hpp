#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "srn/box.hpp"
#include "srn/point_cloud.hpp"

namespace srn {

/// Synthetic 4D-radar scene: Sedan-like boxes with surface-biased target
/// returns (high-power lognormal) plus uniform low-power heavy-tailed noise,
/// so power-percentile filtering preferentially removes noise.
struct SceneConfig {
  // vehicle placement ROI (boxes are rejected until disjoint in BEV)
  float x_min = 2.0f, x_max = 30.0f;
  float y_min = -14.0f, y_max = 14.0f;
  float z_min = -1.5f, z_max = 1.5f;  // noise extent
  float z_center_min = -0.3f, z_center_max = 0.3f;

  int vehicles_min = 1, vehicles_max = 3;
  float len_mean = 4.5f, len_jitter = 0.3f;
  float wid_mean = 1.9f, wid_jitter = 0.15f;
  float hgt_mean = 1.6f, hgt_jitter = 0.1f;

  int points_per_vehicle_min = 80, points_per_vehicle_max = 150;
  float noise_fraction = 0.5f;  // share of noise points in the frame, in [0, 1)

  // linear power ~ exp(Normal(mu, sigma)); targets sit well above noise
  float target_power_mu = 3.0f, target_power_sigma = 0.5f;
  float noise_power_mu = 1.0f, noise_power_sigma = 0.8f;

  float doppler_max = 15.0f;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LabeledFrame {
  RadarPointCloud cloud;
  std::vector<Box3D> gts;
  std::vector<std::uint8_t> noise_mask;  // 1 where the point is noise
};

LabeledFrame generate_frame(const SceneConfig& config, std::uint64_t frame_seed);

/// Writes count frames as frame_%05u.rpc5 plus manifest.csv with one row
/// "frame_file,cx,cy,cz,l,w,h,yaw" per ground-truth box. Re-runnable
/// byte-identically for the same config and base seed.
void generate_dataset(const SceneConfig& config, int count, std::uint64_t base_seed,
                      const std::filesystem::path& out_dir);

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace srn
