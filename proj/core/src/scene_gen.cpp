#include "srn/scene_gen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>

#include "srn/geometry.hpp"

namespace srn {

void SceneConfig::validate() const {
  if (!(x_max > x_min) || !(y_max > y_min) || !(z_max > z_min))
    throw std::invalid_argument("scene: max bound must exceed min bound");
  if (vehicles_min < 0 || vehicles_max < vehicles_min)
    throw std::invalid_argument("scene: bad vehicle count range");
  if (points_per_vehicle_min < 1 || points_per_vehicle_max < points_per_vehicle_min)
    throw std::invalid_argument("scene: bad points-per-vehicle range");
  if (noise_fraction < 0.0f || noise_fraction >= 1.0f)
    throw std::invalid_argument("scene: noise fraction must be in [0, 1)");
  if (len_mean <= 0 || wid_mean <= 0 || hgt_mean <= 0)
    throw std::invalid_argument("scene: vehicle size priors must be positive");
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 over the combined words
  std::uint64_t x = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

namespace {

// Point on the box surface (weighted by face area) with a little jitter,
// or uniformly inside; sedans mostly return from their shell.
RadarPoint sample_vehicle_point(const Box3D& box, std::mt19937_64& rng, float base_doppler) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, 0.03);

  double lx, ly, lz;  // local coordinates in [-1/2, 1/2] per axis
  if (u01(rng) < 0.75) {
    const double area_xy = static_cast<double>(box.l) * box.w;  // roof
    const double area_xz = static_cast<double>(box.l) * box.h;  // sides
    const double area_yz = static_cast<double>(box.w) * box.h;  // ends
    const double total = area_xy + 2.0 * area_xz + 2.0 * area_yz;
    double pick = u01(rng) * total;
    lx = u01(rng) - 0.5;
    ly = u01(rng) - 0.5;
    lz = u01(rng) - 0.5;
    if (pick < area_xy) {
      lz = 0.5;  // roof only; the road hides the floor
    } else if ((pick -= area_xy) < 2.0 * area_xz) {
      ly = pick < area_xz ? -0.5 : 0.5;
    } else {
      pick -= 2.0 * area_xz;
      lx = pick < area_yz ? -0.5 : 0.5;
    }
  } else {
    lx = u01(rng) - 0.5;
    ly = u01(rng) - 0.5;
    lz = u01(rng) - 0.5;
  }

  const double px = lx * box.l + jitter(rng);
  const double py = ly * box.w + jitter(rng);
  const double pz = lz * box.h + jitter(rng);
  const double c = std::cos(static_cast<double>(box.yaw));
  const double s = std::sin(static_cast<double>(box.yaw));

  RadarPoint p;
  p.x = static_cast<float>(box.cx + c * px - s * py);
  p.y = static_cast<float>(box.cy + s * px + c * py);
  p.z = static_cast<float>(box.cz + pz);
  std::normal_distribution<double> dop_jitter(0.0, 0.3);
  p.doppler = static_cast<float>(base_doppler + dop_jitter(rng));
  return p;
}

}  // namespace

LabeledFrame generate_frame(const SceneConfig& config, std::uint64_t frame_seed) {
  config.validate();
  std::mt19937_64 rng(mix_seed(config.seed, frame_seed));
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  LabeledFrame frame;
  frame.cloud.frame_id = frame_seed;

  std::uniform_int_distribution<int> veh_count(config.vehicles_min, config.vehicles_max);
  const int n_vehicles = veh_count(rng);

  for (int v = 0; v < n_vehicles; ++v) {
    Box3D box;
    bool placed = false;
    for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
      box.l = config.len_mean + static_cast<float>((u01(rng) * 2 - 1) * config.len_jitter);
      box.w = config.wid_mean + static_cast<float>((u01(rng) * 2 - 1) * config.wid_jitter);
      box.h = config.hgt_mean + static_cast<float>((u01(rng) * 2 - 1) * config.hgt_jitter);
      const double margin = 0.5 * std::hypot(box.l, box.w);
      box.cx = static_cast<float>(config.x_min + margin +
                                  u01(rng) * (config.x_max - config.x_min - 2 * margin));
      box.cy = static_cast<float>(config.y_min + margin +
                                  u01(rng) * (config.y_max - config.y_min - 2 * margin));
      box.cz = static_cast<float>(config.z_center_min +
                                  u01(rng) * (config.z_center_max - config.z_center_min));
      box.yaw = normalize_yaw(static_cast<float>(u01(rng) * 2.0 * M_PI));
      placed = true;
      for (const Box3D& other : frame.gts)
        if (rotated_iou_bev(box, other) > 0.0) {
          placed = false;
          break;
        }
    }
    if (placed) frame.gts.push_back(box);
  }

  std::uniform_int_distribution<int> ppv(config.points_per_vehicle_min,
                                         config.points_per_vehicle_max);
  std::normal_distribution<double> target_logp(config.target_power_mu, config.target_power_sigma);
  std::normal_distribution<double> noise_logp(config.noise_power_mu, config.noise_power_sigma);
  std::uniform_real_distribution<double> dop(-config.doppler_max, config.doppler_max);

  std::vector<RadarPoint> targets;
  for (const Box3D& box : frame.gts) {
    const int n = ppv(rng);
    const float base_doppler = static_cast<float>(dop(rng));
    for (int i = 0; i < n; ++i) {
      RadarPoint p = sample_vehicle_point(box, rng, base_doppler);
      p.power = static_cast<float>(std::exp(target_logp(rng)));
      targets.push_back(p);
    }
  }

  const double f = static_cast<double>(config.noise_fraction);
  const std::size_t base = !targets.empty()
                               ? targets.size()
                               : static_cast<std::size_t>(
                                     (config.points_per_vehicle_min + config.points_per_vehicle_max) / 2);
  const std::size_t n_noise =
      f > 0.0 ? static_cast<std::size_t>(std::llround(f / (1.0 - f) * static_cast<double>(base)))
              : 0;

  std::vector<RadarPoint> noise;
  noise.reserve(n_noise);
  for (std::size_t i = 0; i < n_noise; ++i) {
    RadarPoint p;
    p.x = static_cast<float>(config.x_min + u01(rng) * (config.x_max - config.x_min));
    p.y = static_cast<float>(config.y_min + u01(rng) * (config.y_max - config.y_min));
    p.z = static_cast<float>(config.z_min + u01(rng) * (config.z_max - config.z_min));
    p.power = static_cast<float>(std::exp(noise_logp(rng)));
    p.doppler = static_cast<float>(dop(rng));
    noise.push_back(p);
  }

  // Interleave deterministically so noise labels do not correlate with index.
  frame.cloud.points.reserve(targets.size() + noise.size());
  frame.noise_mask.reserve(targets.size() + noise.size());
  for (const RadarPoint& p : targets) {
    frame.cloud.points.push_back(p);
    frame.noise_mask.push_back(0);
  }
  for (const RadarPoint& p : noise) {
    frame.cloud.points.push_back(p);
    frame.noise_mask.push_back(1);
  }
  std::vector<std::size_t> perm(frame.cloud.points.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  RadarPointCloud shuffled;
  shuffled.frame_id = frame.cloud.frame_id;
  std::vector<std::uint8_t> shuffled_mask;
  for (std::size_t i : perm) {
    shuffled.points.push_back(frame.cloud.points[i]);
    shuffled_mask.push_back(frame.noise_mask[i]);
  }
  frame.cloud = std::move(shuffled);
  frame.noise_mask = std::move(shuffled_mask);
  return frame;
}

void generate_dataset(const SceneConfig& config, int count, std::uint64_t base_seed,
                      const std::filesystem::path& out_dir) {
  if (count < 1) throw std::invalid_argument("generate_dataset: count must be >= 1");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  std::ofstream manifest(out_dir / "manifest.csv");
  if (!manifest)
    throw std::runtime_error("generate_dataset: cannot write to " + out_dir.string());
  manifest << "frame_file,cx,cy,cz,l,w,h,yaw\n";

  SceneConfig cfg = config;
  cfg.seed = base_seed;
  for (int i = 0; i < count; ++i) {
    const LabeledFrame frame = generate_frame(cfg, static_cast<std::uint64_t>(i));
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%05d.rpc5", i);
    save_point_cloud(frame.cloud, out_dir / name);
    char row[256];
    for (const Box3D& gt : frame.gts) {
      std::snprintf(row, sizeof(row), "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", name,
                    static_cast<double>(gt.cx), static_cast<double>(gt.cy),
                    static_cast<double>(gt.cz), static_cast<double>(gt.l),
                    static_cast<double>(gt.w), static_cast<double>(gt.h),
                    static_cast<double>(gt.yaw));
      manifest << row;
    }
  }
  if (!manifest) throw std::runtime_error("generate_dataset: manifest write failed");
}

}  // namespace srn
