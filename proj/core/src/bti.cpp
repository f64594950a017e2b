#include "srn/bti.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace srn {

namespace {

void check_args(const RadarPointCloud& cloud, double r) {
  if (cloud.empty()) throw std::invalid_argument("empty point cloud");
  if (!(r > 0.0) || r > 100.0) throw std::invalid_argument("density ratio r must be in (0, 100]");
}

std::size_t keep_count(std::size_t n, double r) {
  const auto k = static_cast<std::size_t>(std::ceil(r / 100.0 * static_cast<double>(n)));
  return std::min(std::max<std::size_t>(k, 1), n);
}

// Indices of the k highest-power points; ties keep the lower index.
std::vector<std::size_t> top_k_indices(const RadarPointCloud& cloud, std::size_t k) {
  std::vector<std::size_t> order(cloud.size());
  std::iota(order.begin(), order.end(), 0);
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k - 1), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     const float pa = cloud.points[a].power;
                     const float pb = cloud.points[b].power;
                     return pa != pb ? pa > pb : a < b;
                   });
  order.resize(k);
  return order;
}

}  // namespace

float bti_threshold(const RadarPointCloud& cloud, double r) {
  check_args(cloud, r);
  const std::size_t k = keep_count(cloud.size(), r);
  auto kept = top_k_indices(cloud, k);
  float threshold = cloud.points[kept.front()].power;
  for (std::size_t idx : kept) threshold = std::min(threshold, cloud.points[idx].power);
  return threshold;
}

RadarPointCloud bti_filter(const RadarPointCloud& cloud, double r) {
  check_args(cloud, r);
  const std::size_t k = keep_count(cloud.size(), r);
  auto kept = top_k_indices(cloud, k);
  std::sort(kept.begin(), kept.end());

  RadarPointCloud out;
  out.frame_id = cloud.frame_id;
  out.points.reserve(k);
  for (std::size_t idx : kept) out.points.push_back(cloud.points[idx]);
  return out;
}

std::vector<RadarPointCloud> bti_cascade(const RadarPointCloud& cloud, double r, int steps) {
  if (steps < 1) throw std::invalid_argument("cascade needs at least one step");
  std::vector<RadarPointCloud> cascade;
  cascade.reserve(static_cast<std::size_t>(steps));
  cascade.push_back(cloud);
  for (int t = 1; t < steps; ++t) cascade.push_back(bti_filter(cascade.back(), r));
  return cascade;
}

}  // namespace srn
