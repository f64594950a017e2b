#pragma once

#include <vector>

#include "srn/point_cloud.hpp"

namespace srn {

/// Top-down density cascade: each step keeps the top r% of points by power.
/// Selection is deterministic top-k with k = ceil(r/100 * N); ties are broken
/// in favour of the lower original index, and the output preserves input order.

/// Power of the k-th strongest point of the current cloud, i.e. the
/// nearest-rank (100-r)th percentile of its powers.
float bti_threshold(const RadarPointCloud& cloud, double r);

/// The k = ceil(r/100 * N) highest-power points, in input order.
RadarPointCloud bti_filter(const RadarPointCloud& cloud, double r);

/// Cascade of T clouds: element 0 is the input, element t+1 = bti_filter(element t, r).
std::vector<RadarPointCloud> bti_cascade(const RadarPointCloud& cloud, double r, int steps);

}  // namespace srn
