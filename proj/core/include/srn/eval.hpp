#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "srn/box.hpp"

namespace srn {

/// Detection outcomes ranked by score (non-increasing), plus the total
/// ground-truth count, from which precision/recall points follow.
struct PRCurve {
  std::vector<std::pair<float, bool>> entries;  // (score, is_tp)
  std::size_t gt_count = 0;

  std::size_t tp_count() const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.second;
    return n;
  }
};

struct APResult {
  double ap_bev = 0.0;
  double ap_3d = 0.0;
  std::uint64_t tp = 0, fp = 0, fn = 0;
};

using IoUFn = std::function<double(const Box3D&, const Box3D&)>;

/// Greedy matching in descending score; each ground truth matches at most
/// once. Unmatched detections are FPs, unmatched ground truths FNs.
PRCurve match_and_score(const std::vector<Detection>& dets,
                        const std::map<std::uint64_t, std::vector<Box3D>>& gts,
                        const IoUFn& iou_fn, double iou_threshold = 0.3);

/// 40-point interpolated AP: mean over recall thresholds {1/40..40/40} of the
/// maximum precision at recall >= threshold.
double average_precision(const PRCurve& curve);

/// AP_BEV and AP_3D at one IoU threshold; counts come from the BEV matching.
APResult evaluate_detections(const std::vector<Detection>& dets,
                             const std::map<std::uint64_t, std::vector<Box3D>>& gts,
                             double iou_threshold = 0.3);

}  // namespace srn
