#include "srn/eval.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include "srn/geometry.hpp"

namespace srn {

namespace {

// Content-based ordering so the curve (and AP) is independent of the order
// detections were listed in.
bool det_before(const Detection& a, const Detection& b) {
  auto key = [](const Detection& d) {
    return std::make_tuple(-d.score, d.frame_id, d.box.cx, d.box.cy, d.box.cz, d.box.l, d.box.w,
                           d.box.h, d.box.yaw);
  };
  return key(a) < key(b);
}

}  // namespace

PRCurve match_and_score(const std::vector<Detection>& dets,
                        const std::map<std::uint64_t, std::vector<Box3D>>& gts,
                        const IoUFn& iou_fn, double iou_threshold) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return det_before(dets[a], dets[b]); });

  std::map<std::uint64_t, std::vector<bool>> used;
  PRCurve curve;
  for (const auto& [frame, boxes] : gts) {
    used[frame].assign(boxes.size(), false);
    curve.gt_count += boxes.size();
  }

  curve.entries.reserve(dets.size());
  for (std::size_t idx : order) {
    const Detection& det = dets[idx];
    bool tp = false;
    auto it = gts.find(det.frame_id);
    if (it != gts.end()) {
      double best = -1.0;
      int best_g = -1;
      auto& flags = used[det.frame_id];
      for (std::size_t g = 0; g < it->second.size(); ++g) {
        if (flags[g]) continue;
        const double iou = iou_fn(det.box, it->second[g]);
        if (iou > best) {
          best = iou;
          best_g = static_cast<int>(g);
        }
      }
      if (best_g >= 0 && best >= iou_threshold) {
        flags[static_cast<std::size_t>(best_g)] = true;
        tp = true;
      }
    }
    curve.entries.emplace_back(det.score, tp);
  }
  return curve;
}

double average_precision(const PRCurve& curve) {
  if (curve.gt_count == 0) throw std::invalid_argument("average_precision: no ground truths");

  std::vector<double> precision, recall;
  std::size_t tp = 0, seen = 0;
  for (const auto& [score, is_tp] : curve.entries) {
    ++seen;
    tp += is_tp;
    precision.push_back(static_cast<double>(tp) / static_cast<double>(seen));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(curve.gt_count));
  }

  double ap = 0.0;
  for (int k = 1; k <= 40; ++k) {
    const double thr = static_cast<double>(k) / 40.0;
    double best = 0.0;
    for (std::size_t i = 0; i < precision.size(); ++i)
      if (recall[i] >= thr) best = std::max(best, precision[i]);
    ap += best;
  }
  return ap / 40.0;
}

APResult evaluate_detections(const std::vector<Detection>& dets,
                             const std::map<std::uint64_t, std::vector<Box3D>>& gts,
                             double iou_threshold) {
  APResult res;
  const PRCurve bev = match_and_score(
      dets, gts, [](const Box3D& a, const Box3D& b) { return rotated_iou_bev(a, b); },
      iou_threshold);
  const PRCurve vol = match_and_score(
      dets, gts, [](const Box3D& a, const Box3D& b) { return iou_3d(a, b); }, iou_threshold);
  res.ap_bev = average_precision(bev);
  res.ap_3d = average_precision(vol);
  res.tp = bev.tp_count();
  res.fp = bev.entries.size() - res.tp;
  res.fn = bev.gt_count - res.tp;
  return res;
}

}  // namespace srn
