#include "srn/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "srn/geometry.hpp"

namespace srn {

Box3D AnchorGrid::anchor_box(int a, int iy, int ix) const {
  Box3D box;
  box.cx = x_min + (static_cast<float>(ix) + 0.5f) * cell_x;
  box.cy = y_min + (static_cast<float>(iy) + 0.5f) * cell_y;
  box.cz = spec.z_center;
  box.l = spec.l;
  box.w = spec.w;
  box.h = spec.h;
  box.yaw = spec.yaws[static_cast<std::size_t>(a)];
  return box;
}

TargetAssignment assign_targets(const AnchorGrid& anchors, const std::vector<Box3D>& gts,
                                float pos_iou, float neg_iou, bool force_match) {
  TargetAssignment out;
  out.cls.assign(anchors.count(), kTargetNegative);
  out.reg.assign(anchors.count(), {});

  std::vector<std::size_t> best_anchor(gts.size(), 0);
  std::vector<double> best_iou(gts.size(), -1.0);
  std::vector<int> assigned_gt(anchors.count(), -1);

  const int a_count = anchors.anchors_per_cell();
  for (int a = 0; a < a_count; ++a)
    for (int iy = 0; iy < anchors.ny; ++iy)
      for (int ix = 0; ix < anchors.nx; ++ix) {
        const std::size_t fi = anchors.flat_index(a, iy, ix);
        const Box3D abox = anchors.anchor_box(a, iy, ix);
        const double reach =
            0.5 * (std::hypot(abox.l, abox.w));  // precomputable, cheap enough
        double max_iou = 0.0;
        int max_gt = -1;
        for (std::size_t g = 0; g < gts.size(); ++g) {
          const Box3D& gt = gts[g];
          if (std::hypot(gt.cx - abox.cx, gt.cy - abox.cy) >
              reach + 0.5 * std::hypot(gt.l, gt.w))
            continue;
          const double iou = rotated_iou_bev(abox, gt);
          if (iou > max_iou) {
            max_iou = iou;
            max_gt = static_cast<int>(g);
          }
          if (iou > best_iou[g]) {
            best_iou[g] = iou;
            best_anchor[g] = fi;
          }
        }
        if (max_gt >= 0 && max_iou >= pos_iou) {
          out.cls[fi] = kTargetPositive;
          assigned_gt[fi] = max_gt;
        } else if (max_iou >= neg_iou) {
          out.cls[fi] = kTargetIgnore;
        }
      }

  if (force_match) {
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (best_iou[g] < 0.0) continue;
      out.cls[best_anchor[g]] = kTargetPositive;
      assigned_gt[best_anchor[g]] = static_cast<int>(g);
    }
  }

  for (int a = 0; a < a_count; ++a)
    for (int iy = 0; iy < anchors.ny; ++iy)
      for (int ix = 0; ix < anchors.nx; ++ix) {
        const std::size_t fi = anchors.flat_index(a, iy, ix);
        if (out.cls[fi] != kTargetPositive) continue;
        out.reg[fi] = encode_box_residuals(anchors.anchor_box(a, iy, ix),
                                           gts[static_cast<std::size_t>(assigned_gt[fi])]);
        ++out.positive_count;
      }
  return out;
}

std::array<float, 7> encode_box_residuals(const Box3D& anchor, const Box3D& gt) {
  const float diag = std::hypot(anchor.l, anchor.w);
  return {
      (gt.cx - anchor.cx) / diag,
      (gt.cy - anchor.cy) / diag,
      (gt.cz - anchor.cz) / anchor.h,
      std::log(gt.l / anchor.l),
      std::log(gt.w / anchor.w),
      std::log(gt.h / anchor.h),
      normalize_yaw(gt.yaw - anchor.yaw),
  };
}

Box3D decode_box_residuals(const Box3D& anchor, const float* r) {
  const float diag = std::hypot(anchor.l, anchor.w);
  Box3D box;
  box.cx = anchor.cx + r[0] * diag;
  box.cy = anchor.cy + r[1] * diag;
  box.cz = anchor.cz + r[2] * anchor.h;
  box.l = anchor.l * std::exp(r[3]);
  box.w = anchor.w * std::exp(r[4]);
  box.h = anchor.h * std::exp(r[5]);
  box.yaw = normalize_yaw(anchor.yaw + r[6]);
  return box;
}

std::vector<Detection> decode(const Tensor& head_raw, const AnchorGrid& anchors,
                              float score_threshold, std::uint64_t frame_id) {
  if (head_raw.rank() != 4 || head_raw.dim(1) != 1)
    throw std::invalid_argument("decode: head map must be (A*8, 1, Y, X)");
  const int a_count = anchors.anchors_per_cell();
  if (head_raw.dim(0) != a_count * 8 || head_raw.dim(2) != anchors.ny ||
      head_raw.dim(3) != anchors.nx)
    throw std::invalid_argument("decode: head map shape does not match anchor grid");

  std::vector<Detection> dets;
  for (int a = 0; a < a_count; ++a)
    for (int iy = 0; iy < anchors.ny; ++iy)
      for (int ix = 0; ix < anchors.nx; ++ix) {
        const float logit = head_raw.at(a * 8, 0, iy, ix);
        const float score = 1.0f / (1.0f + std::exp(-logit));
        if (score < score_threshold) continue;
        float residuals[7];
        for (int r = 0; r < 7; ++r) residuals[r] = head_raw.at(a * 8 + 1 + r, 0, iy, ix);
        Detection det;
        det.box = decode_box_residuals(anchors.anchor_box(a, iy, ix), residuals);
        det.score = score;
        det.frame_id = frame_id;
        dets.push_back(det);
      }
  return dets;
}

std::vector<Detection> nms_bev(const std::vector<Detection>& dets, double iou_threshold) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

  std::vector<Detection> kept;
  for (std::size_t idx : order) {
    bool suppressed = false;
    for (const Detection& k : kept)
      if (rotated_iou_bev(dets[idx].box, k.box) > iou_threshold) {
        suppressed = true;
        break;
      }
    if (!suppressed) kept.push_back(dets[idx]);
  }
  return kept;
}

double focal_loss(std::span<const float> logits, std::span<const std::int8_t> targets,
                  double alpha, double gamma) {
  if (logits.size() != targets.size())
    throw std::invalid_argument("focal_loss: size mismatch");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (targets[i] == kTargetIgnore) continue;
    sum += focal_term(static_cast<double>(logits[i]), targets[i] == kTargetPositive, alpha, gamma)
               .loss;
    ++n;
  }
  return n > 0 ? sum / static_cast<double>(n) : 0.0;
}

double smooth_l1(std::span<const float> pred, std::span<const float> target, double delta) {
  if (pred.size() != target.size())
    throw std::invalid_argument("smooth_l1: size mismatch");
  if (pred.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    sum += smooth_l1_term(static_cast<double>(pred[i]) - static_cast<double>(target[i]), delta).loss;
  return sum / static_cast<double>(pred.size());
}

}  // namespace srn
