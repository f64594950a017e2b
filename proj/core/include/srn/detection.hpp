#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "srn/autodiff.hpp"
#include "srn/box.hpp"
#include "srn/tensor.hpp"

namespace srn {

/// Anchor prior: one box per (BEV cell, yaw). Residual channels are
/// (dx/d_a, dy/d_a, dz/h_a, log l/l_a, log w/w_a, log h/h_a, dyaw) with
/// d_a the anchor's BEV diagonal.
struct AnchorSpec {
  float l = 4.5f, w = 1.9f, h = 1.6f;
  std::vector<float> yaws = {0.0f, 1.5707963267948966f};
  float z_center = 0.0f;
};

struct AnchorGrid {
  AnchorSpec spec;
  int ny = 0, nx = 0;
  float y_min = 0.0f, x_min = 0.0f;
  float cell_y = 0.0f, cell_x = 0.0f;

  int anchors_per_cell() const { return static_cast<int>(spec.yaws.size()); }
  std::size_t count() const {
    return static_cast<std::size_t>(anchors_per_cell()) * ny * nx;
  }
  std::size_t flat_index(int a, int iy, int ix) const {
    return (static_cast<std::size_t>(a) * ny + iy) * nx + ix;
  }
  Box3D anchor_box(int a, int iy, int ix) const;
};

constexpr std::int8_t kTargetPositive = 1;
constexpr std::int8_t kTargetNegative = 0;
constexpr std::int8_t kTargetIgnore = -1;

struct TargetAssignment {
  std::vector<std::int8_t> cls;                 // per anchor, flat-indexed
  std::vector<std::array<float, 7>> reg;        // valid where cls == positive
  std::size_t positive_count = 0;
};

/// BEV-IoU anchor assignment: positive at IoU >= pos_iou, negative below
/// neg_iou, ignored in between. With force_match, each ground truth's
/// highest-IoU anchor is made positive regardless of the gate.
TargetAssignment assign_targets(const AnchorGrid& anchors, const std::vector<Box3D>& gts,
                                float pos_iou = 0.5f, float neg_iou = 0.35f,
                                bool force_match = false);

std::array<float, 7> encode_box_residuals(const Box3D& anchor, const Box3D& gt);
Box3D decode_box_residuals(const Box3D& anchor, const float* residuals);

/// Decode raw head maps (A*(1+7) channels over 1 x Y x X) into detections
/// whose sigmoid score clears the threshold.
std::vector<Detection> decode(const Tensor& head_raw, const AnchorGrid& anchors,
                              float score_threshold = 0.3f, std::uint64_t frame_id = 0);

/// Greedy BEV NMS by descending score (ties: earlier detection first);
/// suppresses rotated IoU > iou_threshold.
std::vector<Detection> nms_bev(const std::vector<Detection>& dets, double iou_threshold = 0.1);

// ---------------------------------------------------------------------------
// losses

template <typename T>
struct LossTerm {
  T loss = T(0);
  T grad = T(0);  // d loss / d input
};

/// Focal term -alpha_t (1-p_t)^gamma log(p_t) on a sigmoid logit, with its
/// derivative. Written in the factored form whose terms stay bounded as the
/// probability saturates.
template <typename T>
LossTerm<T> focal_term(T logit, bool positive, T alpha, T gamma) {
  const T x = positive ? logit : -logit;
  const T a = positive ? alpha : T(1) - alpha;
  // p = sigmoid(x); log(p) = -softplus(-x)
  const T p = T(1) / (T(1) + std::exp(-x));
  const T log_p = x > T(0) ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
  const T one_m_p = T(1) - p;
  const T pow_g = std::pow(one_m_p, gamma);
  LossTerm<T> out;
  out.loss = -a * pow_g * log_p;
  const T d = a * gamma * pow_g * p * log_p - a * pow_g * one_m_p;
  out.grad = positive ? d : -d;
  return out;
}

template <typename T>
LossTerm<T> smooth_l1_term(T x, T delta) {
  LossTerm<T> out;
  const T ax = std::abs(x);
  if (ax < delta) {
    out.loss = T(0.5) * x * x / delta;
    out.grad = x / delta;
  } else {
    out.loss = ax - T(0.5) * delta;
    out.grad = x > T(0) ? T(1) : T(-1);
  }
  return out;
}

/// Mean focal loss over non-ignored anchors. targets: 1 pos, 0 neg, -1 ignore.
double focal_loss(std::span<const float> logits, std::span<const std::int8_t> targets,
                  double alpha = 0.25, double gamma = 2.0);

/// Mean smooth-L1 over elementwise residual differences.
double smooth_l1(std::span<const float> pred, std::span<const float> target, double delta = 1.0);

// ---------------------------------------------------------------------------
// loss ops on the raw head map (A*8 channels, anchor a's logit at channel
// a*8, residual r at channel a*8+1+r)

template <typename T>
VarT<T> focal_loss_op(TapeT<T>* tape, const VarT<T>& head, const std::vector<std::int8_t>& cls,
                      T alpha, T gamma) {
  const TensorT<T>& raw = *head.value;
  const int yd = raw.dim(2), xd = raw.dim(3);
  const int a_count = raw.dim(0) / 8;
  if (cls.size() != static_cast<std::size_t>(a_count) * yd * xd)
    throw std::invalid_argument("focal_loss_op: target count mismatch");

  auto grads = std::make_shared<std::vector<T>>(cls.size(), T(0));
  double sum = 0.0;
  std::size_t n = 0;
  for (int a = 0; a < a_count; ++a)
    for (int y = 0; y < yd; ++y)
      for (int x = 0; x < xd; ++x) {
        const std::size_t ti = (static_cast<std::size_t>(a) * yd + y) * xd + x;
        if (cls[ti] == kTargetIgnore) continue;
        const LossTerm<T> term =
            focal_term(raw.at(a * 8, 0, y, x), cls[ti] == kTargetPositive, alpha, gamma);
        sum += static_cast<double>(term.loss);
        (*grads)[ti] = term.grad;
        ++n;
      }

  TensorT<T> out_val({1});
  out_val[0] = n > 0 ? static_cast<T>(sum / static_cast<double>(n)) : T(0);
  const bool needs = tape != nullptr && head.requires_grad();
  VarT<T> out = detail::make_output(std::move(out_val), needs);
  if (needs && n > 0) {
    tape->record([head, out, grads, cls, a_count, yd, xd, n]() {
      const T scale = (*out.grad)[0] / static_cast<T>(n);
      for (int a = 0; a < a_count; ++a)
        for (int y = 0; y < yd; ++y)
          for (int x = 0; x < xd; ++x) {
            const std::size_t ti = (static_cast<std::size_t>(a) * yd + y) * xd + x;
            if (cls[ti] == kTargetIgnore) continue;
            head.grad->at(a * 8, 0, y, x) += scale * (*grads)[ti];
          }
    });
  }
  return out;
}

template <typename T>
VarT<T> smooth_l1_loss_op(TapeT<T>* tape, const VarT<T>& head, const std::vector<std::int8_t>& cls,
                          const std::vector<std::array<float, 7>>& reg, T delta) {
  const TensorT<T>& raw = *head.value;
  const int yd = raw.dim(2), xd = raw.dim(3);
  const int a_count = raw.dim(0) / 8;
  if (cls.size() != static_cast<std::size_t>(a_count) * yd * xd || reg.size() != cls.size())
    throw std::invalid_argument("smooth_l1_loss_op: target count mismatch");

  struct Entry {
    int a, y, x, r;
    T grad;
  };
  auto entries = std::make_shared<std::vector<Entry>>();
  double sum = 0.0;
  std::size_t n_pos = 0;
  for (int a = 0; a < a_count; ++a)
    for (int y = 0; y < yd; ++y)
      for (int x = 0; x < xd; ++x) {
        const std::size_t ti = (static_cast<std::size_t>(a) * yd + y) * xd + x;
        if (cls[ti] != kTargetPositive) continue;
        ++n_pos;
        for (int r = 0; r < 7; ++r) {
          const T diff = raw.at(a * 8 + 1 + r, 0, y, x) - static_cast<T>(reg[ti][r]);
          const LossTerm<T> term = smooth_l1_term(diff, delta);
          sum += static_cast<double>(term.loss);
          entries->push_back({a, y, x, r, term.grad});
        }
      }

  TensorT<T> out_val({1});
  const std::size_t denom = n_pos * 7;
  out_val[0] = denom > 0 ? static_cast<T>(sum / static_cast<double>(denom)) : T(0);
  const bool needs = tape != nullptr && head.requires_grad();
  VarT<T> out = detail::make_output(std::move(out_val), needs);
  if (needs && denom > 0) {
    tape->record([head, out, entries, denom]() {
      const T scale = (*out.grad)[0] / static_cast<T>(denom);
      for (const Entry& e : *entries)
        head.grad->at(e.a * 8 + 1 + e.r, 0, e.y, e.x) += scale * e.grad;
    });
  }
  return out;
}

}  // namespace srn
