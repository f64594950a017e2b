#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "srn/adamw.hpp"
#include "srn/checkpoint.hpp"
#include "srn/detection.hpp"
#include "srn/network.hpp"
#include "srn/voxelize.hpp"

namespace srn {

struct TrainConfig {
  int epochs = 50;
  int batch_size = 2;
  std::uint64_t seed = 0;
  AdamWConfig optimizer;           // lr 0.001, weight decay 0.01
  float w_cls = 1.0f;
  float w_reg = 2.0f;
  Mode mode = Mode::kSnn;
  bool sum_reduction = false;      // mean over the batch unless set
  float bn_momentum = 0.1f;

  void validate() const {
    if (epochs < 1 || batch_size < 1)
      throw std::invalid_argument("train: epochs and batch size must be positive");
    if (w_cls < 0.0f || w_reg < 0.0f)
      throw std::invalid_argument("train: loss weights must be non-negative");
    optimizer.validate();
  }
};

/// One frame prepared for the optimizer: voxelized input plus anchor targets.
struct TrainFrame {
  Tensor grid;
  std::vector<std::int8_t> cls_targets;
  std::vector<std::array<float, 7>> reg_targets;
  std::uint64_t frame_id = 0;
};

inline TrainFrame make_train_frame(const RadarPointCloud& cloud, const std::vector<Box3D>& gts,
                                   const VoxelGridSpec& grid_spec, const AnchorGrid& anchors,
                                   float pos_iou, float neg_iou, bool force_match) {
  TrainFrame frame;
  frame.grid = voxelize(cloud, grid_spec).values;
  TargetAssignment assign = assign_targets(anchors, gts, pos_iou, neg_iou, force_match);
  frame.cls_targets = std::move(assign.cls);
  frame.reg_targets = std::move(assign.reg);
  frame.frame_id = cloud.frame_id;
  return frame;
}

struct StepLoss {
  double cls = 0.0;
  double reg = 0.0;
  double total = 0.0;
};

/// Forward + backward over one batch of frames (single time step, membranes
/// fresh per frame). Gradients accumulate into the network's parameter grads;
/// the caller zeroes them. Throws on a non-finite loss, naming the first
/// layer whose output went non-finite.
template <typename T>
StepLoss forward_backward(NetworkT<T>& net, std::span<const TrainFrame* const> batch,
                          const TrainConfig& cfg, SpikeMode spike_mode = SpikeMode::kStraightThrough,
                          bool update_running = true) {
  if (batch.empty()) throw std::invalid_argument("forward_backward: empty batch");
  const T weight = cfg.sum_reduction ? T(1) : T(1) / static_cast<T>(batch.size());

  StepLoss loss;
  for (const TrainFrame* frame : batch) {
    TapeT<T> tape;
    TensorT<T> grid_t;
    if constexpr (std::is_same_v<T, float>) {
      grid_t = frame->grid;
    } else {
      grid_t = TensorT<T>(frame->grid.shape());
      for (std::size_t i = 0; i < grid_t.size(); ++i)
        grid_t[i] = static_cast<T>(frame->grid[i]);
    }
    VarT<T> head = net.forward_train(&tape, grid_t, cfg.mode, spike_mode, update_running);
    VarT<T> cls = focal_loss_op(&tape, head, frame->cls_targets, T(0.25), T(2));
    VarT<T> reg = smooth_l1_loss_op(&tape, head, frame->cls_targets, frame->reg_targets, T(1));
    VarT<T> total = weighted_sum_op(&tape, cls, reg, static_cast<T>(cfg.w_cls),
                                    static_cast<T>(cfg.w_reg));

    const double frame_total = static_cast<double>((*total.value)[0]);
    if (!std::isfinite(frame_total)) {
      std::string where = "loss";
      for (std::size_t i = 0; i < head.value->size(); ++i)
        if (!std::isfinite(static_cast<double>((*head.value)[i]))) {
          where = "head";
          break;
        }
      throw std::runtime_error("forward_backward: non-finite loss on frame " +
                               std::to_string(frame->frame_id) + " (first seen at: " + where + ")");
    }

    (*total.grad)[0] = weight;
    tape.backward();

    loss.cls += static_cast<double>((*cls.value)[0]) * static_cast<double>(weight);
    loss.reg += static_cast<double>((*reg.value)[0]) * static_cast<double>(weight);
    loss.total += frame_total * static_cast<double>(weight);
  }
  return loss;
}

struct LossRow {
  int epoch = 0;
  int step = 0;
  double cls = 0.0, reg = 0.0, total = 0.0;
};

struct TrainResult {
  std::vector<LossRow> log;  // one row per optimizer step

  double initial_loss() const { return log.empty() ? 0.0 : log.front().total; }
  double final_loss() const { return log.empty() ? 0.0 : log.back().total; }
};

inline std::uint64_t mix_seed_for_training(std::uint64_t seed) {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL;
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  return x ^ (x >> 31);
}

/// Deterministic T=1 training loop: fixed shuffle from the seed, AdamW step
/// per batch, one loss row per step.
template <typename T>
TrainResult train_loop(NetworkT<T>& net, const std::vector<TrainFrame>& dataset,
                       const TrainConfig& cfg) {
  cfg.validate();
  if (dataset.empty()) throw std::invalid_argument("train_loop: empty dataset");

  std::vector<VarT<T>> params;
  for (auto& np : net.parameters()) params.push_back(*np.var);
  AdamWT<T> opt(params, cfg.optimizer);

  std::mt19937_64 rng(mix_seed_for_training(cfg.seed));
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  int step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::vector<const TrainFrame*> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i)
        batch.push_back(&dataset[order[i]]);
      opt.zero_grad();
      const StepLoss loss = forward_backward<T>(net, batch, cfg);
      opt.step();
      result.log.push_back({epoch, step, loss.cls, loss.reg, loss.total});
      ++step;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// network <-> checkpoint

template <typename T>
std::vector<NamedTensor> network_state(NetworkT<T>& net) {
  std::vector<NamedTensor> out;
  for (auto& p : net.parameters()) {
    NamedTensor t;
    t.name = p.name;
    t.shape = p.var->value->shape();
    t.data.reserve(p.var->value->size());
    for (std::size_t i = 0; i < p.var->value->size(); ++i)
      t.data.push_back(static_cast<float>((*p.var->value)[i]));
    out.push_back(std::move(t));
  }
  for (auto& b : net.buffers()) {
    NamedTensor t;
    t.name = b.name;
    t.shape = {static_cast<int>(b.data->size())};
    for (T v : *b.data) t.data.push_back(static_cast<float>(v));
    out.push_back(std::move(t));
  }
  return out;
}

template <typename T>
void load_network_state(NetworkT<T>& net, const std::vector<NamedTensor>& tensors) {
  auto find = [&tensors](const std::string& name) -> const NamedTensor& {
    for (const NamedTensor& t : tensors)
      if (t.name == name) return t;
    throw std::runtime_error("checkpoint: missing tensor \"" + name + "\"");
  };
  for (auto& p : net.parameters()) {
    const NamedTensor& t = find(p.name);
    if (t.shape != p.var->value->shape())
      throw std::runtime_error("checkpoint: shape mismatch for \"" + p.name + "\": file has " +
                               shape_str(t.shape) + ", config wants " +
                               shape_str(p.var->value->shape()));
    for (std::size_t i = 0; i < t.data.size(); ++i)
      (*p.var->value)[i] = static_cast<T>(t.data[i]);
  }
  for (auto& b : net.buffers()) {
    const NamedTensor& t = find(b.name);
    if (t.data.size() != b.data->size())
      throw std::runtime_error("checkpoint: shape mismatch for \"" + b.name + "\"");
    for (std::size_t i = 0; i < t.data.size(); ++i) (*b.data)[i] = static_cast<T>(t.data[i]);
  }
}

}  // namespace srn
