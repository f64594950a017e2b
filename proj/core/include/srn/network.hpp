#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "srn/autodiff.hpp"
#include "srn/conv.hpp"
#include "srn/lif.hpp"
#include "srn/tensor.hpp"
#include "srn/voxelize.hpp"

namespace srn {

enum class Mode { kSnn, kAnn };
enum class Activation { kLIF, kReLU, kNone };

struct ConvBlockSpec {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  int stride = 1;
  Activation activation = Activation::kLIF;
  float bn_eps = 1e-5f;

  void validate() const {
    if (in_channels < 1 || out_channels < 1)
      throw std::invalid_argument("conv block: channel counts must be positive");
    if (kernel < 1 || kernel % 2 == 0)
      throw std::invalid_argument("conv block: kernel must be odd-sized");
    if (stride != 1 && stride != 2)
      throw std::invalid_argument("conv block: stride must be 1 or 2");
  }
};

template <typename T>
struct ConvBlockParamsT {
  VarT<T> w, b;          // conv kernel and bias
  VarT<T> gamma, beta;   // batch-norm affine
  std::vector<T> running_mean, running_var;
};

/// conv -> batch norm (inference affine with running stats) -> activation.
/// Binary inputs take the event-driven conv path (AC arithmetic); real
/// inputs the dense path (MAC). LIF mode consumes and updates the membrane
/// state and emits a binary map.
template <typename T>
FeatureMapT<T> conv_block_forward(const FeatureMapT<T>& in, const ConvBlockSpec& spec,
                                  const ConvBlockParamsT<T>& params, MembraneStateT<T>* state,
                                  const LIFParams& lif, OpLedger* ledger,
                                  const std::string& name) {
  spec.validate();
  const Conv3DGeom g = Conv3DGeom::same(spec.kernel, spec.kernel, spec.kernel, spec.stride);
  TensorT<T> pre;
  if (in.binary) {
    pre = event_driven_conv3d(in, *params.w.value, *params.b.value, g, ledger, name);
  } else {
    pre = conv3d(in.values, *params.w.value, *params.b.value, g, ledger, name,
                 ArithmeticKind::kMac);
  }

  const int c = spec.out_channels;
  std::vector<T> scale(static_cast<std::size_t>(c)), shift(static_cast<std::size_t>(c));
  for (int ch = 0; ch < c; ++ch) {
    const T istd = T(1) / std::sqrt(params.running_var[ch] + static_cast<T>(spec.bn_eps));
    scale[ch] = (*params.gamma.value)[ch] * istd;
    shift[ch] = (*params.beta.value)[ch] - params.running_mean[ch] * scale[ch];
  }
  TensorT<T> post = channel_affine(pre, scale, shift);

  FeatureMapT<T> out;
  switch (spec.activation) {
    case Activation::kLIF: {
      if (state == nullptr) throw std::invalid_argument(name + ": LIF mode requires a membrane state");
      if (!state->potentials.same_shape(post))
        throw std::invalid_argument(name + ": membrane state shape mismatch");
      out.values = lif_integrate_fire(*state, post, lif);
      out.binary = true;
      break;
    }
    case Activation::kReLU:
      for (T& v : post.values()) v = v > T(0) ? v : T(0);
      out.values = std::move(post);
      break;
    case Activation::kNone:
      out.values = std::move(post);
      break;
  }
  return out;
}

struct NetworkConfig {
  VoxelGridSpec grid;
  std::array<int, 3> channels = {32, 64, 128};      // C1, C2, C3
  std::array<int, 3> bev_channels = {32, 64, 128};  // per-stage BEV projection widths
  int kernel = 3;
  int head_kernel = 1;
  int anchors_per_cell = 2;
  LIFParams lif;
  float bn_eps = 1e-5f;
  float bn_momentum = 0.1f;

  void validate() const {
    grid.validate();
    lif.validate();
    if (grid.nz % 4 != 0 || grid.ny % 4 != 0 || grid.nx % 4 != 0)
      throw std::invalid_argument("network: grid dims must be divisible by 4 (two stride-2 stages)");
    for (int c : channels)
      if (c < 1) throw std::invalid_argument("network: channel widths must be positive");
    for (int c : bev_channels)
      if (c < 1) throw std::invalid_argument("network: BEV widths must be positive");
    if (kernel % 2 == 0 || head_kernel % 2 == 0)
      throw std::invalid_argument("network: kernels must be odd-sized");
    if (anchors_per_cell < 1) throw std::invalid_argument("network: need at least one anchor");
  }

  std::array<int, 3> fm_z() const { return {grid.nz, grid.nz / 2, grid.nz / 4}; }
  std::array<int, 3> fm_y() const { return {grid.ny, grid.ny / 2, grid.ny / 4}; }
  std::array<int, 3> fm_x() const { return {grid.nx, grid.nx / 2, grid.nx / 4}; }
  int head_channels() const { return anchors_per_cell * 8; }
};

/// The full detector: voxel-feature entry block, two downsampling stages of
/// two blocks each, per-stage BEV Z-collapse, transpose-conv unification,
/// concatenation, and the box head. LIF (SNN) or ReLU (ANN) activations in
/// the backbone; the BEV neck and head stay real-valued in both modes.
template <typename T>
class NetworkT {
 public:
  static constexpr int kNumBlocks = 5;
  static constexpr const char* kBlockNames[kNumBlocks] = {
      "entry", "stage2.block1", "stage2.block2", "stage3.block1", "stage3.block2"};

  explicit NetworkT(NetworkConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const auto specs = block_specs();
    for (int i = 0; i < kNumBlocks; ++i) {
      const ConvBlockSpec& s = specs[i];
      ConvBlockParamsT<T> p;
      p.w = VarT<T>::param(TensorT<T>({s.out_channels, s.in_channels, s.kernel, s.kernel, s.kernel}));
      p.b = VarT<T>::param(TensorT<T>({s.out_channels}));
      p.gamma = VarT<T>::param(TensorT<T>::full({s.out_channels}, T(1)));
      p.beta = VarT<T>::param(TensorT<T>({s.out_channels}));
      p.running_mean.assign(static_cast<std::size_t>(s.out_channels), T(0));
      p.running_var.assign(static_cast<std::size_t>(s.out_channels), T(1));
      blocks_.push_back(std::move(p));
    }
    for (int j = 0; j < 3; ++j) {
      const int cj = cfg_.channels[static_cast<std::size_t>(j)];
      const int bj = cfg_.bev_channels[static_cast<std::size_t>(j)];
      bev_w_[j] = VarT<T>::param(TensorT<T>({bj, cj, cfg_.fm_z()[static_cast<std::size_t>(j)], 1, 1}));
      bev_b_[j] = VarT<T>::param(TensorT<T>({bj}));
      const int f = 1 << j;
      up_w_[j] = VarT<T>::param(TensorT<T>({bj, bj, f, f}));
      up_b_[j] = VarT<T>::param(TensorT<T>({bj}));
    }
    const int concat_c = cfg_.bev_channels[0] + cfg_.bev_channels[1] + cfg_.bev_channels[2];
    head_w_ = VarT<T>::param(
        TensorT<T>({cfg_.head_channels(), concat_c, 1, cfg_.head_kernel, cfg_.head_kernel}));
    head_b_ = VarT<T>::param(TensorT<T>({cfg_.head_channels()}));
  }

  const NetworkConfig& config() const { return cfg_; }

  std::array<ConvBlockSpec, kNumBlocks> block_specs(Activation act = Activation::kLIF) const {
    const int in_c = cfg_.grid.channels();
    const auto& c = cfg_.channels;
    std::array<ConvBlockSpec, kNumBlocks> s{};
    s[0] = {in_c, c[0], cfg_.kernel, 1, act, cfg_.bn_eps};
    s[1] = {c[0], c[1], cfg_.kernel, 1, act, cfg_.bn_eps};
    s[2] = {c[1], c[1], cfg_.kernel, 2, act, cfg_.bn_eps};
    s[3] = {c[1], c[2], cfg_.kernel, 1, act, cfg_.bn_eps};
    s[4] = {c[2], c[2], cfg_.kernel, 2, act, cfg_.bn_eps};
    return s;
  }

  /// Kaiming-uniform fan-in for convs, identity batch norm, and a low-prior
  /// bias on the head's logit channels so early focal loss is not dominated
  /// by the background anchors.
  void init_params(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto kaiming = [&rng](TensorT<T>& w, std::size_t fan_in) {
      const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<T>(dist(rng));
    };
    const auto specs = block_specs();
    for (int i = 0; i < kNumBlocks; ++i) {
      const ConvBlockSpec& s = specs[i];
      kaiming(*blocks_[i].w.value,
              static_cast<std::size_t>(s.in_channels) * s.kernel * s.kernel * s.kernel);
      blocks_[i].b.value->fill(T(0));
      blocks_[i].gamma.value->fill(T(1));
      blocks_[i].beta.value->fill(T(0));
      std::fill(blocks_[i].running_mean.begin(), blocks_[i].running_mean.end(), T(0));
      std::fill(blocks_[i].running_var.begin(), blocks_[i].running_var.end(), T(1));
    }
    for (int j = 0; j < 3; ++j) {
      kaiming(*bev_w_[j].value, static_cast<std::size_t>(cfg_.channels[static_cast<std::size_t>(j)]) *
                                    cfg_.fm_z()[static_cast<std::size_t>(j)]);
      bev_b_[j].value->fill(T(0));
      kaiming(*up_w_[j].value, static_cast<std::size_t>(cfg_.bev_channels[static_cast<std::size_t>(j)]));
      up_b_[j].value->fill(T(0));
    }
    kaiming(*head_w_.value, static_cast<std::size_t>(head_w_.value->dim(1)) * cfg_.head_kernel *
                                cfg_.head_kernel);
    head_b_.value->fill(T(0));
    const T prior_bias = static_cast<T>(-std::log((1.0 - 0.01) / 0.01));
    for (int a = 0; a < cfg_.anchors_per_cell; ++a) (*head_b_.value)[a * 8] = prior_bias;
  }

  struct NamedParam {
    std::string name;
    VarT<T>* var;
  };
  std::vector<NamedParam> parameters() {
    std::vector<NamedParam> out;
    for (int i = 0; i < kNumBlocks; ++i) {
      const std::string base = kBlockNames[i];
      out.push_back({base + ".conv.w", &blocks_[i].w});
      out.push_back({base + ".conv.b", &blocks_[i].b});
      out.push_back({base + ".bn.gamma", &blocks_[i].gamma});
      out.push_back({base + ".bn.beta", &blocks_[i].beta});
    }
    for (int j = 0; j < 3; ++j) {
      const std::string base = "bev" + std::to_string(j + 1);
      out.push_back({base + ".w", &bev_w_[j]});
      out.push_back({base + ".b", &bev_b_[j]});
      const std::string ubase = "up" + std::to_string(j + 1);
      out.push_back({ubase + ".w", &up_w_[j]});
      out.push_back({ubase + ".b", &up_b_[j]});
    }
    out.push_back({"head.w", &head_w_});
    out.push_back({"head.b", &head_b_});
    return out;
  }

  struct NamedBuffer {
    std::string name;
    std::vector<T>* data;
  };
  std::vector<NamedBuffer> buffers() {
    std::vector<NamedBuffer> out;
    for (int i = 0; i < kNumBlocks; ++i) {
      const std::string base = kBlockNames[i];
      out.push_back({base + ".bn.running_mean", &blocks_[i].running_mean});
      out.push_back({base + ".bn.running_var", &blocks_[i].running_var});
    }
    return out;
  }

  // -------------------------------------------------------------------------
  // inference

  struct InferenceState {
    std::vector<MembraneStateT<T>> membranes;  // one per backbone block
  };

  InferenceState make_state() const {
    InferenceState st;
    const auto z = cfg_.fm_z(), y = cfg_.fm_y(), x = cfg_.fm_x();
    const auto& c = cfg_.channels;
    const int bz[kNumBlocks] = {z[0], z[0], z[1], z[1], z[2]};
    const int by[kNumBlocks] = {y[0], y[0], y[1], y[1], y[2]};
    const int bx[kNumBlocks] = {x[0], x[0], x[1], x[1], x[2]};
    const int bc[kNumBlocks] = {c[0], c[1], c[1], c[2], c[2]};
    for (int i = 0; i < kNumBlocks; ++i) {
      MembraneStateT<T> m{TensorT<T>({bc[i], bz[i], by[i], bx[i]})};
      m.potentials.fill(static_cast<T>(cfg_.lif.u_reset));
      st.membranes.push_back(std::move(m));
    }
    return st;
  }

  void reset(InferenceState& st) const {
    for (auto& m : st.membranes) m.potentials.fill(static_cast<T>(cfg_.lif.u_reset));
  }

  struct ForwardMaps {
    FeatureMapT<T> fm1, fm2, fm3;
    TensorT<T> concat_bev;
    TensorT<T> head_raw;
  };

  ForwardMaps forward(const TensorT<T>& grid_values, Mode mode, InferenceState& state,
                      OpLedger* ledger = nullptr) const {
    if (grid_values.rank() != 4 || grid_values.dim(0) != cfg_.grid.channels() ||
        grid_values.dim(1) != cfg_.grid.nz || grid_values.dim(2) != cfg_.grid.ny ||
        grid_values.dim(3) != cfg_.grid.nx)
      throw std::invalid_argument("forward: voxel grid shape does not match config");
    const Activation act = mode == Mode::kSnn ? Activation::kLIF : Activation::kReLU;
    const auto specs = block_specs(act);

    ForwardMaps maps;
    FeatureMapT<T> cur{grid_values, false};
    for (int i = 0; i < kNumBlocks; ++i) {
      MembraneStateT<T>* st = act == Activation::kLIF ? &state.membranes[i] : nullptr;
      cur = conv_block_forward(cur, specs[i], blocks_[i], st, cfg_.lif, ledger, kBlockNames[i]);
      if (i == 0) maps.fm1 = cur;
      if (i == 2) maps.fm2 = cur;
      if (i == 4) maps.fm3 = cur;
    }

    std::array<TensorT<T>, 3> upsampled;
    const FeatureMapT<T>* fms[3] = {&maps.fm1, &maps.fm2, &maps.fm3};
    for (int j = 0; j < 3; ++j) {
      // Z-collapse: kernel depth equals the map's Z extent, no padding.
      const Conv3DGeom g{1, 0, 0, 0};
      TensorT<T> bev = conv3d(fms[j]->values, *bev_w_[j].value, *bev_b_[j].value, g, ledger,
                              "bev" + std::to_string(j + 1), ArithmeticKind::kMac);
      upsampled[j] = conv_transpose2d(bev, *up_w_[j].value, *up_b_[j].value, 1 << j, ledger,
                                      "up" + std::to_string(j + 1));
    }

    const int cy = cfg_.grid.ny, cx = cfg_.grid.nx;
    const int concat_c = cfg_.bev_channels[0] + cfg_.bev_channels[1] + cfg_.bev_channels[2];
    maps.concat_bev = TensorT<T>({concat_c, 1, cy, cx});
    std::size_t off = 0;
    for (int j = 0; j < 3; ++j) {
      if (upsampled[j].dim(2) != cy || upsampled[j].dim(3) != cx)
        throw std::invalid_argument("neck: post-upsample shape mismatch");
      std::copy(upsampled[j].values().begin(), upsampled[j].values().end(),
                maps.concat_bev.data() + off);
      off += upsampled[j].size();
    }

    const int hp = (cfg_.head_kernel - 1) / 2;
    maps.head_raw = conv3d(maps.concat_bev, *head_w_.value, *head_b_.value,
                           Conv3DGeom{1, 0, hp, hp}, ledger, "head", ArithmeticKind::kMac);
    return maps;
  }

  // -------------------------------------------------------------------------
  // training graph (single time step, fresh membranes)

  VarT<T> forward_train(TapeT<T>* tape, const TensorT<T>& grid_values, Mode mode,
                        SpikeMode spike_mode, bool update_running) {
    const Activation act = mode == Mode::kSnn ? Activation::kLIF : Activation::kReLU;
    const auto specs = block_specs(act);

    VarT<T> cur = VarT<T>::constant(grid_values);
    std::array<VarT<T>, 3> fms;
    for (int i = 0; i < kNumBlocks; ++i) {
      const ConvBlockSpec& s = specs[i];
      const Conv3DGeom g = Conv3DGeom::same(s.kernel, s.kernel, s.kernel, s.stride);
      cur = conv3d_op(tape, cur, blocks_[i].w, blocks_[i].b, g);
      cur = batchnorm_train_op(tape, cur, blocks_[i].gamma, blocks_[i].beta,
                               static_cast<T>(cfg_.bn_eps), &blocks_[i].running_mean,
                               &blocks_[i].running_var, static_cast<T>(cfg_.bn_momentum),
                               update_running);
      cur = act == Activation::kLIF ? lif_train_op(tape, cur, cfg_.lif, spike_mode)
                                    : relu_op(tape, cur);
      if (i == 0) fms[0] = cur;
      if (i == 2) fms[1] = cur;
      if (i == 4) fms[2] = cur;
    }

    std::vector<VarT<T>> ups;
    for (int j = 0; j < 3; ++j) {
      VarT<T> bev = conv3d_op(tape, fms[j], bev_w_[j], bev_b_[j], Conv3DGeom{1, 0, 0, 0});
      ups.push_back(conv_transpose2d_op(tape, bev, up_w_[j], up_b_[j], 1 << j));
    }
    VarT<T> concat = concat_channels_op(tape, ups);
    const int hp = (cfg_.head_kernel - 1) / 2;
    return conv3d_op(tape, concat, head_w_, head_b_, Conv3DGeom{1, 0, hp, hp});
  }

  std::vector<ConvBlockParamsT<T>>& blocks() { return blocks_; }
  const std::vector<ConvBlockParamsT<T>>& blocks() const { return blocks_; }

 private:
  NetworkConfig cfg_;
  std::vector<ConvBlockParamsT<T>> blocks_;
  std::array<VarT<T>, 3> bev_w_, bev_b_, up_w_, up_b_;
  VarT<T> head_w_, head_b_;
};

using Network = NetworkT<float>;

}  // namespace srn
