#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "srn/energy.hpp"
#include "srn/tensor.hpp"

namespace srn {

/// Whether a layer's synaptic work is multiply-accumulate (real inputs) or
/// accumulate-only (binary spike inputs).
enum class ArithmeticKind { kMac, kAc };

struct Conv3DGeom {
  int stride = 1;
  int pad_z = 0, pad_y = 0, pad_x = 0;

  static Conv3DGeom same(int kz, int ky, int kx, int stride = 1) {
    return Conv3DGeom{stride, (kz - 1) / 2, (ky - 1) / 2, (kx - 1) / 2};
  }
};

inline int conv_out_dim(int in, int k, int pad, int stride) {
  return (in + 2 * pad - k) / stride + 1;
}

namespace detail {

inline int ceil_div(int a, int b) {  // b > 0
  return a >= 0 ? (a + b - 1) / b : -((-a) / b);
}

// Number of valid output positions along one axis whose receptive field
// covers input position `pos`.
inline int taps_on_axis(int pos, int k, int pad, int stride, int out_dim) {
  // o*stride - pad <= pos <= o*stride - pad + k - 1
  int lo = std::max(0, ceil_div(pos + pad - k + 1, stride));
  int hi = std::min(out_dim - 1, (pos + pad) / stride);
  return hi >= lo ? hi - lo + 1 : 0;
}

struct SpikeEvent {
  int ci, z, y, x;
};

}  // namespace detail

template <typename T>
void check_conv_args(const TensorT<T>& in, const TensorT<T>& w, const TensorT<T>& b) {
  if (in.rank() != 4) throw std::invalid_argument("conv3d: input must be rank 4 (C,Z,Y,X)");
  if (w.rank() != 5) throw std::invalid_argument("conv3d: weights must be rank 5");
  if (w.dim(1) != in.dim(0))
    throw std::invalid_argument("conv3d: input channels " + std::to_string(in.dim(0)) +
                                " do not match kernel channels " + std::to_string(w.dim(1)));
  if (b.rank() != 1 || b.dim(0) != w.dim(0))
    throw std::invalid_argument("conv3d: bias size must equal output channels");
}

/// Analytic (static-profiler) op count of a dense conv: every output element
/// sums over in_channels * kernel_volume taps.
inline std::uint64_t conv_dense_ops(std::uint64_t out_elems, int c_in, std::uint64_t kernel_vol) {
  return out_elems * static_cast<std::uint64_t>(c_in) * kernel_vol;
}

/// Event (actual-work) op count: one op per (nonzero input, valid kernel tap,
/// output channel) triple.
template <typename T>
std::uint64_t conv_event_ops(const TensorT<T>& in, int kz, int ky, int kx, const Conv3DGeom& g,
                             int c_out, int oz_dim, int oy_dim, int ox_dim) {
  std::uint64_t taps = 0;
  const int zd = in.dim(1), yd = in.dim(2), xd = in.dim(3);
  for (int c = 0; c < in.dim(0); ++c)
    for (int z = 0; z < zd; ++z)
      for (int y = 0; y < yd; ++y)
        for (int x = 0; x < xd; ++x) {
          if (in.at(c, z, y, x) == T(0)) continue;
          taps += static_cast<std::uint64_t>(detail::taps_on_axis(z, kz, g.pad_z, g.stride, oz_dim)) *
                  detail::taps_on_axis(y, ky, g.pad_y, g.stride, oy_dim) *
                  detail::taps_on_axis(x, kx, g.pad_x, g.stride, ox_dim);
        }
  return taps * static_cast<std::uint64_t>(c_out);
}

/// Dense 3D cross-correlation with zero padding. Accumulates per output in
/// double and records one ledger row under `layer`.
template <typename T>
TensorT<T> conv3d(const TensorT<T>& in, const TensorT<T>& w, const TensorT<T>& b,
                  const Conv3DGeom& g, OpLedger* ledger = nullptr,
                  const std::string& layer = std::string(),
                  ArithmeticKind kind = ArithmeticKind::kMac) {
  check_conv_args(in, w, b);
  const int c_out = w.dim(0), c_in = w.dim(1);
  const int kz = w.dim(2), ky = w.dim(3), kx = w.dim(4);
  const int zd = in.dim(1), yd = in.dim(2), xd = in.dim(3);
  const int oz = conv_out_dim(zd, kz, g.pad_z, g.stride);
  const int oy = conv_out_dim(yd, ky, g.pad_y, g.stride);
  const int ox = conv_out_dim(xd, kx, g.pad_x, g.stride);
  if (oz < 1 || oy < 1 || ox < 1)
    throw std::invalid_argument("conv3d: kernel larger than padded input");

  TensorT<T> out({c_out, oz, oy, ox});
  const std::size_t slice = static_cast<std::size_t>(oz) * oy * ox;
  const std::size_t in_slice = static_cast<std::size_t>(zd) * yd * xd;

#pragma omp parallel
  {
    std::vector<double> acc(slice);
#pragma omp for schedule(static)
    for (int co = 0; co < c_out; ++co) {
      std::fill(acc.begin(), acc.end(), static_cast<double>(b[co]));
      for (int ci = 0; ci < c_in; ++ci) {
        const T* in_ch = in.data() + static_cast<std::size_t>(ci) * in_slice;
        for (int dz = 0; dz < kz; ++dz)
          for (int dy = 0; dy < ky; ++dy)
            for (int dx = 0; dx < kx; ++dx) {
              const double ws = static_cast<double>(
                  w[(((static_cast<std::size_t>(co) * c_in + ci) * kz + dz) * ky + dy) * kx + dx]);
              if (ws == 0.0) continue;
              for (int z = 0; z < oz; ++z) {
                const int iz = z * g.stride - g.pad_z + dz;
                if (iz < 0 || iz >= zd) continue;
                for (int y = 0; y < oy; ++y) {
                  const int iy = y * g.stride - g.pad_y + dy;
                  if (iy < 0 || iy >= yd) continue;
                  double* arow = acc.data() + (static_cast<std::size_t>(z) * oy + y) * ox;
                  const T* irow = in_ch + (static_cast<std::size_t>(iz) * yd + iy) * xd;
                  const int ix0 = -g.pad_x + dx;
                  const int x_lo = std::max(0, (-ix0 + g.stride - 1) / g.stride);
                  const int x_hi = std::min(ox - 1, (xd - 1 - ix0) / g.stride);
                  for (int x = x_lo; x <= x_hi; ++x)
                    arow[x] += ws * static_cast<double>(irow[ix0 + x * g.stride]);
                }
              }
            }
      }
      T* orow = out.data() + static_cast<std::size_t>(co) * slice;
      for (std::size_t i = 0; i < slice; ++i) orow[i] = static_cast<T>(acc[i]);
    }
  }

  if (ledger != nullptr) {
    const std::uint64_t kernel_vol = static_cast<std::uint64_t>(kz) * ky * kx;
    const std::uint64_t dense = conv_dense_ops(static_cast<std::uint64_t>(c_out) * slice, c_in, kernel_vol);
    const std::uint64_t event = conv_event_ops(in, kz, ky, kx, g, c_out, oz, oy, ox);
    OpCounts counts;
    if (kind == ArithmeticKind::kMac) {
      counts.mac_dense = dense;
      counts.mac_event = event;
    } else {
      counts.ac_dense = dense;
      counts.ac_event = event;
    }
    ledger->record_counts(layer, counts);
  }
  return out;
}

/// Event-driven conv over a binary spike map: iterates spike events and
/// accumulates kernel columns, so work scales with spike count. Matches
/// conv3d on the same input to within 1 ULP per element and records one AC
/// per (spike, valid tap, output channel) triple, zero MACs.
template <typename T>
TensorT<T> event_driven_conv3d(const FeatureMapT<T>& spikes, const TensorT<T>& w,
                               const TensorT<T>& b, const Conv3DGeom& g,
                               OpLedger* ledger = nullptr,
                               const std::string& layer = std::string()) {
  if (!spikes.binary)
    throw std::invalid_argument("event-driven path requires spikes");
  const TensorT<T>& in = spikes.values;
  check_conv_args(in, w, b);
  const int c_out = w.dim(0), c_in = w.dim(1);
  const int kz = w.dim(2), ky = w.dim(3), kx = w.dim(4);
  const int zd = in.dim(1), yd = in.dim(2), xd = in.dim(3);
  const int oz = conv_out_dim(zd, kz, g.pad_z, g.stride);
  const int oy = conv_out_dim(yd, ky, g.pad_y, g.stride);
  const int ox = conv_out_dim(xd, kx, g.pad_x, g.stride);
  if (oz < 1 || oy < 1 || ox < 1)
    throw std::invalid_argument("conv3d: kernel larger than padded input");

  std::vector<detail::SpikeEvent> events;
  for (int ci = 0; ci < c_in; ++ci)
    for (int z = 0; z < zd; ++z)
      for (int y = 0; y < yd; ++y)
        for (int x = 0; x < xd; ++x)
          if (in.at(ci, z, y, x) != T(0)) {
            if (in.at(ci, z, y, x) != T(1))
              throw std::invalid_argument("event-driven path requires spikes");
            events.push_back({ci, z, y, x});
          }

  TensorT<T> out({c_out, oz, oy, ox});
  const std::size_t slice = static_cast<std::size_t>(oz) * oy * ox;

#pragma omp parallel
  {
    std::vector<double> acc(slice);
#pragma omp for schedule(static)
    for (int co = 0; co < c_out; ++co) {
      std::fill(acc.begin(), acc.end(), static_cast<double>(b[co]));
      const T* wk = w.data() + static_cast<std::size_t>(co) * c_in * kz * ky * kx;
      for (const detail::SpikeEvent& e : events) {
        const T* wc = wk + static_cast<std::size_t>(e.ci) * kz * ky * kx;
        // Output positions whose receptive field covers the spike.
        for (int dz = 0; dz < kz; ++dz) {
          const int zt = e.z + g.pad_z - dz;
          if (zt < 0 || zt % g.stride != 0) continue;
          const int pz = zt / g.stride;
          if (pz >= oz) continue;
          for (int dy = 0; dy < ky; ++dy) {
            const int yt = e.y + g.pad_y - dy;
            if (yt < 0 || yt % g.stride != 0) continue;
            const int py = yt / g.stride;
            if (py >= oy) continue;
            for (int dx = 0; dx < kx; ++dx) {
              const int xt = e.x + g.pad_x - dx;
              if (xt < 0 || xt % g.stride != 0) continue;
              const int px = xt / g.stride;
              if (px >= ox) continue;
              acc[(static_cast<std::size_t>(pz) * oy + py) * ox + px] +=
                  static_cast<double>(wc[(static_cast<std::size_t>(dz) * ky + dy) * kx + dx]);
            }
          }
        }
      }
      T* orow = out.data() + static_cast<std::size_t>(co) * slice;
      for (std::size_t i = 0; i < slice; ++i) orow[i] = static_cast<T>(acc[i]);
    }
  }

  if (ledger != nullptr) {
    std::uint64_t taps = 0;
    for (const detail::SpikeEvent& e : events)
      taps += static_cast<std::uint64_t>(detail::taps_on_axis(e.z, kz, g.pad_z, g.stride, oz)) *
              detail::taps_on_axis(e.y, ky, g.pad_y, g.stride, oy) *
              detail::taps_on_axis(e.x, kx, g.pad_x, g.stride, ox);
    const std::uint64_t kernel_vol = static_cast<std::uint64_t>(kz) * ky * kx;
    OpCounts counts;
    counts.ac_dense = conv_dense_ops(static_cast<std::uint64_t>(c_out) * slice, c_in, kernel_vol);
    counts.ac_event = taps * static_cast<std::uint64_t>(c_out);
    ledger->record_counts(layer, counts);
  }
  return out;
}

/// 2D transpose convolution on (C, 1, Y, X) maps with kernel size == stride,
/// so each output element receives exactly one tap per input channel.
/// Weights are (C_in, C_out, f, f). Used to restore BEV maps to Y1 x X1.
template <typename T>
TensorT<T> conv_transpose2d(const TensorT<T>& in, const TensorT<T>& w, const TensorT<T>& b,
                            int factor, OpLedger* ledger = nullptr,
                            const std::string& layer = std::string()) {
  if (in.rank() != 4 || in.dim(1) != 1)
    throw std::invalid_argument("conv_transpose2d: input must be (C,1,Y,X)");
  if (w.rank() != 4 || w.dim(0) != in.dim(0) || w.dim(2) != factor || w.dim(3) != factor)
    throw std::invalid_argument("conv_transpose2d: weights must be (C_in,C_out,f,f)");
  const int c_in = w.dim(0), c_out = w.dim(1);
  if (b.rank() != 1 || b.dim(0) != c_out)
    throw std::invalid_argument("conv_transpose2d: bias size must equal output channels");
  const int yd = in.dim(2), xd = in.dim(3);
  const int oy = yd * factor, ox = xd * factor;

  TensorT<T> out({c_out, 1, oy, ox});
#pragma omp parallel for schedule(static)
  for (int co = 0; co < c_out; ++co)
    for (int y = 0; y < oy; ++y)
      for (int x = 0; x < ox; ++x) {
        double acc = static_cast<double>(b[co]);
        const int iy = y / factor, ix = x / factor;
        const int fy = y % factor, fx = x % factor;
        for (int ci = 0; ci < c_in; ++ci)
          acc += static_cast<double>(in.at(ci, 0, iy, ix)) *
                 static_cast<double>(
                     w[(((static_cast<std::size_t>(ci) * c_out + co) * factor + fy) * factor + fx)]);
        out.at(co, 0, y, x) = static_cast<T>(acc);
      }

  if (ledger != nullptr) {
    const std::uint64_t out_elems = static_cast<std::uint64_t>(c_out) * oy * ox;
    std::uint64_t nnz = 0;
    for (std::size_t i = 0; i < in.size(); ++i) nnz += (in[i] != T(0));
    OpCounts counts;
    counts.mac_dense = out_elems * static_cast<std::uint64_t>(c_in);
    counts.mac_event = nnz * static_cast<std::uint64_t>(factor) * factor * c_out;
    ledger->record_counts(layer, counts);
  }
  return out;
}

/// Per-channel affine y = scale * x + shift; inference-time batch norm.
template <typename T>
TensorT<T> channel_affine(const TensorT<T>& in, const std::vector<T>& scale,
                          const std::vector<T>& shift) {
  if (in.rank() != 4) throw std::invalid_argument("channel_affine: input must be rank 4");
  if (scale.size() != static_cast<std::size_t>(in.dim(0)) || shift.size() != scale.size())
    throw std::invalid_argument("channel_affine: per-channel parameter count mismatch");
  TensorT<T> out(in.shape());
  const std::size_t slice = in.size() / static_cast<std::size_t>(in.dim(0));
  for (int c = 0; c < in.dim(0); ++c) {
    const T* src = in.data() + c * slice;
    T* dst = out.data() + c * slice;
    for (std::size_t i = 0; i < slice; ++i) dst[i] = scale[c] * src[i] + shift[c];
  }
  return out;
}

}  // namespace srn
