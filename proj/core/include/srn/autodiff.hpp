#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "srn/conv.hpp"
#include "srn/lif.hpp"
#include "srn/tensor.hpp"

namespace srn {

/// Reverse-mode tape over the fixed operator chain. Ops are recorded in
/// topological (execution) order and replayed in reverse by backward().
template <typename T>
class TapeT {
 public:
  void record(std::function<void()> op) { ops_.push_back(std::move(op)); }

  void backward() {
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
  }

  void clear() { ops_.clear(); }
  std::size_t size() const { return ops_.size(); }

 private:
  std::vector<std::function<void()>> ops_;
};

using Tape = TapeT<float>;

/// A tensor value with optional gradient storage. grad == nullptr marks a
/// constant; parameters share their value/grad across steps.
template <typename T>
struct VarT {
  std::shared_ptr<TensorT<T>> value;
  std::shared_ptr<TensorT<T>> grad;

  bool requires_grad() const { return grad != nullptr; }

  static VarT constant(TensorT<T> v) {
    return VarT{std::make_shared<TensorT<T>>(std::move(v)), nullptr};
  }
  static VarT param(TensorT<T> v) {
    auto val = std::make_shared<TensorT<T>>(std::move(v));
    auto grd = std::make_shared<TensorT<T>>(val->shape());
    return VarT{std::move(val), std::move(grd)};
  }

  void zero_grad() {
    if (grad) grad->fill(T(0));
  }
};

namespace detail {

template <typename T>
VarT<T> make_output(TensorT<T> value, bool needs_grad) {
  auto val = std::make_shared<TensorT<T>>(std::move(value));
  std::shared_ptr<TensorT<T>> grd;
  if (needs_grad) grd = std::make_shared<TensorT<T>>(val->shape());
  return VarT<T>{std::move(val), std::move(grd)};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// conv3d

template <typename T>
void conv3d_backward_input(TensorT<T>& dx, const TensorT<T>& w, const TensorT<T>& dy,
                           const Conv3DGeom& g) {
  const int c_out = w.dim(0), c_in = w.dim(1);
  const int kz = w.dim(2), ky = w.dim(3), kx = w.dim(4);
  const int zd = dx.dim(1), yd = dx.dim(2), xd = dx.dim(3);
  const int oz = dy.dim(1), oy = dy.dim(2), ox = dy.dim(3);
  const std::size_t in_slice = static_cast<std::size_t>(zd) * yd * xd;

#pragma omp parallel
  {
    std::vector<double> acc(in_slice);
#pragma omp for schedule(static)
    for (int ci = 0; ci < c_in; ++ci) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int co = 0; co < c_out; ++co)
        for (int dz = 0; dz < kz; ++dz)
          for (int dyk = 0; dyk < ky; ++dyk)
            for (int dxk = 0; dxk < kx; ++dxk) {
              const double ws = static_cast<double>(
                  w[(((static_cast<std::size_t>(co) * c_in + ci) * kz + dz) * ky + dyk) * kx + dxk]);
              if (ws == 0.0) continue;
              for (int z = 0; z < oz; ++z) {
                const int iz = z * g.stride - g.pad_z + dz;
                if (iz < 0 || iz >= zd) continue;
                for (int y = 0; y < oy; ++y) {
                  const int iy = y * g.stride - g.pad_y + dyk;
                  if (iy < 0 || iy >= yd) continue;
                  const T* dyrow = dy.data() + ((static_cast<std::size_t>(co) * oz + z) * oy + y) * ox;
                  double* arow = acc.data() + (static_cast<std::size_t>(iz) * yd + iy) * xd;
                  const int ix0 = -g.pad_x + dxk;
                  const int x_lo = std::max(0, (-ix0 + g.stride - 1) / g.stride);
                  const int x_hi = std::min(ox - 1, (xd - 1 - ix0) / g.stride);
                  for (int x = x_lo; x <= x_hi; ++x)
                    arow[ix0 + x * g.stride] += ws * static_cast<double>(dyrow[x]);
                }
              }
            }
      T* dst = dx.data() + static_cast<std::size_t>(ci) * in_slice;
      for (std::size_t i = 0; i < in_slice; ++i) dst[i] += static_cast<T>(acc[i]);
    }
  }
}

template <typename T>
void conv3d_backward_params(TensorT<T>& dw, TensorT<T>& db, const TensorT<T>& x,
                            const TensorT<T>& dy, const Conv3DGeom& g) {
  const int c_out = dw.dim(0), c_in = dw.dim(1);
  const int kz = dw.dim(2), ky = dw.dim(3), kx = dw.dim(4);
  const int zd = x.dim(1), yd = x.dim(2), xd = x.dim(3);
  const int oz = dy.dim(1), oy = dy.dim(2), ox = dy.dim(3);

#pragma omp parallel for schedule(static)
  for (int co = 0; co < c_out; ++co) {
    const T* dych = dy.data() + static_cast<std::size_t>(co) * oz * oy * ox;
    double bias_acc = 0.0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(oz) * oy * ox; ++i)
      bias_acc += static_cast<double>(dych[i]);
    db[co] += static_cast<T>(bias_acc);

    for (int ci = 0; ci < c_in; ++ci)
      for (int dz = 0; dz < kz; ++dz)
        for (int dyk = 0; dyk < ky; ++dyk)
          for (int dxk = 0; dxk < kx; ++dxk) {
            double acc = 0.0;
            for (int z = 0; z < oz; ++z) {
              const int iz = z * g.stride - g.pad_z + dz;
              if (iz < 0 || iz >= zd) continue;
              for (int y = 0; y < oy; ++y) {
                const int iy = y * g.stride - g.pad_y + dyk;
                if (iy < 0 || iy >= yd) continue;
                const T* dyrow = dych + (static_cast<std::size_t>(z) * oy + y) * ox;
                const T* xrow = x.data() + ((static_cast<std::size_t>(ci) * zd + iz) * yd + iy) * xd;
                const int ix0 = -g.pad_x + dxk;
                const int x_lo = std::max(0, (-ix0 + g.stride - 1) / g.stride);
                const int x_hi = std::min(ox - 1, (xd - 1 - ix0) / g.stride);
                for (int xo = x_lo; xo <= x_hi; ++xo)
                  acc += static_cast<double>(dyrow[xo]) *
                         static_cast<double>(xrow[ix0 + xo * g.stride]);
              }
            }
            dw[(((static_cast<std::size_t>(co) * c_in + ci) * kz + dz) * ky + dyk) * kx + dxk] +=
                static_cast<T>(acc);
          }
  }
}

template <typename T>
VarT<T> conv3d_op(TapeT<T>* tape, const VarT<T>& x, const VarT<T>& w, const VarT<T>& b,
                  const Conv3DGeom& g) {
  TensorT<T> y = conv3d(*x.value, *w.value, *b.value, g);
  const bool needs = tape != nullptr &&
                     (x.requires_grad() || w.requires_grad() || b.requires_grad());
  VarT<T> out = detail::make_output(std::move(y), needs);
  if (needs) {
    tape->record([x, w, b, out, g]() {
      if (x.requires_grad()) conv3d_backward_input(*x.grad, *w.value, *out.grad, g);
      if (w.requires_grad() || b.requires_grad())
        conv3d_backward_params(*w.grad, *b.grad, *x.value, *out.grad, g);
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// transpose conv (kernel == stride)

template <typename T>
VarT<T> conv_transpose2d_op(TapeT<T>* tape, const VarT<T>& x, const VarT<T>& w, const VarT<T>& b,
                            int factor) {
  TensorT<T> y = conv_transpose2d(*x.value, *w.value, *b.value, factor);
  const bool needs = tape != nullptr &&
                     (x.requires_grad() || w.requires_grad() || b.requires_grad());
  VarT<T> out = detail::make_output(std::move(y), needs);
  if (needs) {
    tape->record([x, w, b, out, factor]() {
      const TensorT<T>& dy = *out.grad;
      const int c_in = w.value->dim(0), c_out = w.value->dim(1);
      const int yd = x.value->dim(2), xd = x.value->dim(3);
      for (int co = 0; co < c_out; ++co) {
        double acc = 0.0;
        for (int y2 = 0; y2 < yd * factor; ++y2)
          for (int x2 = 0; x2 < xd * factor; ++x2) acc += static_cast<double>(dy.at(co, 0, y2, x2));
        if (b.requires_grad()) (*b.grad)[co] += static_cast<T>(acc);
      }
      for (int ci = 0; ci < c_in; ++ci)
        for (int co = 0; co < c_out; ++co)
          for (int fy = 0; fy < factor; ++fy)
            for (int fx = 0; fx < factor; ++fx) {
              const std::size_t widx =
                  ((static_cast<std::size_t>(ci) * c_out + co) * factor + fy) * factor + fx;
              double wacc = 0.0;
              for (int iy = 0; iy < yd; ++iy)
                for (int ix = 0; ix < xd; ++ix) {
                  const T d = dy.at(co, 0, iy * factor + fy, ix * factor + fx);
                  wacc += static_cast<double>(d) * static_cast<double>(x.value->at(ci, 0, iy, ix));
                  if (x.requires_grad())
                    x.grad->at(ci, 0, iy, ix) += (*w.value)[widx] * d;
                }
              if (w.requires_grad()) (*w.grad)[widx] += static_cast<T>(wacc);
            }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// batch norm (training statistics over Z*Y*X per channel)

template <typename T>
struct BnSaved {
  TensorT<T> xhat;
  std::vector<T> invstd;
};

template <typename T>
VarT<T> batchnorm_train_op(TapeT<T>* tape, const VarT<T>& x, const VarT<T>& gamma,
                           const VarT<T>& beta, T eps, std::vector<T>* running_mean,
                           std::vector<T>* running_var, T momentum, bool update_running) {
  const TensorT<T>& in = *x.value;
  if (in.rank() != 4) throw std::invalid_argument("batchnorm: input must be rank 4");
  const int c = in.dim(0);
  const std::size_t m = in.size() / static_cast<std::size_t>(c);

  auto saved = std::make_shared<BnSaved<T>>();
  saved->xhat = TensorT<T>(in.shape());
  saved->invstd.resize(static_cast<std::size_t>(c));

  TensorT<T> y(in.shape());
  for (int ch = 0; ch < c; ++ch) {
    const T* src = in.data() + static_cast<std::size_t>(ch) * m;
    double mu = 0.0;
    for (std::size_t i = 0; i < m; ++i) mu += static_cast<double>(src[i]);
    mu /= static_cast<double>(m);
    double var = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double d = static_cast<double>(src[i]) - mu;
      var += d * d;
    }
    var /= static_cast<double>(m);
    const double invstd = 1.0 / std::sqrt(var + static_cast<double>(eps));
    saved->invstd[ch] = static_cast<T>(invstd);

    T* xh = saved->xhat.data() + static_cast<std::size_t>(ch) * m;
    T* dst = y.data() + static_cast<std::size_t>(ch) * m;
    const T gm = (*gamma.value)[ch], bt = (*beta.value)[ch];
    for (std::size_t i = 0; i < m; ++i) {
      xh[i] = static_cast<T>((static_cast<double>(src[i]) - mu) * invstd);
      dst[i] = gm * xh[i] + bt;
    }

    if (update_running && running_mean != nullptr) {
      const double unbiased = m > 1 ? var * static_cast<double>(m) / static_cast<double>(m - 1) : var;
      (*running_mean)[ch] = static_cast<T>((1.0 - momentum) * (*running_mean)[ch] + momentum * mu);
      (*running_var)[ch] = static_cast<T>((1.0 - momentum) * (*running_var)[ch] + momentum * unbiased);
    }
  }

  const bool needs = tape != nullptr &&
                     (x.requires_grad() || gamma.requires_grad() || beta.requires_grad());
  VarT<T> out = detail::make_output(std::move(y), needs);
  if (needs) {
    tape->record([x, gamma, beta, out, saved, c, m]() {
      const TensorT<T>& dy = *out.grad;
      for (int ch = 0; ch < c; ++ch) {
        const T* dych = dy.data() + static_cast<std::size_t>(ch) * m;
        const T* xh = saved->xhat.data() + static_cast<std::size_t>(ch) * m;
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          sum_dy += static_cast<double>(dych[i]);
          sum_dy_xhat += static_cast<double>(dych[i]) * static_cast<double>(xh[i]);
        }
        if (gamma.requires_grad()) (*gamma.grad)[ch] += static_cast<T>(sum_dy_xhat);
        if (beta.requires_grad()) (*beta.grad)[ch] += static_cast<T>(sum_dy);
        if (x.requires_grad()) {
          const double gm = static_cast<double>((*gamma.value)[ch]);
          const double istd = static_cast<double>(saved->invstd[ch]);
          const double inv_m = 1.0 / static_cast<double>(m);
          T* dxch = x.grad->data() + static_cast<std::size_t>(ch) * m;
          for (std::size_t i = 0; i < m; ++i) {
            const double t = static_cast<double>(dych[i]) - inv_m * sum_dy -
                             static_cast<double>(xh[i]) * inv_m * sum_dy_xhat;
            dxch[i] += static_cast<T>(gm * istd * t);
          }
        }
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// activations

/// How the non-differentiable spike function is treated during training.
///   kStraightThrough: hard Heaviside forward, surrogate derivative backward.
///   kRelaxed: surrogate value forward as well; makes the whole network
///             differentiable so finite-difference checks apply end to end.
enum class SpikeMode { kStraightThrough, kRelaxed };

/// Single-step LIF over a fresh membrane (u = decay*u_reset + presyn, no
/// prior spike). The backward pass substitutes the surrogate derivative for
/// the Heaviside elementwise.
template <typename T>
VarT<T> lif_train_op(TapeT<T>* tape, const VarT<T>& presyn, const LIFParams& params,
                     SpikeMode mode) {
  const TensorT<T>& in = *presyn.value;
  const T base = static_cast<T>(params.decay) *
                 (static_cast<T>(params.u_reset) -
                  static_cast<T>(params.v_th) * (params.u_reset >= params.v_th ? T(1) : T(0)));
  auto membrane = std::make_shared<TensorT<T>>(in.shape());
  TensorT<T> y(in.shape());
  const T v_th = static_cast<T>(params.v_th);
  for (std::size_t i = 0; i < in.size(); ++i) {
    const T u = base + in[i];
    (*membrane)[i] = u;
    y[i] = mode == SpikeMode::kStraightThrough ? (u >= v_th ? T(1) : T(0))
                                               : surrogate_forward(u, params);
  }

  const bool needs = tape != nullptr && presyn.requires_grad();
  VarT<T> out = detail::make_output(std::move(y), needs);
  if (needs) {
    tape->record([presyn, out, membrane, params]() {
      TensorT<T>& dx = *presyn.grad;
      const TensorT<T>& dy = *out.grad;
      for (std::size_t i = 0; i < dx.size(); ++i)
        dx[i] += dy[i] * surrogate_grad((*membrane)[i], params);
    });
  }
  return out;
}

template <typename T>
VarT<T> relu_op(TapeT<T>* tape, const VarT<T>& x) {
  const TensorT<T>& in = *x.value;
  TensorT<T> y(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) y[i] = in[i] > T(0) ? in[i] : T(0);

  const bool needs = tape != nullptr && x.requires_grad();
  VarT<T> out = detail::make_output(std::move(y), needs);
  if (needs) {
    tape->record([x, out]() {
      for (std::size_t i = 0; i < x.grad->size(); ++i)
        if ((*x.value)[i] > T(0)) (*x.grad)[i] += (*out.grad)[i];
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// channel concat of (C_i, 1, Y, X) maps

template <typename T>
VarT<T> concat_channels_op(TapeT<T>* tape, const std::vector<VarT<T>>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat: no inputs");
  int c_total = 0;
  for (const auto& v : xs) {
    if (v.value->rank() != 4) throw std::invalid_argument("concat: inputs must be rank 4");
    if (v.value->dim(1) != xs[0].value->dim(1) || v.value->dim(2) != xs[0].value->dim(2) ||
        v.value->dim(3) != xs[0].value->dim(3))
      throw std::invalid_argument("concat: spatial shape mismatch");
    c_total += v.value->dim(0);
  }
  TensorT<T> y({c_total, xs[0].value->dim(1), xs[0].value->dim(2), xs[0].value->dim(3)});
  std::size_t off = 0;
  for (const auto& v : xs) {
    std::copy(v.value->values().begin(), v.value->values().end(), y.data() + off);
    off += v.value->size();
  }

  bool needs = false;
  if (tape != nullptr)
    for (const auto& v : xs) needs = needs || v.requires_grad();
  VarT<T> out = detail::make_output(std::move(y), needs);
  if (needs) {
    tape->record([xs, out]() {
      std::size_t off = 0;
      for (const auto& v : xs) {
        if (v.requires_grad())
          for (std::size_t i = 0; i < v.grad->size(); ++i)
            (*v.grad)[i] += (*out.grad)[off + i];
        off += v.value->size();
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// scalar combination: w_a * a + w_b * b

template <typename T>
VarT<T> weighted_sum_op(TapeT<T>* tape, const VarT<T>& a, const VarT<T>& b, T wa, T wb) {
  if (a.value->size() != 1 || b.value->size() != 1)
    throw std::invalid_argument("weighted_sum: scalars expected");
  TensorT<T> y({1});
  y[0] = wa * (*a.value)[0] + wb * (*b.value)[0];
  const bool needs = tape != nullptr && (a.requires_grad() || b.requires_grad());
  VarT<T> out = detail::make_output(std::move(y), needs);
  if (needs) {
    tape->record([a, b, out, wa, wb]() {
      if (a.requires_grad()) (*a.grad)[0] += wa * (*out.grad)[0];
      if (b.requires_grad()) (*b.grad)[0] += wb * (*out.grad)[0];
    });
  }
  return out;
}

}  // namespace srn
