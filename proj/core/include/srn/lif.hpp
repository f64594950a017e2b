#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "srn/tensor.hpp"

namespace srn {

/// Discrete-time leaky integrate-and-fire parameters.
///   u[t+1] = lambda * (u[t] - v_th * o[t]) + presyn
///   o[t]   = H(u[t] - v_th),   H(0) = 1
/// lambda is the decay factor 1 - dt/tau; the soft reset subtracts v_th on
/// spike instead of zeroing the potential.
struct LIFParams {
  float decay = 0.25f;      // lambda in (0, 1]
  float v_th = 1.0f;        // firing threshold > 0
  float beta = 5.0f;        // surrogate steepness > 0
  float u_reset = 0.0f;

  void validate() const {
    if (!(decay > 0.0f) || decay > 1.0f)
      throw std::invalid_argument("LIF decay must be in (0, 1]");
    if (!(v_th > 0.0f)) throw std::invalid_argument("LIF threshold must be > 0");
    if (!(beta > 0.0f)) throw std::invalid_argument("LIF surrogate steepness must be > 0");
  }
};

/// Per-layer membrane potentials, same shape as the layer's output.
template <typename T>
struct MembraneStateT {
  TensorT<T> potentials;
};

using MembraneState = MembraneStateT<float>;

/// One LIF update: fire from the current potential (hard Heaviside, spike at
/// u == v_th), then decay, soft-reset and integrate the pre-synaptic input.
/// Returns (spikes, next potentials).
template <typename T>
std::pair<TensorT<T>, MembraneStateT<T>> lif_step(const MembraneStateT<T>& state,
                                                  const TensorT<T>& presyn,
                                                  const LIFParams& params) {
  const TensorT<T>& u = state.potentials;
  if (!u.same_shape(presyn))
    throw std::invalid_argument("lif_step: potential shape " + shape_str(u.shape()) +
                                " does not match input shape " + shape_str(presyn.shape()));

  const T lambda = static_cast<T>(params.decay);
  const T v_th = static_cast<T>(params.v_th);

  TensorT<T> spikes(u.shape());
  MembraneStateT<T> next{TensorT<T>(u.shape())};
  for (std::size_t i = 0; i < u.size(); ++i) {
    const T o = u[i] >= v_th ? T(1) : T(0);
    spikes[i] = o;
    next.potentials[i] = lambda * (u[i] - v_th * o) + presyn[i];
  }
  return {std::move(spikes), std::move(next)};
}

/// Layer driver: integrate this step's input (the lif_step update applies
/// the decay and the soft reset of the previously emitted spikes), then fire
/// from the updated potential. The reset for the spikes returned here is
/// applied by the next call's update.
template <typename T>
TensorT<T> lif_integrate_fire(MembraneStateT<T>& state, const TensorT<T>& presyn,
                              const LIFParams& params) {
  auto [prev_spikes, next] = lif_step(state, presyn, params);
  (void)prev_spikes;  // already emitted by the previous call
  state = std::move(next);
  const T v_th = static_cast<T>(params.v_th);
  TensorT<T> spikes(state.potentials.shape());
  for (std::size_t i = 0; i < spikes.size(); ++i)
    spikes[i] = state.potentials[i] >= v_th ? T(1) : T(0);
  return spikes;
}

template <typename T>
MembraneStateT<T> reset_state(const MembraneStateT<T>& state, const LIFParams& params) {
  MembraneStateT<T> out{TensorT<T>(state.potentials.shape())};
  out.potentials.fill(static_cast<T>(params.u_reset));
  return out;
}

/// Smooth stand-in for the Heaviside used only in the backward pass:
/// 0.5 * tanh(beta * (u - v_th)) + 0.5.
template <typename T>
T surrogate_forward(T u, const LIFParams& params) {
  return T(0.5) * std::tanh(static_cast<T>(params.beta) * (u - static_cast<T>(params.v_th))) +
         T(0.5);
}

/// Analytic derivative of surrogate_forward: (beta/2) * sech^2(beta * (u - v_th)).
template <typename T>
T surrogate_grad(T u, const LIFParams& params) {
  const T t = std::tanh(static_cast<T>(params.beta) * (u - static_cast<T>(params.v_th)));
  return static_cast<T>(params.beta) * T(0.5) * (T(1) - t * t);
}

}  // namespace srn
