#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "srn/autodiff.hpp"
#include "srn/tensor.hpp"

namespace srn {

struct AdamWConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;

  void validate() const {
    if (!(lr >= 0.0)) throw std::invalid_argument("adamw: lr must be >= 0");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
      throw std::invalid_argument("adamw: betas must be in [0, 1)");
    if (!(eps > 0.0)) throw std::invalid_argument("adamw: eps must be > 0");
    if (weight_decay < 0.0) throw std::invalid_argument("adamw: weight decay must be >= 0");
  }
};

/// Adam with decoupled weight decay:
///   p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + wd * p)
template <typename T>
class AdamWT {
 public:
  AdamWT(std::vector<VarT<T>> params, AdamWConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    for (VarT<T>& p : params) {
      if (!p.requires_grad()) throw std::invalid_argument("adamw: parameter without gradient");
      slots_.push_back(Slot{p, TensorT<T>(p.value->shape()), TensorT<T>(p.value->shape())});
    }
  }

  void zero_grad() {
    for (Slot& s : slots_) s.param.zero_grad();
  }

  void step() {
    ++step_count_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
    for (Slot& s : slots_) {
      TensorT<T>& p = *s.param.value;
      const TensorT<T>& g = *s.param.grad;
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double gi = static_cast<double>(g[i]);
        const double m = cfg_.beta1 * static_cast<double>(s.m[i]) + (1.0 - cfg_.beta1) * gi;
        const double v = cfg_.beta2 * static_cast<double>(s.v[i]) + (1.0 - cfg_.beta2) * gi * gi;
        s.m[i] = static_cast<T>(m);
        s.v[i] = static_cast<T>(v);
        const double m_hat = m / bc1;
        const double v_hat = v / bc2;
        const double update = m_hat / (std::sqrt(v_hat) + cfg_.eps) +
                              cfg_.weight_decay * static_cast<double>(p[i]);
        p[i] = static_cast<T>(static_cast<double>(p[i]) - cfg_.lr * update);
      }
    }
  }

  std::int64_t step_count() const { return step_count_; }
  const AdamWConfig& config() const { return cfg_; }

 private:
  struct Slot {
    VarT<T> param;
    TensorT<T> m, v;
  };
  std::vector<Slot> slots_;
  AdamWConfig cfg_;
  std::int64_t step_count_ = 0;
};

using AdamW = AdamWT<float>;

}  // namespace srn
