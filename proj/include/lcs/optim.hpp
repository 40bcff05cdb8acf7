#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "lcs/tensor.hpp"

namespace lcs {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment buffers, one pair per parameter, aligned by index with
// the parameter list handed to adam_step. Frozen parameters keep their
// moments untouched.
template <typename S>
struct AdamStateT {
  std::vector<std::vector<S>> m;
  std::vector<std::vector<S>> v;
  std::int64_t step = 0;

  void init(const std::vector<VarT<S>>& params) {
    m.clear();
    v.clear();
    for (const auto& p : params) {
      m.emplace_back(p->size(), S(0));
      v.emplace_back(p->size(), S(0));
    }
    step = 0;
  }
};

using AdamState = AdamStateT<float>;

// Standard Adam update with bias correction. Parameters without
// requires_grad or without an accumulated gradient are skipped.
template <typename S>
void adam_step(const std::vector<VarT<S>>& params, AdamStateT<S>& state, S lr,
               const AdamConfig& cfg = {}) {
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw DimensionError("adam_step: state holds " + std::to_string(state.m.size()) +
                         " moment buffers for " + std::to_string(params.size()) + " params");
  state.step += 1;
  const S b1 = static_cast<S>(cfg.beta1);
  const S b2 = static_cast<S>(cfg.beta2);
  const S eps = static_cast<S>(cfg.eps);
  const S corr1 = S(1) - static_cast<S>(std::pow(cfg.beta1, static_cast<double>(state.step)));
  const S corr2 = S(1) - static_cast<S>(std::pow(cfg.beta2, static_cast<double>(state.step)));
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = *params[pi];
    if (!p.requires_grad || !p.has_grad()) continue;
    if (state.m[pi].size() != p.size())
      throw DimensionError("adam_step: moment buffer " + std::to_string(pi) +
                           " size mismatch with parameter shape " + shape_str(p.shape));
    auto& m = state.m[pi];
    auto& v = state.v[pi];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const S g = p.grad[i];
      m[i] = b1 * m[i] + (S(1) - b1) * g;
      v[i] = b2 * v[i] + (S(1) - b2) * g * g;
      const S mhat = m[i] / corr1;
      const S vhat = v[i] / corr2;
      p.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

// Step decay with a one-off drop when the frozen encoder is released.
struct LrSchedule {
  double initial_lr = 5e-4;
  double decay_factor = 0.5;
  int decay_every_epochs = 20;
  double unfreeze_lr_drop = 0.1;

  double at(int epoch, bool unfrozen_phase) const {
    double lr = initial_lr;
    if (decay_every_epochs > 0)
      lr *= std::pow(decay_factor, static_cast<double>(epoch / decay_every_epochs));
    if (unfrozen_phase) lr *= unfreeze_lr_drop;
    return lr;
  }
};

}  // namespace lcs
