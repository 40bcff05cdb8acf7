#pragma once

#include <cstdint>
#include <vector>

#include "lcs/tape.hpp"
#include "lcs/tensor.hpp"

namespace lcs {

enum class PosWeightMode { ones, neg_over_pos };

struct LossConfig {
  double dice_weight = 0.5;
  double bce_weight = 0.5;
  PosWeightMode pos_weight_mode = PosWeightMode::ones;
  std::vector<float> pos_weights;  // per-class p_c; empty means all ones
  double element_weight = 1.0;     // w_{n,c}
  double dice_eps = 1.0;
};

// Per-class positive weights p_c = negatives / positives. Classes with zero
// positives fall back to 1 and are reported so callers can warn.
struct PosWeightResult {
  std::vector<float> weights;
  std::vector<int> zero_positive_classes;
};
PosWeightResult pos_weights(const std::vector<std::int64_t>& positives,
                            const std::vector<std::int64_t>& negatives,
                            PosWeightMode mode = PosWeightMode::neg_over_pos);

// Per-class binary cross entropy computed from logits (no explicit sigmoid,
// softplus form), averaged over masked pixels and classes. logits/targets are
// NxCxHxW, mask is NxHxW with {0,1} entries, pos_weight has C entries.
// Gradient flows into the logits.
template <typename S>
VarT<S> bce_with_logits(TapeT<S>& tape, const VarT<S>& logits, const VarT<S>& targets,
                        const std::vector<S>& pos_weight, const TensorT<S>& mask,
                        S element_weight = S(1));

// Smoothed soft dice, per class over masked pixels, averaged over classes:
// d_c = 1 - (2*sum(sig(y)*t) + eps) / (sum(sig(y)) + sum(t) + eps).
template <typename S>
VarT<S> soft_dice(TapeT<S>& tape, const VarT<S>& logits, const VarT<S>& targets,
                  const TensorT<S>& mask, S eps = S(1));

// dice_weight * soft_dice + bce_weight * bce_with_logits.
template <typename S>
VarT<S> composite_loss(TapeT<S>& tape, const VarT<S>& logits, const VarT<S>& targets,
                       const LossConfig& cfg, const TensorT<S>& mask);

}  // namespace lcs
