#include "lcs/loss.hpp"

#include <cmath>

#include "lcs/ops.hpp"

namespace lcs {

namespace {

template <typename S>
S softplus(S x) {
  // max(x,0) + log1p(exp(-|x|)): no overflow anywhere on the real line
  return std::max(x, S(0)) + std::log1p(std::exp(-std::abs(x)));
}

template <typename S>
S stable_sigmoid(S x) {
  if (x >= S(0)) return S(1) / (S(1) + std::exp(-x));
  S e = std::exp(x);
  return e / (S(1) + e);
}

template <typename S>
void check_loss_shapes(const TensorT<S>& logits, const TensorT<S>& targets, const TensorT<S>& mask,
                       const char* op) {
  expect_ndim(logits, 4, op, "logits");
  if (targets.shape != logits.shape)
    throw DimensionError(std::string(op) + ": targets shape " + shape_str(targets.shape) +
                         " != logits shape " + shape_str(logits.shape));
  expect_ndim(mask, 3, op, "mask");
  if (mask.dim(0) != logits.dim(0) || mask.dim(1) != logits.dim(2) || mask.dim(2) != logits.dim(3))
    throw DimensionError(std::string(op) + ": mask shape " + shape_str(mask.shape) +
                         " does not match logits " + shape_str(logits.shape));
}

template <typename S>
std::size_t count_masked(const TensorT<S>& mask) {
  std::size_t cnt = 0;
  for (S v : mask.data)
    if (v != S(0)) ++cnt;
  return cnt;
}

}  // namespace

PosWeightResult pos_weights(const std::vector<std::int64_t>& positives,
                            const std::vector<std::int64_t>& negatives, PosWeightMode mode) {
  if (positives.size() != negatives.size())
    throw DimensionError("pos_weights: positives and negatives differ in length");
  PosWeightResult res;
  res.weights.assign(positives.size(), 1.0f);
  if (mode == PosWeightMode::ones) return res;
  for (std::size_t c = 0; c < positives.size(); ++c) {
    if (positives[c] <= 0) {
      res.zero_positive_classes.push_back(static_cast<int>(c));
      continue;  // keeps p_c = 1
    }
    res.weights[c] =
        static_cast<float>(static_cast<double>(negatives[c]) / static_cast<double>(positives[c]));
  }
  return res;
}

template <typename S>
VarT<S> bce_with_logits(TapeT<S>& tape, const VarT<S>& logits, const VarT<S>& targets,
                        const std::vector<S>& pos_weight, const TensorT<S>& mask,
                        S element_weight) {
  check_loss_shapes(*logits, *targets, mask, "bce_with_logits");
  const int n = logits->dim(0), c = logits->dim(1), h = logits->dim(2), w = logits->dim(3);
  if (static_cast<int>(pos_weight.size()) != c)
    throw DimensionError("bce_with_logits: pos_weight has " + std::to_string(pos_weight.size()) +
                         " entries for " + std::to_string(c) + " classes");
  const std::size_t masked = count_masked(mask);
  if (masked == 0) throw DataError("bce_with_logits: mask selects no pixels");
  const S inv_count = S(1) / (static_cast<S>(masked) * static_cast<S>(c));
  const std::size_t hw = static_cast<std::size_t>(h) * w;

  S total = 0;
  for (int i = 0; i < n; ++i) {
    for (int ch = 0; ch < c; ++ch) {
      const S p = pos_weight[ch];
      const S* y = logits->data.data() + (static_cast<std::size_t>(i) * c + ch) * hw;
      const S* t = targets->data.data() + (static_cast<std::size_t>(i) * c + ch) * hw;
      const S* mk = mask.data.data() + static_cast<std::size_t>(i) * hw;
      for (std::size_t e = 0; e < hw; ++e) {
        if (mk[e] == S(0)) continue;
        total += element_weight * (p * t[e] * softplus(-y[e]) + (S(1) - t[e]) * softplus(y[e]));
      }
    }
  }
  auto out = make_var(TensorT<S>({1}, {total * inv_count}));

  auto mask_copy = std::make_shared<TensorT<S>>(mask);
  auto pw = std::make_shared<std::vector<S>>(pos_weight);
  tape.record("bce_with_logits", {logits, targets}, out, [=]() {
    if (!logits->requires_grad) return;
    logits->ensure_grad();
    const S g = out->grad[0] * inv_count * element_weight;
    for (int i = 0; i < n; ++i) {
      for (int ch = 0; ch < c; ++ch) {
        const S p = (*pw)[ch];
        const S* y = logits->data.data() + (static_cast<std::size_t>(i) * c + ch) * hw;
        const S* t = targets->data.data() + (static_cast<std::size_t>(i) * c + ch) * hw;
        const S* mk = mask_copy->data.data() + static_cast<std::size_t>(i) * hw;
        S* dy = logits->grad.data() + (static_cast<std::size_t>(i) * c + ch) * hw;
        for (std::size_t e = 0; e < hw; ++e) {
          if (mk[e] == S(0)) continue;
          const S sig = stable_sigmoid(y[e]);
          dy[e] += g * (p * t[e] * (sig - S(1)) + (S(1) - t[e]) * sig);
        }
      }
    }
  });
  return out;
}

template <typename S>
VarT<S> soft_dice(TapeT<S>& tape, const VarT<S>& logits, const VarT<S>& targets,
                  const TensorT<S>& mask, S eps) {
  check_loss_shapes(*logits, *targets, mask, "soft_dice");
  const int n = logits->dim(0), c = logits->dim(1), h = logits->dim(2), w = logits->dim(3);
  const std::size_t masked = count_masked(mask);
  if (masked == 0) throw DataError("soft_dice: mask selects no pixels");
  const std::size_t hw = static_cast<std::size_t>(h) * w;

  // Per-class intersection (A) and sum (B) over masked pixels; sigmoids are
  // kept for the backward rule.
  auto sig = std::make_shared<std::vector<S>>(logits->size());
  auto inter = std::make_shared<std::vector<S>>(c, S(0));
  auto sums = std::make_shared<std::vector<S>>(c, S(0));
  for (int i = 0; i < n; ++i) {
    for (int ch = 0; ch < c; ++ch) {
      const std::size_t off = (static_cast<std::size_t>(i) * c + ch) * hw;
      const S* y = logits->data.data() + off;
      const S* t = targets->data.data() + off;
      const S* mk = mask.data.data() + static_cast<std::size_t>(i) * hw;
      for (std::size_t e = 0; e < hw; ++e) {
        const S s = stable_sigmoid(y[e]);
        (*sig)[off + e] = s;
        if (mk[e] == S(0)) continue;
        (*inter)[ch] += s * t[e];
        (*sums)[ch] += s + t[e];
      }
    }
  }
  S loss = 0;
  for (int ch = 0; ch < c; ++ch)
    loss += S(1) - (S(2) * (*inter)[ch] + eps) / ((*sums)[ch] + eps);
  loss /= static_cast<S>(c);
  auto out = make_var(TensorT<S>({1}, {loss}));

  auto mask_copy = std::make_shared<TensorT<S>>(mask);
  tape.record("soft_dice", {logits, targets}, out, [=]() {
    if (!logits->requires_grad) return;
    logits->ensure_grad();
    const S g = out->grad[0] / static_cast<S>(c);
    for (int ch = 0; ch < c; ++ch) {
      const S denom = (*sums)[ch] + eps;
      const S num = S(2) * (*inter)[ch] + eps;
      const S inv_d2 = S(1) / (denom * denom);
      for (int i = 0; i < n; ++i) {
        const std::size_t off = (static_cast<std::size_t>(i) * c + ch) * hw;
        const S* t = targets->data.data() + off;
        const S* mk = mask_copy->data.data() + static_cast<std::size_t>(i) * hw;
        S* dy = logits->grad.data() + off;
        for (std::size_t e = 0; e < hw; ++e) {
          if (mk[e] == S(0)) continue;
          const S s = (*sig)[off + e];
          // d d_c / d sigma = -(2*t*denom - num) / denom^2
          dy[e] += g * (-(S(2) * t[e] * denom - num) * inv_d2) * s * (S(1) - s);
        }
      }
    }
  });
  return out;
}

template <typename S>
VarT<S> composite_loss(TapeT<S>& tape, const VarT<S>& logits, const VarT<S>& targets,
                       const LossConfig& cfg, const TensorT<S>& mask) {
  std::vector<S> pw(static_cast<std::size_t>(logits->dim(1)), S(1));
  if (!cfg.pos_weights.empty()) {
    if (cfg.pos_weights.size() != pw.size())
      throw DimensionError("composite_loss: pos_weights has " +
                           std::to_string(cfg.pos_weights.size()) + " entries for " +
                           std::to_string(pw.size()) + " classes");
    for (std::size_t i = 0; i < pw.size(); ++i) pw[i] = static_cast<S>(cfg.pos_weights[i]);
  }
  auto dice = soft_dice(tape, logits, targets, mask, static_cast<S>(cfg.dice_eps));
  auto bce = bce_with_logits(tape, logits, targets, pw, mask, static_cast<S>(cfg.element_weight));
  return weighted_sum(tape, dice, bce, static_cast<S>(cfg.dice_weight),
                      static_cast<S>(cfg.bce_weight));
}

#define LCS_INSTANTIATE_LOSS(S)                                                             \
  template VarT<S> bce_with_logits<S>(TapeT<S>&, const VarT<S>&, const VarT<S>&,            \
                                      const std::vector<S>&, const TensorT<S>&, S);        \
  template VarT<S> soft_dice<S>(TapeT<S>&, const VarT<S>&, const VarT<S>&, const TensorT<S>&, \
                                S);                                                        \
  template VarT<S> composite_loss<S>(TapeT<S>&, const VarT<S>&, const VarT<S>&,            \
                                     const LossConfig&, const TensorT<S>&);

LCS_INSTANTIATE_LOSS(float)
LCS_INSTANTIATE_LOSS(double)

#undef LCS_INSTANTIATE_LOSS

}  // namespace lcs
