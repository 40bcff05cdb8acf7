#pragma once

// Brute-force reference implementations used by the unit and acceptance
// suites. Everything here recomputes results from first principles in
// double precision, independent of the library's code paths.

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

struct ClassStats {
  std::int64_t support = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct Metrics {
  double accuracy = 0.0;
  double f1_macro = 0.0;
  double f1_micro = 0.0;
  double f1_weighted = 0.0;
  std::map<int, ClassStats> per_class;
};

// Direct per-pixel tally over labeled (truth != 0) pixels.
inline Metrics metrics_from_pairs(const std::vector<std::pair<int, int>>& pairs) {
  Metrics out;
  std::map<int, std::int64_t> support, tp, predicted;
  std::int64_t total = 0, agree = 0;
  for (const auto& [t, p] : pairs) {
    if (t == 0) continue;
    ++total;
    ++support[t];
    ++predicted[p];
    if (t == p) {
      ++agree;
      ++tp[t];
    }
  }
  if (total == 0) return out;
  out.accuracy = static_cast<double>(agree) / static_cast<double>(total);

  // micro from pooled counts: every disagreement is one FP (of the predicted
  // class) and one FN (of the truth class)
  const double pooled_tp = static_cast<double>(agree);
  const double pooled_fp = static_cast<double>(total - agree);
  const double pooled_fn = static_cast<double>(total - agree);
  const double micro_p = pooled_tp / (pooled_tp + pooled_fp);
  const double micro_r = pooled_tp / (pooled_tp + pooled_fn);
  out.f1_micro =
      (micro_p + micro_r == 0.0) ? 0.0 : 2.0 * micro_p * micro_r / (micro_p + micro_r);

  double macro = 0.0, weighted = 0.0;
  for (const auto& [code, sup] : support) {
    ClassStats cs;
    cs.support = sup;
    const std::int64_t tp_c = tp.count(code) ? tp.at(code) : 0;
    const std::int64_t pred_c = predicted.count(code) ? predicted.at(code) : 0;
    cs.precision = pred_c == 0 ? 0.0 : static_cast<double>(tp_c) / static_cast<double>(pred_c);
    cs.recall = static_cast<double>(tp_c) / static_cast<double>(sup);
    cs.f1 = (cs.precision + cs.recall == 0.0)
                ? 0.0
                : 2.0 * cs.precision * cs.recall / (cs.precision + cs.recall);
    macro += cs.f1;
    weighted += static_cast<double>(sup) * cs.f1;
    out.per_class[code] = cs;
  }
  out.f1_macro = macro / static_cast<double>(support.size());
  out.f1_weighted = weighted / static_cast<double>(total);
  return out;
}

// Naive 64-bit BCE-with-logits: the textbook formula with explicit sigmoid.
inline double bce_direct(const std::vector<double>& logits, const std::vector<double>& targets,
                         const std::vector<double>& pos_weight_per_element,
                         const std::vector<bool>& masked) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!masked[i]) continue;
    ++count;
    const double sig = 1.0 / (1.0 + std::exp(-logits[i]));
    total -= pos_weight_per_element[i] * targets[i] * std::log(sig) +
             (1.0 - targets[i]) * std::log(1.0 - sig);
  }
  return total / static_cast<double>(count);
}

// Direct-summation soft dice over one flattened class plane set.
inline double dice_direct(const std::vector<std::vector<double>>& logits_per_class,
                          const std::vector<std::vector<double>>& targets_per_class,
                          const std::vector<bool>& masked, double eps) {
  double loss = 0.0;
  for (std::size_t c = 0; c < logits_per_class.size(); ++c) {
    double inter = 0.0, sums = 0.0;
    for (std::size_t i = 0; i < logits_per_class[c].size(); ++i) {
      if (!masked[i]) continue;
      const double sig = 1.0 / (1.0 + std::exp(-logits_per_class[c][i]));
      inter += sig * targets_per_class[c][i];
      sums += sig + targets_per_class[c][i];
    }
    loss += 1.0 - (2.0 * inter + eps) / (sums + eps);
  }
  return loss / static_cast<double>(logits_per_class.size());
}

}  // namespace oracle
