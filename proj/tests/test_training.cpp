#include <doctest.h>

#include <cmath>
#include <sstream>

#include "lcs/evaluate.hpp"
#include "lcs/gradcheck.hpp"
#include "lcs/loss.hpp"
#include "lcs/synth.hpp"
#include "lcs/train.hpp"

#include "oracles.hpp"

using namespace lcs;

namespace {

// logits/targets 1xCx2x2 with an all-on mask
template <typename S>
struct LossCase {
  VarT<S> logits;
  VarT<S> targets;
  TensorT<S> mask;

  LossCase(int c, std::vector<S> y, std::vector<S> t)
      : logits(make_var(TensorT<S>({1, c, 2, 2}, std::move(y)), true)),
        targets(make_var(TensorT<S>({1, c, 2, 2}, std::move(t)))),
        mask(TensorT<S>::full({1, 2, 2}, S(1))) {}
};

FitDataset synth_dataset(AreaStore& store, const ClcTaxonomy& taxonomy, int n_areas,
                         std::uint64_t seed) {
  SynthSpec spec;
  spec.width = 128;
  spec.height = 128;
  spec.noise_sigma = 0.05;
  for (int i = 0; i < n_areas; ++i) {
    spec.seed = seed + static_cast<std::uint64_t>(i);
    store.add(generate_synthetic_area("area" + std::to_string(i), spec));
  }
  FitDataset data;
  data.store = &store;
  data.taxonomy = &taxonomy;
  for (const auto& id : store.ids()) {
    auto refs = cut_patches(store.at(id), 128, 128);
    data.refs.insert(data.refs.end(), refs.begin(), refs.end());
  }
  data.stats = compute_stats(store, store.ids());
  return data;
}

}  // namespace

TEST_CASE("bce closed forms") {
  Tape tape;
  LossCase<float> even(1, std::vector<float>(4, 0.0f), std::vector<float>(4, 1.0f));
  auto loss = bce_with_logits(tape, even.logits, even.targets, {1.0f}, even.mask);
  CHECK(loss->data[0] == doctest::Approx(std::log(2.0)).epsilon(1e-6));

  LossCase<float> saturated_hi(1, std::vector<float>(4, 20.0f), std::vector<float>(4, 1.0f));
  auto tiny = bce_with_logits(tape, saturated_hi.logits, saturated_hi.targets, {1.0f},
                              saturated_hi.mask);
  CHECK(tiny->data[0] < 1e-8f);

  LossCase<float> saturated_lo(1, std::vector<float>(4, -20.0f), std::vector<float>(4, 1.0f));
  auto big = bce_with_logits(tape, saturated_lo.logits, saturated_lo.targets, {1.0f},
                             saturated_lo.mask);
  CHECK(big->data[0] == doctest::Approx(20.0f).epsilon(1e-6));
}

TEST_CASE("bce matches the naive 64-bit formula") {
  TapeT<double> tape;
  CounterRng rng(314);
  const int c = 3;
  std::vector<double> y(2 * c * 16), t(y.size());
  for (auto& v : y) v = rng.normal() * 3.0;
  for (auto& v : t) v = rng.uniform() < 0.4 ? 1.0 : 0.0;
  auto logits = make_var(TensorT<double>({2, c, 4, 4}, y), true);
  auto targets = make_var(TensorT<double>({2, c, 4, 4}, t));
  auto mask = TensorT<double>::zeros({2, 4, 4});
  for (std::size_t i = 0; i < mask.size(); ++i) mask.data[i] = (i % 3 == 0) ? 0.0 : 1.0;
  const std::vector<double> pw{1.0, 2.5, 0.5};

  auto loss = bce_with_logits(tape, logits, targets, pw, mask);

  std::vector<double> pw_elem(y.size());
  std::vector<bool> masked(y.size());
  for (int n = 0; n < 2; ++n)
    for (int ch = 0; ch < c; ++ch)
      for (int e = 0; e < 16; ++e) {
        const std::size_t i = (static_cast<std::size_t>(n) * c + ch) * 16 + e;
        pw_elem[i] = t[i] == 1.0 ? pw[static_cast<std::size_t>(ch)] : 1.0;
        masked[i] = mask.data[static_cast<std::size_t>(n) * 16 + e] != 0.0;
      }
  // the oracle applies p only on the positive term, mirrored by pw_elem
  const double expected = oracle::bce_direct(y, t, pw_elem, masked);
  CHECK(loss->data[0] == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("bce is exactly linear in the class weight p") {
  auto eval = [](float p) {
    Tape tape;
    LossCase<float> c(1, {0.3f, -0.7f, 1.2f, 0.0f}, {1, 0, 1, 1});
    return bce_with_logits(tape, c.logits, c.targets, {p}, c.mask)->data[0];
  };
  // loss(p) = A + p * B, so the second difference vanishes
  const float l1 = eval(1.0f), l2 = eval(2.0f), l3 = eval(3.0f);
  CHECK(l3 - l2 == doctest::Approx(l2 - l1).epsilon(1e-5));
}

TEST_CASE("bce and dice reject empty masks and bad shapes") {
  Tape tape;
  LossCase<float> c(1, {0, 0, 0, 0}, {1, 1, 1, 1});
  c.mask = Tensor::zeros({1, 2, 2});
  CHECK_THROWS_AS(bce_with_logits(tape, c.logits, c.targets, {1.0f}, c.mask), DataError);
  CHECK_THROWS_AS(soft_dice(tape, c.logits, c.targets, c.mask), DataError);
  CHECK_THROWS_AS(bce_with_logits(tape, c.logits, c.targets, {1.0f, 1.0f}, c.mask),
                  DimensionError);
}

TEST_CASE("masked pixels contribute exactly zero gradient") {
  Tape tape;
  LossCase<float> c(2, std::vector<float>(8, 0.4f), std::vector<float>(8, 1.0f));
  c.mask.data = {1, 0, 1, 0};
  LossConfig cfg;
  auto loss = composite_loss(tape, c.logits, c.targets, cfg, c.mask);
  tape.backward(loss);
  for (int ch = 0; ch < 2; ++ch) {
    CHECK(c.logits->grad[static_cast<std::size_t>(ch) * 4 + 1] == 0.0f);
    CHECK(c.logits->grad[static_cast<std::size_t>(ch) * 4 + 3] == 0.0f);
    CHECK(c.logits->grad[static_cast<std::size_t>(ch) * 4 + 0] != 0.0f);
  }
}

TEST_CASE("pos_weights formula and zero-positive fallback") {
  auto res = pos_weights({10, 50, 0}, {90, 50, 100});
  CHECK(res.weights[0] == doctest::Approx(9.0f));
  CHECK(res.weights[1] == doctest::Approx(1.0f));
  CHECK(res.weights[2] == 1.0f);
  REQUIRE(res.zero_positive_classes.size() == 1);
  CHECK(res.zero_positive_classes[0] == 2);

  auto ones = pos_weights({10, 50}, {90, 50}, PosWeightMode::ones);
  CHECK(ones.weights == std::vector<float>{1.0f, 1.0f});
}

TEST_CASE("soft dice closed forms") {
  Tape tape;
  // perfect overlap on a large region
  const int n = 16 * 16;
  std::vector<float> y(n), t(n);
  for (int i = 0; i < n; ++i) {
    t[static_cast<std::size_t>(i)] = (i % 2 == 0) ? 1.0f : 0.0f;
    y[static_cast<std::size_t>(i)] = (i % 2 == 0) ? 20.0f : -20.0f;
  }
  auto logits = make_var(Tensor({1, 1, 16, 16}, y), true);
  auto targets = make_var(Tensor({1, 1, 16, 16}, t));
  auto mask = Tensor::full({1, 16, 16}, 1.0f);
  CHECK(soft_dice(tape, logits, targets, mask)->data[0] < 1e-3f);

  // all-negative target with confident-negative logits: smoothing keeps ~0
  LossCase<float> empty(1, std::vector<float>(4, -20.0f), std::vector<float>(4, 0.0f));
  CHECK(soft_dice(tape, empty.logits, empty.targets, empty.mask)->data[0] ==
        doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("soft dice matches the direct-summation oracle") {
  TapeT<double> tape;
  CounterRng rng(99);
  const int c = 3;
  std::vector<std::vector<double>> y_per(c), t_per(c);
  std::vector<double> flat_y, flat_t;
  for (int ch = 0; ch < c; ++ch) {
    for (int i = 0; i < 16; ++i) {
      y_per[static_cast<std::size_t>(ch)].push_back(rng.normal() * 2.0);
      t_per[static_cast<std::size_t>(ch)].push_back(rng.uniform() < 0.5 ? 1.0 : 0.0);
    }
  }
  std::vector<bool> masked;
  auto mask = TensorT<double>::zeros({1, 4, 4});
  for (int i = 0; i < 16; ++i) {
    const bool on = i % 4 != 2;
    masked.push_back(on);
    mask.data[static_cast<std::size_t>(i)] = on ? 1.0 : 0.0;
  }
  for (int ch = 0; ch < c; ++ch) {
    flat_y.insert(flat_y.end(), y_per[static_cast<std::size_t>(ch)].begin(),
                  y_per[static_cast<std::size_t>(ch)].end());
    flat_t.insert(flat_t.end(), t_per[static_cast<std::size_t>(ch)].begin(),
                  t_per[static_cast<std::size_t>(ch)].end());
  }
  auto logits = make_var(TensorT<double>({1, c, 4, 4}, flat_y), true);
  auto targets = make_var(TensorT<double>({1, c, 4, 4}, flat_t));
  auto loss = soft_dice(tape, logits, targets, mask);
  CHECK(loss->data[0] ==
        doctest::Approx(oracle::dice_direct(y_per, t_per, masked, 1.0)).epsilon(1e-6));
}

TEST_CASE("composite loss blends its two terms") {
  std::vector<float> y{0.5f, -1.0f, 2.0f, 0.1f};
  std::vector<float> t{1, 0, 1, 0};

  auto eval = [&](double dice_w, double bce_w) {
    Tape tape;
    LossCase<float> c(1, y, t);
    LossConfig cfg;
    cfg.dice_weight = dice_w;
    cfg.bce_weight = bce_w;
    return composite_loss(tape, c.logits, c.targets, cfg, c.mask)->data[0];
  };

  Tape tape;
  LossCase<float> c(1, y, t);
  const float dice_only = soft_dice(tape, c.logits, c.targets, c.mask)->data[0];
  const float bce_only = bce_with_logits(tape, c.logits, c.targets, {1.0f}, c.mask)->data[0];

  CHECK(eval(1.0, 0.0) == doctest::Approx(dice_only));
  CHECK(eval(0.0, 1.0) == doctest::Approx(bce_only));
  CHECK(eval(0.5, 0.5) == doctest::Approx(0.5 * (dice_only + bce_only)).epsilon(1e-6));
  CHECK(eval(0.5, 0.5) >= 0.0f);
}

TEST_CASE("loss and gradients stay finite across the +-50 logit range") {
  Tape tape;
  std::vector<float> y{-50.0f, 50.0f, -50.0f, 50.0f};
  LossCase<float> c(1, y, {1, 1, 0, 0});
  LossConfig cfg;
  auto loss = composite_loss(tape, c.logits, c.targets, cfg, c.mask);
  CHECK(std::isfinite(loss->data[0]));
  tape.backward(loss);
  for (float g : c.logits->grad) CHECK(std::isfinite(g));
}

TEST_CASE("composite loss gradient passes a finite-difference check") {
  GradCheckSpec spec;
  spec.name = "composite";
  spec.input_shapes = {{1, 2, 4, 4}};
  spec.op = [](TapeT<double>& tape, const std::vector<VarT<double>>& in) {
    auto targets = TensorT<double>::zeros({1, 2, 4, 4});
    for (std::size_t i = 0; i < targets.size(); ++i) targets.data[i] = (i * 7 % 3 == 0) ? 1 : 0;
    LossConfig cfg;
    return composite_loss(tape, in[0], make_var(targets), cfg,
                          TensorT<double>::full({1, 4, 4}, 1.0));
  };
  CHECK(grad_check(spec, 5) < 1e-3);
}

TEST_CASE("lr_at composes step decay with the unfreeze drop") {
  TrainConfig cfg;
  cfg.freeze_encoder = true;
  cfg.unfreeze_epoch = 80;
  CHECK(lr_at(cfg, 0, true) == doctest::Approx(5e-4));
  CHECK(lr_at(cfg, 20, true) == doctest::Approx(2.5e-4));
  CHECK(lr_at(cfg, 80, false) == doctest::Approx(3.125e-6));

  TrainConfig plain;  // never frozen: no drop applies
  CHECK(lr_at(plain, 80, false) == doctest::Approx(5e-4 * std::pow(0.5, 4)));
}

TEST_CASE("fit: smoke run, log contract and determinism") {
  AreaStore store;
  const auto& tax = default_taxonomy();
  auto data = synth_dataset(store, tax, 4, 1000);
  REQUIRE(data.refs.size() == 4);

  BaselineUNetConfig mcfg;
  TrainConfig tcfg;
  tcfg.epochs = 2;
  tcfg.batch_size = 2;
  tcfg.seed = 7;
  LossConfig lcfg;

  auto model = build_baseline_unet(mcfg, 7);
  auto log = fit(*model, data, tcfg, lcfg);
  REQUIRE(log.records.size() == 2);
  for (const auto& r : log.records) {
    CHECK(std::isfinite(r.mean_loss));
    CHECK(r.lr == doctest::Approx(5e-4));
    CHECK_FALSE(r.frozen);
  }
  CHECK(log.records[0].epoch == 0);
  CHECK(log.records[1].epoch == 1);

  // same config + seed: bitwise-identical loss sequence
  auto model2 = build_baseline_unet(mcfg, 7);
  auto log2 = fit(*model2, data, tcfg, lcfg);
  REQUIRE(log2.records.size() == log.records.size());
  for (std::size_t i = 0; i < log.records.size(); ++i)
    CHECK(log2.records[i].mean_loss == log.records[i].mean_loss);
  CHECK(params_checksum(*model) == params_checksum(*model2));

  // ndjson: one parseable line per epoch; wall time is the only difference
  std::istringstream lines(log.to_ndjson(false));
  std::string line;
  int parsed = 0;
  while (std::getline(lines, line)) {
    CHECK(line.find("\"epoch\":") != std::string::npos);
    CHECK(line.find("wall_seconds") == std::string::npos);
    ++parsed;
  }
  CHECK(parsed == 2);
  CHECK(log.to_ndjson(false) == log2.to_ndjson(false));
}

TEST_CASE("fit aborts with a diagnostic on non-finite loss") {
  AreaStore store;
  const auto& tax = default_taxonomy();
  auto data = synth_dataset(store, tax, 1, 2000);

  BaselineUNetConfig mcfg;
  auto model = build_baseline_unet(mcfg, 1);
  TrainConfig tcfg;
  tcfg.epochs = 1;
  LossConfig lcfg;
  lcfg.dice_weight = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(fit(*model, data, tcfg, lcfg), NumericAbort);

  FitDataset empty;
  empty.store = data.store;
  empty.taxonomy = data.taxonomy;
  empty.stats = data.stats;
  CHECK_THROWS_AS(fit(*model, empty, tcfg, lcfg), DataError);
}

TEST_CASE("fit honors neg_over_pos weighting without disturbing determinism") {
  AreaStore store;
  const auto& tax = default_taxonomy();
  auto data = synth_dataset(store, tax, 2, 3000);

  BaselineUNetConfig mcfg;
  auto model = build_baseline_unet(mcfg, 3);
  TrainConfig tcfg;
  tcfg.epochs = 1;
  tcfg.seed = 5;
  LossConfig lcfg;
  lcfg.pos_weight_mode = PosWeightMode::neg_over_pos;
  auto log = fit(*model, data, tcfg, lcfg);
  CHECK(log.records.size() == 1);
  CHECK(std::isfinite(log.records[0].mean_loss));
}
