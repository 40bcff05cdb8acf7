#include "lcs/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lcs/ops.hpp"

namespace lcs {

double lr_at(const TrainConfig& cfg, int epoch, bool frozen_phase) {
  const bool dropped = cfg.freeze_encoder && !frozen_phase;
  return cfg.schedule.at(epoch, dropped);
}

std::string TrainLog::to_ndjson(bool include_wall) const {
  std::ostringstream out;
  for (const auto& r : records) {
    nlohmann::ordered_json line;
    line["epoch"] = r.epoch;
    line["mean_train_loss"] = r.mean_loss;
    line["lr"] = r.lr;
    line["frozen"] = r.frozen;
    if (include_wall) line["wall_seconds"] = r.wall_seconds;
    out << line.dump() << "\n";
  }
  return out.str();
}

BatchTensors prepare_batch(const Model& model, const std::vector<Patch>& patches,
                           const ClcTaxonomy& taxonomy) {
  if (patches.empty()) throw DataError("prepare_batch: empty batch");
  const int in_size = model.input_size();
  const int out_size = model.output_size();
  const int n = static_cast<int>(patches.size());
  const int c = model.num_classes();
  const int patch_size = patches.front().x.dim(1);

  BatchTensors batch;
  batch.x = make_var(Tensor::zeros({n, AreaRaster::kNumBands, in_size, in_size}));
  batch.targets = make_var(Tensor::zeros({n, c, out_size, out_size}));
  batch.mask = Tensor::zeros({n, out_size, out_size});

  for (int i = 0; i < n; ++i) {
    const Patch& p = patches[static_cast<std::size_t>(i)];
    if (p.x.dim(1) != patch_size || p.x.dim(2) != patch_size)
      throw DimensionError("prepare_batch: patches differ in size");

    Tensor x = (in_size == patch_size) ? p.x : crop_center(p.x, in_size);
    std::copy(x.data.begin(), x.data.end(),
              batch.x->data.begin() + static_cast<std::size_t>(i) * x.size());

    std::vector<std::uint16_t> grid;
    if (out_size == patch_size) {
      grid = p.labels;
    } else if (in_size == 120 && out_size == 12) {
      grid = pool_labels(p.labels, patch_size);
    } else {
      throw DimensionError("prepare_batch: no label mapping from patch size " +
                           std::to_string(patch_size) + " to output " + std::to_string(out_size));
    }

    for (int e = 0; e < out_size * out_size; ++e) {
      const std::uint16_t code = grid[static_cast<std::size_t>(e)];
      if (code == 0) continue;
      batch.mask.data[static_cast<std::size_t>(i) * out_size * out_size + e] = 1.0f;
      const int ci = taxonomy.index_of(code);
      batch.targets->data[((static_cast<std::size_t>(i) * c + ci) * out_size * out_size) + e] =
          1.0f;
    }
    batch.label_grids.push_back(std::move(grid));
  }
  return batch;
}

std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>> count_class_pixels(
    const Model& model, const FitDataset& data) {
  const int c = model.num_classes();
  std::vector<std::int64_t> positives(static_cast<std::size_t>(c), 0);
  std::vector<std::int64_t> negatives(static_cast<std::size_t>(c), 0);
  std::int64_t labeled = 0;
  for (const auto& ref : data.refs) {
    auto patch = materialize(*data.store, ref, data.stats);
    auto batch = prepare_batch(model, {patch}, *data.taxonomy);
    for (const std::uint16_t code : batch.label_grids.front()) {
      if (code == 0) continue;
      ++labeled;
      ++positives[static_cast<std::size_t>(data.taxonomy->index_of(code))];
    }
  }
  for (int ci = 0; ci < c; ++ci)
    negatives[static_cast<std::size_t>(ci)] = labeled - positives[static_cast<std::size_t>(ci)];
  return {positives, negatives};
}

TrainLog fit(Model& model, const FitDataset& data, const TrainConfig& cfg,
             const LossConfig& loss_cfg, const EpochHook& on_epoch) {
  if (data.refs.empty()) throw DataError("fit: empty training set");
  if (!data.store || !data.taxonomy) throw ConfigError("fit: dataset is missing store/taxonomy");

  LossConfig resolved = loss_cfg;
  if (resolved.pos_weight_mode == PosWeightMode::neg_over_pos && resolved.pos_weights.empty()) {
    auto [pos, neg] = count_class_pixels(model, data);
    auto pw = pos_weights(pos, neg, PosWeightMode::neg_over_pos);
    for (int ci : pw.zero_positive_classes)
      std::fprintf(stderr, "warning: class index %d has no positive pixels; p_c = 1\n", ci);
    resolved.pos_weights = pw.weights;
  }

  auto trainables = model.trainable_params();
  AdamState adam;
  adam.init(trainables);

  TrainLog log;
  std::vector<std::size_t> order(data.refs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    const bool frozen = cfg.freeze_encoder && epoch < cfg.unfreeze_epoch;
    model.set_frozen_encoder(cfg.freeze_encoder ? frozen : false);
    const double lr = lr_at(cfg, epoch, frozen);

    {
      CounterRng shuffle_rng(CounterRng::derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch),
                                                     0x5f0f));
      for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[shuffle_rng.below(static_cast<std::uint32_t>(i))]);
    }

    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::vector<Patch> patches;
      for (std::size_t i = start; i < stop; ++i) {
        const auto item_seed =
            CounterRng::derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch),
                                    0x100000 + order[i]);
        patches.push_back(materialize(*data.store, data.refs[order[i]], data.stats,
                                      cfg.augment ? AugmentSpec::random() : AugmentSpec::none(),
                                      item_seed));
      }
      auto batch = prepare_batch(model, patches, *data.taxonomy);

      Tape tape;
      CounterRng dropout_rng(CounterRng::derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch),
                                                     0xd0000 + static_cast<std::uint64_t>(batches)));
      auto logits = model.forward(tape, batch.x, /*training=*/true, dropout_rng);
      auto loss = composite_loss(tape, logits, batch.targets, resolved, batch.mask);
      const double loss_value = static_cast<double>(loss->data[0]);
      if (!std::isfinite(loss_value))
        throw NumericAbort("fit: non-finite loss", epoch, batches, lr);

      for (auto& p : trainables) p->zero_grad();
      tape.backward(loss);
      adam_step(trainables, adam, static_cast<float>(lr));

      loss_sum += loss_value;
      ++batches;
    }

    EpochRecord record;
    record.epoch = epoch;
    record.mean_loss = loss_sum / std::max(1, batches);
    record.lr = lr;
    record.frozen = frozen;
    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start).count();
    log.records.push_back(record);
    if (on_epoch) on_epoch(record, model);

    if (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0 &&
        !cfg.checkpoint_dir.empty()) {
      std::filesystem::create_directories(cfg.checkpoint_dir);
      char name[64];
      std::snprintf(name, sizeof(name), "/checkpoint_epoch%04d.lckp", epoch);
      save_checkpoint(checkpoint_from_model(model, static_cast<std::uint32_t>(epoch),
                                            fnv1a64(model.config_signature())),
                      cfg.checkpoint_dir + name);
    }
  }
  return log;
}

}  // namespace lcs
