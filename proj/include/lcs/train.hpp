#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lcs/loss.hpp"
#include "lcs/model.hpp"
#include "lcs/optim.hpp"
#include "lcs/patching.hpp"

namespace lcs {

struct TrainConfig {
  int epochs = 30;
  int batch_size = 4;
  LrSchedule schedule;        // initial 5e-4, x0.5 every 20 epochs
  bool freeze_encoder = false;
  int unfreeze_epoch = 80;    // no unfreeze when >= epochs
  std::uint64_t seed = 0;
  bool augment = true;        // random D4 per materialization
  int checkpoint_every = 0;   // epochs between checkpoints; 0 = off
  std::string checkpoint_dir;
};

// Base step decay, with the 0.1 drop from the unfreeze epoch onward (only
// for runs that actually freeze the encoder).
double lr_at(const TrainConfig& cfg, int epoch, bool frozen_phase);

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0.0;
  double lr = 0.0;
  bool frozen = false;
  double wall_seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> records;

  // One JSON object per line. Wall time can be excluded where byte-stable
  // output is required.
  std::string to_ndjson(bool include_wall = true) const;
};

// Training data handle: lazily cut patches over immutable areas.
struct FitDataset {
  const AreaStore* store = nullptr;
  std::vector<PatchRef> refs;
  BandStats stats;
  const ClcTaxonomy* taxonomy = nullptr;
};

struct BatchTensors {
  Var x;        // N x bands x S x S, S = model input size
  Var targets;  // N x C x T x T one-hot, T = model output size
  Tensor mask;  // N x T x T, 1 on labeled pixels
  std::vector<std::vector<std::uint16_t>> label_grids;  // per item, T*T codes
};

// Adapts materialized patches to a model's input/output contract: the
// baseline path center-crops to 120 and majority-pools labels to the 100 m
// grid; the full-resolution path feeds the patch through unchanged.
BatchTensors prepare_batch(const Model& model, const std::vector<Patch>& patches,
                           const ClcTaxonomy& taxonomy);

// Positive/negative pixel counts per class at the model's target resolution,
// for the neg_over_pos weighting mode.
std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>> count_class_pixels(
    const Model& model, const FitDataset& data);

// Epochs of seeded shuffled mini-batches with Adam at the scheduled rate;
// freeze/unfreeze and checkpoint cadence as configured. Aborts with
// NumericAbort when the loss turns non-finite. on_epoch, when set, is called
// after each epoch (monitoring only; must not mutate the model).
using EpochHook = std::function<void(const EpochRecord&, const Model&)>;
TrainLog fit(Model& model, const FitDataset& data, const TrainConfig& cfg,
             const LossConfig& loss_cfg, const EpochHook& on_epoch = {});

}  // namespace lcs
