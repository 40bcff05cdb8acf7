#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "lcs/rng.hpp"
#include "lcs/tape.hpp"
#include "lcs/tensor.hpp"

namespace lcs {

struct NamedTensor {
  std::string name;
  Var value;
  bool trainable = false;  // false: buffer (e.g. batchnorm running stats)
};

// Base for both model families: an ordered registry of named tensors plus a
// tape-recorded forward. Registration order is fixed by construction, so a
// given (config, seed) pair always produces the same bytes.
class Model {
 public:
  virtual ~Model() = default;

  // training=true enables dropout and batch statistics; rng drives dropout.
  virtual Var forward(Tape& tape, const Var& input, bool training, CounterRng& rng) = 0;

  virtual int input_size() const = 0;   // expected H == W of the input
  virtual int output_size() const = 0;  // H == W of the logit grid
  virtual std::string config_signature() const = 0;

  int num_classes() const { return num_classes_; }
  const std::vector<NamedTensor>& tensors() const { return tensors_; }
  std::vector<NamedTensor>& tensors() { return tensors_; }

  // Trainable entries in registration order (frozen ones included; the
  // optimizer skips them via requires_grad).
  std::vector<Var> trainable_params() const;
  std::size_t param_count() const;

  // Marks every "encoder."-scoped parameter frozen or trainable. Decoder
  // parameters are always trainable.
  void set_frozen_encoder(bool frozen);

 protected:
  std::vector<NamedTensor> tensors_;
  int num_classes_ = 0;
};

// name -> trainable flag for every parameter.
using FreezeState = std::map<std::string, bool>;
FreezeState set_frozen(Model& model, bool encoder_frozen);

struct ResUNetConfig {
  int in_channels = 10;
  int num_classes = 32;
  bool compress_skips = true;  // 1x1 conv halving each skip's channels
  std::array<int, 5> decoder_channels{1024, 512, 256, 128, 64};
  double dropout_outer = 0.2;
  double dropout_inner = 0.4;
};

struct BaselineUNetConfig {
  int in_channels = 10;
  int num_classes = 32;
  std::array<int, 4> encoder_channels{32, 64, 128, 256};
  int pool_factor = 10;  // 10 m logits -> 100 m grid
};

// ResNet-50 encoder (stem + 3/4/6/3 bottleneck stages) with a skip-connected
// decoder; 10x128x128 -> num_classes x 128x128 logits.
std::unique_ptr<Model> build_resunet(const ResUNetConfig& cfg, std::uint64_t seed);

// Same topology with the skip compressions removed.
std::unique_ptr<Model> build_resunet_uncompressed(ResUNetConfig cfg, std::uint64_t seed);

// Small UNet over a 120x120 crop; logits average-pooled to the 100 m grid
// (num_classes x 12x12).
std::unique_ptr<Model> build_baseline_unet(const BaselineUNetConfig& cfg, std::uint64_t seed);

// Majority label per 10x10 block of the center 120x120 crop of a 128x128
// label grid; ties go to the smaller code, all-zero blocks stay 0.
std::vector<std::uint16_t> pool_labels(const std::vector<std::uint16_t>& labels, int n = 128);

// Center square crop of a CxHxW tensor or an HxW label grid.
Tensor crop_center(const Tensor& chw, int out_size);
std::vector<std::uint16_t> crop_center_labels(const std::vector<std::uint16_t>& labels, int n,
                                              int out_size);

// Versioned binary container for named tensors ("LCKP" magic); round-trips
// bitwise, including batchnorm running stats.
struct Checkpoint {
  std::uint32_t version = 1;
  std::uint32_t epoch = 0;
  std::uint64_t config_hash = 0;
  std::vector<std::pair<std::string, Tensor>> entries;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint checkpoint_from_model(const Model& model, std::uint32_t epoch,
                                 std::uint64_t config_hash);
// Only the "encoder."-scoped entries.
Checkpoint encoder_checkpoint(const Model& model, std::uint32_t epoch,
                              std::uint64_t config_hash);

struct LoadReport {
  int matched = 0;
  std::vector<std::pair<std::string, std::string>> skipped;  // name, reason
  std::vector<std::string> warnings;
};

// Copies every encoder tensor matching by name AND shape; mismatches keep
// their fresh initialization and are reported. Decoder entries are never
// touched by an encoder checkpoint.
LoadReport load_encoder(Model& model, const Checkpoint& ckpt);

// Copies every tensor matching by name and shape (full-model restore).
LoadReport load_all(Model& model, const Checkpoint& ckpt);

std::uint64_t fnv1a64(const std::string& text);

// FNV over the raw bytes of every trainable tensor whose name starts with
// `prefix` (buffers excluded, so batchnorm running stats do not count).
std::uint64_t params_checksum(const Model& model, const std::string& prefix = "");

}  // namespace lcs
