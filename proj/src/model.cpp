#include "lcs/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "lcs/ops.hpp"

namespace lcs {

static_assert(std::endian::native == std::endian::little,
              "checkpoint IO assumes a little-endian host");

std::vector<Var> Model::trainable_params() const {
  std::vector<Var> out;
  for (const auto& e : tensors_)
    if (e.trainable) out.push_back(e.value);
  return out;
}

std::size_t Model::param_count() const {
  std::size_t n = 0;
  for (const auto& e : tensors_)
    if (e.trainable) n += e.value->size();
  return n;
}

void Model::set_frozen_encoder(bool frozen) {
  for (auto& e : tensors_) {
    if (!e.trainable) continue;
    if (e.name.rfind("encoder.", 0) == 0)
      e.value->requires_grad = !frozen;
    else
      e.value->requires_grad = true;
  }
}

FreezeState set_frozen(Model& model, bool encoder_frozen) {
  model.set_frozen_encoder(encoder_frozen);
  FreezeState state;
  for (const auto& e : model.tensors())
    if (e.trainable) state[e.name] = e.value->requires_grad;
  return state;
}

namespace {

// ---- layer building blocks -------------------------------------------------

class Registry {
 public:
  Registry(std::vector<NamedTensor>& tensors, CounterRng& rng) : tensors_(tensors), rng_(rng) {}

  Var param(const std::string& name, Tensor t) {
    auto v = make_var(std::move(t), /*requires_grad=*/true);
    tensors_.push_back({name, v, true});
    return v;
  }

  Var buffer(const std::string& name, Tensor t) {
    auto v = make_var(std::move(t), /*requires_grad=*/false);
    tensors_.push_back({name, v, false});
    return v;
  }

  Var he_conv_weight(const std::string& name, int out_c, int in_c, int k) {
    Tensor w = Tensor::zeros({out_c, in_c, k, k});
    const float scale = std::sqrt(2.0f / static_cast<float>(in_c * k * k));
    for (auto& v : w.data) v = static_cast<float>(rng_.normal()) * scale;
    return param(name, std::move(w));
  }

 private:
  std::vector<NamedTensor>& tensors_;
  CounterRng& rng_;
};

struct ConvLayer {
  Var w, b;
  int stride = 1;
  int pad = 0;

  static ConvLayer make(Registry& reg, const std::string& name, int in_c, int out_c, int k,
                        int stride, int pad) {
    ConvLayer layer;
    layer.w = reg.he_conv_weight(name + ".weight", out_c, in_c, k);
    layer.b = reg.param(name + ".bias", Tensor::zeros({out_c}));
    layer.stride = stride;
    layer.pad = pad;
    return layer;
  }

  Var operator()(Tape& tape, const Var& x) const { return conv2d(tape, x, w, b, stride, pad); }
};

struct BnLayer {
  Var gamma, beta, rmean, rvar;

  static BnLayer make(Registry& reg, const std::string& name, int c) {
    BnLayer layer;
    layer.gamma = reg.param(name + ".gamma", Tensor::full({c}, 1.0f));
    layer.beta = reg.param(name + ".beta", Tensor::zeros({c}));
    layer.rmean = reg.buffer(name + ".running_mean", Tensor::zeros({c}));
    layer.rvar = reg.buffer(name + ".running_var", Tensor::full({c}, 1.0f));
    return layer;
  }

  Var operator()(Tape& tape, const Var& x, bool training) const {
    return batchnorm2d(tape, x, gamma, beta, *rmean, *rvar, training);
  }
};

struct ConvBn {
  ConvLayer conv;
  BnLayer bn;

  static ConvBn make(Registry& reg, const std::string& name, int in_c, int out_c, int k,
                     int stride, int pad) {
    return {ConvLayer::make(reg, name + ".conv", in_c, out_c, k, stride, pad),
            BnLayer::make(reg, name + ".bn", out_c)};
  }

  Var apply_relu(Tape& tape, const Var& x, bool training) const {
    return relu(tape, bn(tape, conv(tape, x), training));
  }
};

struct DoubleConv {
  ConvBn a, b;

  static DoubleConv make(Registry& reg, const std::string& name, int in_c, int mid_c, int out_c) {
    return {ConvBn::make(reg, name + "1", in_c, mid_c, 3, 1, 1),
            ConvBn::make(reg, name + "2", mid_c, out_c, 3, 1, 1)};
  }

  Var operator()(Tape& tape, const Var& x, bool training) const {
    return b.apply_relu(tape, a.apply_relu(tape, x, training), training);
  }
};

// ---- ResNet-50 encoder -----------------------------------------------------

struct Bottleneck {
  ConvLayer conv1, conv2, conv3;
  BnLayer bn1, bn2, bn3;
  std::optional<ConvLayer> down_conv;
  std::optional<BnLayer> down_bn;

  static Bottleneck make(Registry& reg, const std::string& name, int in_c, int planes, int stride) {
    Bottleneck block;
    const int out_c = planes * 4;
    block.conv1 = ConvLayer::make(reg, name + ".conv1", in_c, planes, 1, 1, 0);
    block.bn1 = BnLayer::make(reg, name + ".bn1", planes);
    block.conv2 = ConvLayer::make(reg, name + ".conv2", planes, planes, 3, stride, 1);
    block.bn2 = BnLayer::make(reg, name + ".bn2", planes);
    block.conv3 = ConvLayer::make(reg, name + ".conv3", planes, out_c, 1, 1, 0);
    block.bn3 = BnLayer::make(reg, name + ".bn3", out_c);
    if (stride != 1 || in_c != out_c) {
      block.down_conv = ConvLayer::make(reg, name + ".downsample.conv", in_c, out_c, 1, stride, 0);
      block.down_bn = BnLayer::make(reg, name + ".downsample.bn", out_c);
    }
    return block;
  }

  Var forward(Tape& tape, const Var& x, bool training) const {
    auto y = relu(tape, bn1(tape, conv1(tape, x), training));
    y = relu(tape, bn2(tape, conv2(tape, y), training));
    y = bn3(tape, conv3(tape, y), training);
    Var shortcut = x;
    if (down_conv) shortcut = (*down_bn)(tape, (*down_conv)(tape, x), training);
    return relu(tape, add(tape, y, shortcut));
  }
};

struct ResNetStage {
  std::vector<Bottleneck> blocks;

  static ResNetStage make(Registry& reg, const std::string& name, int in_c, int planes,
                          int n_blocks, int stride) {
    ResNetStage stage;
    for (int i = 0; i < n_blocks; ++i)
      stage.blocks.push_back(Bottleneck::make(reg, name + ".block" + std::to_string(i),
                                              i == 0 ? in_c : planes * 4, planes,
                                              i == 0 ? stride : 1));
    return stage;
  }

  Var forward(Tape& tape, Var x, bool training) const {
    for (const auto& block : blocks) x = block.forward(tape, x, training);
    return x;
  }
};

struct DecoderStage {
  std::optional<ConvBn> compress;  // 1x1 on the incoming skip
  ConvBn conv1, conv2;
  double dropout_rate = 0.0;
};

// ---- transfer model ----------------------------------------------------------

class ResUNetModel : public Model {
 public:
  ResUNetModel(const ResUNetConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    if (cfg.num_classes < 2) throw ConfigError("resunet: num_classes must be >= 2");
    if (cfg.in_channels < 1) throw ConfigError("resunet: in_channels must be >= 1");
    num_classes_ = cfg.num_classes;
    CounterRng rng(seed);
    Registry reg(tensors_, rng);

    stem_ = ConvBn::make(reg, "encoder.stem", cfg.in_channels, 64, 7, 2, 3);
    stages_.push_back(ResNetStage::make(reg, "encoder.layer1", 64, 64, 3, 1));
    stages_.push_back(ResNetStage::make(reg, "encoder.layer2", 256, 128, 4, 2));
    stages_.push_back(ResNetStage::make(reg, "encoder.layer3", 512, 256, 6, 2));
    stages_.push_back(ResNetStage::make(reg, "encoder.layer4", 1024, 512, 3, 2));

    // Skips feeding the decoder, deepest first, with their channel widths.
    const std::array<int, 4> skip_channels{1024, 512, 256, 64};
    int in_c = 2048;
    for (int i = 0; i < 5; ++i) {
      const std::string name = "decoder.stage" + std::to_string(i + 1);
      DecoderStage stage;
      int cat_c = in_c;
      if (i < 4) {
        int skip_c = skip_channels[static_cast<std::size_t>(i)];
        if (cfg.compress_skips) {
          int half = skip_c / 2;
          stage.compress = ConvBn::make(reg, name + ".compress", skip_c, half, 1, 1, 0);
          skip_c = half;
        }
        cat_c += skip_c;
      }
      const int out_c = cfg.decoder_channels[static_cast<std::size_t>(i)];
      stage.conv1 = ConvBn::make(reg, name + ".conv1", cat_c, out_c, 3, 1, 1);
      stage.conv2 = ConvBn::make(reg, name + ".conv2", out_c, out_c, 3, 1, 1);
      stage.dropout_rate = (i >= 3) ? cfg.dropout_outer : cfg.dropout_inner;
      decoder_.push_back(std::move(stage));
      in_c = out_c;
    }
    head_ = ConvLayer::make(reg, "decoder.head.conv", in_c, cfg.num_classes, 1, 1, 0);
  }

  Var forward(Tape& tape, const Var& input, bool training, CounterRng& rng) override {
    expect_ndim(*input, 4, "resunet", "input");
    expect_axis(*input, 1, cfg_.in_channels, "resunet", "input");
    expect_axis(*input, 2, input_size(), "resunet", "input");
    expect_axis(*input, 3, input_size(), "resunet", "input");

    auto s0 = stem_.apply_relu(tape, input, training);       // 64 @ 64
    auto x = maxpool2d(tape, s0, 2, 2);                      // 64 @ 32
    auto s1 = stages_[0].forward(tape, x, training);         // 256 @ 32
    auto s2 = stages_[1].forward(tape, s1, training);        // 512 @ 16
    auto s3 = stages_[2].forward(tape, s2, training);        // 1024 @ 8
    auto bottom = stages_[3].forward(tape, s3, training);    // 2048 @ 4

    const std::array<Var, 4> skips{s3, s2, s1, s0};
    Var d = bottom;
    for (std::size_t i = 0; i < decoder_.size(); ++i) {
      const auto& stage = decoder_[i];
      d = upsample2x(tape, d);
      if (i < skips.size()) {
        Var skip = skips[i];
        if (stage.compress) skip = stage.compress->apply_relu(tape, skip, training);
        d = concat_channels(tape, d, skip);
      }
      d = stage.conv1.apply_relu(tape, d, training);
      d = stage.conv2.apply_relu(tape, d, training);
      d = dropout(tape, d, stage.dropout_rate, training, rng);
    }
    return head_(tape, d);
  }

  int input_size() const override { return 128; }
  int output_size() const override { return 128; }

  std::string config_signature() const override {
    std::ostringstream ss;
    ss << "resunet:in=" << cfg_.in_channels << ":classes=" << cfg_.num_classes
       << ":compress=" << (cfg_.compress_skips ? 1 : 0) << ":dec=";
    for (std::size_t i = 0; i < cfg_.decoder_channels.size(); ++i)
      ss << (i ? "," : "") << cfg_.decoder_channels[i];
    return ss.str();
  }

 private:
  ResUNetConfig cfg_;
  ConvBn stem_;
  std::vector<ResNetStage> stages_;
  std::vector<DecoderStage> decoder_;
  ConvLayer head_;
};

// ---- baseline model ----------------------------------------------------------

class BaselineUNetModel : public Model {
 public:
  BaselineUNetModel(const BaselineUNetConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    if (cfg.num_classes < 2) throw ConfigError("baseline_unet: num_classes must be >= 2");
    num_classes_ = cfg.num_classes;
    CounterRng rng(seed);
    Registry reg(tensors_, rng);
    const auto& ch = cfg.encoder_channels;

    enc1_ = DoubleConv::make(reg, "enc1.conv", cfg.in_channels, ch[0], ch[0]);
    enc2_ = DoubleConv::make(reg, "enc2.conv", ch[0], ch[1], ch[1]);
    enc3_ = DoubleConv::make(reg, "enc3.conv", ch[1], ch[2], ch[2]);
    bottleneck_ = DoubleConv::make(reg, "bottleneck.conv", ch[2], ch[3], ch[3]);
    dec3_ = DoubleConv::make(reg, "dec3.conv", ch[3] + ch[2], ch[2], ch[2]);
    dec2_ = DoubleConv::make(reg, "dec2.conv", ch[2] + ch[1], ch[1], ch[1]);
    dec1_ = DoubleConv::make(reg, "dec1.conv", ch[1] + ch[0], ch[0], ch[0]);
    head_ = ConvLayer::make(reg, "head.conv", ch[0], cfg.num_classes, 1, 1, 0);
  }

  Var forward(Tape& tape, const Var& input, bool training, CounterRng& rng) override {
    (void)rng;
    expect_ndim(*input, 4, "baseline_unet", "input");
    expect_axis(*input, 1, cfg_.in_channels, "baseline_unet", "input");
    expect_axis(*input, 2, input_size(), "baseline_unet", "input");
    expect_axis(*input, 3, input_size(), "baseline_unet", "input");

    auto e1 = enc1_(tape, input, training);                   // 32 @ 120
    auto e2 = enc2_(tape, maxpool2d(tape, e1), training);     // 64 @ 60
    auto e3 = enc3_(tape, maxpool2d(tape, e2), training);     // 128 @ 30
    auto b = bottleneck_(tape, maxpool2d(tape, e3), training);  // 256 @ 15

    auto d = dec3_(tape, concat_channels(tape, upsample2x(tape, b), e3), training);
    d = dec2_(tape, concat_channels(tape, upsample2x(tape, d), e2), training);
    d = dec1_(tape, concat_channels(tape, upsample2x(tape, d), e1), training);
    auto logits = head_(tape, d);  // C @ 120
    return avgpool2d(tape, logits, cfg_.pool_factor, cfg_.pool_factor);  // C @ 12
  }

  int input_size() const override { return 120; }
  int output_size() const override { return 120 / cfg_.pool_factor; }

  std::string config_signature() const override {
    std::ostringstream ss;
    ss << "baseline:in=" << cfg_.in_channels << ":classes=" << cfg_.num_classes << ":enc=";
    for (std::size_t i = 0; i < cfg_.encoder_channels.size(); ++i)
      ss << (i ? "," : "") << cfg_.encoder_channels[i];
    ss << ":pool=" << cfg_.pool_factor;
    return ss.str();
  }

 private:
  BaselineUNetConfig cfg_;
  DoubleConv enc1_, enc2_, enc3_, bottleneck_, dec3_, dec2_, dec1_;
  ConvLayer head_;
};

}  // namespace

std::unique_ptr<Model> build_resunet(const ResUNetConfig& cfg, std::uint64_t seed) {
  return std::make_unique<ResUNetModel>(cfg, seed);
}

std::unique_ptr<Model> build_resunet_uncompressed(ResUNetConfig cfg, std::uint64_t seed) {
  cfg.compress_skips = false;
  return std::make_unique<ResUNetModel>(cfg, seed);
}

std::unique_ptr<Model> build_baseline_unet(const BaselineUNetConfig& cfg, std::uint64_t seed) {
  return std::make_unique<BaselineUNetModel>(cfg, seed);
}

std::vector<std::uint16_t> pool_labels(const std::vector<std::uint16_t>& labels, int n) {
  if (n < 120 || (n - 120) % 2 != 0)
    throw DimensionError("pool_labels: grid side " + std::to_string(n) +
                         " cannot center a 120x120 crop");
  if (labels.size() != static_cast<std::size_t>(n) * n)
    throw DimensionError("pool_labels: label buffer does not match side " + std::to_string(n));
  const int off = (n - 120) / 2;
  std::vector<std::uint16_t> out(12 * 12, 0);
  for (int br = 0; br < 12; ++br) {
    for (int bc = 0; bc < 12; ++bc) {
      std::map<std::uint16_t, int> counts;  // ordered: ties resolve to the smaller code
      for (int r = 0; r < 10; ++r) {
        for (int c = 0; c < 10; ++c) {
          const std::uint16_t code =
              labels[static_cast<std::size_t>(off + br * 10 + r) * n + off + bc * 10 + c];
          if (code != 0) ++counts[code];
        }
      }
      std::uint16_t best = 0;
      int best_count = 0;
      for (const auto& [code, count] : counts) {
        if (count > best_count) {
          best = code;
          best_count = count;
        }
      }
      out[static_cast<std::size_t>(br) * 12 + bc] = best;
    }
  }
  return out;
}

Tensor crop_center(const Tensor& chw, int out_size) {
  if (chw.ndim() != 3)
    throw DimensionError("crop_center: expected CxHxW, got " + shape_str(chw.shape));
  const int c = chw.dim(0), h = chw.dim(1), w = chw.dim(2);
  if (h < out_size || w < out_size || (h - out_size) % 2 != 0 || (w - out_size) % 2 != 0)
    throw DimensionError("crop_center: cannot center " + std::to_string(out_size) + " in " +
                         shape_str(chw.shape));
  const int ro = (h - out_size) / 2, co = (w - out_size) / 2;
  Tensor out = Tensor::zeros({c, out_size, out_size});
  for (int ch = 0; ch < c; ++ch)
    for (int r = 0; r < out_size; ++r)
      for (int col = 0; col < out_size; ++col)
        out.data[(static_cast<std::size_t>(ch) * out_size + r) * out_size + col] =
            chw.data[(static_cast<std::size_t>(ch) * h + ro + r) * w + co + col];
  return out;
}

std::vector<std::uint16_t> crop_center_labels(const std::vector<std::uint16_t>& labels, int n,
                                              int out_size) {
  if (labels.size() != static_cast<std::size_t>(n) * n || n < out_size ||
      (n - out_size) % 2 != 0)
    throw DimensionError("crop_center_labels: cannot center " + std::to_string(out_size) +
                         " in side " + std::to_string(n));
  const int off = (n - out_size) / 2;
  std::vector<std::uint16_t> out(static_cast<std::size_t>(out_size) * out_size);
  for (int r = 0; r < out_size; ++r)
    for (int c = 0; c < out_size; ++c)
      out[static_cast<std::size_t>(r) * out_size + c] =
          labels[static_cast<std::size_t>(off + r) * n + off + c];
  return out;
}

// ---- checkpoint IO -----------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'L', 'C', 'K', 'P'};

template <typename T>
void put(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T take(std::istream& is, long& offset, const std::string& path) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw FormatError(path + ": truncated checkpoint", offset);
  offset += static_cast<long>(sizeof(T));
  return value;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write checkpoint: " + path);
  f.write(kMagic, 4);
  put<std::uint32_t>(f, ckpt.version);
  put<std::uint32_t>(f, ckpt.epoch);
  put<std::uint64_t>(f, ckpt.config_hash);
  put<std::uint32_t>(f, static_cast<std::uint32_t>(ckpt.entries.size()));
  for (const auto& [name, tensor] : ckpt.entries) {
    put<std::uint32_t>(f, static_cast<std::uint32_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(f, static_cast<std::uint32_t>(tensor.shape.size()));
    for (int d : tensor.shape) put<std::uint32_t>(f, static_cast<std::uint32_t>(d));
    put<std::uint64_t>(f, static_cast<std::uint64_t>(tensor.data.size()));
    f.write(reinterpret_cast<const char*>(tensor.data.data()),
            static_cast<std::streamsize>(tensor.data.size() * sizeof(float)));
  }
  if (!f) throw IoError("short write to checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint: " + path);
  long offset = 0;
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError(path + ": bad magic, not a checkpoint", 0);
  offset = 4;

  Checkpoint ckpt;
  ckpt.version = take<std::uint32_t>(f, offset, path);
  if (ckpt.version != 1)
    throw FormatError(path + ": unsupported checkpoint version " + std::to_string(ckpt.version),
                      offset - 4);
  ckpt.epoch = take<std::uint32_t>(f, offset, path);
  ckpt.config_hash = take<std::uint64_t>(f, offset, path);
  const auto count = take<std::uint32_t>(f, offset, path);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = take<std::uint32_t>(f, offset, path);
    if (name_len > 4096) throw FormatError(path + ": implausible name length", offset - 4);
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    if (!f) throw FormatError(path + ": truncated checkpoint", offset);
    offset += static_cast<long>(name_len);
    const auto ndim = take<std::uint32_t>(f, offset, path);
    if (ndim > 8) throw FormatError(path + ": implausible rank for '" + name + "'", offset - 4);
    Shape shape;
    std::uint64_t expect = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      const auto extent = take<std::uint32_t>(f, offset, path);
      shape.push_back(static_cast<int>(extent));
      expect *= extent;
    }
    const auto stored = take<std::uint64_t>(f, offset, path);
    if (stored != expect)
      throw FormatError(path + ": entry '" + name + "' count " + std::to_string(stored) +
                            " does not match shape " + shape_str(shape),
                        offset - 8);
    std::vector<float> data(stored);
    f.read(reinterpret_cast<char*>(data.data()),
           static_cast<std::streamsize>(stored * sizeof(float)));
    if (!f) throw FormatError(path + ": truncated checkpoint", offset);
    offset += static_cast<long>(stored * sizeof(float));
    ckpt.entries.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  return ckpt;
}

Checkpoint checkpoint_from_model(const Model& model, std::uint32_t epoch,
                                 std::uint64_t config_hash) {
  Checkpoint ckpt;
  ckpt.epoch = epoch;
  ckpt.config_hash = config_hash;
  for (const auto& e : model.tensors()) {
    Tensor copy(e.value->shape, e.value->data);
    ckpt.entries.emplace_back(e.name, std::move(copy));
  }
  return ckpt;
}

Checkpoint encoder_checkpoint(const Model& model, std::uint32_t epoch,
                              std::uint64_t config_hash) {
  Checkpoint ckpt;
  ckpt.epoch = epoch;
  ckpt.config_hash = config_hash;
  for (const auto& e : model.tensors()) {
    if (e.name.rfind("encoder.", 0) != 0) continue;
    Tensor copy(e.value->shape, e.value->data);
    ckpt.entries.emplace_back(e.name, std::move(copy));
  }
  return ckpt;
}

namespace {

LoadReport load_matching(Model& model, const Checkpoint& ckpt, bool encoder_only) {
  std::map<std::string, const Tensor*> available;
  for (const auto& [name, tensor] : ckpt.entries) available[name] = &tensor;

  LoadReport report;
  for (auto& e : model.tensors()) {
    const bool in_scope = e.name.rfind("encoder.", 0) == 0;
    if (encoder_only && !in_scope) continue;
    auto it = available.find(e.name);
    if (it == available.end()) {
      report.skipped.emplace_back(e.name, "missing from checkpoint");
      continue;
    }
    if (it->second->shape != e.value->shape) {
      report.skipped.emplace_back(e.name, "shape " + shape_str(it->second->shape) +
                                              " does not match model " +
                                              shape_str(e.value->shape));
      continue;
    }
    e.value->data = it->second->data;
    ++report.matched;
  }
  if (report.matched == 0)
    report.warnings.push_back(encoder_only ? "checkpoint matched no encoder tensors"
                                           : "checkpoint matched no tensors");
  return report;
}

}  // namespace

LoadReport load_encoder(Model& model, const Checkpoint& ckpt) {
  return load_matching(model, ckpt, /*encoder_only=*/true);
}

LoadReport load_all(Model& model, const Checkpoint& ckpt) {
  return load_matching(model, ckpt, /*encoder_only=*/false);
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t params_checksum(const Model& model, const std::string& prefix) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const auto& e : model.tensors()) {
    if (!e.trainable) continue;
    if (!prefix.empty() && e.name.rfind(prefix, 0) != 0) continue;
    const auto* bytes = reinterpret_cast<const unsigned char*>(e.value->data.data());
    for (std::size_t i = 0; i < e.value->data.size() * sizeof(float); ++i) {
      hash ^= bytes[i];
      hash *= 0x100000001b3ULL;
    }
  }
  return hash;
}

}  // namespace lcs
