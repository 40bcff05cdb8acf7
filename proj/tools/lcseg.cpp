// lcseg: land-cover segmentation pipeline driver.
//
// Exit codes: 0 success, 1 check failure, 2 config error, 3 data error,
// 4 numeric abort (non-finite loss).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lcs/evaluate.hpp"
#include "lcs/gemm.hpp"
#include "lcs/gradcheck.hpp"
#include "lcs/synth.hpp"
#include "lcs/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunConfig {
  std::string data_dir;
  std::vector<std::string> areas;
  lcs::FoldPlan fold_plan;
  bool has_fold_plan = false;
  std::string taxonomy_file;
  std::string stats_file;
  std::string encoder_checkpoint;
  std::string out_dir = "out";

  std::string model_family = "baseline";
  int num_classes = 0;  // 0: taxonomy size
  bool compress_skips = true;
  std::uint64_t model_seed = 1;

  lcs::TrainConfig train;
  int hop = 64;
  lcs::LossConfig loss;
};

std::string slurp_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw lcs::IoError("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw lcs::IoError("cannot write " + path);
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw lcs::IoError("short write to " + path);
}

RunConfig parse_run_config(const std::string& path) {
  json doc;
  try {
    doc = json::parse(slurp_file(path));
  } catch (const json::parse_error& e) {
    throw lcs::ConfigError(path + ": " + e.what());
  }
  RunConfig cfg;
  try {
    cfg.data_dir = doc.at("data_dir").get<std::string>();
    if (doc.contains("areas")) cfg.areas = doc["areas"].get<std::vector<std::string>>();
    if (doc.contains("fold_plan")) {
      if (doc["fold_plan"].is_string()) {
        cfg.fold_plan = lcs::load_fold_plan(doc["fold_plan"].get<std::string>());
      } else {
        cfg.fold_plan = lcs::fold_plan_from_json_text(doc["fold_plan"].dump());
      }
      cfg.has_fold_plan = true;
    }
    if (doc.contains("taxonomy")) cfg.taxonomy_file = doc["taxonomy"].get<std::string>();
    if (doc.contains("stats_file")) cfg.stats_file = doc["stats_file"].get<std::string>();
    if (doc.contains("encoder_checkpoint"))
      cfg.encoder_checkpoint = doc["encoder_checkpoint"].get<std::string>();
    if (doc.contains("out_dir")) cfg.out_dir = doc["out_dir"].get<std::string>();

    if (doc.contains("model")) {
      const auto& m = doc["model"];
      if (m.contains("family")) cfg.model_family = m["family"].get<std::string>();
      if (m.contains("num_classes")) cfg.num_classes = m["num_classes"].get<int>();
      if (m.contains("compress_skips")) cfg.compress_skips = m["compress_skips"].get<bool>();
      if (m.contains("seed")) cfg.model_seed = m["seed"].get<std::uint64_t>();
    }
    if (doc.contains("train")) {
      const auto& t = doc["train"];
      if (t.contains("epochs")) cfg.train.epochs = t["epochs"].get<int>();
      if (t.contains("batch_size")) cfg.train.batch_size = t["batch_size"].get<int>();
      if (t.contains("initial_lr")) cfg.train.schedule.initial_lr = t["initial_lr"].get<double>();
      if (t.contains("decay_factor"))
        cfg.train.schedule.decay_factor = t["decay_factor"].get<double>();
      if (t.contains("decay_every_epochs"))
        cfg.train.schedule.decay_every_epochs = t["decay_every_epochs"].get<int>();
      if (t.contains("unfreeze_lr_drop"))
        cfg.train.schedule.unfreeze_lr_drop = t["unfreeze_lr_drop"].get<double>();
      if (t.contains("freeze_encoder")) cfg.train.freeze_encoder = t["freeze_encoder"].get<bool>();
      if (t.contains("unfreeze_epoch")) cfg.train.unfreeze_epoch = t["unfreeze_epoch"].get<int>();
      if (t.contains("seed")) cfg.train.seed = t["seed"].get<std::uint64_t>();
      if (t.contains("augment")) cfg.train.augment = t["augment"].get<bool>();
      if (t.contains("checkpoint_every"))
        cfg.train.checkpoint_every = t["checkpoint_every"].get<int>();
      if (t.contains("hop")) cfg.hop = t["hop"].get<int>();
    }
    if (doc.contains("loss")) {
      const auto& l = doc["loss"];
      if (l.contains("dice_weight")) cfg.loss.dice_weight = l["dice_weight"].get<double>();
      if (l.contains("bce_weight")) cfg.loss.bce_weight = l["bce_weight"].get<double>();
      if (l.contains("dice_eps")) cfg.loss.dice_eps = l["dice_eps"].get<double>();
      if (l.contains("element_weight"))
        cfg.loss.element_weight = l["element_weight"].get<double>();
      if (l.contains("pos_weight_mode")) {
        const auto mode = l["pos_weight_mode"].get<std::string>();
        if (mode == "ones")
          cfg.loss.pos_weight_mode = lcs::PosWeightMode::ones;
        else if (mode == "neg_over_pos")
          cfg.loss.pos_weight_mode = lcs::PosWeightMode::neg_over_pos;
        else
          throw lcs::ConfigError("loss.pos_weight_mode must be ones or neg_over_pos");
      }
    }
  } catch (const json::exception& e) {
    throw lcs::ConfigError(path + ": " + e.what());
  }
  if (cfg.model_family != "baseline" && cfg.model_family != "resunet" &&
      cfg.model_family != "resunet_uncompressed")
    throw lcs::ConfigError("model.family must be baseline, resunet or resunet_uncompressed");
  return cfg;
}

// Every referenced file must exist before any work starts.
void validate_inputs(const RunConfig& cfg, const std::vector<std::string>& area_ids) {
  if (!fs::is_directory(cfg.data_dir))
    throw lcs::ConfigError("data_dir does not exist: " + cfg.data_dir);
  for (const auto& id : area_ids) {
    const auto header = fs::path(cfg.data_dir) / id / "header.json";
    if (!fs::is_regular_file(header))
      throw lcs::ConfigError("area '" + id + "' missing: " + header.string());
  }
  for (const std::string& file : {cfg.taxonomy_file, cfg.stats_file, cfg.encoder_checkpoint})
    if (!file.empty() && !fs::is_regular_file(file))
      throw lcs::ConfigError("referenced file does not exist: " + file);
}

lcs::ClcTaxonomy load_taxonomy(const RunConfig& cfg) {
  if (cfg.taxonomy_file.empty()) return lcs::default_taxonomy();
  return lcs::ClcTaxonomy::load(cfg.taxonomy_file);
}

std::unique_ptr<lcs::Model> build_model(const RunConfig& cfg, const lcs::ClcTaxonomy& taxonomy) {
  const int classes = cfg.num_classes > 0 ? cfg.num_classes : static_cast<int>(taxonomy.size());
  if (cfg.model_family == "baseline") {
    lcs::BaselineUNetConfig mc;
    mc.num_classes = classes;
    return lcs::build_baseline_unet(mc, cfg.model_seed);
  }
  lcs::ResUNetConfig mc;
  mc.num_classes = classes;
  mc.compress_skips = cfg.compress_skips && cfg.model_family == "resunet";
  return lcs::build_resunet(mc, cfg.model_seed);
}

struct PreparedRun {
  lcs::AreaStore store;
  lcs::ClcTaxonomy taxonomy;
  lcs::BandStats stats;

  PreparedRun(lcs::AreaStore s, lcs::ClcTaxonomy t) : store(std::move(s)), taxonomy(std::move(t)) {}
};

// Training refs: configured hop, sea-only patches discarded.
std::vector<lcs::PatchRef> training_refs(const lcs::AreaStore& store,
                                         const std::vector<std::string>& ids, int hop) {
  std::vector<lcs::PatchRef> refs;
  for (const auto& id : ids) {
    auto cut = lcs::cut_patches(store.at(id), lcs::kPatchSize, hop);
    auto kept = lcs::discard_sea_only(cut, store.at(id));
    refs.insert(refs.end(), kept.begin(), kept.end());
  }
  return refs;
}

// Evaluation refs: non-overlapping full coverage, nothing discarded.
std::vector<lcs::PatchRef> evaluation_refs(const lcs::AreaStore& store,
                                           const std::vector<std::string>& ids) {
  std::vector<lcs::PatchRef> refs;
  for (const auto& id : ids) {
    auto cut = lcs::cut_patches(store.at(id), lcs::kPatchSize, lcs::kPatchSize);
    refs.insert(refs.end(), cut.begin(), cut.end());
  }
  return refs;
}

void train_one(lcs::Model& model, const RunConfig& cfg, const lcs::AreaStore& store,
               const std::vector<std::string>& train_ids, const lcs::BandStats& stats,
               const lcs::ClcTaxonomy& taxonomy, const std::string& out_dir) {
  lcs::FitDataset data;
  data.store = &store;
  data.taxonomy = &taxonomy;
  data.stats = stats;
  data.refs = training_refs(store, train_ids, cfg.hop);
  if (data.refs.empty()) throw lcs::DataError("no training patches after sea discard");

  lcs::TrainConfig tc = cfg.train;
  if (tc.checkpoint_every > 0 && tc.checkpoint_dir.empty())
    tc.checkpoint_dir = out_dir + "/checkpoints";

  if (!cfg.encoder_checkpoint.empty()) {
    const auto ckpt = lcs::load_checkpoint(cfg.encoder_checkpoint);
    const auto report = lcs::load_encoder(model, ckpt);
    std::printf("encoder load: %d matched, %zu skipped\n", report.matched,
                report.skipped.size());
    for (const auto& [name, reason] : report.skipped)
      std::printf("  skipped %s (%s)\n", name.c_str(), reason.c_str());
  }

  const auto log = lcs::fit(model, data, tc, cfg.loss);
  fs::create_directories(out_dir);
  write_file(out_dir + "/trainlog.ndjson", log.to_ndjson());
  lcs::save_stats(stats, out_dir + "/stats.json");
  lcs::save_checkpoint(lcs::checkpoint_from_model(model, static_cast<std::uint32_t>(tc.epochs),
                                                  lcs::fnv1a64(model.config_signature())),
                       out_dir + "/checkpoint.lckp");
  std::printf("trained %d epochs on %zu patches; final mean loss %.6f\n", tc.epochs,
              data.refs.size(), log.records.back().mean_loss);
}

void write_evaluation(const lcs::EvaluationResult& result, const lcs::ClcTaxonomy& taxonomy,
                      const std::string& out_dir) {
  fs::create_directories(out_dir);
  write_file(out_dir + "/metrics.json", lcs::metrics_json_text(result.report));
  const auto text = lcs::render_text_report(result.report, taxonomy);
  write_file(out_dir + "/report.txt", text);
  std::fputs(text.c_str(), stdout);
  for (const auto& maps : result.maps) {
    lcs::render_map_ppm(maps.truth, taxonomy, out_dir + "/" + maps.area_id + "_truth.ppm");
    lcs::render_map_ppm(maps.pred, taxonomy, out_dir + "/" + maps.area_id + "_pred.ppm");
  }
}

int cmd_synth(const std::string& out, int n_areas, const std::string& size, std::uint64_t seed,
              double sigma, int sea_margin, int nodata_edge) {
  int w = 0, h = 0;
  if (std::sscanf(size.c_str(), "%dx%d", &h, &w) != 2)
    throw lcs::ConfigError("--size must be HxW, got " + size);
  lcs::SynthSpec spec;
  spec.width = w;
  spec.height = h;
  spec.noise_sigma = sigma;
  spec.sea_margin = sea_margin;
  spec.nodata_edge = nodata_edge;
  fs::create_directories(out);
  for (int i = 0; i < n_areas; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "synth%02d", i);
    spec.seed = lcs::CounterRng::derive_seed(seed, static_cast<std::uint64_t>(i), 0xa0ea);
    const auto area = lcs::generate_synthetic_area(id, spec);
    area.validate(lcs::default_taxonomy());
    lcs::save_area(area, out + "/" + id);
    std::printf("wrote %s (%dx%d)\n", id, area.height, area.width);
  }
  return 0;
}

int cmd_stats(const std::string& data_dir, std::vector<std::string> areas,
              const std::string& out) {
  if (areas.empty()) throw lcs::ConfigError("--areas is required");
  auto store = lcs::AreaStore::load(data_dir, areas);
  const auto stats = lcs::compute_stats(store, areas);
  lcs::save_stats(stats, out);
  std::printf("wrote %s over %zu areas\n", out.c_str(), areas.size());
  return 0;
}

int cmd_grad_check(int seeds) {
  const auto results = lcs::gradient_suite(seeds);
  bool all_ok = true;
  std::printf("%-22s %12s %10s  %s\n", "primitive", "max rel err", "tolerance", "status");
  for (const auto& entry : results) {
    std::printf("%-22s %12.3e %10.0e  %s\n", entry.name.c_str(), entry.max_err, entry.tolerance,
                entry.passed ? "ok" : "FAIL");
    all_ok = all_ok && entry.passed;
  }
  return all_ok ? 0 : 1;
}

int cmd_train(const std::string& config_path) {
  auto cfg = parse_run_config(config_path);
  if (cfg.areas.empty()) throw lcs::ConfigError("train needs a non-empty areas list");
  validate_inputs(cfg, cfg.areas);
  auto taxonomy = load_taxonomy(cfg);
  auto store = lcs::AreaStore::load(cfg.data_dir, cfg.areas);
  for (const auto& id : cfg.areas) store.at(id).validate(taxonomy);
  const auto stats = cfg.stats_file.empty() ? lcs::compute_stats(store, cfg.areas)
                                            : lcs::load_stats(cfg.stats_file);
  auto model = build_model(cfg, taxonomy);
  train_one(*model, cfg, store, cfg.areas, stats, taxonomy, cfg.out_dir);
  return 0;
}

int cmd_predict(const std::string& config_path, const std::string& checkpoint,
                std::vector<std::string> areas, const std::string& stats_path) {
  auto cfg = parse_run_config(config_path);
  if (areas.empty()) areas = cfg.areas;
  if (areas.empty()) throw lcs::ConfigError("predict needs --areas or config areas");
  validate_inputs(cfg, areas);
  if (!fs::is_regular_file(checkpoint))
    throw lcs::ConfigError("checkpoint does not exist: " + checkpoint);

  auto taxonomy = load_taxonomy(cfg);
  auto store = lcs::AreaStore::load(cfg.data_dir, areas);
  const std::string stats_file = !stats_path.empty() ? stats_path : cfg.stats_file;
  if (stats_file.empty())
    throw lcs::ConfigError("predict needs --stats or config stats_file (training-set stats)");
  const auto stats = lcs::load_stats(stats_file);

  auto model = build_model(cfg, taxonomy);
  const auto report = lcs::load_all(*model, lcs::load_checkpoint(checkpoint));
  if (report.matched != static_cast<int>(model->tensors().size()))
    throw lcs::DataError("checkpoint does not fully match the configured model (" +
                         std::to_string(report.matched) + "/" +
                         std::to_string(model->tensors().size()) + " tensors)");

  fs::create_directories(cfg.out_dir);
  const auto result =
      lcs::evaluate_model(*model, store, evaluation_refs(store, areas), stats, taxonomy);
  for (const auto& maps : result.maps) {
    lcs::save_code_grid(maps.pred, cfg.out_dir + "/pred_" + maps.area_id + ".bin");
    lcs::render_map_ppm(maps.pred, taxonomy, cfg.out_dir + "/pred_" + maps.area_id + ".ppm");
    std::printf("predicted %s\n", maps.area_id.c_str());
  }
  return 0;
}

int cmd_evaluate(const std::string& config_path, const std::string& checkpoint,
                 std::vector<std::string> areas, const std::string& stats_path) {
  auto cfg = parse_run_config(config_path);
  if (areas.empty()) areas = cfg.areas;
  if (areas.empty()) throw lcs::ConfigError("evaluate needs --areas or config areas");
  validate_inputs(cfg, areas);
  if (!fs::is_regular_file(checkpoint))
    throw lcs::ConfigError("checkpoint does not exist: " + checkpoint);

  auto taxonomy = load_taxonomy(cfg);
  auto store = lcs::AreaStore::load(cfg.data_dir, areas);
  for (const auto& id : areas) store.at(id).validate(taxonomy);
  const std::string stats_file = !stats_path.empty() ? stats_path : cfg.stats_file;
  if (stats_file.empty())
    throw lcs::ConfigError("evaluate needs --stats or config stats_file (training-set stats)");
  const auto stats = lcs::load_stats(stats_file);

  auto model = build_model(cfg, taxonomy);
  const auto report = lcs::load_all(*model, lcs::load_checkpoint(checkpoint));
  if (report.matched != static_cast<int>(model->tensors().size()))
    throw lcs::DataError("checkpoint does not fully match the configured model");

  const auto result =
      lcs::evaluate_model(*model, store, evaluation_refs(store, areas), stats, taxonomy);
  write_evaluation(result, taxonomy, cfg.out_dir);
  return 0;
}

int cmd_render(const std::string& area_dir, const std::string& out, const std::string& grid_path) {
  const auto area = lcs::load_area(area_dir);
  lcs::CodeGrid grid;
  if (grid_path.empty()) {
    grid.width = area.width;
    grid.height = area.height;
    grid.codes = area.labels;
  } else {
    grid = lcs::load_code_grid(grid_path, area.width, area.height);
  }
  lcs::render_map_ppm(grid, lcs::default_taxonomy(), out);
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

int cmd_cross_validate(const std::string& config_path) {
  auto cfg = parse_run_config(config_path);
  if (!cfg.has_fold_plan) throw lcs::ConfigError("cross-validate needs a fold_plan");
  cfg.fold_plan.validate();
  const auto all_areas = cfg.fold_plan.all_areas();
  validate_inputs(cfg, all_areas);

  auto taxonomy = load_taxonomy(cfg);
  auto store = lcs::AreaStore::load(cfg.data_dir, all_areas);
  for (const auto& id : all_areas) store.at(id).validate(taxonomy);

  for (int k = 1; k <= static_cast<int>(cfg.fold_plan.size()); ++k) {
    try {
      auto [train_ids, val_ids] = lcs::split_folds(cfg.fold_plan, k);
      const std::string fold_dir = cfg.out_dir + "/fold" + std::to_string(k);
      std::printf("== fold %d: validation = %s (%zu train areas)\n", k,
                  cfg.fold_plan.groups[static_cast<std::size_t>(k - 1)].first.c_str(),
                  train_ids.size());

      // training-set statistics only, unless a base-model stats file is given
      const auto stats = cfg.stats_file.empty() ? lcs::compute_stats(store, train_ids)
                                                : lcs::load_stats(cfg.stats_file);

      auto model = build_model(cfg, taxonomy);
      auto refs = training_refs(store, train_ids, cfg.hop);
      for (const auto& ref : refs)
        for (const auto& v : val_ids)
          if (ref.area_id == v)
            throw lcs::DataError("fold " + std::to_string(k) +
                                 ": validation area leaked into training refs");
      std::printf("fold %d: %zu training refs, validation areas disjoint\n", k, refs.size());

      train_one(*model, cfg, store, train_ids, stats, taxonomy, fold_dir);
      const auto result =
          lcs::evaluate_model(*model, store, evaluation_refs(store, val_ids), stats, taxonomy);
      write_evaluation(result, taxonomy, fold_dir);
    } catch (const lcs::NumericAbort&) {
      throw;
    } catch (const std::exception& e) {
      throw lcs::DataError("fold " + std::to_string(k) + " failed: " + e.what());
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  lcs::detail::pin_blas_threads();

  CLI::App app{"land-cover semantic segmentation pipeline"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "generate synthetic areas");
  std::string synth_out;
  int synth_areas = 6;
  std::string synth_size = "256x256";
  std::uint64_t synth_seed = 0;
  double synth_sigma = 0.1;
  int synth_margin = 32, synth_edge = 2;
  synth->add_option("--out", synth_out)->required();
  synth->add_option("--areas", synth_areas);
  synth->add_option("--size", synth_size, "HxW");
  synth->add_option("--seed", synth_seed);
  synth->add_option("--sigma", synth_sigma);
  synth->add_option("--sea-margin", synth_margin);
  synth->add_option("--nodata-edge", synth_edge);

  auto* stats = app.add_subcommand("stats", "compute band statistics");
  std::string stats_data, stats_out = "stats.json";
  std::vector<std::string> stats_areas;
  stats->add_option("--data", stats_data)->required();
  stats->add_option("--areas", stats_areas)->delimiter(',');
  stats->add_option("--out", stats_out);

  auto* train = app.add_subcommand("train", "train a model per the run config");
  std::string train_config;
  train->add_option("--config", train_config)->required();

  auto* predict = app.add_subcommand("predict", "predict code grids and maps");
  std::string predict_config, predict_ckpt, predict_stats;
  std::vector<std::string> predict_areas;
  predict->add_option("--config", predict_config)->required();
  predict->add_option("--checkpoint", predict_ckpt)->required();
  predict->add_option("--areas", predict_areas)->delimiter(',');
  predict->add_option("--stats", predict_stats);

  auto* evaluate = app.add_subcommand("evaluate", "metrics at the 3 CLC levels");
  std::string eval_config, eval_ckpt, eval_stats;
  std::vector<std::string> eval_areas;
  evaluate->add_option("--config", eval_config)->required();
  evaluate->add_option("--checkpoint", eval_ckpt)->required();
  evaluate->add_option("--areas", eval_areas)->delimiter(',');
  evaluate->add_option("--stats", eval_stats);

  auto* render = app.add_subcommand("render", "render labels or a grid to PPM");
  std::string render_area, render_out, render_grid;
  render->add_option("--area", render_area)->required();
  render->add_option("--out", render_out)->required();
  render->add_option("--grid", render_grid);

  auto* gradcheck = app.add_subcommand("grad-check", "finite-difference gradient suite");
  int gc_seeds = 20;
  gradcheck->add_option("--seeds", gc_seeds);

  auto* cv = app.add_subcommand("cross-validate", "k-fold cross validation");
  std::string cv_config;
  cv->add_option("--config", cv_config)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth)
      return cmd_synth(synth_out, synth_areas, synth_size, synth_seed, synth_sigma, synth_margin,
                       synth_edge);
    if (*stats) return cmd_stats(stats_data, stats_areas, stats_out);
    if (*train) return cmd_train(train_config);
    if (*predict) return cmd_predict(predict_config, predict_ckpt, predict_areas, predict_stats);
    if (*evaluate) return cmd_evaluate(eval_config, eval_ckpt, eval_areas, eval_stats);
    if (*render) return cmd_render(render_area, render_out, render_grid);
    if (*gradcheck) return cmd_grad_check(gc_seeds);
    if (*cv) return cmd_cross_validate(cv_config);
  } catch (const lcs::NumericAbort& e) {
    std::fprintf(stderr, "numeric abort: %s\n", e.what());
    return 4;
  } catch (const lcs::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const lcs::ParameterError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
