#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lcs/model.hpp"
#include "lcs/patching.hpp"
#include "lcs/taxonomy.hpp"
#include "lcs/train.hpp"

namespace lcs {

// A rectangular grid of class codes; 0 = unlabeled / not covered.
struct CodeGrid {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> codes;

  static CodeGrid filled(int width, int height, std::uint16_t code = 0) {
    return {width, height,
            std::vector<std::uint16_t>(static_cast<std::size_t>(width) * height, code)};
  }
  std::uint16_t at(int r, int c) const { return codes[static_cast<std::size_t>(r) * width + c]; }
  std::uint16_t& at(int r, int c) { return codes[static_cast<std::size_t>(r) * width + c]; }
};

// Per-pixel argmax over class logits (ties toward the lower dense index,
// hence the lower code3), mapped back to codes. logits: C x S x S.
CodeGrid predict_grid(const Tensor& logits, const ClcTaxonomy& taxonomy);

// Eval-mode forward of one prepared batch item; returns the code grid at the
// model's output resolution.
CodeGrid predict(Model& model, const Var& x, const ClcTaxonomy& taxonomy);

// Projects both grids to the target level via the taxonomy; 0 stays 0.
std::pair<CodeGrid, CodeGrid> project_grids(const CodeGrid& truth, const CodeGrid& pred,
                                            const ClcTaxonomy& taxonomy, int level);

// Raw (truth code, predicted code) pixel counts at one level. Unlike the
// bucketed matrix below this merges associatively, so per-patch tallies can
// be combined in any order before the class axis is fixed.
struct PairTally {
  int level = 3;
  std::map<std::pair<int, int>, std::int64_t> counts;
  std::int64_t total = 0;

  void add(const CodeGrid& truth, const CodeGrid& pred);  // labeled pixels only
  void merge(const PairTally& other);
};

// Row = truth class, column = prediction. The class axis holds the classes
// with nonzero truth support; predictions outside that set land in a
// trailing bucket column (they count as errors, not as extra classes).
struct ConfusionMatrix {
  int level = 3;
  std::vector<int> classes;          // projected codes present in truth, ascending
  std::vector<std::int64_t> counts;  // R x (R+1), row-major; last column = other
  std::int64_t total = 0;
  std::vector<std::string> warnings;

  std::int64_t at(int row, int col) const {
    return counts[static_cast<std::size_t>(row) * (classes.size() + 1) + col];
  }
  std::int64_t& at(int row, int col) {
    return counts[static_cast<std::size_t>(row) * (classes.size() + 1) + col];
  }
};

ConfusionMatrix confusion_from_tally(const PairTally& tally);

// Tallies labeled pixels only; both grids must already be at `level`.
ConfusionMatrix confusion(const CodeGrid& truth, const CodeGrid& pred,
                          const ClcTaxonomy& taxonomy, int level);

struct ClassMetrics {
  int code = 0;
  std::string name;
  std::int64_t support = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct LevelReport {
  int level = 3;
  std::int64_t total_pixels = 0;
  double accuracy = 0.0;
  double f1_macro = 0.0;
  double f1_micro = 0.0;
  double f1_weighted = 0.0;
  std::vector<ClassMetrics> classes;
};

LevelReport metrics(const ConfusionMatrix& cm, const ClcTaxonomy& taxonomy);

struct MetricsReport {
  std::vector<LevelReport> levels;  // levels 1, 2, 3
};

// Metrics at all three hierarchy levels for one truth/prediction pair.
MetricsReport evaluate_grids(const CodeGrid& truth, const CodeGrid& pred,
                             const ClcTaxonomy& taxonomy);
// Same, from merged per-patch tallies (one per level).
MetricsReport report_from_tallies(const std::vector<PairTally>& per_level,
                                  const ClcTaxonomy& taxonomy);

// Fixed-layout text tables, one section per level, aggregates below.
std::string render_text_report(const MetricsReport& report, const ClcTaxonomy& taxonomy);
std::string metrics_json_text(const MetricsReport& report);

// Binary PPM (P6, maxval 255): legend color per code, black for 0.
void render_map_ppm(const CodeGrid& grid, const ClcTaxonomy& taxonomy, const std::string& path);
std::string render_map_ppm_bytes(const CodeGrid& grid, const ClcTaxonomy& taxonomy);
CodeGrid parse_ppm_to_codes(const std::string& path, const ClcTaxonomy& taxonomy);

// Raw little-endian uint16 grid, row-major.
void save_code_grid(const CodeGrid& grid, const std::string& path);
CodeGrid load_code_grid(const std::string& path, int width, int height);

// Model evaluation over validation refs: per-ref prediction, stitched
// truth/prediction maps per area (uncovered pixels stay 0), and confusion
// counts merged across refs at every level.
struct AreaMaps {
  std::string area_id;
  CodeGrid truth;
  CodeGrid pred;
};

struct EvaluationResult {
  MetricsReport report;
  std::vector<AreaMaps> maps;
};

EvaluationResult evaluate_model(Model& model, const AreaStore& store,
                                const std::vector<PatchRef>& refs, const BandStats& stats,
                                const ClcTaxonomy& taxonomy);

}  // namespace lcs
