#include "lcs/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace lcs {

CodeGrid predict_grid(const Tensor& logits, const ClcTaxonomy& taxonomy) {
  if (logits.ndim() != 3)
    throw DimensionError("predict_grid: expected CxHxW logits, got " + shape_str(logits.shape));
  const int c = logits.dim(0), h = logits.dim(1), w = logits.dim(2);
  if (c != static_cast<int>(taxonomy.size()))
    throw DimensionError("predict_grid: " + std::to_string(c) + " channels for " +
                         std::to_string(taxonomy.size()) + " classes");
  CodeGrid grid = CodeGrid::filled(w, h);
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  for (std::size_t e = 0; e < hw; ++e) {
    int best = 0;
    float best_v = logits.data[e];
    for (int ci = 1; ci < c; ++ci) {
      const float v = logits.data[static_cast<std::size_t>(ci) * hw + e];
      if (v > best_v) {  // strict: ties stay with the lower index / lower code
        best_v = v;
        best = ci;
      }
    }
    grid.codes[e] = static_cast<std::uint16_t>(taxonomy.code_at(best));
  }
  return grid;
}

CodeGrid predict(Model& model, const Var& x, const ClcTaxonomy& taxonomy) {
  Tape tape;
  CounterRng rng(0);  // unused in eval mode
  auto logits = model.forward(tape, x, /*training=*/false, rng);
  const int c = logits->dim(1), h = logits->dim(2), w = logits->dim(3);
  Tensor single({c, h, w}, std::vector<float>(logits->data.begin(),
                                              logits->data.begin() + logits->size()));
  if (logits->dim(0) != 1)
    throw DimensionError("predict: expected batch of 1, got " + shape_str(logits->shape));
  return predict_grid(single, taxonomy);
}

std::pair<CodeGrid, CodeGrid> project_grids(const CodeGrid& truth, const CodeGrid& pred,
                                            const ClcTaxonomy& taxonomy, int level) {
  if (truth.width != pred.width || truth.height != pred.height)
    throw DimensionError("project_grids: truth and prediction dims differ");
  CodeGrid pt = truth, pp = pred;
  for (std::size_t e = 0; e < pt.codes.size(); ++e) {
    if (pt.codes[e] != 0)
      pt.codes[e] = static_cast<std::uint16_t>(taxonomy.project(pt.codes[e], level));
    if (pp.codes[e] != 0)
      pp.codes[e] = static_cast<std::uint16_t>(taxonomy.project(pp.codes[e], level));
  }
  return {pt, pp};
}

void PairTally::add(const CodeGrid& truth, const CodeGrid& pred) {
  if (truth.width != pred.width || truth.height != pred.height)
    throw DimensionError("tally: truth and prediction dims differ");
  for (std::size_t e = 0; e < truth.codes.size(); ++e) {
    if (truth.codes[e] == 0) continue;  // unlabeled: excluded everywhere
    ++counts[{truth.codes[e], pred.codes[e]}];
    ++total;
  }
}

void PairTally::merge(const PairTally& other) {
  if (level != other.level) throw ParameterError("tally merge: levels differ");
  for (const auto& [key, n] : other.counts) counts[key] += n;
  total += other.total;
}

ConfusionMatrix confusion_from_tally(const PairTally& tally) {
  ConfusionMatrix cm;
  cm.level = tally.level;
  cm.total = tally.total;
  std::set<int> present;
  for (const auto& [key, n] : tally.counts) present.insert(key.first);
  cm.classes.assign(present.begin(), present.end());
  if (cm.classes.empty()) {
    cm.warnings.push_back("no labeled pixels at level " + std::to_string(tally.level));
    return cm;
  }
  const std::size_t r = cm.classes.size();
  cm.counts.assign(r * (r + 1), 0);
  std::map<int, int> col;
  for (std::size_t i = 0; i < r; ++i) col[cm.classes[i]] = static_cast<int>(i);
  for (const auto& [key, n] : tally.counts) {
    const int row = col.at(key.first);
    auto it = col.find(key.second);
    const int column = (it == col.end()) ? static_cast<int>(r) : it->second;  // bucket
    cm.at(row, column) += n;
  }
  return cm;
}

ConfusionMatrix confusion(const CodeGrid& truth, const CodeGrid& pred,
                          const ClcTaxonomy& taxonomy, int level) {
  for (std::uint16_t code : truth.codes)
    if (code != 0 && code >= 100 && !taxonomy.contains(code))
      throw TaxonomyError("confusion: unknown truth code " + std::to_string(code));
  PairTally tally;
  tally.level = level;
  tally.add(truth, pred);
  return confusion_from_tally(tally);
}

LevelReport metrics(const ConfusionMatrix& cm, const ClcTaxonomy& taxonomy) {
  if (cm.total <= 0) throw DataError("metrics: empty confusion matrix");
  LevelReport report;
  report.level = cm.level;
  report.total_pixels = cm.total;

  const std::size_t r = cm.classes.size();
  std::int64_t trace = 0;
  double weighted_f1 = 0.0, macro_f1 = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    ClassMetrics m;
    m.code = cm.classes[i];
    m.name = taxonomy.name_of(m.code);
    std::int64_t tp = cm.at(static_cast<int>(i), static_cast<int>(i));
    std::int64_t row_sum = 0, col_sum = 0;
    for (std::size_t j = 0; j <= r; ++j) row_sum += cm.at(static_cast<int>(i), static_cast<int>(j));
    for (std::size_t j = 0; j < r; ++j) col_sum += cm.at(static_cast<int>(j), static_cast<int>(i));
    m.support = row_sum;
    const std::int64_t fp = col_sum - tp;
    const std::int64_t fn = row_sum - tp;
    m.precision = (tp + fp == 0) ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    m.recall = (tp + fn == 0) ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    m.f1 = (m.precision + m.recall == 0.0)
               ? 0.0
               : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    trace += tp;
    macro_f1 += m.f1;
    weighted_f1 += static_cast<double>(m.support) * m.f1;
    report.classes.push_back(std::move(m));
  }
  report.accuracy = static_cast<double>(trace) / static_cast<double>(cm.total);
  report.f1_macro = r ? macro_f1 / static_cast<double>(r) : 0.0;
  report.f1_weighted = weighted_f1 / static_cast<double>(cm.total);
  // Single-label multiclass: pooled TP = trace and pooled FP = pooled FN =
  // total - trace, so micro precision = micro recall = accuracy.
  report.f1_micro = report.accuracy;
  return report;
}

MetricsReport evaluate_grids(const CodeGrid& truth, const CodeGrid& pred,
                             const ClcTaxonomy& taxonomy) {
  MetricsReport report;
  for (int level = 1; level <= 3; ++level) {
    auto [pt, pp] = project_grids(truth, pred, taxonomy, level);
    report.levels.push_back(metrics(confusion(pt, pp, taxonomy, level), taxonomy));
  }
  return report;
}

MetricsReport report_from_tallies(const std::vector<PairTally>& per_level,
                                  const ClcTaxonomy& taxonomy) {
  MetricsReport report;
  for (const auto& tally : per_level)
    report.levels.push_back(metrics(confusion_from_tally(tally), taxonomy));
  return report;
}

namespace {

std::string dotted_code(int code) {
  std::string digits = std::to_string(code);
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i) out += '.';
    out += digits[i];
  }
  if (digits.size() == 1) out += '.';  // level-1 style: "5. Water bodies"
  return out;
}

std::string format_number(double v) {
  std::ostringstream ss;
  ss.precision(6);
  ss << v;
  return ss.str();
}

}  // namespace

std::string render_text_report(const MetricsReport& report, const ClcTaxonomy& taxonomy) {
  (void)taxonomy;
  std::ostringstream out;
  for (const auto& level : report.levels) {
    out << "CORINE CLASS LEVEL " << level.level << " :\n\n";
    if (level.classes.empty()) {
      out << "(no classes with labeled pixels at this level)\n\n";
      continue;
    }
    std::size_t name_width = 5;
    for (const auto& m : level.classes)
      name_width = std::max(name_width, dotted_code(m.code).size() + m.name.size() + 1);
    out << std::left;
    out.width(static_cast<std::streamsize>(name_width + 2));
    out << "class";
    out << "support      precision    recall\n";
    for (const auto& m : level.classes) {
      out.width(static_cast<std::streamsize>(name_width + 2));
      out << (dotted_code(m.code) + " " + m.name);
      std::string support = std::to_string(m.support);
      out << support << std::string(support.size() < 13 ? 13 - support.size() : 1, ' ');
      std::string precision = format_number(m.precision);
      out << precision << std::string(precision.size() < 13 ? 13 - precision.size() : 1, ' ');
      out << format_number(m.recall) << "\n";
    }
    out << "\n";
    out << "accuracy = " << format_number(level.accuracy) << "\n";
    out << "f1_macro = " << format_number(level.f1_macro) << "\n";
    out << "f1_micro = " << format_number(level.f1_micro) << "\n";
    out << "f1_weighted = " << format_number(level.f1_weighted) << "\n\n";
  }
  return out.str();
}

std::string metrics_json_text(const MetricsReport& report) {
  nlohmann::ordered_json doc;
  doc["levels"] = nlohmann::ordered_json::array();
  for (const auto& level : report.levels) {
    nlohmann::ordered_json l;
    l["level"] = level.level;
    l["total_pixels"] = level.total_pixels;
    l["accuracy"] = level.accuracy;
    l["f1_macro"] = level.f1_macro;
    l["f1_micro"] = level.f1_micro;
    l["f1_weighted"] = level.f1_weighted;
    l["classes"] = nlohmann::ordered_json::array();
    for (const auto& m : level.classes) {
      nlohmann::ordered_json c;
      c["code"] = m.code;
      c["name"] = m.name;
      c["support"] = m.support;
      c["precision"] = m.precision;
      c["recall"] = m.recall;
      c["f1"] = m.f1;
      l["classes"].push_back(std::move(c));
    }
    doc["levels"].push_back(std::move(l));
  }
  return doc.dump(2) + "\n";
}

std::string render_map_ppm_bytes(const CodeGrid& grid, const ClcTaxonomy& taxonomy) {
  std::ostringstream out;
  out << "P6\n" << grid.width << " " << grid.height << "\n255\n";
  for (std::uint16_t code : grid.codes) {
    Rgb color{};  // black for unlabeled
    if (code != 0) color = taxonomy.color_of(code);
    out.put(static_cast<char>(color.r));
    out.put(static_cast<char>(color.g));
    out.put(static_cast<char>(color.b));
  }
  return out.str();
}

void render_map_ppm(const CodeGrid& grid, const ClcTaxonomy& taxonomy, const std::string& path) {
  const std::string bytes = render_map_ppm_bytes(grid, taxonomy);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write map: " + path);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("short write to map: " + path);
}

CodeGrid parse_ppm_to_codes(const std::string& path, const ClcTaxonomy& taxonomy) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open map: " + path);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  f >> magic >> w >> h >> maxval;
  if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255)
    throw FormatError(path + ": not a P6/255 PPM header",
                      static_cast<long>(f.tellg()));
  f.get();  // single whitespace after the header

  std::map<std::uint32_t, std::uint16_t> by_color;
  for (const auto& cls : taxonomy.classes()) {
    const std::uint32_t key = (static_cast<std::uint32_t>(cls.color.r) << 16) |
                              (static_cast<std::uint32_t>(cls.color.g) << 8) | cls.color.b;
    by_color[key] = static_cast<std::uint16_t>(cls.code3);
  }

  CodeGrid grid = CodeGrid::filled(w, h);
  std::vector<char> raw(static_cast<std::size_t>(w) * h * 3);
  f.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (!f) throw FormatError(path + ": truncated pixel data", static_cast<long>(f.tellg()));
  for (std::size_t e = 0; e < grid.codes.size(); ++e) {
    const auto r = static_cast<std::uint8_t>(raw[3 * e]);
    const auto g = static_cast<std::uint8_t>(raw[3 * e + 1]);
    const auto b = static_cast<std::uint8_t>(raw[3 * e + 2]);
    if (r == 0 && g == 0 && b == 0) continue;
    const std::uint32_t key =
        (static_cast<std::uint32_t>(r) << 16) | (static_cast<std::uint32_t>(g) << 8) | b;
    auto it = by_color.find(key);
    if (it == by_color.end())
      throw FormatError(path + ": pixel color not in the legend", static_cast<long>(3 * e));
    grid.codes[e] = it->second;
  }
  return grid;
}

void save_code_grid(const CodeGrid& grid, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write grid: " + path);
  f.write(reinterpret_cast<const char*>(grid.codes.data()),
          static_cast<std::streamsize>(grid.codes.size() * sizeof(std::uint16_t)));
}

CodeGrid load_code_grid(const std::string& path, int width, int height) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) throw IoError("cannot open grid: " + path);
  const auto bytes = static_cast<std::size_t>(f.tellg());
  const std::size_t expect = static_cast<std::size_t>(width) * height * sizeof(std::uint16_t);
  if (bytes != expect)
    throw FormatError(path + ": expected " + std::to_string(expect) + " bytes",
                      static_cast<long>(bytes));
  f.seekg(0);
  CodeGrid grid = CodeGrid::filled(width, height);
  f.read(reinterpret_cast<char*>(grid.codes.data()), static_cast<std::streamsize>(bytes));
  return grid;
}

EvaluationResult evaluate_model(Model& model, const AreaStore& store,
                                const std::vector<PatchRef>& refs, const BandStats& stats,
                                const ClcTaxonomy& taxonomy) {
  EvaluationResult result;
  std::vector<PairTally> tallies(3);
  for (int level = 1; level <= 3; ++level) tallies[static_cast<std::size_t>(level - 1)].level =
      level;

  std::map<std::string, std::size_t> map_index;
  const bool pooled = model.output_size() != kPatchSize;
  const int scale = pooled ? 10 : 1;
  const int offset = pooled ? (kPatchSize - model.input_size()) / 2 : 0;

  for (const auto& ref : refs) {
    auto patch = materialize(store, ref, stats);
    auto batch = prepare_batch(model, {patch}, taxonomy);
    CodeGrid pred = predict(model, batch.x, taxonomy);
    CodeGrid truth;
    truth.width = model.output_size();
    truth.height = model.output_size();
    truth.codes = batch.label_grids.front();

    for (int level = 1; level <= 3; ++level) {
      auto [pt, pp] = project_grids(truth, pred, taxonomy, level);
      tallies[static_cast<std::size_t>(level - 1)].add(pt, pp);
    }

    // Stitch into per-area maps (pooled predictions paint 10x10 blocks).
    auto it = map_index.find(ref.area_id);
    if (it == map_index.end()) {
      const AreaRaster& area = store.at(ref.area_id);
      AreaMaps maps;
      maps.area_id = ref.area_id;
      maps.truth = CodeGrid::filled(area.width, area.height);
      maps.pred = CodeGrid::filled(area.width, area.height);
      it = map_index.emplace(ref.area_id, result.maps.size()).first;
      result.maps.push_back(std::move(maps));
    }
    AreaMaps& maps = result.maps[it->second];
    for (int r = 0; r < truth.height; ++r) {
      for (int c = 0; c < truth.width; ++c) {
        for (int dr = 0; dr < scale; ++dr) {
          for (int dc = 0; dc < scale; ++dc) {
            const int ar = ref.row + offset + r * scale + dr;
            const int ac = ref.col + offset + c * scale + dc;
            maps.truth.at(ar, ac) = truth.at(r, c);
            maps.pred.at(ar, ac) = pred.at(r, c);
          }
        }
      }
    }
  }
  result.report = report_from_tallies(tallies, taxonomy);
  return result;
}

}  // namespace lcs
