#include "lcs/patching.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lcs/rng.hpp"

namespace lcs {

std::vector<PatchRef> cut_patches(const AreaRaster& area, int patch, int hop) {
  if (hop < 1) throw ParameterError("cut_patches: hop must be >= 1");
  if (patch < 1) throw ParameterError("cut_patches: patch must be >= 1");
  std::vector<PatchRef> refs;
  if (patch > area.height || patch > area.width) return refs;
  for (int r = 0; r + patch <= area.height; r += hop)
    for (int c = 0; c + patch <= area.width; c += hop)
      refs.push_back(PatchRef{area.area_id, r, c, patch});
  return refs;
}

namespace {

bool is_sea_only(const PatchRef& ref, const AreaRaster& area, int sea_code) {
  for (int r = ref.row; r < ref.row + ref.size; ++r) {
    for (int c = ref.col; c < ref.col + ref.size; ++c) {
      const std::uint16_t code = area.label_at(r, c);
      if (code != 0 && code != sea_code) return false;
    }
  }
  return true;
}

}  // namespace

std::vector<PatchRef> discard_sea_only(const std::vector<PatchRef>& patches,
                                       const AreaRaster& area, int sea_code) {
  std::vector<PatchRef> kept;
  for (const auto& ref : patches) {
    if (ref.area_id != area.area_id)
      throw LookupError("discard_sea_only: patch references area " + ref.area_id +
                        ", expected " + area.area_id);
    if (!is_sea_only(ref, area, sea_code)) kept.push_back(ref);
  }
  return kept;
}

std::vector<PatchRef> discard_sea_only(const std::vector<PatchRef>& patches,
                                       const AreaStore& store, int sea_code) {
  std::vector<PatchRef> kept;
  for (const auto& ref : patches)
    if (!is_sea_only(ref, store.at(ref.area_id), sea_code)) kept.push_back(ref);
  return kept;
}

std::pair<int, int> d4_apply(D4 t, int r, int c, int n) {
  const int m = n - 1;
  if (static_cast<int>(t) >= 4) c = m - c;  // mirror first
  switch (static_cast<int>(t) % 4) {
    case 0: return {r, c};
    case 1: return {c, m - r};
    case 2: return {m - r, m - c};
    default: return {m - c, r};
  }
}

D4 compose(D4 a, D4 b) {
  // Identify the composite by where it sends two probe points on a 5x5 grid.
  const int n = 5;
  auto p1 = d4_apply(a, 0, 1, n);
  p1 = d4_apply(b, p1.first, p1.second, n);
  auto p2 = d4_apply(a, 1, 2, n);
  p2 = d4_apply(b, p2.first, p2.second, n);
  for (int t = 0; t < 8; ++t) {
    if (d4_apply(static_cast<D4>(t), 0, 1, n) == p1 &&
        d4_apply(static_cast<D4>(t), 1, 2, n) == p2)
      return static_cast<D4>(t);
  }
  throw ParameterError("compose: D4 closure violated");  // unreachable
}

Patch materialize(const AreaStore& store, const PatchRef& ref, const BandStats& stats,
                  const AugmentSpec& augment, std::uint64_t seed) {
  const AreaRaster& area = store.at(ref.area_id);
  if (ref.row < 0 || ref.col < 0 || ref.row + ref.size > area.height ||
      ref.col + ref.size > area.width)
    throw DataError("materialize: patch (" + std::to_string(ref.row) + "," +
                    std::to_string(ref.col) + ") exceeds area " + ref.area_id);

  D4 transform = D4::identity;
  if (augment.mode == AugmentSpec::Mode::fixed) {
    transform = augment.fixed;
  } else if (augment.mode == AugmentSpec::Mode::random) {
    CounterRng rng(seed);
    transform = static_cast<D4>(rng.below(8));
  }

  const int n = ref.size;
  Patch patch;
  patch.applied = transform;
  patch.x = Tensor::zeros({AreaRaster::kNumBands, n, n});
  patch.labels.assign(static_cast<std::size_t>(n) * n, 0);

  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const auto [tr, tc] = d4_apply(transform, r, c, n);
      const std::size_t dst = static_cast<std::size_t>(tr) * n + tc;
      patch.labels[dst] = area.label_at(ref.row + r, ref.col + c);
      for (int b = 0; b < AreaRaster::kNumBands; ++b) {
        const float v = area.band_at(b, ref.row + r, ref.col + c);
        patch.x.data[static_cast<std::size_t>(b) * n * n + dst] =
            (v - stats.means[b]) / stats.stds[b];
      }
    }
  }
  return patch;
}

std::vector<std::string> FoldPlan::all_areas() const {
  std::vector<std::string> out;
  for (const auto& [name, ids] : groups) out.insert(out.end(), ids.begin(), ids.end());
  return out;
}

void FoldPlan::validate() const {
  std::set<std::string> seen;
  for (const auto& [name, ids] : groups) {
    if (ids.empty()) throw ConfigError("fold plan group '" + name + "' is empty");
    for (const auto& id : ids)
      if (!seen.insert(id).second)
        throw ConfigError("fold plan: area '" + id + "' appears in more than one group");
  }
}

FoldPlan default_fold_plan() {
  FoldPlan plan;
  for (const char* name : {"north_corfu", "south_corfu", "west_kefalonia", "east_kefalonia",
                           "lefkada", "paxi_north_zante_kalamos_parga"})
    plan.groups.emplace_back(name, std::vector<std::string>{name});
  return plan;
}

FoldPlan fold_plan_from_json_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("fold plan JSON: ") + e.what(), static_cast<long>(e.byte));
  }
  if (!doc.is_object()) throw FormatError("fold plan JSON: expected an object of groups");
  FoldPlan plan;
  for (const auto& [name, ids] : doc.items())
    plan.groups.emplace_back(name, ids.get<std::vector<std::string>>());
  plan.validate();
  return plan;
}

FoldPlan load_fold_plan(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open fold plan: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return fold_plan_from_json_text(ss.str());
}

std::pair<std::vector<std::string>, std::vector<std::string>> split_folds(const FoldPlan& plan,
                                                                          int k) {
  if (k < 1 || k > static_cast<int>(plan.size()))
    throw ParameterError("split_folds: fold " + std::to_string(k) + " out of range 1.." +
                         std::to_string(plan.size()));
  std::vector<std::string> train;
  std::vector<std::string> validation;
  for (std::size_t g = 0; g < plan.groups.size(); ++g) {
    const auto& ids = plan.groups[g].second;
    auto& dst = (static_cast<int>(g) + 1 == k) ? validation : train;
    dst.insert(dst.end(), ids.begin(), ids.end());
  }
  return {train, validation};
}

std::pair<std::vector<PatchRef>, std::vector<PatchRef>> random_split(
    const std::vector<PatchRef>& patches, double ratio, std::uint64_t seed) {
  if (ratio <= 0.0 || ratio >= 1.0)
    throw ParameterError("random_split: ratio must be in (0, 1)");

  // Guard the no-common-elements promise: reject overlapping windows.
  std::map<std::string, std::vector<const PatchRef*>> by_area;
  for (const auto& ref : patches) by_area[ref.area_id].push_back(&ref);
  for (auto& [id, refs] : by_area) {
    std::sort(refs.begin(), refs.end(), [](const PatchRef* a, const PatchRef* b) {
      return std::tie(a->row, a->col) < std::tie(b->row, b->col);
    });
    for (std::size_t i = 0; i < refs.size(); ++i) {
      for (std::size_t j = i + 1; j < refs.size(); ++j) {
        const PatchRef &a = *refs[i], &b = *refs[j];
        if (b.row >= a.row + a.size) break;  // sorted by row: no later overlap with a
        if (std::abs(a.row - b.row) < std::max(a.size, b.size) &&
            std::abs(a.col - b.col) < std::max(a.size, b.size))
          throw ParameterError("random_split: overlapping patches at " + id + " (" +
                               std::to_string(a.row) + "," + std::to_string(a.col) + ") and (" +
                               std::to_string(b.row) + "," + std::to_string(b.col) + ")");
      }
    }
  }

  std::vector<PatchRef> shuffled = patches;
  CounterRng rng(seed);
  for (std::size_t i = shuffled.size(); i > 1; --i)
    std::swap(shuffled[i - 1], shuffled[rng.below(static_cast<std::uint32_t>(i))]);

  const auto n_train = static_cast<std::size_t>(
      std::ceil(ratio * static_cast<double>(shuffled.size())));
  std::vector<PatchRef> train(shuffled.begin(), shuffled.begin() + n_train);
  std::vector<PatchRef> validation(shuffled.begin() + n_train, shuffled.end());
  return {train, validation};
}

}  // namespace lcs
