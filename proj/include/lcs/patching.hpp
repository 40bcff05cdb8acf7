#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lcs/raster.hpp"
#include "lcs/tensor.hpp"

namespace lcs {

inline constexpr int kPatchSize = 128;

// Lazy window reference; pixels are only read at materialization time.
struct PatchRef {
  std::string area_id;
  int row = 0;
  int col = 0;
  int size = kPatchSize;

  bool operator==(const PatchRef&) const = default;
};

// Offsets {0, hop, 2*hop, ...} on both axes; windows that would extend past
// the raster edge are dropped. A raster smaller than the patch yields an
// empty list.
std::vector<PatchRef> cut_patches(const AreaRaster& area, int patch = kPatchSize, int hop = 64);

// Removes every patch whose labels are all sea (523) or unlabeled (0).
std::vector<PatchRef> discard_sea_only(const std::vector<PatchRef>& patches,
                                       const AreaRaster& area, int sea_code = 523);
std::vector<PatchRef> discard_sea_only(const std::vector<PatchRef>& patches,
                                       const AreaStore& store, int sea_code = 523);

// The eight square symmetries. Indices 0..3 are rotations by 0/90/180/270
// degrees; 4..7 apply a horizontal mirror first, then the rotation.
enum class D4 : int {
  identity = 0,
  rot90 = 1,
  rot180 = 2,
  rot270 = 3,
  flip = 4,
  flip_rot90 = 5,
  flip_rot180 = 6,
  flip_rot270 = 7,
};

// Destination of source pixel (r, c) on an n x n grid.
std::pair<int, int> d4_apply(D4 t, int r, int c, int n);

// compose(a, b): apply a first, then b.
D4 compose(D4 a, D4 b);

struct AugmentSpec {
  enum class Mode { none, fixed, random } mode = Mode::none;
  D4 fixed = D4::identity;

  static AugmentSpec none() { return {}; }
  static AugmentSpec with(D4 t) { return {Mode::fixed, t}; }
  static AugmentSpec random() { return {Mode::random, D4::identity}; }
};

struct Patch {
  Tensor x;                           // kNumBands x size x size, standardized
  std::vector<std::uint16_t> labels;  // size * size, same transform as x
  D4 applied = D4::identity;
};

// Cuts the window, standardizes each band with (v - mean) / std, and applies
// one D4 element to bands and labels alike. Pure function of its arguments:
// random mode draws the element from a CounterRng seeded with `seed`.
Patch materialize(const AreaStore& store, const PatchRef& ref, const BandStats& stats,
                  const AugmentSpec& augment = AugmentSpec::none(), std::uint64_t seed = 0);

// Named, ordered area groups for cross-validation.
struct FoldPlan {
  std::vector<std::pair<std::string, std::vector<std::string>>> groups;

  std::size_t size() const { return groups.size(); }
  std::vector<std::string> all_areas() const;
  void validate() const;  // groups pairwise disjoint
};

// The paper's six Ionian groups, one area id per group.
FoldPlan default_fold_plan();

FoldPlan fold_plan_from_json_text(const std::string& text);
FoldPlan load_fold_plan(const std::string& path);

// Group k (1-based) becomes validation; the union of the rest is training.
std::pair<std::vector<std::string>, std::vector<std::string>> split_folds(const FoldPlan& plan,
                                                                          int k);

// Deterministic shuffle then a ceil(ratio * n) prefix as training set.
// Requires non-overlapping refs (hop >= patch size when cutting).
std::pair<std::vector<PatchRef>, std::vector<PatchRef>> random_split(
    const std::vector<PatchRef>& patches, double ratio = 0.70, std::uint64_t seed = 0);

}  // namespace lcs
