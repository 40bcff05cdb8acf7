#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lcs/taxonomy.hpp"
#include "lcs/tensor.hpp"

namespace lcs {

// One geographic area: 10 bands on the 10 m grid (band-sequential, row-major)
// plus a level-3 CLC label per pixel (0 = unlabeled / nodata).
struct AreaRaster {
  static constexpr int kNumBands = 10;

  std::string area_id;
  int width = 0;
  int height = 0;
  std::vector<std::string> band_names;  // kNumBands entries
  std::vector<float> bands;             // kNumBands * height * width
  std::vector<std::uint16_t> labels;    // height * width

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  float band_at(int b, int r, int c) const {
    return bands[(static_cast<std::size_t>(b) * height + r) * width + c];
  }
  std::uint16_t label_at(int r, int c) const {
    return labels[static_cast<std::size_t>(r) * width + c];
  }

  void validate(const ClcTaxonomy& taxonomy) const;
};

// R,G,B,NIR at native 10 m; the six 20 m bands resampled.
const std::vector<std::string>& default_band_names();

// Area directory format: header.json + bands.bin (little-endian float32,
// band-sequential) + labels.bin (little-endian uint16, row-major).
void save_area(const AreaRaster& area, const std::string& dir);
AreaRaster load_area(const std::string& dir);

// Nearest-neighbor 20 m -> 10 m: each source pixel becomes a 2x2 block.
// target dims must be exactly double the source dims.
std::vector<float> resample_20m(const std::vector<float>& band20, int h20, int w20, int target_h,
                                int target_w);

struct BandStats {
  std::array<float, AreaRaster::kNumBands> means{};
  std::array<float, AreaRaster::kNumBands> stds{};
};

class AreaStore {
 public:
  void add(AreaRaster area);
  bool contains(const std::string& id) const { return areas_.count(id) != 0; }
  const AreaRaster& at(const std::string& id) const;
  std::vector<std::string> ids() const;
  std::size_t size() const { return areas_.size(); }

  // Loads each listed id as a subdirectory of root.
  static AreaStore load(const std::string& root, const std::vector<std::string>& area_ids);

 private:
  std::map<std::string, AreaRaster> areas_;
};

// Per-band mean and population std over the labeled (non-nodata) pixels of
// the listed areas; std floored at 1e-6. Deterministic two-pass computation.
BandStats compute_stats(const AreaStore& store, const std::vector<std::string>& area_ids);

// Stats file: JSON {"means": [10], "stds": [10]}.
void save_stats(const BandStats& stats, const std::string& path);
BandStats load_stats(const std::string& path);

}  // namespace lcs
