#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "lcs/raster.hpp"

namespace lcs {

inline constexpr int kMinSynthSize = 128;

// Desk-scale stand-in for Sentinel-2 + CLC rasters: a Voronoi partition of
// taxonomy classes, one distinct band signature per class, Gaussian noise,
// a sea (523) margin and a thin unlabeled edge strip.
struct SynthSpec {
  int width = 256;
  int height = 256;
  std::uint64_t seed = 0;
  double noise_sigma = 0.1;
  int sites = 0;        // 0 = choose from the area size
  int sea_margin = 32;  // 10 m pixels of 523 along the border
  int nodata_edge = 2;  // 10 m pixels of label 0 at the very edge
};

// The noise-free band values every pixel of class `class_index` emits.
// Bands 0-4 carry the bits of the index, bands 5-9 their complements, so any
// two classes differ in at least two bands.
std::array<float, AreaRaster::kNumBands> class_signature(int class_index);

AreaRaster generate_synthetic_area(const std::string& area_id, const SynthSpec& spec,
                                   const ClcTaxonomy& taxonomy = default_taxonomy());

}  // namespace lcs
