#include "lcs/synth.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "lcs/rng.hpp"

namespace lcs {

std::array<float, AreaRaster::kNumBands> class_signature(int class_index) {
  std::array<float, AreaRaster::kNumBands> sig{};
  for (int b = 0; b < 5; ++b) {
    const int bit = (class_index >> b) & 1;
    sig[b] = 0.2f + 0.6f * static_cast<float>(bit);
    sig[b + 5] = 0.2f + 0.6f * static_cast<float>(1 - bit);
  }
  return sig;
}

AreaRaster generate_synthetic_area(const std::string& area_id, const SynthSpec& spec,
                                   const ClcTaxonomy& taxonomy) {
  if (spec.width < kMinSynthSize || spec.height < kMinSynthSize)
    throw ParameterError("synthetic area must be at least " + std::to_string(kMinSynthSize) +
                         " pixels per side, got " + shape_str({spec.height, spec.width}));
  if (spec.width % 2 != 0 || spec.height % 2 != 0)
    throw ParameterError("synthetic area dimensions must be even (20 m band grid), got " +
                         shape_str({spec.height, spec.width}));
  if (!taxonomy.contains(523))
    throw TaxonomyError("synthetic generator needs sea class 523 in the taxonomy");

  const int h = spec.height, w = spec.width;
  const int h2 = h / 2, w2 = w / 2;
  const int margin2 = std::max(0, spec.sea_margin / 2);
  CounterRng rng(spec.seed);

  // Voronoi sites on the 20 m grid, interior only, each with a non-sea class.
  int n_sites = spec.sites;
  if (n_sites <= 0) n_sites = std::clamp(h2 * w2 / 1024, 4, 64);
  const int sea_index = taxonomy.index_of(523);
  const int n_classes = static_cast<int>(taxonomy.size());
  struct Site {
    int r, c, class_index;
  };
  std::vector<Site> sites;
  sites.reserve(static_cast<std::size_t>(n_sites));
  const int lo_r = margin2, hi_r = h2 - margin2;
  const int lo_c = margin2, hi_c = w2 - margin2;
  for (int s = 0; s < n_sites; ++s) {
    Site site;
    site.r = lo_r + static_cast<int>(rng.below(static_cast<std::uint32_t>(hi_r - lo_r)));
    site.c = lo_c + static_cast<int>(rng.below(static_cast<std::uint32_t>(hi_c - lo_c)));
    do {
      site.class_index = static_cast<int>(rng.below(static_cast<std::uint32_t>(n_classes)));
    } while (site.class_index == sea_index);
    sites.push_back(site);
  }

  // Class index per 20 m cell: sea ring, otherwise nearest site (ties to the
  // earliest site).
  std::vector<int> class20(static_cast<std::size_t>(h2) * w2);
  for (int r = 0; r < h2; ++r) {
    for (int c = 0; c < w2; ++c) {
      const bool in_sea = r < margin2 || c < margin2 || r >= h2 - margin2 || c >= w2 - margin2;
      int ci = sea_index;
      if (!in_sea) {
        long best = -1;
        for (const auto& s : sites) {
          const long dr = r - s.r, dc = c - s.c;
          const long d = dr * dr + dc * dc;
          if (best < 0 || d < best) {
            best = d;
            ci = s.class_index;
          }
        }
      }
      class20[static_cast<std::size_t>(r) * w2 + c] = ci;
    }
  }

  AreaRaster area;
  area.area_id = area_id;
  area.width = w;
  area.height = h;
  area.band_names = default_band_names();
  area.bands.resize(static_cast<std::size_t>(AreaRaster::kNumBands) * h * w);
  area.labels.assign(static_cast<std::size_t>(h) * w, 0);

  // Labels: nearest-upsampled class grid, with the outer strip unlabeled.
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (r < spec.nodata_edge || c < spec.nodata_edge || r >= h - spec.nodata_edge ||
          c >= w - spec.nodata_edge)
        continue;
      const int ci = class20[static_cast<std::size_t>(r / 2) * w2 + c / 2];
      area.labels[static_cast<std::size_t>(r) * w + c] =
          static_cast<std::uint16_t>(taxonomy.code_at(ci));
    }
  }

  // 10 m bands directly, 20 m bands on the half grid then block-duplicated.
  for (int b = 0; b < 4; ++b) {
    float* dst = area.bands.data() + static_cast<std::size_t>(b) * h * w;
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const int ci = class20[static_cast<std::size_t>(r / 2) * w2 + c / 2];
        dst[static_cast<std::size_t>(r) * w + c] =
            class_signature(ci)[b] +
            static_cast<float>(spec.noise_sigma * rng.normal());
      }
    }
  }
  for (int b = 4; b < AreaRaster::kNumBands; ++b) {
    std::vector<float> band20(static_cast<std::size_t>(h2) * w2);
    for (std::size_t p = 0; p < band20.size(); ++p)
      band20[p] = class_signature(class20[p])[b] +
                  static_cast<float>(spec.noise_sigma * rng.normal());
    auto band10 = resample_20m(band20, h2, w2, h, w);
    std::copy(band10.begin(), band10.end(),
              area.bands.begin() + static_cast<std::size_t>(b) * h * w);
  }
  return area;
}

}  // namespace lcs
