#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "lcs/patching.hpp"
#include "lcs/raster.hpp"
#include "lcs/rng.hpp"
#include "lcs/synth.hpp"

using namespace lcs;

namespace {

AreaRaster flat_area(const std::string& id, int w, int h, float band_value,
                     std::uint16_t label) {
  AreaRaster area;
  area.area_id = id;
  area.width = w;
  area.height = h;
  area.band_names = default_band_names();
  area.bands.assign(static_cast<std::size_t>(AreaRaster::kNumBands) * w * h, band_value);
  area.labels.assign(static_cast<std::size_t>(w) * h, label);
  return area;
}

BandStats unit_stats() {
  BandStats stats;
  stats.means.fill(0.0f);
  stats.stds.fill(1.0f);
  return stats;
}

std::string temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("lcs_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f);
  return std::string(std::istreambuf_iterator<char>(f), {});
}

}  // namespace

TEST_CASE("cut_patches grid geometry") {
  auto area = flat_area("a", 256, 256, 0.0f, 111);
  CHECK(cut_patches(area, 128, 64).size() == 9);

  area = flat_area("a", 128, 128, 0.0f, 111);
  auto one = cut_patches(area, 128, 64);
  REQUIRE(one.size() == 1);
  CHECK(one[0].row == 0);
  CHECK(one[0].col == 0);

  area = flat_area("a", 300, 300, 0.0f, 111);
  auto nine = cut_patches(area, 128, 64);
  CHECK(nine.size() == 9);
  std::set<int> offsets;
  for (const auto& ref : nine) offsets.insert(ref.row);
  CHECK(offsets == std::set<int>{0, 64, 128});  // 192 + 128 > 300 dropped

  area = flat_area("a", 100, 100, 0.0f, 111);
  CHECK(cut_patches(area, 128, 64).empty());
}

TEST_CASE("cut_patches count matches the closed-form formula") {
  CounterRng rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    const int h = 128 + static_cast<int>(rng.below(300));
    const int w = 128 + static_cast<int>(rng.below(300));
    const int hop = 1 + static_cast<int>(rng.below(160));
    auto area = flat_area("a", w, h, 0.0f, 111);
    const auto count = cut_patches(area, 128, hop).size();
    const std::size_t expect = static_cast<std::size_t>((h - 128) / hop + 1) *
                               static_cast<std::size_t>((w - 128) / hop + 1);
    CHECK(count == expect);
  }
}

TEST_CASE("discard_sea_only drops exactly the all-sea/all-unlabeled patches") {
  auto area = flat_area("a", 256, 128, 0.0f, 523);
  // left patch pure sea; right patch gets one urban pixel
  area.labels[static_cast<std::size_t>(10) * 256 + 130] = 112;
  auto refs = cut_patches(area, 128, 128);
  REQUIRE(refs.size() == 2);
  auto kept = discard_sea_only(refs, area);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].col == 128);

  auto unlabeled = flat_area("b", 128, 128, 0.0f, 0);
  auto refs2 = cut_patches(unlabeled, 128, 128);
  CHECK(discard_sea_only(refs2, unlabeled).empty());

  // mixed sea + unlabeled still carries no signal
  auto mixed = flat_area("c", 128, 128, 0.0f, 523);
  for (int c = 0; c < 128; ++c) mixed.labels[c] = 0;
  auto refs3 = cut_patches(mixed, 128, 128);
  CHECK(discard_sea_only(refs3, mixed).empty());
}

TEST_CASE("resample_20m duplicates each source pixel into a 2x2 block") {
  std::vector<float> src{1, 2, 3, 4};
  auto out = resample_20m(src, 2, 2, 4, 4);
  CHECK(out == std::vector<float>{1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4});

  auto constant = resample_20m(std::vector<float>(4, 2.5f), 2, 2, 4, 4);
  for (float v : constant) CHECK(v == 2.5f);

  double sum_src = 1 + 2 + 3 + 4;
  double sum_out = 0;
  for (float v : out) sum_out += v;
  CHECK(sum_out == doctest::Approx(4.0 * sum_src));

  CHECK_THROWS_AS(resample_20m(src, 2, 2, 5, 4), DimensionError);
}

TEST_CASE("compute_stats handles degenerate and tiny inputs") {
  AreaStore store;
  store.add(flat_area("a", 128, 128, 5.0f, 111));
  auto stats = compute_stats(store, {"a"});
  for (int b = 0; b < AreaRaster::kNumBands; ++b) {
    CHECK(stats.means[b] == doctest::Approx(5.0f));
    CHECK(stats.stds[b] == doctest::Approx(1e-6f));  // floor
  }

  auto two = flat_area("b", 128, 128, 0.0f, 0);  // everything unlabeled...
  two.labels[0] = 111;                           // ...except two pixels
  two.labels[1] = 111;
  for (int b = 0; b < AreaRaster::kNumBands; ++b)
    two.bands[static_cast<std::size_t>(b) * two.pixel_count() + 1] = 2.0f;
  AreaStore store2;
  store2.add(std::move(two));
  auto stats2 = compute_stats(store2, {"b"});
  for (int b = 0; b < AreaRaster::kNumBands; ++b) {
    CHECK(stats2.means[b] == doctest::Approx(1.0f));
    CHECK(stats2.stds[b] == doctest::Approx(1.0f));  // population std
  }

  CHECK_THROWS_AS(compute_stats(store, {}), DataError);
  AreaStore empty_labels;
  empty_labels.add(flat_area("c", 128, 128, 1.0f, 0));
  CHECK_THROWS_AS(compute_stats(empty_labels, {"c"}), DataError);
}

TEST_CASE("compute_stats matches a brute-force two-pass oracle") {
  SynthSpec spec;
  spec.width = 128;
  spec.height = 128;
  spec.seed = 5;
  spec.noise_sigma = 0.2;
  AreaStore store;
  store.add(generate_synthetic_area("a", spec));
  auto stats = compute_stats(store, {"a"});

  const AreaRaster& area = store.at("a");
  for (int b = 0; b < AreaRaster::kNumBands; ++b) {
    double sum = 0;
    std::size_t n = 0;
    for (std::size_t p = 0; p < area.pixel_count(); ++p) {
      if (area.labels[p] == 0) continue;
      sum += area.bands[b * area.pixel_count() + p];
      ++n;
    }
    const double mean = sum / static_cast<double>(n);
    double sq = 0;
    for (std::size_t p = 0; p < area.pixel_count(); ++p) {
      if (area.labels[p] == 0) continue;
      const double d = area.bands[b * area.pixel_count() + p] - mean;
      sq += d * d;
    }
    const double sd = std::sqrt(sq / static_cast<double>(n));
    CHECK(stats.means[b] == doctest::Approx(mean).epsilon(1e-6));
    CHECK(stats.stds[b] == doctest::Approx(sd).epsilon(1e-6));
  }
}

TEST_CASE("D4 group closure and label histogram preservation") {
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b)
      CHECK_NOTHROW(compose(static_cast<D4>(a), static_cast<D4>(b)));

  // composing an element with itself four times (rotations) returns home
  CHECK(compose(D4::rot90, D4::rot270) == D4::identity);
  CHECK(compose(D4::flip, D4::flip) == D4::identity);

  SynthSpec spec;
  spec.width = 128;
  spec.height = 128;
  spec.seed = 3;
  AreaStore store;
  store.add(generate_synthetic_area("a", spec));
  const auto refs = cut_patches(store.at("a"), 128, 128);
  REQUIRE(!refs.empty());

  auto histogram = [](const std::vector<std::uint16_t>& labels) {
    std::map<std::uint16_t, int> h;
    for (auto v : labels) ++h[v];
    return h;
  };
  const auto base = materialize(store, refs[0], unit_stats());
  for (int t = 0; t < 8; ++t) {
    const auto moved =
        materialize(store, refs[0], unit_stats(), AugmentSpec::with(static_cast<D4>(t)));
    CHECK(histogram(moved.labels) == histogram(base.labels));
  }
}

TEST_CASE("materialize applies the transform consistently to bands and labels") {
  auto area = flat_area("a", 128, 128, 0.0f, 523);
  // single marked pixel at (r, c) = (3, 10)
  area.labels[static_cast<std::size_t>(3) * 128 + 10] = 112;
  area.bands[static_cast<std::size_t>(3) * 128 + 10] = 9.0f;  // band 0
  AreaStore store;
  store.add(std::move(area));
  const PatchRef ref{"a", 0, 0, 128};

  auto rotated = materialize(store, ref, unit_stats(), AugmentSpec::with(D4::rot90));
  // (r, c) -> (c, 127 - r)
  CHECK(rotated.labels[static_cast<std::size_t>(10) * 128 + (127 - 3)] == 112);
  CHECK(rotated.x.data[static_cast<std::size_t>(10) * 128 + (127 - 3)] == 9.0f);

  auto identity = materialize(store, ref, unit_stats());
  CHECK(identity.labels[static_cast<std::size_t>(3) * 128 + 10] == 112);
  CHECK(identity.x.data[static_cast<std::size_t>(3) * 128 + 10] == 9.0f);
}

TEST_CASE("identity materialization with unit stats reproduces raw bands") {
  SynthSpec spec;
  spec.width = 128;
  spec.height = 128;
  spec.seed = 9;
  AreaStore store;
  store.add(generate_synthetic_area("a", spec));
  const AreaRaster& area = store.at("a");
  auto patch = materialize(store, PatchRef{"a", 0, 0, 128}, unit_stats());
  for (int b = 0; b < AreaRaster::kNumBands; ++b)
    for (int r = 0; r < 128; ++r)
      for (int c = 0; c < 128; ++c)
        REQUIRE(patch.x.data[(static_cast<std::size_t>(b) * 128 + r) * 128 + c] ==
                area.band_at(b, r, c));
}

TEST_CASE("standardization is invertible") {
  SynthSpec spec;
  spec.width = 128;
  spec.height = 128;
  spec.seed = 21;
  AreaStore store;
  store.add(generate_synthetic_area("a", spec));
  auto stats = compute_stats(store, {"a"});
  auto patch = materialize(store, PatchRef{"a", 0, 0, 128}, stats);
  const AreaRaster& area = store.at("a");
  for (int b = 0; b < AreaRaster::kNumBands; ++b)
    for (int r = 0; r < 128; r += 7)
      for (int c = 0; c < 128; c += 7) {
        const float x = patch.x.data[(static_cast<std::size_t>(b) * 128 + r) * 128 + c];
        CHECK(x * stats.stds[b] + stats.means[b] ==
              doctest::Approx(area.band_at(b, r, c)).epsilon(1e-5));
      }
}

TEST_CASE("lazy materialization equals eager up-front cutting bitwise") {
  SynthSpec spec;
  spec.width = 256;
  spec.height = 192;
  spec.seed = 14;
  AreaStore store;
  store.add(generate_synthetic_area("big", spec));
  const AreaRaster& area = store.at("big");
  auto stats = compute_stats(store, {"big"});

  for (const auto& ref : cut_patches(area, 128, 64)) {
    // eager: copy the window into its own raster, then materialize at (0,0)
    AreaRaster eager;
    eager.area_id = "window";
    eager.width = 128;
    eager.height = 128;
    eager.band_names = area.band_names;
    eager.bands.resize(static_cast<std::size_t>(AreaRaster::kNumBands) * 128 * 128);
    eager.labels.resize(static_cast<std::size_t>(128) * 128);
    for (int r = 0; r < 128; ++r) {
      for (int c = 0; c < 128; ++c) {
        eager.labels[static_cast<std::size_t>(r) * 128 + c] =
            area.label_at(ref.row + r, ref.col + c);
        for (int b = 0; b < AreaRaster::kNumBands; ++b)
          eager.bands[(static_cast<std::size_t>(b) * 128 + r) * 128 + c] =
              area.band_at(b, ref.row + r, ref.col + c);
      }
    }
    AreaStore eager_store;
    eager_store.add(std::move(eager));

    const auto lazy_patch = materialize(store, ref, stats);
    const auto eager_patch = materialize(eager_store, PatchRef{"window", 0, 0, 128}, stats);
    REQUIRE(lazy_patch.x.data == eager_patch.x.data);
    REQUIRE(lazy_patch.labels == eager_patch.labels);
  }
}

TEST_CASE("materialize is pure and errors on bad refs") {
  SynthSpec spec;
  spec.width = 128;
  spec.height = 128;
  spec.seed = 4;
  AreaStore store;
  store.add(generate_synthetic_area("a", spec));
  auto one = materialize(store, PatchRef{"a", 0, 0, 128}, unit_stats(),
                         AugmentSpec::random(), 77);
  auto two = materialize(store, PatchRef{"a", 0, 0, 128}, unit_stats(),
                         AugmentSpec::random(), 77);
  CHECK(one.x.data == two.x.data);
  CHECK(one.labels == two.labels);
  CHECK(one.applied == two.applied);

  CHECK_THROWS_AS(materialize(store, PatchRef{"missing", 0, 0, 128}, unit_stats()),
                  LookupError);
  CHECK_THROWS_AS(materialize(store, PatchRef{"a", 64, 0, 128}, unit_stats()), DataError);
}

TEST_CASE("split_folds partitions the plan") {
  const auto plan = default_fold_plan();
  REQUIRE(plan.size() == 6);
  auto [train3, val3] = split_folds(plan, 3);
  CHECK(val3 == std::vector<std::string>{"west_kefalonia"});
  CHECK(train3.size() == 5);

  auto [t1, v1] = split_folds(plan, 1);
  auto [t2, v2] = split_folds(plan, 2);
  for (const auto& id : v1)
    CHECK(std::find(v2.begin(), v2.end(), id) == v2.end());

  std::set<std::string> all_validation;
  for (int k = 1; k <= 6; ++k) {
    auto [t, v] = split_folds(plan, k);
    all_validation.insert(v.begin(), v.end());
    CHECK(t.size() + v.size() == plan.all_areas().size());
  }
  CHECK(all_validation.size() == plan.all_areas().size());

  CHECK_THROWS_AS(split_folds(plan, 0), ParameterError);
  CHECK_THROWS_AS(split_folds(plan, 7), ParameterError);
}

TEST_CASE("fold plans reject duplicated areas") {
  CHECK_THROWS_AS(fold_plan_from_json_text(R"({"g1":["a"],"g2":["a"]})"), ConfigError);
  auto plan = fold_plan_from_json_text(R"({"g1":["a","b"],"g2":["c"]})");
  CHECK(plan.size() == 2);
}

TEST_CASE("random_split is a deterministic 70/30 partition of disjoint refs") {
  std::vector<PatchRef> refs;
  for (int i = 0; i < 10; ++i) refs.push_back(PatchRef{"a", 0, i * 128, 128});
  auto [train, val] = random_split(refs, 0.70, 42);
  CHECK(train.size() == 7);
  CHECK(val.size() == 3);

  auto [train2, val2] = random_split(refs, 0.70, 42);
  CHECK(train == train2);
  CHECK(val == val2);

  for (const auto& t : train)
    CHECK(std::find(val.begin(), val.end(), t) == val.end());

  std::vector<PatchRef> overlapping;
  for (int i = 0; i < 4; ++i) overlapping.push_back(PatchRef{"a", 0, i * 64, 128});
  CHECK_THROWS_AS(random_split(overlapping, 0.70, 1), ParameterError);
}

TEST_CASE("synthetic areas are deterministic with exact signatures at sigma 0") {
  SynthSpec spec;
  spec.width = 128;
  spec.height = 128;
  spec.seed = 31;
  spec.noise_sigma = 0.0;
  const auto a = generate_synthetic_area("x", spec);
  const auto b = generate_synthetic_area("x", spec);
  CHECK(a.bands == b.bands);
  CHECK(a.labels == b.labels);

  const auto& tax = default_taxonomy();
  a.validate(tax);
  for (std::size_t p = 0; p < a.pixel_count(); ++p) {
    if (a.labels[p] == 0) continue;
    const auto sig = class_signature(tax.index_of(a.labels[p]));
    for (int band = 0; band < AreaRaster::kNumBands; ++band)
      REQUIRE(a.bands[band * a.pixel_count() + p] == sig[band]);
  }

  SynthSpec tiny = spec;
  tiny.width = 100;
  CHECK_THROWS_AS(generate_synthetic_area("x", tiny), ParameterError);
}

TEST_CASE("nearest-signature classifier separates sigma 0.1 areas") {
  SynthSpec spec;
  spec.width = 256;
  spec.height = 256;
  spec.seed = 8;
  spec.noise_sigma = 0.1;
  const auto area = generate_synthetic_area("x", spec);
  const auto& tax = default_taxonomy();

  std::size_t labeled = 0, correct = 0;
  for (std::size_t p = 0; p < area.pixel_count(); ++p) {
    if (area.labels[p] == 0) continue;
    ++labeled;
    int best = -1;
    double best_d = 0;
    for (int ci = 0; ci < static_cast<int>(tax.size()); ++ci) {
      const auto sig = class_signature(ci);
      double d = 0;
      for (int band = 0; band < AreaRaster::kNumBands; ++band) {
        const double diff = area.bands[band * area.pixel_count() + p] - sig[band];
        d += diff * diff;
      }
      if (best < 0 || d < best_d) {
        best = ci;
        best_d = d;
      }
    }
    if (tax.code_at(best) == area.labels[p]) ++correct;
  }
  REQUIRE(labeled > 0);
  CHECK(static_cast<double>(correct) / static_cast<double>(labeled) > 0.99);
}

TEST_CASE("area raster round-trips byte-identically") {
  SynthSpec spec;
  spec.width = 128;
  spec.height = 130;
  spec.seed = 77;
  const auto area = generate_synthetic_area("rt", spec);

  const auto dir = temp_dir("area_rt");
  save_area(area, dir + "/rt");
  const auto loaded = load_area(dir + "/rt");
  CHECK(loaded.area_id == area.area_id);
  CHECK(loaded.bands == area.bands);
  CHECK(loaded.labels == area.labels);

  save_area(loaded, dir + "/rt2");
  CHECK(slurp(dir + "/rt/bands.bin") == slurp(dir + "/rt2/bands.bin"));
  CHECK(slurp(dir + "/rt/labels.bin") == slurp(dir + "/rt2/labels.bin"));
  CHECK(slurp(dir + "/rt/header.json") == slurp(dir + "/rt2/header.json"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("stats file round trip and validation") {
  BandStats stats;
  for (int b = 0; b < AreaRaster::kNumBands; ++b) {
    stats.means[b] = static_cast<float>(b) * 0.5f;
    stats.stds[b] = 1.0f + static_cast<float>(b);
  }
  const auto dir = temp_dir("stats_rt");
  save_stats(stats, dir + "/stats.json");
  const auto loaded = load_stats(dir + "/stats.json");
  CHECK(loaded.means == stats.means);
  CHECK(loaded.stds == stats.stds);
  std::filesystem::remove_all(dir);
}
