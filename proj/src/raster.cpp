#include "lcs/raster.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace lcs {

namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little,
              "raster IO assumes a little-endian host");

template <typename T>
void write_binary(const std::string& path, const std::vector<T>& values) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f.write(reinterpret_cast<const char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(T)));
  if (!f) throw IoError("short write to " + path);
}

template <typename T>
std::vector<T> read_binary(const std::string& path, std::size_t expected_count) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) throw IoError("cannot open " + path);
  const auto bytes = static_cast<std::size_t>(f.tellg());
  if (bytes != expected_count * sizeof(T))
    throw FormatError(path + ": expected " + std::to_string(expected_count * sizeof(T)) +
                          " bytes, found " + std::to_string(bytes),
                      static_cast<long>(bytes));
  f.seekg(0);
  std::vector<T> values(expected_count);
  f.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(bytes));
  if (!f) throw IoError("short read from " + path);
  return values;
}

}  // namespace

void AreaRaster::validate(const ClcTaxonomy& taxonomy) const {
  if (width <= 0 || height <= 0)
    throw DataError("area " + area_id + ": non-positive dimensions");
  if (band_names.size() != kNumBands)
    throw DataError("area " + area_id + ": expected " + std::to_string(kNumBands) + " bands");
  if (bands.size() != kNumBands * pixel_count())
    throw DataError("area " + area_id + ": band buffer size mismatch");
  if (labels.size() != pixel_count())
    throw DataError("area " + area_id + ": label buffer size mismatch");
  for (std::uint16_t code : labels) {
    if (code != 0 && !taxonomy.contains(code))
      throw DataError("area " + area_id + ": label code " + std::to_string(code) +
                      " not in taxonomy");
  }
}

const std::vector<std::string>& default_band_names() {
  static const std::vector<std::string> names{"R",   "G",   "B",   "NIR", "b05",
                                              "b06", "b07", "b8A", "b11", "b12"};
  return names;
}

void save_area(const AreaRaster& area, const std::string& dir) {
  fs::create_directories(dir);
  nlohmann::ordered_json header;
  header["area_id"] = area.area_id;
  header["width"] = area.width;
  header["height"] = area.height;
  header["band_names"] = area.band_names;
  header["pixel_size_m"] = 10;
  header["nodata_label"] = 0;
  {
    std::ofstream f(dir + "/header.json");
    if (!f) throw IoError("cannot write " + dir + "/header.json");
    f << header.dump(2) << "\n";
  }
  write_binary(dir + "/bands.bin", area.bands);
  write_binary(dir + "/labels.bin", area.labels);
}

AreaRaster load_area(const std::string& dir) {
  std::ifstream f(dir + "/header.json");
  if (!f) throw IoError("cannot open " + dir + "/header.json");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(dir + "/header.json: " + e.what(), static_cast<long>(e.byte));
  }
  AreaRaster area;
  area.area_id = header.at("area_id").get<std::string>();
  area.width = header.at("width").get<int>();
  area.height = header.at("height").get<int>();
  area.band_names = header.at("band_names").get<std::vector<std::string>>();
  if (area.width <= 0 || area.height <= 0)
    throw FormatError(dir + "/header.json: non-positive dimensions");
  if (area.band_names.size() != AreaRaster::kNumBands)
    throw FormatError(dir + "/header.json: expected " + std::to_string(AreaRaster::kNumBands) +
                      " band names");
  area.bands = read_binary<float>(dir + "/bands.bin", AreaRaster::kNumBands * area.pixel_count());
  area.labels = read_binary<std::uint16_t>(dir + "/labels.bin", area.pixel_count());
  return area;
}

std::vector<float> resample_20m(const std::vector<float>& band20, int h20, int w20, int target_h,
                                int target_w) {
  if (target_h != 2 * h20 || target_w != 2 * w20)
    throw DimensionError("resample_20m: target " + shape_str({target_h, target_w}) +
                         " is not exactly double the source " + shape_str({h20, w20}));
  if (band20.size() != static_cast<std::size_t>(h20) * w20)
    throw DimensionError("resample_20m: source buffer size mismatch");
  std::vector<float> out(static_cast<std::size_t>(target_h) * target_w);
  for (int r = 0; r < h20; ++r) {
    for (int c = 0; c < w20; ++c) {
      float v = band20[static_cast<std::size_t>(r) * w20 + c];
      std::size_t o = static_cast<std::size_t>(2 * r) * target_w + 2 * c;
      out[o] = v;
      out[o + 1] = v;
      out[o + target_w] = v;
      out[o + target_w + 1] = v;
    }
  }
  return out;
}

void AreaStore::add(AreaRaster area) {
  std::string id = area.area_id;
  if (!areas_.emplace(id, std::move(area)).second)
    throw DataError("duplicate area id: " + id);
}

const AreaRaster& AreaStore::at(const std::string& id) const {
  auto it = areas_.find(id);
  if (it == areas_.end()) throw LookupError("unknown area id: " + id);
  return it->second;
}

std::vector<std::string> AreaStore::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : areas_) out.push_back(id);
  return out;
}

AreaStore AreaStore::load(const std::string& root, const std::vector<std::string>& area_ids) {
  AreaStore store;
  for (const auto& id : area_ids) store.add(load_area(root + "/" + id));
  return store;
}

BandStats compute_stats(const AreaStore& store, const std::vector<std::string>& area_ids) {
  if (area_ids.empty()) throw DataError("compute_stats: no areas selected");
  constexpr int nb = AreaRaster::kNumBands;
  std::array<double, nb> sum{};
  std::array<double, nb> sq_sum{};
  std::size_t count = 0;

  // pass 1: means
  for (const auto& id : area_ids) {
    const AreaRaster& area = store.at(id);
    for (std::size_t p = 0; p < area.pixel_count(); ++p) {
      if (area.labels[p] == 0) continue;
      ++count;
      for (int b = 0; b < nb; ++b) sum[b] += area.bands[b * area.pixel_count() + p];
    }
  }
  if (count == 0) throw DataError("compute_stats: selected areas contain no labeled pixels");
  std::array<double, nb> mean{};
  for (int b = 0; b < nb; ++b) mean[b] = sum[b] / static_cast<double>(count);

  // pass 2: population variance around the exact mean
  for (const auto& id : area_ids) {
    const AreaRaster& area = store.at(id);
    for (std::size_t p = 0; p < area.pixel_count(); ++p) {
      if (area.labels[p] == 0) continue;
      for (int b = 0; b < nb; ++b) {
        double d = area.bands[b * area.pixel_count() + p] - mean[b];
        sq_sum[b] += d * d;
      }
    }
  }
  BandStats stats;
  for (int b = 0; b < nb; ++b) {
    stats.means[b] = static_cast<float>(mean[b]);
    double sd = std::sqrt(sq_sum[b] / static_cast<double>(count));
    stats.stds[b] = static_cast<float>(std::max(sd, 1e-6));
  }
  return stats;
}

void save_stats(const BandStats& stats, const std::string& path) {
  nlohmann::ordered_json doc;
  doc["means"] = stats.means;
  doc["stds"] = stats.stds;
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  f << doc.dump(2) << "\n";
}

BandStats load_stats(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open stats file: " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path + ": " + e.what(), static_cast<long>(e.byte));
  }
  auto means = doc.at("means").get<std::vector<float>>();
  auto stds = doc.at("stds").get<std::vector<float>>();
  if (means.size() != AreaRaster::kNumBands || stds.size() != AreaRaster::kNumBands)
    throw FormatError(path + ": means/stds must each have " +
                      std::to_string(AreaRaster::kNumBands) + " entries");
  BandStats stats;
  for (int b = 0; b < AreaRaster::kNumBands; ++b) {
    if (stds[b] <= 0.0f) throw DataError(path + ": std for band " + std::to_string(b) +
                                         " must be positive");
    stats.means[b] = means[b];
    stats.stds[b] = stds[b];
  }
  return stats;
}

}  // namespace lcs
