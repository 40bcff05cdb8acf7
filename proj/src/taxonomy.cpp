#include "lcs/taxonomy.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace lcs {

namespace {

// Standard CLC level-1 and level-2 nomenclature. These are fixed across
// study areas, so they live here rather than in the swappable class table.
const std::unordered_map<int, std::string>& level1_names() {
  static const std::unordered_map<int, std::string> names{
      {1, "Artificial Surfaces"},
      {2, "Agricultural areas"},
      {3, "Forest and seminatural areas"},
      {4, "Wetlands"},
      {5, "Water bodies"},
  };
  return names;
}

const std::unordered_map<int, std::string>& level2_names() {
  static const std::unordered_map<int, std::string> names{
      {11, "Urban fabric"},
      {12, "Industrial, commercial and transport units"},
      {13, "Mine, dump and construction sites"},
      {14, "Artificial, non-agricultural vegetated areas"},
      {21, "Arable land"},
      {22, "Permanent crops"},
      {23, "Pastures"},
      {24, "Heterogeneous agricultural areas"},
      {31, "Forest"},
      {32, "Shrub and/or herbaceous vegetation associations"},
      {33, "Open spaces with little or no vegetation"},
      {41, "Inland wetlands"},
      {42, "Coastal wetlands"},
      {51, "Inland waters"},
      {52, "Marine waters"},
  };
  return names;
}

struct RawClass {
  int code;
  const char* name;
  std::uint32_t color;
};

// Level-3 names and the standard CLC legend colors for the 32 study-area
// classes.
constexpr RawClass kDefaultClasses[] = {
    {111, "Continuous urban fabric", 0xe6004d},
    {112, "Discontinuous urban fabric", 0xff0000},
    {121, "Industrial or commercial units", 0xcc4df2},
    {123, "Port areas", 0xe6cccc},
    {124, "Airports", 0xe6cce6},
    {131, "Mineral extraction sites", 0xa600cc},
    {141, "Green urban areas", 0xffa6ff},
    {142, "Sport and leisure facilities", 0xffe6ff},
    {211, "Non-irrigated arable land", 0xffffa8},
    {212, "Permanently irrigated land", 0xffff00},
    {221, "Vineyards", 0xe68000},
    {222, "Fruit trees and berry plantations", 0xf2a64d},
    {223, "Olive groves", 0xe6a600},
    {231, "Pastures", 0xe6e64d},
    {242, "Complex cultivation patterns", 0xffe64d},
    {243, "Land principally occupied by agriculture, with significant areas of natural vegetation",
     0xe6cc4d},
    {311, "Broad-leaved forest", 0x80ff00},
    {312, "Coniferous forest", 0x00a600},
    {313, "Mixed forest", 0x4dff00},
    {321, "Natural grassland", 0xccf24d},
    {323, "Sclerophyllous vegetation", 0xa6e64d},
    {324, "Transitional woodland/shrub", 0xa6f200},
    {331, "Beaches, dunes, sands", 0xe6e6e6},
    {332, "Bare rock", 0xcccccc},
    {333, "Sparsely vegetated areas", 0xccffcc},
    {411, "Inland marshes", 0xa6a6ff},
    {421, "Salt marshes", 0xccccff},
    {422, "Salines", 0xe6e6ff},
    {512, "Water bodies", 0x80f2e6},
    {521, "Coastal lagoons", 0x00ffa6},
    {522, "Estuaries", 0xa6ffe6},
    {523, "Sea and ocean", 0xe6f2ff},
};

Rgb rgb_from_hex(std::uint32_t hex) {
  return Rgb{static_cast<std::uint8_t>((hex >> 16) & 0xff),
             static_cast<std::uint8_t>((hex >> 8) & 0xff),
             static_cast<std::uint8_t>(hex & 0xff)};
}

}  // namespace

ClcTaxonomy::ClcTaxonomy(std::vector<ClcClass> classes) : classes_(std::move(classes)) {
  std::sort(classes_.begin(), classes_.end(),
            [](const ClcClass& a, const ClcClass& b) { return a.code3 < b.code3; });
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    const ClcClass& c = classes_[i];
    if (c.code3 < 100 || c.code3 > 999)
      throw TaxonomyError("class code " + std::to_string(c.code3) + " is not three digits");
    if (!index_.emplace(c.code3, static_cast<int>(i)).second)
      throw TaxonomyError("duplicate class code " + std::to_string(c.code3));
  }
}

int ClcTaxonomy::index_of(int code3) const {
  auto it = index_.find(code3);
  if (it == index_.end())
    throw TaxonomyError("unknown class code " + std::to_string(code3));
  return it->second;
}

int ClcTaxonomy::code_at(int index) const {
  if (index < 0 || index >= static_cast<int>(classes_.size()))
    throw TaxonomyError("class index " + std::to_string(index) + " out of range");
  return classes_[static_cast<std::size_t>(index)].code3;
}

int ClcTaxonomy::project(int code3, int target_level) const {
  if (!contains(code3)) throw TaxonomyError("unknown class code " + std::to_string(code3));
  switch (target_level) {
    case 3:
      return code3;
    case 2:
      return code3 / 10;
    case 1:
      return code3 / 100;
    default:
      throw ParameterError("projection level must be 1, 2 or 3, got " +
                           std::to_string(target_level));
  }
}

const std::string& ClcTaxonomy::name_of(int code) const {
  if (code >= 100) {
    return classes_[static_cast<std::size_t>(index_of(code))].name;
  }
  if (code >= 10) {
    auto it = level2_names().find(code);
    if (it == level2_names().end())
      throw TaxonomyError("unknown level-2 code " + std::to_string(code));
    return it->second;
  }
  auto it = level1_names().find(code);
  if (it == level1_names().end())
    throw TaxonomyError("unknown level-1 code " + std::to_string(code));
  return it->second;
}

Rgb ClcTaxonomy::color_of(int code3) const {
  return classes_[static_cast<std::size_t>(index_of(code3))].color;
}

std::vector<int> ClcTaxonomy::level_codes(int level) const {
  std::vector<int> codes;
  for (const auto& c : classes_) {
    int p = project(c.code3, level);
    if (codes.empty() || codes.back() != p) codes.push_back(p);
  }
  // classes_ is sorted, so projections arrive sorted; dedup handled above
  return codes;
}

ClcTaxonomy ClcTaxonomy::from_json_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("taxonomy JSON: ") + e.what(), static_cast<long>(e.byte));
  }
  if (!doc.is_array()) throw FormatError("taxonomy JSON: expected a top-level array");
  std::vector<ClcClass> classes;
  for (const auto& item : doc) {
    ClcClass c;
    c.code3 = item.at("code3").get<int>();
    c.name = item.at("name").get<std::string>();
    const auto& col = item.at("color");
    if (!col.is_array() || col.size() != 3)
      throw FormatError("taxonomy JSON: color must be [r,g,b] for code " +
                        std::to_string(c.code3));
    c.color = Rgb{col[0].get<std::uint8_t>(), col[1].get<std::uint8_t>(),
                  col[2].get<std::uint8_t>()};
    classes.push_back(std::move(c));
  }
  return ClcTaxonomy(std::move(classes));
}

ClcTaxonomy ClcTaxonomy::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open taxonomy file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return from_json_text(ss.str());
}

std::string ClcTaxonomy::to_json_text() const {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& c : classes_) {
    nlohmann::ordered_json item;
    item["code3"] = c.code3;
    item["name"] = c.name;
    item["color"] = {c.color.r, c.color.g, c.color.b};
    doc.push_back(std::move(item));
  }
  return doc.dump(2);
}

const ClcTaxonomy& default_taxonomy() {
  static const ClcTaxonomy tax = [] {
    std::vector<ClcClass> classes;
    for (const auto& raw : kDefaultClasses)
      classes.push_back(ClcClass{raw.code, raw.name, rgb_from_hex(raw.color)});
    return ClcTaxonomy(std::move(classes));
  }();
  return tax;
}

}  // namespace lcs
