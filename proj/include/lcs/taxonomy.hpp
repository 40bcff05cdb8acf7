#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "lcs/errors.hpp"

namespace lcs {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

// One level-3 CORINE Land Cover class. Codes are three digits; the first
// digit is the level-1 group, the first two the level-2 group.
struct ClcClass {
  int code3 = 0;
  std::string name;
  Rgb color;

  int level1() const { return code3 / 100; }
  int level2() const { return code3 / 10; }
};

// The class set of one study area, ordered by ascending code3 so that model
// output channel c always denotes the same class.
class ClcTaxonomy {
 public:
  explicit ClcTaxonomy(std::vector<ClcClass> classes);

  std::size_t size() const { return classes_.size(); }
  const std::vector<ClcClass>& classes() const { return classes_; }

  bool contains(int code3) const { return index_.count(code3) != 0; }
  int index_of(int code3) const;
  int code_at(int index) const;

  // level 3 -> identity, level 2 -> first two digits, level 1 -> first digit.
  int project(int code3, int target_level) const;

  // Name lookup at any level (level inferred from the number of digits).
  const std::string& name_of(int code) const;
  Rgb color_of(int code3) const;

  // Distinct projected codes at a level, ascending.
  std::vector<int> level_codes(int level) const;

  // Serialization: UTF-8 JSON array of {code3, name, color:[r,g,b]}.
  static ClcTaxonomy from_json_text(const std::string& text);
  static ClcTaxonomy load(const std::string& path);
  std::string to_json_text() const;

 private:
  std::vector<ClcClass> classes_;
  std::unordered_map<int, int> index_;
};

// The 32 classes found in the Ionian study area, with the standard CLC
// legend colors.
const ClcTaxonomy& default_taxonomy();

}  // namespace lcs
