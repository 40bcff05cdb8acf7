#include <doctest.h>

#include <set>

#include "lcs/taxonomy.hpp"

using namespace lcs;

TEST_CASE("default taxonomy holds exactly the 32 study-area classes") {
  const auto& tax = default_taxonomy();
  CHECK(tax.size() == 32);
  const std::vector<int> expected{111, 112, 121, 123, 124, 131, 141, 142, 211, 212, 221,
                                  222, 223, 231, 242, 243, 311, 312, 313, 321, 323, 324,
                                  331, 332, 333, 411, 421, 422, 512, 521, 522, 523};
  for (std::size_t i = 0; i < expected.size(); ++i)
    CHECK(tax.code_at(static_cast<int>(i)) == expected[i]);
  CHECK(tax.index_of(111) == 0);
  CHECK_FALSE(tax.contains(999));
}

TEST_CASE("projection follows the digit hierarchy") {
  const auto& tax = default_taxonomy();
  CHECK(tax.project(523, 1) == 5);
  CHECK(tax.project(242, 2) == 24);
  CHECK(tax.project(311, 3) == 311);
  CHECK_THROWS_AS(tax.project(999, 1), TaxonomyError);
  CHECK_THROWS_AS(tax.project(111, 4), ParameterError);
}

TEST_CASE("projection is idempotent and monotone across levels") {
  const auto& tax = default_taxonomy();
  for (const auto& cls : tax.classes()) {
    const int l2 = tax.project(cls.code3, 2);
    CHECK(l2 / 10 == tax.project(cls.code3, 1));
    CHECK(cls.code3 / 10 == l2);
  }
}

TEST_CASE("dense index round-trips for all classes") {
  const auto& tax = default_taxonomy();
  for (int i = 0; i < static_cast<int>(tax.size()); ++i)
    CHECK(tax.index_of(tax.code_at(i)) == i);
}

TEST_CASE("names follow the CLC nomenclature at every level") {
  const auto& tax = default_taxonomy();
  CHECK(tax.name_of(112) == "Discontinuous urban fabric");
  CHECK(tax.name_of(41) == "Inland wetlands");
  CHECK(tax.name_of(5) == "Water bodies");
  CHECK_THROWS_AS(tax.name_of(999), TaxonomyError);
  CHECK_THROWS_AS(tax.name_of(99), TaxonomyError);
}

TEST_CASE("legend colors: sea is blue-family, all colors are distinct") {
  const auto& tax = default_taxonomy();
  const Rgb sea = tax.color_of(523);
  CHECK(sea == Rgb{230, 242, 255});  // golden: standard legend value
  CHECK(sea.b >= sea.r);
  CHECK(sea.b >= sea.g);

  std::set<std::tuple<int, int, int>> seen;
  for (const auto& cls : tax.classes())
    CHECK(seen.insert({cls.color.r, cls.color.g, cls.color.b}).second);
}

TEST_CASE("level class counts derived from the 32 codes") {
  const auto& tax = default_taxonomy();
  CHECK(tax.level_codes(1).size() == 5);
  CHECK(tax.level_codes(2).size() == 15);
  CHECK(tax.level_codes(3).size() == 32);
  // the 13 level-2 rows reported for the first fold are a subset
  for (int code : {11, 12, 13, 14, 21, 22, 23, 24, 31, 32, 33, 41, 52}) {
    const auto codes = tax.level_codes(2);
    CHECK(std::find(codes.begin(), codes.end(), code) != codes.end());
  }
}

TEST_CASE("taxonomy JSON round trip") {
  const auto& tax = default_taxonomy();
  const auto text = tax.to_json_text();
  const auto back = ClcTaxonomy::from_json_text(text);
  CHECK(back.size() == tax.size());
  for (int i = 0; i < static_cast<int>(tax.size()); ++i) {
    CHECK(back.code_at(i) == tax.code_at(i));
    CHECK(back.name_of(back.code_at(i)) == tax.name_of(tax.code_at(i)));
    CHECK(back.color_of(back.code_at(i)) == tax.color_of(tax.code_at(i)));
  }
}

TEST_CASE("taxonomy rejects malformed tables") {
  CHECK_THROWS_AS(ClcTaxonomy::from_json_text("{"), FormatError);
  CHECK_THROWS_AS(ClcTaxonomy::from_json_text("{\"a\":1}"), FormatError);
  // duplicate codes
  CHECK_THROWS_AS(ClcTaxonomy::from_json_text(
                      R"([{"code3":111,"name":"a","color":[0,0,0]},
                          {"code3":111,"name":"b","color":[1,1,1]}])"),
                  TaxonomyError);
}
