#include "doctest.h"
#include "srrg/error.hpp"
#include "srrg/taxonomy.hpp"
#include "srrg/text_util.hpp"
#include "support.hpp"
#include "upper_table.hpp"

using namespace srrg;

TEST_CASE("bundled tree shape") {
  const auto& t = Taxonomy::bundled();
  CHECK(t.roots().size() == 8);
  CHECK(t.leaves().size() == 54);
  CHECK(t.uppers().size() == 23);
  CHECK(t.is_leaf("Pneumonia"));
  CHECK_FALSE(t.is_leaf("Consolidation"));
  CHECK(t.is_upper("Consolidation"));
  CHECK(t.parent_of("Lung Opacity") == "Lung Finding");
  CHECK_FALSE(t.parent_of("Lung Finding").has_value());
}

TEST_CASE("every leaf to upper pair from the breakdown table") {
  const auto& t = Taxonomy::bundled();
  size_t leaves = 1;  // No Finding is its own upper
  for (const auto& [upper, children] : testing::upper_table()) {
    for (const auto& leaf : children) {
      CAPTURE(leaf);
      REQUIRE(t.is_leaf(leaf));
      CHECK(to_lower(t.upper_of(leaf)) == to_lower(upper));
      ++leaves;
    }
  }
  CHECK(leaves == t.leaves().size());
  CHECK(t.upper_of("No Finding") == "No Finding");
}

TEST_CASE("class universes") {
  const auto& t = Taxonomy::bundled();
  CHECK(t.class_universe(LabelSpace::kLeaves).size() == 54);
  CHECK(t.class_universe(LabelSpace::kUpper).size() == 23);
  // Three statuses per label except No Finding, which is always Present.
  CHECK(t.class_universe(LabelSpace::kLeavesWithStatus).size() == 53 * 3 + 1);
  CHECK(t.class_universe(LabelSpace::kUpperWithStatus).size() == 22 * 3 + 1);
}

TEST_CASE("canonical names forgive case and dashes") {
  const auto& t = Taxonomy::bundled();
  CHECK(t.canonical_name("pneumonia") == "Pneumonia");
  CHECK(t.canonical_name("Air space opacity-multifocal") == "Air space opacity–multifocal");
  CHECK_FALSE(t.canonical_name("Bronchitis").has_value());
}

TEST_CASE("projection") {
  const auto& t = Taxonomy::bundled();
  LabelSet s{{"Pneumonia", Status::kUncertain}, {"Atelectasis", Status::kPresent}, {"Edema", Status::kAbsent}};
  const auto upper = t.project(s, LabelSpace::kUpperWithStatus);
  CHECK(upper.status_of("Consolidation") == Status::kPresent);  // precedence merge
  CHECK(upper.status_of("Diffuse air space opacity") == Status::kAbsent);
  CHECK(t.project(upper, LabelSpace::kUpperWithStatus) == upper);
  const auto plain = t.project(s, LabelSpace::kLeaves);
  CHECK(plain.status_of("Edema") == Status::kPresent);
  CHECK(t.classes(s, LabelSpace::kLeavesWithStatus) ==
        std::set<std::string>{"Atelectasis (Present)", "Edema (Absent)", "Pneumonia (Uncertain)"});
  CHECK(t.classes(s, LabelSpace::kUpper) == std::set<std::string>{"Consolidation", "Diffuse air space opacity"});
}

TEST_CASE("normalize labels") {
  const auto& t = Taxonomy::bundled();
  const auto n = normalize_labels(LabelSet{{"no finding", Status::kAbsent}, {"EDEMA", Status::kUncertain}}, t);
  CHECK(n == LabelSet{{"No Finding", Status::kPresent}, {"Edema", Status::kUncertain}});
  CHECK_THROWS_AS(normalize_labels(LabelSet{{"Bronchitis", Status::kPresent}}, t), Error);
}

TEST_CASE("status names") {
  CHECK(status_from_name("present") == Status::kPresent);
  CHECK(status_from_name("Uncertain") == Status::kUncertain);
  CHECK_FALSE(status_from_name("maybe").has_value());
  CHECK(merge_status(Status::kAbsent, Status::kUncertain) == Status::kUncertain);
}

TEST_CASE("chexbert mapping") {
  const auto& m = ChexbertMapping::bundled();
  for (const auto& [disease, classes] : m.entries()) {
    for (const auto& c : classes) {
      CAPTURE(disease);
      CHECK(std::find(chexbert_classes().begin(), chexbert_classes().end(), c) != chexbert_classes().end());
    }
  }
  for (const auto& leaf : Taxonomy::bundled().leaves()) {
    CAPTURE(leaf);
    CHECK(m.entries().count(leaf) == 1);
  }
  const auto p = map_to_chexbert(LabelSet{{"Pneumonia", Status::kPresent}, {"Bronchitis", Status::kPresent}}, m);
  CHECK(p.classes == std::set<std::string>{"Lung Opacity", "Pneumonia"});
  CHECK(p.unmapped == std::vector<std::string>{"Bronchitis"});
}

TEST_CASE("custom taxonomy loads from json") {
  const auto t = Taxonomy::from_json(nlohmann::json::parse(R"({"name":"A","children":[{"name":"B"},{"name":"C"}]})"));
  CHECK(t.leaves() == std::vector<std::string>{"B", "C"});
  CHECK(t.upper_of("C") == "A");
  CHECK_THROWS_AS(Taxonomy::from_json(nlohmann::json::parse(R"({"name":"A","children":[{"name":"A"}]})")), Error);
}
