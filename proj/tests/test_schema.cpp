#include <doctest.h>

#include "geln/dataset.hpp"
#include "geln/errors.hpp"
#include "geln/schema.hpp"

using namespace geln;

TEST_CASE("spc schema shape") {
  const auto schema = spc_schema();
  CHECK(schema.num_categories() == 8);
  const std::vector<std::size_t> expected_k = {5, 3, 2, 2, 3, 3, 3, 3};
  for (std::size_t i = 0; i < 8; ++i) CHECK(schema.num_classes(i) == expected_k[i]);
  CHECK(schema.total_classes() == 24);
}

TEST_CASE("global indices are contiguous and stable") {
  const auto schema = spc_schema();
  std::size_t expected = 0;
  for (std::size_t cat = 0; cat < schema.num_categories(); ++cat) {
    CHECK(schema.block_offset(cat) == expected);
    for (std::size_t cls = 0; cls < schema.num_classes(cat); ++cls) {
      CHECK(schema.global_index(cat, cls) == expected);
      ++expected;
    }
  }
  CHECK(expected == schema.total_classes());

  // round-trip through the JSON encoding keeps every index assignment
  const auto restored = schema_from_json_text(schema_to_json_text(schema));
  CHECK(restored == schema);
}

TEST_CASE("class keys and lookups") {
  const auto schema = spc_schema();
  CHECK(schema.class_key(0) == "Diag/BCC");
  CHECK(schema.class_key(2) == "Diag/MEL");
  CHECK(schema.class_key(23) == "DaG/IR");
  CHECK(schema.find_category("BWV") == 2);
  CHECK(!schema.find_category("nope"));
  CHECK(schema.find_class(0, "SK") == 4);
  CHECK(!schema.find_class(0, "ABS"));
  CHECK(schema.category_of(0) == 0);
  CHECK(schema.category_of(4) == 0);
  CHECK(schema.category_of(5) == 1);
  CHECK(schema.category_of(23) == 7);
}

TEST_CASE("schema invariants enforced") {
  CHECK_THROWS_AS(LabelSchema(std::vector<CategoryDef>{}), ValidationError);
  CHECK_THROWS_AS(LabelSchema(std::vector<CategoryDef>{{"A", {"only"}}}), ValidationError);
  CHECK_THROWS_AS(LabelSchema({{"A", {"x", "y"}}, {"A", {"x", "y"}}}), ValidationError);
  CHECK_THROWS_AS(LabelSchema({{"A", {"x", "x"}}}), ValidationError);
  // same class name in different categories is fine
  CHECK_NOTHROW(LabelSchema({{"A", {"x", "y"}}, {"B", {"x", "y"}}}));
}

TEST_CASE("layout mirrors the schema") {
  const auto layout = spc_schema().layout();
  CHECK(layout.num_categories() == 8);
  CHECK(layout.total == 24);
  CHECK(layout.offsets[2] == 8);
  CHECK(layout.sizes[2] == 2);
}
