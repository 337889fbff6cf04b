#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace geln {

struct CategoryDef {
  std::string name;
  std::vector<std::string> classes;

  bool operator==(const CategoryDef&) const = default;
};

/// Block structure of the flattened class space: one contiguous index block
/// per category, offsets/sizes in declaration order.
struct CategoryLayout {
  std::vector<std::size_t> offsets;
  std::vector<std::size_t> sizes;
  std::size_t total = 0;

  std::size_t num_categories() const { return sizes.size(); }
};

/// Ordered label categories, each with an ordered class list. Assigns every
/// (category, class) pair a stable global index 0..C-1 in declaration order.
///
/// Invariants enforced at construction: at least one category, at least two
/// classes per category, unique category names, unique class names within a
/// category.
class LabelSchema {
 public:
  LabelSchema() = default;  // empty shell, only valid as a deserialization target
  explicit LabelSchema(std::vector<CategoryDef> categories);

  std::size_t num_categories() const { return categories_.size(); }  // N
  std::size_t num_classes(std::size_t cat) const { return categories_[cat].classes.size(); }
  std::size_t total_classes() const { return total_; }  // C

  std::size_t block_offset(std::size_t cat) const { return offsets_[cat]; }
  std::size_t global_index(std::size_t cat, std::size_t cls) const { return offsets_[cat] + cls; }

  const std::vector<CategoryDef>& categories() const { return categories_; }

  std::optional<std::size_t> find_category(std::string_view name) const;
  std::optional<std::size_t> find_class(std::size_t cat, std::string_view cls) const;

  /// "category/class" key for a global class index.
  std::string class_key(std::size_t global) const;
  /// Category index owning a global class index.
  std::size_t category_of(std::size_t global) const;
  /// Class name of a global class index.
  const std::string& class_name(std::size_t global) const;

  CategoryLayout layout() const;

  bool operator==(const LabelSchema&) const = default;

 private:
  std::vector<CategoryDef> categories_;
  std::vector<std::size_t> offsets_;
  std::size_t total_ = 0;
};

/// The seven-point-checklist schema: 8 categories, 24 global classes.
LabelSchema spc_schema();

}  // namespace geln
