#include "geln/schema.hpp"

#include <unordered_set>

#include "geln/errors.hpp"

namespace geln {

LabelSchema::LabelSchema(std::vector<CategoryDef> categories) : categories_(std::move(categories)) {
  if (categories_.empty()) throw ValidationError("schema: needs at least one category");
  std::unordered_set<std::string> names;
  offsets_.reserve(categories_.size());
  for (const auto& cat : categories_) {
    if (!names.insert(cat.name).second)
      throw ValidationError("schema: duplicate category name '" + cat.name + "'");
    if (cat.classes.size() < 2)
      throw ValidationError("schema: category '" + cat.name + "' needs at least two classes");
    std::unordered_set<std::string> cls_names;
    for (const auto& cls : cat.classes) {
      if (!cls_names.insert(cls).second)
        throw ValidationError("schema: duplicate class '" + cls + "' in category '" + cat.name +
                              "'");
    }
    offsets_.push_back(total_);
    total_ += cat.classes.size();
  }
}

std::optional<std::size_t> LabelSchema::find_category(std::string_view name) const {
  for (std::size_t i = 0; i < categories_.size(); ++i) {
    if (categories_[i].name == name) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> LabelSchema::find_class(std::size_t cat, std::string_view cls) const {
  const auto& classes = categories_[cat].classes;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] == cls) return i;
  }
  return std::nullopt;
}

std::string LabelSchema::class_key(std::size_t global) const {
  const std::size_t cat = category_of(global);
  return categories_[cat].name + "/" + categories_[cat].classes[global - offsets_[cat]];
}

std::size_t LabelSchema::category_of(std::size_t global) const {
  std::size_t cat = categories_.size() - 1;
  while (offsets_[cat] > global) --cat;
  return cat;
}

const std::string& LabelSchema::class_name(std::size_t global) const {
  const std::size_t cat = category_of(global);
  return categories_[cat].classes[global - offsets_[cat]];
}

CategoryLayout LabelSchema::layout() const {
  CategoryLayout l;
  l.offsets = offsets_;
  l.sizes.reserve(categories_.size());
  for (const auto& cat : categories_) l.sizes.push_back(cat.classes.size());
  l.total = total_;
  return l;
}

LabelSchema spc_schema() {
  return LabelSchema({
      {"Diag", {"BCC", "NEV", "MEL", "MISC", "SK"}},
      {"PN", {"ABS", "TYP", "ATP"}},
      {"BWV", {"ABS", "PRS"}},
      {"RS", {"ABS", "PRS"}},
      {"VS", {"ABS", "REG", "IR"}},
      {"PIG", {"ABS", "REG", "IR"}},
      {"STR", {"ABS", "REG", "IR"}},
      {"DaG", {"ABS", "REG", "IR"}},
  });
}

}  // namespace geln
