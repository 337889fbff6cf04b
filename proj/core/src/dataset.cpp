#include "geln/dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "geln/errors.hpp"
#include "geln/rng.hpp"

namespace geln {

using nlohmann::json;

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

std::string to_string(Modality m) {
  return m == Modality::clinical ? "clinical" : "dermoscopy";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw ValidationError("unknown split tag '" + s + "'");
}

namespace {

void validate_case(const Case& c, const LabelSchema& schema, const FeatureDims& dims) {
  const std::string where = "case '" + c.id + "': ";
  for (Modality m : {Modality::clinical, Modality::dermoscopy}) {
    const auto& f = c.features(m);
    if (f.size() != dims.of(m))
      throw ValidationError(where + "features." + to_string(m) + ": dimension mismatch (expected " +
                            std::to_string(dims.of(m)) + ", got " + std::to_string(f.size()) + ")");
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (!std::isfinite(f[i]))
        throw ValidationError(where + "features." + to_string(m) + "[" + std::to_string(i) +
                              "]: non-finite value");
    }
  }
  for (const auto& cat : schema.categories()) {
    auto it = c.labels.find(cat.name);
    if (it == c.labels.end())
      throw ValidationError(where + "labels: missing category label '" + cat.name + "'");
    const auto cat_idx = schema.find_category(cat.name);
    if (!schema.find_class(*cat_idx, it->second))
      throw ValidationError(where + "labels." + cat.name + ": unknown class '" + it->second + "'");
  }
  for (const auto& [cat_name, cls] : c.labels) {
    if (!schema.find_category(cat_name))
      throw ValidationError(where + "labels: unknown category '" + cat_name + "'");
  }
}

}  // namespace

Dataset::Dataset(LabelSchema schema, FeatureDims dims, std::vector<Case> cases)
    : schema_(std::move(schema)), dims_(dims), cases_(std::move(cases)) {
  if (schema_.num_categories() == 0) throw ValidationError("dataset: empty schema");
  std::unordered_set<std::string> ids;
  for (const auto& c : cases_) {
    if (!ids.insert(c.id).second)
      throw ValidationError("case '" + c.id + "': duplicate case id");
    validate_case(c, schema_, dims_);
  }
}

namespace {

json schema_to_json(const LabelSchema& schema) {
  json arr = json::array();
  for (const auto& cat : schema.categories()) {
    arr.push_back({{"name", cat.name}, {"classes", cat.classes}});
  }
  return arr;
}

LabelSchema schema_from_json(const json& arr) {
  if (!arr.is_array()) throw ValidationError("manifest: 'schema' must be an array");
  std::vector<CategoryDef> cats;
  for (const auto& entry : arr) {
    CategoryDef def;
    def.name = entry.at("name").get<std::string>();
    def.classes = entry.at("classes").get<std::vector<std::string>>();
    cats.push_back(std::move(def));
  }
  return LabelSchema(std::move(cats));
}

}  // namespace

std::string schema_to_json_text(const LabelSchema& schema) {
  return schema_to_json(schema).dump();
}

LabelSchema schema_from_json_text(const std::string& text) {
  try {
    return schema_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed schema: ") + e.what());
  }
}

std::string dataset_to_json(const Dataset& ds) {
  json doc;
  doc["schema"] = schema_to_json(ds.schema());
  doc["feature_dims"] = {{"clinical", ds.feature_dims().clinical},
                         {"dermoscopy", ds.feature_dims().dermoscopy}};
  json cases = json::array();
  for (const auto& c : ds.cases()) {
    json jc;
    jc["id"] = c.id;
    jc["split"] = to_string(c.split);
    jc["features"] = {{"clinical", c.clinical}, {"dermoscopy", c.dermoscopy}};
    jc["labels"] = c.labels;
    cases.push_back(std::move(jc));
  }
  doc["cases"] = std::move(cases);
  return doc.dump(2);
}

Dataset dataset_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed manifest: ") + e.what());
  }
  try {
    LabelSchema schema = schema_from_json(doc.at("schema"));
    FeatureDims dims;
    dims.clinical = doc.at("feature_dims").at("clinical").get<std::size_t>();
    dims.dermoscopy = doc.at("feature_dims").at("dermoscopy").get<std::size_t>();
    std::vector<Case> cases;
    for (const auto& jc : doc.at("cases")) {
      Case c;
      c.id = jc.at("id").get<std::string>();
      c.split = split_from_string(jc.at("split").get<std::string>());
      const auto& feats = jc.at("features");
      if (!feats.is_object() || feats.size() != 2 || !feats.contains("clinical") ||
          !feats.contains("dermoscopy"))
        throw ValidationError("case '" + c.id +
                              "': features: expected exactly the modalities clinical, dermoscopy");
      c.clinical = feats.at("clinical").get<std::vector<double>>();
      c.dermoscopy = feats.at("dermoscopy").get<std::vector<double>>();
      c.labels = jc.at("labels").get<std::map<std::string, std::string>>();
      cases.push_back(std::move(c));
    }
    return Dataset(std::move(schema), dims, std::move(cases));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed manifest: ") + e.what());
  }
}

Dataset load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return dataset_from_json(buf.str());
}

void save_manifest(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest: " + path);
  out << dataset_to_json(ds) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

std::vector<double> flatten_labels(const Case& c, const LabelSchema& schema) {
  std::vector<double> v(schema.total_classes(), 0.0);
  for (std::size_t cat = 0; cat < schema.num_categories(); ++cat) {
    const auto& name = schema.categories()[cat].name;
    auto it = c.labels.find(name);
    if (it == c.labels.end())
      throw ValidationError("case '" + c.id + "': labels: missing category label '" + name + "'");
    auto cls = schema.find_class(cat, it->second);
    if (!cls)
      throw ValidationError("case '" + c.id + "': labels." + name + ": unknown class '" +
                            it->second + "'");
    v[schema.global_index(cat, *cls)] = 1.0;
  }
  return v;
}

namespace {

// Per-(modality, category, class) mean pattern. Zero when the modality does
// not carry that category.
std::vector<std::vector<double>> make_patterns(const SynthConfig& cfg, Modality m) {
  const auto& schema = cfg.schema;
  const std::size_t dim = cfg.feature_dims.of(m);
  Rng rng(derive_seed(cfg.seed, m == Modality::clinical ? "patterns.clinical"
                                                        : "patterns.dermoscopy"));
  std::vector<std::vector<double>> patterns(schema.total_classes());
  for (std::size_t cat = 0; cat < schema.num_categories(); ++cat) {
    const bool informative =
        m == Modality::clinical ? (cat % 3 != 2) : (cat % 3 != 0);
    for (std::size_t cls = 0; cls < schema.num_classes(cat); ++cls) {
      auto& p = patterns[schema.global_index(cat, cls)];
      p.assign(dim, 0.0);
      if (informative) {
        for (double& x : p) x = rng.gaussian();
      } else {
        // keep the stream aligned so informativeness does not shift later draws
        for (std::size_t i = 0; i < dim; ++i) rng.gaussian();
      }
    }
  }
  return patterns;
}

}  // namespace

Dataset synth_generate(const SynthConfig& cfg) {
  if (cfg.schema.num_categories() == 0) throw ValidationError("synth: empty schema");
  if (cfg.correlation_strength < 0.0 || cfg.correlation_strength > 1.0)
    throw ValidationError("synth: correlation_strength must be in [0, 1]");
  if (cfg.noise_scale < 0.0) throw ValidationError("synth: noise_scale must be >= 0");
  if (cfg.n_train < 1) throw ValidationError("synth: n_train must be >= 1");

  const auto& schema = cfg.schema;
  const std::size_t n_cat = schema.num_categories();
  const auto pat_clin = make_patterns(cfg, Modality::clinical);
  const auto pat_derm = make_patterns(cfg, Modality::dermoscopy);

  Rng rng(derive_seed(cfg.seed, "cases"));
  std::vector<Case> cases;
  cases.reserve(cfg.n_train + cfg.n_val + cfg.n_test);

  const auto gen_case = [&](Split s, std::size_t idx) {
    Case c;
    {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%s_%05zu", to_string(s).c_str(), idx);
      c.id = buf;
    }
    c.split = s;

    // labels: pair coupling between consecutive categories
    std::vector<std::size_t> cls(n_cat);
    for (std::size_t cat = 0; cat < n_cat; ++cat) {
      const std::size_t k = schema.num_classes(cat);
      if (cat % 2 == 1 && rng.uniform() < cfg.correlation_strength) {
        cls[cat] = cls[cat - 1] % k;
      } else {
        cls[cat] = rng.index(k);
      }
      c.labels[schema.categories()[cat].name] = schema.categories()[cat].classes[cls[cat]];
    }

    // features: sum of the carried class patterns plus scaled noise
    const auto build = [&](Modality m, const std::vector<std::vector<double>>& patterns) {
      std::vector<double> f(cfg.feature_dims.of(m), 0.0);
      for (std::size_t cat = 0; cat < n_cat; ++cat) {
        const auto& p = patterns[schema.global_index(cat, cls[cat])];
        for (std::size_t i = 0; i < f.size(); ++i) f[i] += p[i];
      }
      for (double& x : f) x += cfg.noise_scale * rng.gaussian();
      return f;
    };
    c.clinical = build(Modality::clinical, pat_clin);
    c.dermoscopy = build(Modality::dermoscopy, pat_derm);
    return c;
  };

  for (std::size_t i = 0; i < cfg.n_train; ++i) cases.push_back(gen_case(Split::train, i));
  for (std::size_t i = 0; i < cfg.n_val; ++i) cases.push_back(gen_case(Split::val, i));
  for (std::size_t i = 0; i < cfg.n_test; ++i) cases.push_back(gen_case(Split::test, i));

  return Dataset(schema, cfg.feature_dims, std::move(cases));
}

SplitDatasets split(const Dataset& ds) {
  std::vector<Case> tr, va, te;
  for (const auto& c : ds.cases()) {
    switch (c.split) {
      case Split::train: tr.push_back(c); break;
      case Split::val: va.push_back(c); break;
      case Split::test: te.push_back(c); break;
    }
  }
  return {Dataset(ds.schema(), ds.feature_dims(), std::move(tr)),
          Dataset(ds.schema(), ds.feature_dims(), std::move(va)),
          Dataset(ds.schema(), ds.feature_dims(), std::move(te))};
}

Matrix targets_matrix(const Dataset& ds, std::span<const std::size_t> idx) {
  Matrix t(idx.size(), ds.schema().total_classes());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto v = flatten_labels(ds.cases()[idx[r]], ds.schema());
    for (std::size_t j = 0; j < v.size(); ++j) t(r, j) = v[j];
  }
  return t;
}

Matrix features_matrix(const Dataset& ds, std::span<const std::size_t> idx, Modality m) {
  const std::size_t dim = ds.feature_dims().of(m);
  Matrix f(idx.size(), dim);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto& v = ds.cases()[idx[r]].features(m);
    for (std::size_t j = 0; j < dim; ++j) f(r, j) = v[j];
  }
  return f;
}

namespace {
std::vector<std::size_t> all_indices(const Dataset& ds) {
  std::vector<std::size_t> idx(ds.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return idx;
}
}  // namespace

Matrix targets_matrix(const Dataset& ds) {
  const auto idx = all_indices(ds);
  return targets_matrix(ds, idx);
}

Matrix features_matrix(const Dataset& ds, Modality m) {
  const auto idx = all_indices(ds);
  return features_matrix(ds, idx, m);
}

}  // namespace geln
