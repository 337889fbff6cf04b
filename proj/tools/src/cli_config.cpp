#include "geln/cli_config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "geln/errors.hpp"

namespace geln::cli {

namespace {

const std::map<std::string, std::set<std::string>> kKnownKeys = {
    {"dataset",
     {"n_train", "n_val", "n_test", "correlation_strength", "noise_scale", "clinical_dim",
      "dermoscopy_dim"}},
    {"cooccur", {"cm_mode"}},
    {"models",
     {"encoder_hidden", "feature_dim", "embed_dim", "gcn_hidden", "trunk_hidden",
      "train_embedding", "embedding_csv"}},
    {"trainer",
     {"epochs", "batch_size", "base_lr", "min_lr", "swa_last_epochs", "variant", "preset"}},
    {"ensemble", {"grid_step"}},
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

long parse_int(const std::string& section, const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ValidationError("config: [" + section + "] " + key + ": expected integer, got '" + v +
                          "'");
  }
}

double parse_double(const std::string& section, const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ValidationError("config: [" + section + "] " + key + ": expected number, got '" + v +
                          "'");
  }
}

bool parse_bool(const std::string& section, const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ValidationError("config: [" + section + "] " + key + ": expected true/false, got '" + v +
                        "'");
}

}  // namespace

CliConfig CliConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

CliConfig CliConfig::parse(const std::string& text) {
  CliConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ValidationError("config line " + std::to_string(line_no) + ": malformed section");
      section = trim(t.substr(1, t.size() - 2));
      if (!kKnownKeys.contains(section))
        throw ValidationError("config line " + std::to_string(line_no) + ": unknown section [" +
                              section + "]");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
    if (section.empty())
      throw ValidationError("config line " + std::to_string(line_no) + ": key outside a section");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (!kKnownKeys.at(section).contains(key))
      throw ValidationError("config line " + std::to_string(line_no) + ": unknown key '" + key +
                            "' in section [" + section + "]");
    cfg.values_[section][key] = value;
  }
  return cfg;
}

bool CliConfig::has(const std::string& section, const std::string& key) const {
  const auto it = values_.find(section);
  return it != values_.end() && it->second.contains(key);
}

std::string CliConfig::get(const std::string& section, const std::string& key) const {
  return values_.at(section).at(key);
}

void CliConfig::apply_to(TrainConfig& cfg) const {
  // preset selection happens in the caller (flag wins over file); here we
  // only refine individual keys
  if (has("trainer", "epochs"))
    cfg.epochs = static_cast<int>(parse_int("trainer", "epochs", get("trainer", "epochs")));
  if (has("trainer", "batch_size"))
    cfg.batch_size =
        static_cast<int>(parse_int("trainer", "batch_size", get("trainer", "batch_size")));
  if (has("trainer", "base_lr"))
    cfg.base_lr = parse_double("trainer", "base_lr", get("trainer", "base_lr"));
  if (has("trainer", "min_lr"))
    cfg.min_lr = parse_double("trainer", "min_lr", get("trainer", "min_lr"));
  if (has("trainer", "swa_last_epochs"))
    cfg.swa_last_epochs = static_cast<int>(
        parse_int("trainer", "swa_last_epochs", get("trainer", "swa_last_epochs")));
  if (has("trainer", "variant")) cfg.variant = variant_from_string(get("trainer", "variant"));
  if (has("cooccur", "cm_mode")) cfg.cm_mode = cm_mode_from_string(get("cooccur", "cm_mode"));
  if (has("ensemble", "grid_step"))
    cfg.grid_step = parse_double("ensemble", "grid_step", get("ensemble", "grid_step"));

  if (has("models", "encoder_hidden"))
    cfg.dims.encoder_hidden = static_cast<std::size_t>(
        parse_int("models", "encoder_hidden", get("models", "encoder_hidden")));
  if (has("models", "feature_dim"))
    cfg.dims.feature_dim =
        static_cast<std::size_t>(parse_int("models", "feature_dim", get("models", "feature_dim")));
  if (has("models", "embed_dim"))
    cfg.dims.embed_dim =
        static_cast<std::size_t>(parse_int("models", "embed_dim", get("models", "embed_dim")));
  if (has("models", "gcn_hidden"))
    cfg.dims.gcn_hidden =
        static_cast<std::size_t>(parse_int("models", "gcn_hidden", get("models", "gcn_hidden")));
  if (has("models", "trunk_hidden"))
    cfg.dims.trunk_hidden = static_cast<std::size_t>(
        parse_int("models", "trunk_hidden", get("models", "trunk_hidden")));
  if (has("models", "train_embedding"))
    cfg.dims.train_embedding =
        parse_bool("models", "train_embedding", get("models", "train_embedding"));
  if (has("models", "embedding_csv")) cfg.dims.embedding_csv = get("models", "embedding_csv");
}

void CliConfig::apply_to(SynthConfig& cfg) const {
  if (has("dataset", "n_train"))
    cfg.n_train = static_cast<std::size_t>(parse_int("dataset", "n_train", get("dataset", "n_train")));
  if (has("dataset", "n_val"))
    cfg.n_val = static_cast<std::size_t>(parse_int("dataset", "n_val", get("dataset", "n_val")));
  if (has("dataset", "n_test"))
    cfg.n_test = static_cast<std::size_t>(parse_int("dataset", "n_test", get("dataset", "n_test")));
  if (has("dataset", "correlation_strength"))
    cfg.correlation_strength =
        parse_double("dataset", "correlation_strength", get("dataset", "correlation_strength"));
  if (has("dataset", "noise_scale"))
    cfg.noise_scale = parse_double("dataset", "noise_scale", get("dataset", "noise_scale"));
  if (has("dataset", "clinical_dim"))
    cfg.feature_dims.clinical = static_cast<std::size_t>(
        parse_int("dataset", "clinical_dim", get("dataset", "clinical_dim")));
  if (has("dataset", "dermoscopy_dim"))
    cfg.feature_dims.dermoscopy = static_cast<std::size_t>(
        parse_int("dataset", "dermoscopy_dim", get("dataset", "dermoscopy_dim")));
}

}  // namespace geln::cli
