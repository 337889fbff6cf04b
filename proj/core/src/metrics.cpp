#include "geln/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "geln/errors.hpp"

namespace geln {

using nlohmann::json;

double auc_ovr(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size())
    throw ValidationError("auc_ovr: scores/labels length mismatch");
  const std::size_t n = scores.size();

  std::size_t n_pos = 0;
  for (double l : labels)
    if (l > 0.5) ++n_pos;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return 0.0;  // zero-support convention

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // average ranks over tie groups, then the Mann-Whitney U statistic
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] > 0.5) rank_sum_pos += avg_rank;
    }
    i = j + 1;
  }
  const double u = rank_sum_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

std::vector<std::vector<std::size_t>> hard_labels(const Matrix& probs,
                                                  const CategoryLayout& layout) {
  std::vector<std::vector<std::size_t>> out(probs.rows(),
                                            std::vector<std::size_t>(layout.num_categories()));
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    for (std::size_t cat = 0; cat < layout.num_categories(); ++cat) {
      const std::size_t off = layout.offsets[cat];
      std::size_t best = 0;
      for (std::size_t j = 1; j < layout.sizes[cat]; ++j) {
        if (probs(i, off + j) > probs(i, off + best)) best = j;
      }
      out[i][cat] = best;
    }
  }
  return out;
}

std::vector<ClassMetrics> class_metrics(const Matrix& probs, const Matrix& targets,
                                        const CategoryLayout& layout) {
  if (probs.rows() != targets.rows() || probs.cols() != targets.cols())
    throw ValidationError("class_metrics: probs/targets shape mismatch");
  const auto hard = hard_labels(probs, layout);

  std::vector<ClassMetrics> out(layout.total);
  const auto safe_ratio = [](std::int64_t num, std::int64_t den) {
    return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
  };

  for (std::size_t cat = 0; cat < layout.num_categories(); ++cat) {
    const std::size_t off = layout.offsets[cat];
    for (std::size_t cls = 0; cls < layout.sizes[cat]; ++cls) {
      std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
      for (std::size_t i = 0; i < probs.rows(); ++i) {
        const bool pred = hard[i][cat] == cls;
        const bool truth = targets(i, off + cls) == 1.0;
        if (pred && truth) ++tp;
        else if (pred && !truth) ++fp;
        else if (!pred && truth) ++fn;
        else ++tn;
      }
      auto& m = out[off + cls];
      m.support = tp + fn;
      m.precision = safe_ratio(tp, tp + fp);
      m.sensitivity = safe_ratio(tp, tp + fn);
      m.specificity = safe_ratio(tn, tn + fp);
    }
  }
  return out;
}

namespace {

double round6(double v) { return std::round(v * 1e6) / 1e6; }

json weights_to_json(const EnsembleWeights& w) {
  return {{"sources", w.sources},
          {"weights", w.weights},
          {"step", w.step},
          {"objective", w.objective}};
}

EnsembleWeights weights_from_json(const json& j) {
  EnsembleWeights w;
  w.sources = j.at("sources").get<std::vector<std::string>>();
  w.weights = j.at("weights").get<std::vector<double>>();
  w.step = j.at("step").get<double>();
  w.objective = j.at("objective").get<double>();
  return w;
}

}  // namespace

MetricsReport build_report(const PredictionSet& preds, const Matrix& targets,
                           const LabelSchema& schema, std::optional<EnsembleWeights> weights) {
  if (preds.probs.rows() == 0) throw ValidationError("build_report: empty evaluation split");
  if (preds.probs.rows() != targets.rows() || preds.probs.cols() != targets.cols() ||
      preds.probs.cols() != schema.total_classes())
    throw ValidationError("build_report: predictions/targets/schema shape mismatch");

  const CategoryLayout layout = schema.layout();
  MetricsReport report;
  report.source = to_string(preds.source);
  report.n_cases = static_cast<std::int64_t>(preds.probs.rows());

  auto metrics = class_metrics(preds.probs, targets, layout);

  std::vector<double> scores(preds.probs.rows()), labels(preds.probs.rows());
  for (std::size_t g = 0; g < layout.total; ++g) {
    for (std::size_t i = 0; i < preds.probs.rows(); ++i) {
      scores[i] = preds.probs(i, g);
      labels[i] = targets(i, g);
    }
    metrics[g].auc = auc_ovr(scores, labels);
  }

  double overall_sum = 0.0, listed_sum = 0.0;
  std::size_t listed_n = 0;
  for (std::size_t g = 0; g < layout.total; ++g) {
    auto m = metrics[g];
    m.auc = round6(m.auc);
    m.precision = round6(m.precision);
    m.sensitivity = round6(m.sensitivity);
    m.specificity = round6(m.specificity);
    report.per_class.emplace_back(schema.class_key(g), m);
    overall_sum += metrics[g].auc;
    if (schema.class_name(g) != "ABS") {
      listed_sum += metrics[g].auc;
      ++listed_n;
    }
  }
  report.overall_mean_auc = round6(overall_sum / static_cast<double>(layout.total));
  report.listed_mean_auc =
      listed_n > 0 ? round6(listed_sum / static_cast<double>(listed_n)) : 0.0;

  for (std::size_t cat = 0; cat < layout.num_categories(); ++cat) {
    double sum = 0.0;
    for (std::size_t cls = 0; cls < layout.sizes[cat]; ++cls)
      sum += metrics[layout.offsets[cat] + cls].auc;
    report.per_category_mean_auc.emplace_back(
        schema.categories()[cat].name, round6(sum / static_cast<double>(layout.sizes[cat])));
  }

  if (weights) {
    EnsembleWeights w = *weights;
    for (double& x : w.weights) x = round6(x);
    w.objective = round6(w.objective);
    report.ensemble_weights = std::move(w);
  }
  return report;
}

std::string MetricsReport::to_json() const {
  json doc;
  doc["source"] = source;
  doc["n_cases"] = n_cases;
  json pc = json::array();
  for (const auto& [key, m] : per_class) {
    pc.push_back({{"class", key},
                  {"auc", m.auc},
                  {"precision", m.precision},
                  {"sensitivity", m.sensitivity},
                  {"specificity", m.specificity},
                  {"support", m.support}});
  }
  doc["per_class"] = std::move(pc);
  json cm = json::array();
  for (const auto& [cat, v] : per_category_mean_auc)
    cm.push_back({{"category", cat}, {"mean_auc", v}});
  doc["per_category_mean_auc"] = std::move(cm);
  doc["overall_mean_auc"] = overall_mean_auc;
  doc["listed_mean_auc"] = listed_mean_auc;
  if (ensemble_weights) doc["ensemble_weights"] = weights_to_json(*ensemble_weights);
  return doc.dump(2);
}

MetricsReport MetricsReport::from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("report json: ") + e.what());
  }
  try {
    MetricsReport r;
    r.source = doc.at("source").get<std::string>();
    r.n_cases = doc.at("n_cases").get<std::int64_t>();
    for (const auto& e : doc.at("per_class")) {
      ClassMetrics m;
      m.auc = e.at("auc").get<double>();
      m.precision = e.at("precision").get<double>();
      m.sensitivity = e.at("sensitivity").get<double>();
      m.specificity = e.at("specificity").get<double>();
      m.support = e.at("support").get<std::int64_t>();
      r.per_class.emplace_back(e.at("class").get<std::string>(), m);
    }
    for (const auto& e : doc.at("per_category_mean_auc")) {
      r.per_category_mean_auc.emplace_back(e.at("category").get<std::string>(),
                                           e.at("mean_auc").get<double>());
    }
    r.overall_mean_auc = doc.at("overall_mean_auc").get<double>();
    r.listed_mean_auc = doc.at("listed_mean_auc").get<double>();
    if (doc.contains("ensemble_weights"))
      r.ensemble_weights = weights_from_json(doc.at("ensemble_weights"));
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("report json: ") + e.what());
  }
}

std::string MetricsReport::to_csv() const {
  std::ostringstream out;
  out << "class,auc,precision,sensitivity,specificity,support\n";
  char buf[64];
  for (const auto& [key, m] : per_class) {
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f,%lld\n", key.c_str(), m.auc,
                  m.precision, m.sensitivity, m.specificity, static_cast<long long>(m.support));
    out << buf;
  }
  return out.str();
}

}  // namespace geln
