#pragma once

// Shared test fixtures and independent oracles. Everything here is kept
// deliberately naive (pair enumeration, O(n^2) loops) so it cannot share a
// code path with the implementations it checks.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "geln/dataset.hpp"
#include "geln/matrix.hpp"
#include "geln/nn.hpp"
#include "geln/params.hpp"
#include "geln/predictions.hpp"
#include "geln/rng.hpp"
#include "geln/schema.hpp"

namespace geln::test {

// Brute-force AUC: count all (pos, neg) pairs, 0.5 credit for ties.
inline double auc_bruteforce(const std::vector<double>& scores,
                             const std::vector<double>& labels) {
  std::size_t n_pos = 0, n_neg = 0;
  for (double l : labels) (l > 0.5 ? n_pos : n_neg) += 1;
  if (n_pos == 0 || n_neg == 0) return 0.0;
  double credit = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] <= 0.5) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] > 0.5) continue;
      if (scores[i] > scores[j]) credit += 1.0;
      else if (scores[i] == scores[j]) credit += 0.5;
    }
  }
  return credit / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

// Counting oracle for the correlation matrix: accumulate flattened label
// outer products, then divide each row by its diagonal.
inline Matrix cm_oracle(const Dataset& ds) {
  const std::size_t c = ds.schema().total_classes();
  std::vector<std::int64_t> m(c * c, 0);
  for (const auto& cs : ds.cases()) {
    if (cs.split == Split::test) continue;
    const auto y = flatten_labels(cs, ds.schema());
    for (std::size_t i = 0; i < c; ++i) {
      if (y[i] != 1.0) continue;
      for (std::size_t j = 0; j < c; ++j)
        if (y[j] == 1.0) ++m[i * c + j];
    }
  }
  Matrix cm(c, c);
  for (std::size_t i = 0; i < c; ++i) {
    const std::int64_t mi = m[i * c + i];
    if (mi == 0) continue;
    for (std::size_t j = 0; j < c; ++j)
      cm(i, j) = static_cast<double>(m[i * c + j]) / static_cast<double>(mi);
  }
  return cm;
}

// Three binary categories; the counting fixtures use their positive classes
// as labels A, B, C.
inline LabelSchema three_binary_schema() {
  return LabelSchema({{"A", {"ABS", "PRS"}}, {"B", {"ABS", "PRS"}}, {"C", {"ABS", "PRS"}}});
}

inline Case toy_case(std::string id, Split split, const LabelSchema& schema,
                     const std::map<std::string, std::string>& labels, std::size_t dim = 2) {
  Case c;
  c.id = std::move(id);
  c.split = split;
  c.clinical.assign(dim, 0.0);
  c.dermoscopy.assign(dim, 0.0);
  for (const auto& cat : schema.categories()) {
    auto it = labels.find(cat.name);
    c.labels[cat.name] = it != labels.end() ? it->second : cat.classes.front();
  }
  return c;
}

// The {A,B}, {A}, {A,B,C} positive-label dataset from the counting example.
inline Dataset toy_cooccur_dataset() {
  const auto schema = three_binary_schema();
  std::vector<Case> cases;
  cases.push_back(toy_case("c1", Split::train, schema, {{"A", "PRS"}, {"B", "PRS"}}));
  cases.push_back(toy_case("c2", Split::train, schema, {{"A", "PRS"}}));
  cases.push_back(toy_case("c3", Split::train, schema,
                           {{"A", "PRS"}, {"B", "PRS"}, {"C", "PRS"}}));
  return Dataset(schema, {2, 2}, std::move(cases));
}

// Random dataset over a random small schema (for oracle sweeps).
inline Dataset random_dataset(Rng& rng, std::size_t max_cases = 50) {
  const std::size_t n_cat = 2 + rng.index(4);  // 2..5 categories
  std::vector<CategoryDef> cats;
  for (std::size_t i = 0; i < n_cat; ++i) {
    const std::size_t k = 2 + rng.index(2);  // 2..3 classes
    CategoryDef def;
    def.name = "cat" + std::to_string(i);
    for (std::size_t j = 0; j < k; ++j) def.classes.push_back("cls" + std::to_string(j));
    cats.push_back(std::move(def));
  }
  LabelSchema schema(cats);
  const std::size_t n = 1 + rng.index(max_cases);
  std::vector<Case> cases;
  for (std::size_t i = 0; i < n; ++i) {
    Case c;
    c.id = "case" + std::to_string(i);
    const std::size_t s = rng.index(3);
    c.split = s == 0 ? Split::train : (s == 1 ? Split::val : Split::test);
    c.clinical = {rng.gaussian(), rng.gaussian()};
    c.dermoscopy = {rng.gaussian(), rng.gaussian()};
    for (std::size_t cat = 0; cat < n_cat; ++cat) {
      const auto& def = schema.categories()[cat];
      c.labels[def.name] = def.classes[rng.index(def.classes.size())];
    }
    cases.push_back(std::move(c));
  }
  return Dataset(schema, {2, 2}, std::move(cases));
}

// Random prediction set with valid category blocks.
inline PredictionSet random_predictions(Rng& rng, const CategoryLayout& layout, std::size_t n,
                                        PredictionSource source = PredictionSource::p_total) {
  PredictionSet p;
  p.source = source;
  p.probs = Matrix(n, layout.total);
  for (std::size_t i = 0; i < n; ++i) {
    p.case_ids.push_back("case" + std::to_string(i));
    for (std::size_t cat = 0; cat < layout.num_categories(); ++cat) {
      double sum = 0.0;
      for (std::size_t j = 0; j < layout.sizes[cat]; ++j) {
        const double v = rng.uniform() + 1e-3;
        p.probs(i, layout.offsets[cat] + j) = v;
        sum += v;
      }
      for (std::size_t j = 0; j < layout.sizes[cat]; ++j)
        p.probs(i, layout.offsets[cat] + j) /= sum;
    }
  }
  return p;
}

// Random one-hot targets matching a layout.
inline Matrix random_targets(Rng& rng, const CategoryLayout& layout, std::size_t n) {
  Matrix t(n, layout.total);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t cat = 0; cat < layout.num_categories(); ++cat)
      t(i, layout.offsets[cat] + rng.index(layout.sizes[cat])) = 1.0;
  return t;
}

// Full-model gradient check: flattens the trainable parameters of `params`,
// runs central differences of `loss_fn` (which must re-run the forward pass
// against the current parameter values), and compares with the analytic
// gradient produced by `backward_fn`. Buffers (batch-norm running stats) are
// restored before every evaluation so the loss is a pure function.
inline double model_grad_check(const ParamList& params, const std::function<double()>& loss_fn,
                               const std::function<void()>& backward_fn, double h = 1e-5) {
  std::vector<std::vector<double>> buffer_snapshot;
  for (const auto& p : params)
    if (!p.trainable()) buffer_snapshot.push_back(*p.value);

  const auto restore_buffers = [&] {
    std::size_t k = 0;
    for (const auto& p : params)
      if (!p.trainable()) *p.value = buffer_snapshot[k++];
  };

  const std::vector<double> point = gather_trainable(params);
  restore_buffers();
  backward_fn();
  const std::vector<double> analytic = gather_trainable_grads(params);

  const auto f = [&](const std::vector<double>& x) {
    scatter_trainable(params, x);
    restore_buffers();
    return loss_fn();
  };
  const double err = grad_check(f, analytic, point, h);
  scatter_trainable(params, point);
  restore_buffers();
  return err;
}

}  // namespace geln::test
