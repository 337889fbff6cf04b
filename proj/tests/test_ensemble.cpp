#include <doctest.h>

#include <cmath>

#include "geln/ensemble.hpp"
#include "geln/errors.hpp"
#include "geln/metrics.hpp"
#include "geln/rng.hpp"
#include "helpers.hpp"

using namespace geln;
using doctest::Approx;

namespace {

CategoryLayout binary_layout() { return LabelSchema({{"A", {"neg", "pos"}}}).layout(); }

// Reverse each category block: a prediction set that ranks inversely.
PredictionSet invert(const PredictionSet& p, const CategoryLayout& layout) {
  PredictionSet q = p;
  for (std::size_t i = 0; i < p.probs.rows(); ++i) {
    for (std::size_t cat = 0; cat < layout.num_categories(); ++cat) {
      const std::size_t off = layout.offsets[cat], k = layout.sizes[cat];
      for (std::size_t j = 0; j < k; ++j) q.probs(i, off + j) = p.probs(i, off + k - 1 - j);
    }
  }
  return q;
}

// Independent re-evaluation of the whole grid: same candidate order contract
// (uniform first, then lattice in descending lexicographic order), naive
// max scan with the brute-force AUC.
EnsembleWeights search_oracle(const std::vector<const PredictionSet*>& preds,
                              const Matrix& targets, double step) {
  const std::size_t k = preds.size();
  const long m = std::lround(1.0 / step);
  std::vector<std::vector<double>> candidates;
  candidates.emplace_back(k, 1.0 / static_cast<double>(k));
  if (k == 2) {
    for (long i = m; i >= 0; --i)
      candidates.push_back({static_cast<double>(i) * step, static_cast<double>(m - i) * step});
  } else {
    for (long i = m; i >= 0; --i)
      for (long j = m - i; j >= 0; --j)
        candidates.push_back({static_cast<double>(i) * step, static_cast<double>(j) * step,
                              static_cast<double>(m - i - j) * step});
  }
  EnsembleWeights best;
  best.step = step;
  double best_obj = -1.0;
  for (const auto& w : candidates) {
    Matrix mixed(preds[0]->probs.rows(), preds[0]->probs.cols());
    for (std::size_t s = 0; s < k; ++s)
      for (std::size_t i = 0; i < mixed.size(); ++i)
        mixed.data()[i] += w[s] * preds[s]->probs.data()[i];
    double sum = 0.0;
    std::vector<double> scores(mixed.rows()), labels(mixed.rows());
    for (std::size_t g = 0; g < mixed.cols(); ++g) {
      for (std::size_t i = 0; i < mixed.rows(); ++i) {
        scores[i] = mixed(i, g);
        labels[i] = targets(i, g);
      }
      sum += test::auc_bruteforce(scores, labels);
    }
    const double obj = sum / static_cast<double>(mixed.cols());
    if (obj > best_obj) {
      best_obj = obj;
      best.weights = w;
    }
  }
  best.objective = best_obj;
  return best;
}

}  // namespace

TEST_CASE("combine examples") {
  Rng rng(1);
  const auto layout = spc_schema().layout();
  const auto a = test::random_predictions(rng, layout, 5);
  const auto b = test::random_predictions(rng, layout, 5);

  SUBCASE("half-half weights give the elementwise mean") {
    const auto mixed = combine({&a, &b}, std::vector<double>{0.5, 0.5}, PredictionSource::p_total);
    for (std::size_t i = 0; i < mixed.probs.size(); ++i)
      CHECK(std::abs(mixed.probs.data()[i] - 0.5 * (a.probs.data()[i] + b.probs.data()[i])) <=
            1e-15);
  }
  SUBCASE("weight (1, 0) returns the first set exactly") {
    const auto mixed = combine({&a, &b}, std::vector<double>{1.0, 0.0}, PredictionSource::p_f);
    CHECK(mixed.probs == a.probs);
  }
  SUBCASE("combining a set with itself is the identity") {
    const auto mixed = combine({&a, &a}, std::vector<double>{0.3, 0.7}, PredictionSource::p_f);
    for (std::size_t i = 0; i < mixed.probs.size(); ++i)
      CHECK(std::abs(mixed.probs.data()[i] - a.probs.data()[i]) <= 1e-15);
  }
  SUBCASE("mismatched case sets are rejected") {
    auto c = b;
    c.case_ids[0] = "other";
    CHECK_THROWS_AS(combine({&a, &c}, std::vector<double>{0.5, 0.5}, PredictionSource::p_total),
                    ValidationError);
  }
  SUBCASE("negative or all-zero weights are rejected") {
    CHECK_THROWS_AS(combine({&a, &b}, std::vector<double>{-0.1, 1.1}, PredictionSource::p_total),
                    ValidationError);
    CHECK_THROWS_AS(combine({&a, &b}, std::vector<double>{0.0, 0.0}, PredictionSource::p_total),
                    ValidationError);
  }
}

TEST_CASE("search picks the perfectly ranking source") {
  // source 1 ranks every class perfectly; source 2 is its block reversal, so
  // any w1 > w2 keeps the perfect ranking and the tie-break lands on (1, 0)
  const auto layout = binary_layout();
  const std::size_t n = 10;
  PredictionSet good;
  good.source = PredictionSource::p_f;
  good.probs = Matrix(n, 2);
  Matrix targets(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    good.case_ids.push_back("case" + std::to_string(i));
    const bool pos = i < 5;
    const double p =
        pos ? 0.6 + 0.04 * static_cast<double>(i) : 0.1 + 0.04 * static_cast<double>(i);
    good.probs(i, 1) = p;
    good.probs(i, 0) = 1.0 - p;
    targets(i, pos ? 1 : 0) = 1.0;
  }
  const PredictionSet bad = invert(good, layout);

  const auto w = search_weights({&good, &bad}, targets, layout, 0.05);
  CHECK(w.weights == std::vector<double>{1.0, 0.0});
  CHECK(w.objective == 1.0);
}

TEST_CASE("identical sources resolve to uniform weights") {
  Rng rng(7);
  const auto layout = spc_schema().layout();
  const auto p = test::random_predictions(rng, layout, 12);
  const Matrix targets = test::random_targets(rng, layout, 12);

  const auto w2 = search_weights({&p, &p}, targets, layout, 0.05);
  CHECK(w2.weights == std::vector<double>{0.5, 0.5});
  CHECK(std::abs(w2.objective - mean_auc_objective(p.probs, targets)) <= 1e-12);

  const auto w3 = search_weights({&p, &p, &p}, targets, layout, 0.05);
  CHECK(w3.weights == std::vector<double>(3, 1.0 / 3.0));
}

TEST_CASE("search matches the independent oracle") {
  Rng rng(99);
  const auto layout = LabelSchema({{"A", {"x", "y"}}, {"B", {"p", "q", "r"}}}).layout();
  for (int trial = 0; trial < 8; ++trial) {
    const std::size_t n = 8 + rng.index(8);
    const auto a = test::random_predictions(rng, layout, n, PredictionSource::p_f);
    const auto b = test::random_predictions(rng, layout, n, PredictionSource::p_g);
    const auto c = test::random_predictions(rng, layout, n, PredictionSource::p_gc);
    const Matrix targets = test::random_targets(rng, layout, n);

    const auto got2 = search_weights({&a, &b}, targets, layout, 0.1);
    const auto want2 = search_oracle({&a, &b}, targets, 0.1);
    CHECK(got2.weights == want2.weights);
    CHECK(std::abs(got2.objective - want2.objective) <= 1e-12);

    const auto got3 = search_weights({&a, &b, &c}, targets, layout, 0.1);
    const auto want3 = search_oracle({&a, &b, &c}, targets, 0.1);
    CHECK(got3.weights == want3.weights);
    CHECK(std::abs(got3.objective - want3.objective) <= 1e-12);
  }
}

TEST_CASE("searched objective never loses to the uniform average") {
  Rng rng(123);
  const auto layout = spc_schema().layout();
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 10 + rng.index(10);
    const auto a = test::random_predictions(rng, layout, n);
    const auto b = test::random_predictions(rng, layout, n);
    const Matrix targets = test::random_targets(rng, layout, n);
    const auto w = search_weights({&a, &b}, targets, layout, 0.05);
    const auto mean = combine({&a, &b}, std::vector<double>{0.5, 0.5}, PredictionSource::p_total);
    CHECK(w.objective >= mean_auc_objective(mean.probs, targets));
  }
}

TEST_CASE("halving the grid step never decreases the objective") {
  Rng rng(321);
  const auto layout = spc_schema().layout();
  for (int trial = 0; trial < 5; ++trial) {
    const auto a = test::random_predictions(rng, layout, 15);
    const auto b = test::random_predictions(rng, layout, 15);
    const Matrix targets = test::random_targets(rng, layout, 15);
    const auto coarse = search_weights({&a, &b}, targets, layout, 0.1);
    const auto fine = search_weights({&a, &b}, targets, layout, 0.05);
    CHECK(fine.objective >= coarse.objective);
  }
}

TEST_CASE("rescaled weights keep rankings and argmax decisions") {
  Rng rng(11);
  const auto layout = spc_schema().layout();
  const auto a = test::random_predictions(rng, layout, 9);
  const auto b = test::random_predictions(rng, layout, 9);
  const Matrix targets = test::random_targets(rng, layout, 9);

  const std::vector<double> w = {0.3, 0.7};
  const std::vector<double> w2 = {0.6, 1.4};  // 2w, deliberately unnormalized
  const auto m1 = combine({&a, &b}, w, PredictionSource::p_total);
  const auto m2 = combine({&a, &b}, w2, PredictionSource::p_total);

  std::vector<double> s1(m1.probs.rows()), s2(m1.probs.rows()), labels(m1.probs.rows());
  for (std::size_t g = 0; g < m1.probs.cols(); ++g) {
    for (std::size_t i = 0; i < m1.probs.rows(); ++i) {
      s1[i] = m1.probs(i, g);
      s2[i] = m2.probs(i, g);
      labels[i] = targets(i, g);
    }
    CHECK(std::abs(auc_ovr(s1, labels) - auc_ovr(s2, labels)) <= 1e-12);
  }
  CHECK(hard_labels(m1.probs, layout) == hard_labels(m2.probs, layout));
}

TEST_CASE("weight grid contract") {
  const auto grid2 = weight_grid(2, 0.5);
  REQUIRE(grid2.size() == 4);  // uniform + 3 lattice points
  CHECK(grid2[0] == std::vector<double>{0.5, 0.5});
  CHECK(grid2[1] == std::vector<double>{1.0, 0.0});
  CHECK(grid2.back() == std::vector<double>{0.0, 1.0});

  const auto grid3 = weight_grid(3, 0.5);
  CHECK(grid3[0] == std::vector<double>(3, 1.0 / 3.0));  // uniform in the grid even off-lattice
  for (const auto& w : grid3) {
    double sum = 0.0;
    for (double v : w) sum += v;
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }

  CHECK_THROWS_AS(weight_grid(4, 0.5), ValidationError);
  CHECK_THROWS_AS(weight_grid(2, 0.3), ValidationError);  // does not divide 1
  CHECK_THROWS_AS(weight_grid(2, 0.0), ValidationError);
}

TEST_CASE("search rejects empty validation sets") {
  const auto layout = binary_layout();
  PredictionSet empty;
  empty.source = PredictionSource::p_f;
  empty.probs = Matrix(0, 2);
  Matrix targets(0, 2);
  CHECK_THROWS_AS(search_weights({&empty, &empty}, targets, layout, 0.05), ValidationError);
}
