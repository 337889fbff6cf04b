#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "geln/matrix.hpp"
#include "geln/params.hpp"
#include "geln/schema.hpp"

namespace geln {

enum class Mode { train, eval };

/// y = x W + b, with W (in x out) initialized uniform in +-sqrt(6/(in+out))
/// from the layer seed and b zero.
struct LinearLayer {
  Matrix W;
  std::vector<double> b;
  Matrix grad_W;
  std::vector<double> grad_b;

  LinearLayer() = default;
  LinearLayer(std::size_t in, std::size_t out, std::uint64_t seed);

  std::size_t in_dim() const { return W.rows(); }
  std::size_t out_dim() const { return W.cols(); }

  Matrix forward(const Matrix& x) const;
  /// Accumulates grad_W / grad_b and returns grad wrt x. `x` must be the
  /// forward input.
  Matrix backward(const Matrix& x, const Matrix& grad_out);

  void zero_grad();
  void collect(const std::string& prefix, ParamList& out);
};

/// Batch normalization over columns. Train mode normalizes by batch
/// statistics (biased variance) and folds them into the running estimates
/// (unbiased variance, as is conventional); eval mode applies the running
/// estimates. Train mode requires a batch of at least 2.
struct BatchNormLayer {
  std::vector<double> gamma, beta;
  std::vector<double> running_mean, running_var;
  std::vector<double> grad_gamma, grad_beta;
  double eps = 1e-5;
  double momentum = 0.1;

  struct Cache {
    Matrix xhat;
    std::vector<double> inv_std;
    Mode mode = Mode::train;
  };

  BatchNormLayer() = default;
  explicit BatchNormLayer(std::size_t dim);

  std::size_t dim() const { return gamma.size(); }

  Matrix forward(const Matrix& x, Mode mode, Cache* cache = nullptr);
  Matrix backward(const Cache& cache, const Matrix& grad_out);

  /// Statistics re-estimation pass (used by SWA finalize): while active,
  /// train-mode forwards replace the running statistics with the cumulative
  /// average of the batch statistics seen so far.
  void begin_reestimate();
  void end_reestimate();

  void zero_grad();
  void collect(const std::string& prefix, ParamList& out);

 private:
  int reestimate_batches_ = -1;
};

double sigmoid(double x);
/// Elementwise x * sigmoid(x).
Matrix swish_forward(const Matrix& x);
/// Gradient wrt the pre-activation x given upstream grad_out.
Matrix swish_backward(const Matrix& x, const Matrix& grad_out);

struct SoftmaxCeResult {
  double loss = 0.0;       // mean over batch of the per-category CE sum
  Matrix probs;            // per-category softmax of the logits
  Matrix grad_logits;      // (probs - targets) / batch
};

/// Softmax independently within each category block, then cross-entropy
/// against the one-hot-per-block targets.
SoftmaxCeResult category_softmax_ce(const Matrix& logits, const Matrix& targets,
                                    const CategoryLayout& layout);
/// Probabilities only (prediction path).
Matrix category_softmax(const Matrix& logits, const CategoryLayout& layout);

/// Bias-corrected Adam over the trainable entries of a ParamList.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<std::vector<double>> m, v;

  void init(const ParamList& params);
};

void adam_step(const ParamList& params, AdamState& state, double lr);

/// lr(e) = min_lr + (base_lr - min_lr) * (1 + cos(pi * e / total)) / 2,
/// exact at both endpoints.
struct CosineSchedule {
  double base_lr = 0.0;
  int total_epochs = 1;
  double min_lr = 0.0;

  double lr(int epoch) const;
};

/// Max relative error between the analytic gradient and central finite
/// differences of f at `point`. Relative error uses max(1, |a|, |n|) as the
/// denominator. Throws ValidationError if f evaluates non-finite.
double grad_check(const std::function<double(const std::vector<double>&)>& f,
                  const std::vector<double>& analytic_grad, const std::vector<double>& point,
                  double h = 1e-5);

}  // namespace geln
