#include "geln/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "geln/errors.hpp"
#include "geln/rng.hpp"

namespace geln {

// ---------------------------------------------------------------- params

std::size_t trainable_size(const ParamList& params) {
  std::size_t n = 0;
  for (const auto& p : params)
    if (p.trainable()) n += p.value->size();
  return n;
}

std::size_t total_size(const ParamList& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.value->size();
  return n;
}

std::vector<double> gather_trainable(const ParamList& params) {
  std::vector<double> flat;
  flat.reserve(trainable_size(params));
  for (const auto& p : params) {
    if (!p.trainable()) continue;
    flat.insert(flat.end(), p.value->begin(), p.value->end());
  }
  return flat;
}

void scatter_trainable(const ParamList& params, const std::vector<double>& flat) {
  if (flat.size() != trainable_size(params))
    throw ValidationError("scatter_trainable: size mismatch");
  std::size_t pos = 0;
  for (const auto& p : params) {
    if (!p.trainable()) continue;
    std::copy(flat.begin() + pos, flat.begin() + pos + p.value->size(), p.value->begin());
    pos += p.value->size();
  }
}

std::vector<double> gather_trainable_grads(const ParamList& params) {
  std::vector<double> flat;
  flat.reserve(trainable_size(params));
  for (const auto& p : params) {
    if (!p.trainable()) continue;
    flat.insert(flat.end(), p.grad->begin(), p.grad->end());
  }
  return flat;
}

ParamList with_prefix(const std::string& prefix, ParamList list) {
  for (auto& p : list) p.path = prefix + p.path;
  return list;
}

// ---------------------------------------------------------------- linear

LinearLayer::LinearLayer(std::size_t in, std::size_t out, std::uint64_t seed)
    : W(in, out), b(out, 0.0), grad_W(in, out), grad_b(out, 0.0) {
  Rng rng(seed);
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  for (double& w : W.data()) w = (2.0 * rng.uniform() - 1.0) * bound;
}

Matrix LinearLayer::forward(const Matrix& x) const {
  Matrix y = matmul(x, W);
  add_row_vector(y, b);
  return y;
}

Matrix LinearLayer::backward(const Matrix& x, const Matrix& grad_out) {
  add_inplace(grad_W, matmul_at_b(x, grad_out));
  const auto gb = column_sums(grad_out);
  for (std::size_t j = 0; j < b.size(); ++j) grad_b[j] += gb[j];
  return matmul_a_bt(grad_out, W);
}

void LinearLayer::zero_grad() {
  std::fill(grad_W.data().begin(), grad_W.data().end(), 0.0);
  std::fill(grad_b.begin(), grad_b.end(), 0.0);
}

void LinearLayer::collect(const std::string& prefix, ParamList& out) {
  out.push_back({prefix + ".W", {W.rows(), W.cols()}, &W.data(), &grad_W.data()});
  out.push_back({prefix + ".b", {b.size()}, &b, &grad_b});
}

// ---------------------------------------------------------------- batchnorm

BatchNormLayer::BatchNormLayer(std::size_t dim)
    : gamma(dim, 1.0),
      beta(dim, 0.0),
      running_mean(dim, 0.0),
      running_var(dim, 1.0),
      grad_gamma(dim, 0.0),
      grad_beta(dim, 0.0) {}

Matrix BatchNormLayer::forward(const Matrix& x, Mode mode, Cache* cache) {
  if (x.cols() != dim()) throw ValidationError("batchnorm: width mismatch");
  const std::size_t batch = x.rows(), d = dim();
  Matrix y(batch, d);

  if (mode == Mode::eval) {
    Matrix xhat(batch, d);
    std::vector<double> inv(d);
    for (std::size_t j = 0; j < d; ++j) inv[j] = 1.0 / std::sqrt(running_var[j] + eps);
    for (std::size_t i = 0; i < batch; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        xhat(i, j) = (x(i, j) - running_mean[j]) * inv[j];
        y(i, j) = gamma[j] * xhat(i, j) + beta[j];
      }
    }
    if (cache) {
      cache->xhat = std::move(xhat);
      cache->inv_std = std::move(inv);
      cache->mode = Mode::eval;
    }
    return y;
  }

  if (batch < 2) throw ValidationError("batchnorm: train mode needs batch >= 2");
  std::vector<double> mean(d, 0.0), var(d, 0.0);
  for (std::size_t i = 0; i < batch; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += x(i, j);
  for (double& v : mean) v /= static_cast<double>(batch);
  for (std::size_t i = 0; i < batch; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double c = x(i, j) - mean[j];
      var[j] += c * c;
    }
  for (double& v : var) v /= static_cast<double>(batch);

  Matrix xhat(batch, d);
  std::vector<double> inv(d);
  for (std::size_t j = 0; j < d; ++j) inv[j] = 1.0 / std::sqrt(var[j] + eps);
  for (std::size_t i = 0; i < batch; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      xhat(i, j) = (x(i, j) - mean[j]) * inv[j];
      y(i, j) = gamma[j] * xhat(i, j) + beta[j];
    }

  const double unbias = static_cast<double>(batch) / static_cast<double>(batch - 1);
  const double mom =
      reestimate_batches_ >= 0 ? 1.0 / static_cast<double>(++reestimate_batches_) : momentum;
  for (std::size_t j = 0; j < d; ++j) {
    running_mean[j] = (1.0 - mom) * running_mean[j] + mom * mean[j];
    running_var[j] = (1.0 - mom) * running_var[j] + mom * var[j] * unbias;
  }

  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv);
    cache->mode = Mode::train;
  }
  return y;
}

Matrix BatchNormLayer::backward(const Cache& cache, const Matrix& grad_out) {
  const std::size_t batch = grad_out.rows(), d = dim();
  Matrix gx(batch, d);
  for (std::size_t j = 0; j < d; ++j) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
      sum_dy += grad_out(i, j);
      sum_dy_xhat += grad_out(i, j) * cache.xhat(i, j);
    }
    grad_beta[j] += sum_dy;
    grad_gamma[j] += sum_dy_xhat;
    if (cache.mode == Mode::eval) {
      for (std::size_t i = 0; i < batch; ++i)
        gx(i, j) = grad_out(i, j) * gamma[j] * cache.inv_std[j];
    } else {
      const double scale = gamma[j] * cache.inv_std[j] / static_cast<double>(batch);
      for (std::size_t i = 0; i < batch; ++i) {
        gx(i, j) = scale * (static_cast<double>(batch) * grad_out(i, j) - sum_dy -
                            cache.xhat(i, j) * sum_dy_xhat);
      }
    }
  }
  return gx;
}

void BatchNormLayer::begin_reestimate() { reestimate_batches_ = 0; }
void BatchNormLayer::end_reestimate() { reestimate_batches_ = -1; }

void BatchNormLayer::zero_grad() {
  std::fill(grad_gamma.begin(), grad_gamma.end(), 0.0);
  std::fill(grad_beta.begin(), grad_beta.end(), 0.0);
}

void BatchNormLayer::collect(const std::string& prefix, ParamList& out) {
  out.push_back({prefix + ".gamma", {gamma.size()}, &gamma, &grad_gamma});
  out.push_back({prefix + ".beta", {beta.size()}, &beta, &grad_beta});
  out.push_back({prefix + ".running_mean", {running_mean.size()}, &running_mean, nullptr});
  out.push_back({prefix + ".running_var", {running_var.size()}, &running_var, nullptr});
}

// ---------------------------------------------------------------- swish

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix swish_forward(const Matrix& x) {
  Matrix y = x;
  for (double& v : y.data()) v *= sigmoid(v);
  return y;
}

Matrix swish_backward(const Matrix& x, const Matrix& grad_out) {
  if (x.rows() != grad_out.rows() || x.cols() != grad_out.cols())
    throw ValidationError("swish_backward: shape mismatch");
  Matrix gx(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x.data()[i];
    const double s = sigmoid(v);
    gx.data()[i] = grad_out.data()[i] * (s + v * s * (1.0 - s));
  }
  return gx;
}

// ---------------------------------------------------------------- softmax CE

namespace {

void check_targets(const Matrix& targets, const CategoryLayout& layout) {
  for (std::size_t i = 0; i < targets.rows(); ++i) {
    for (std::size_t cat = 0; cat < layout.num_categories(); ++cat) {
      double sum = 0.0;
      for (std::size_t j = 0; j < layout.sizes[cat]; ++j) {
        const double t = targets(i, layout.offsets[cat] + j);
        if (t != 0.0 && t != 1.0)
          throw ValidationError("category_softmax_ce: targets must be 0/1");
        sum += t;
      }
      if (sum != 1.0)
        throw ValidationError("category_softmax_ce: targets must be one-hot per category block");
    }
  }
}

}  // namespace

Matrix category_softmax(const Matrix& logits, const CategoryLayout& layout) {
  if (logits.cols() != layout.total)
    throw ValidationError("category_softmax: logit width does not match schema");
  Matrix probs(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    for (std::size_t cat = 0; cat < layout.num_categories(); ++cat) {
      const std::size_t off = layout.offsets[cat], k = layout.sizes[cat];
      double mx = logits(i, off);
      for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, logits(i, off + j));
      double denom = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        const double e = std::exp(logits(i, off + j) - mx);
        probs(i, off + j) = e;
        denom += e;
      }
      for (std::size_t j = 0; j < k; ++j) probs(i, off + j) /= denom;
    }
  }
  return probs;
}

SoftmaxCeResult category_softmax_ce(const Matrix& logits, const Matrix& targets,
                                    const CategoryLayout& layout) {
  if (logits.rows() != targets.rows() || logits.cols() != targets.cols())
    throw ValidationError("category_softmax_ce: logits/targets shape mismatch");
  check_targets(targets, layout);

  SoftmaxCeResult r;
  r.probs = category_softmax(logits, layout);
  const std::size_t batch = logits.rows();

  double loss = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    for (std::size_t cat = 0; cat < layout.num_categories(); ++cat) {
      const std::size_t off = layout.offsets[cat], k = layout.sizes[cat];
      // log-sum-exp form keeps the loss exact for extreme logits
      double mx = logits(i, off);
      for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, logits(i, off + j));
      double denom = 0.0;
      double true_logit = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        denom += std::exp(logits(i, off + j) - mx);
        if (targets(i, off + j) == 1.0) true_logit = logits(i, off + j);
      }
      loss += std::log(denom) + mx - true_logit;
    }
  }
  r.loss = loss / static_cast<double>(batch);

  r.grad_logits = Matrix(batch, logits.cols());
  for (std::size_t i = 0; i < r.grad_logits.size(); ++i) {
    r.grad_logits.data()[i] =
        (r.probs.data()[i] - targets.data()[i]) / static_cast<double>(batch);
  }
  return r;
}

// ---------------------------------------------------------------- adam

void AdamState::init(const ParamList& params) {
  step = 0;
  m.clear();
  v.clear();
  for (const auto& p : params) {
    if (!p.trainable()) continue;
    m.emplace_back(p.value->size(), 0.0);
    v.emplace_back(p.value->size(), 0.0);
  }
}

void adam_step(const ParamList& params, AdamState& state, double lr) {
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  std::size_t k = 0;
  for (const auto& p : params) {
    if (!p.trainable()) continue;
    if (k >= state.m.size() || state.m[k].size() != p.value->size())
      throw ValidationError("adam_step: state does not match parameter list");
    auto& mk = state.m[k];
    auto& vk = state.v[k];
    for (std::size_t i = 0; i < p.value->size(); ++i) {
      const double g = (*p.grad)[i];
      mk[i] = state.beta1 * mk[i] + (1.0 - state.beta1) * g;
      vk[i] = state.beta2 * vk[i] + (1.0 - state.beta2) * g * g;
      const double mhat = mk[i] / bc1;
      const double vhat = vk[i] / bc2;
      (*p.value)[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
    ++k;
  }
}

// ---------------------------------------------------------------- schedule

double CosineSchedule::lr(int epoch) const {
  if (epoch <= 0) return base_lr;
  if (epoch >= total_epochs) return min_lr;
  const double t = static_cast<double>(epoch) / static_cast<double>(total_epochs);
  return min_lr + (base_lr - min_lr) * (1.0 + std::cos(std::numbers::pi * t)) / 2.0;
}

// ---------------------------------------------------------------- grad check

double grad_check(const std::function<double(const std::vector<double>&)>& f,
                  const std::vector<double>& analytic_grad, const std::vector<double>& point,
                  double h) {
  if (analytic_grad.size() != point.size())
    throw ValidationError("grad_check: gradient/point size mismatch");
  std::vector<double> x = point;
  double max_err = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = f(x);
    x[i] = orig - h;
    const double fm = f(x);
    x[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw ValidationError("grad_check: function evaluated non-finite");
    const double numeric = (fp - fm) / (2.0 * h);
    const double denom = std::max({1.0, std::abs(analytic_grad[i]), std::abs(numeric)});
    max_err = std::max(max_err, std::abs(analytic_grad[i] - numeric) / denom);
  }
  return max_err;
}

}  // namespace geln
