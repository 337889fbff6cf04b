#include "geln/fusion.hpp"

#include <cmath>

#include "geln/errors.hpp"
#include "geln/rng.hpp"

namespace geln {

Encoder::Encoder(std::size_t in, std::size_t hidden, std::size_t out, std::uint64_t seed)
    : l1(in, hidden, derive_seed(seed, "l1")), l2(hidden, out, derive_seed(seed, "l2")) {}

Matrix Encoder::forward(const Matrix& x, Acts* acts) const {
  Matrix s1 = l1.forward(x);
  Matrix h1 = swish_forward(s1);
  Matrix s2 = l2.forward(h1);
  Matrix out = swish_forward(s2);
  if (acts) {
    acts->x = x;
    acts->s1 = std::move(s1);
    acts->h1 = std::move(h1);
    acts->s2 = std::move(s2);
    acts->out = out;
  }
  return out;
}

void Encoder::backward(const Acts& acts, const Matrix& grad_out) {
  Matrix ds2 = swish_backward(acts.s2, grad_out);
  Matrix dh1 = l2.backward(acts.h1, ds2);
  Matrix ds1 = swish_backward(acts.s1, dh1);
  l1.backward(acts.x, ds1);
}

void Encoder::zero_grad() {
  l1.zero_grad();
  l2.zero_grad();
}

void Encoder::collect(const std::string& prefix, ParamList& out) {
  l1.collect(prefix + ".l1", out);
  l2.collect(prefix + ".l2", out);
}

FusionModel::FusionModel(const FusionConfig& cfg, const CategoryLayout& layout, std::uint64_t seed)
    : cfg_(cfg),
      layout_(layout),
      enc_clinical_(cfg.clinical_dim, cfg.hidden_dim, cfg.feature_dim,
                    derive_seed(seed, "encoder_clinical")),
      enc_dermoscopy_(cfg.dermoscopy_dim, cfg.hidden_dim, cfg.feature_dim,
                      derive_seed(seed, "encoder_dermoscopy")),
      head_clinical_(cfg.feature_dim, layout.total, derive_seed(seed, "head_clinical")),
      head_dermoscopy_(cfg.feature_dim, layout.total, derive_seed(seed, "head_dermoscopy")),
      head_fused_(cfg.feature_dim, layout.total, derive_seed(seed, "head_fused")),
      branch_weights_(3, 1.0 / 3.0) {}

FusionModel::Acts FusionModel::forward(const Matrix& clinical, const Matrix& dermoscopy) const {
  if (clinical.cols() != cfg_.clinical_dim || dermoscopy.cols() != cfg_.dermoscopy_dim ||
      clinical.rows() != dermoscopy.rows())
    throw ValidationError("fusion forward: feature shape mismatch");
  Acts acts;
  acts.f_c = enc_clinical_.forward(clinical, &acts.enc_c);
  acts.f_d = enc_dermoscopy_.forward(dermoscopy, &acts.enc_d);
  acts.f_f = add(acts.f_c, acts.f_d);
  acts.logits_c = head_clinical_.forward(acts.f_c);
  acts.logits_d = head_dermoscopy_.forward(acts.f_d);
  acts.logits_f = head_fused_.forward(acts.f_f);
  return acts;
}

double FusionModel::loss_backward(const Acts& acts, const Matrix& targets) {
  const auto ce_c = category_softmax_ce(acts.logits_c, targets, layout_);
  const auto ce_d = category_softmax_ce(acts.logits_d, targets, layout_);
  const auto ce_f = category_softmax_ce(acts.logits_f, targets, layout_);

  Matrix df_c = head_clinical_.backward(acts.f_c, ce_c.grad_logits);
  Matrix df_d = head_dermoscopy_.backward(acts.f_d, ce_d.grad_logits);
  const Matrix df_f = head_fused_.backward(acts.f_f, ce_f.grad_logits);

  // f_f = f_c + f_d, so the fused branch gradient reaches both encoders
  add_inplace(df_c, df_f);
  add_inplace(df_d, df_f);
  enc_clinical_.backward(acts.enc_c, df_c);
  enc_dermoscopy_.backward(acts.enc_d, df_d);

  return ce_c.loss + ce_d.loss + ce_f.loss;
}

void FusionModel::encoder_backward(const Acts& acts, const Matrix& d_fc, const Matrix& d_fd,
                                   const Matrix& d_ff) {
  Matrix d_c = d_fc;
  add_inplace(d_c, d_ff);
  Matrix d_d = d_fd;
  add_inplace(d_d, d_ff);
  enc_clinical_.backward(acts.enc_c, d_c);
  enc_dermoscopy_.backward(acts.enc_d, d_d);
}

FusionModel::BranchProbs FusionModel::branch_probs(const Acts& acts) const {
  return {category_softmax(acts.logits_c, layout_), category_softmax(acts.logits_d, layout_),
          category_softmax(acts.logits_f, layout_)};
}

Matrix FusionModel::combined_probs(const BranchProbs& probs) const {
  Matrix out(probs.p_c.rows(), probs.p_c.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data()[i] = branch_weights_[0] * probs.p_c.data()[i] +
                    branch_weights_[1] * probs.p_d.data()[i] +
                    branch_weights_[2] * probs.p_f.data()[i];
  }
  return out;
}

void FusionModel::set_branch_weights(const std::vector<double>& w) {
  if (w.size() != 3) throw ValidationError("branch weights: expected 3 entries");
  double sum = 0.0;
  for (double x : w) {
    if (x < 0.0) throw ValidationError("branch weights: must be nonnegative");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("branch weights: must sum to 1");
  branch_weights_ = w;
}

ParamList FusionModel::params() {
  ParamList out;
  enc_clinical_.collect("encoder_clinical", out);
  enc_dermoscopy_.collect("encoder_dermoscopy", out);
  head_clinical_.collect("head_clinical", out);
  head_dermoscopy_.collect("head_dermoscopy", out);
  head_fused_.collect("head_fused", out);
  out.push_back({"branch_weights", {branch_weights_.size()}, &branch_weights_, nullptr});
  return out;
}

void FusionModel::zero_grad() {
  enc_clinical_.zero_grad();
  enc_dermoscopy_.zero_grad();
  head_clinical_.zero_grad();
  head_dermoscopy_.zero_grad();
  head_fused_.zero_grad();
}

}  // namespace geln
