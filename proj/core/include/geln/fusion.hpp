#pragma once

#include <cstdint>
#include <vector>

#include "geln/matrix.hpp"
#include "geln/nn.hpp"
#include "geln/params.hpp"
#include "geln/schema.hpp"

namespace geln {

struct FusionConfig {
  std::size_t clinical_dim = 64;
  std::size_t dermoscopy_dim = 64;
  std::size_t hidden_dim = 128;  // encoder hidden width
  std::size_t feature_dim = 64;  // D, shared feature width of all branches
};

/// Two-layer Swish perceptron: in -> hidden -> out, Swish after each layer.
struct Encoder {
  LinearLayer l1, l2;

  Encoder() = default;
  Encoder(std::size_t in, std::size_t hidden, std::size_t out, std::uint64_t seed);

  struct Acts {
    Matrix x, s1, h1, s2, out;
  };

  Matrix forward(const Matrix& x, Acts* acts) const;
  /// Accumulates weight grads; input grads are not propagated (inputs are data).
  void backward(const Acts& acts, const Matrix& grad_out);

  void zero_grad();
  void collect(const std::string& prefix, ParamList& out);
};

/// The multi-modal fusion model: per-modality encoders, summation feature
/// fusion, and one prediction head per branch (clinical, dermoscopy, fused).
/// The branch probability sets are convexly combined by branch_weights into
/// the fusion prediction.
class FusionModel {
 public:
  FusionModel() = default;
  FusionModel(const FusionConfig& cfg, const CategoryLayout& layout, std::uint64_t seed);

  struct Acts {
    Encoder::Acts enc_c, enc_d;
    Matrix f_c, f_d, f_f;
    Matrix logits_c, logits_d, logits_f;
  };

  /// Runs encoders, summation fusion, and the three heads.
  Acts forward(const Matrix& clinical, const Matrix& dermoscopy) const;

  /// L_F: sum of the three per-branch category softmax-CE losses.
  /// Accumulates gradients into every fusion parameter.
  double loss_backward(const Acts& acts, const Matrix& targets);

  /// Backpropagate gradients arriving at the three feature outputs into the
  /// encoders; the fused gradient reaches both (f_f = f_c + f_d). Used when
  /// the graph stage trains the encoders jointly.
  void encoder_backward(const Acts& acts, const Matrix& d_fc, const Matrix& d_fd,
                        const Matrix& d_ff);

  struct BranchProbs {
    Matrix p_c, p_d, p_f;
  };
  BranchProbs branch_probs(const Acts& acts) const;
  /// Branch-weighted average of the three probability sets (P_F).
  Matrix combined_probs(const BranchProbs& probs) const;

  const std::vector<double>& branch_weights() const { return branch_weights_; }
  /// Weights must be nonnegative and sum to 1 (within 1e-9).
  void set_branch_weights(const std::vector<double>& w);

  const CategoryLayout& layout() const { return layout_; }
  const FusionConfig& config() const { return cfg_; }

  ParamList params();
  void zero_grad();

 private:
  FusionConfig cfg_;
  CategoryLayout layout_;
  Encoder enc_clinical_, enc_dermoscopy_;
  LinearLayer head_clinical_, head_dermoscopy_, head_fused_;
  std::vector<double> branch_weights_;
};

}  // namespace geln
