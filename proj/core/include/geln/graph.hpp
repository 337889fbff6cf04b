#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "geln/matrix.hpp"
#include "geln/nn.hpp"
#include "geln/params.hpp"
#include "geln/schema.hpp"

namespace geln {

enum class Branch { clinical = 0, dermoscopy = 1, fused = 2 };
inline constexpr std::array<Branch, 3> kBranches = {Branch::clinical, Branch::dermoscopy,
                                                    Branch::fused};
std::string to_string(Branch b);

enum class Activation { identity, leaky_relu };  // leaky slope is fixed at 0.2

struct GraphConfig {
  std::size_t embed_dim = 32;     // d, label embedding width
  std::size_t gcn_hidden = 64;    // d1, first GCN layer width
  std::size_t feature_dim = 64;   // D, must equal the encoder output width
  std::size_t trunk_hidden = 64;  // H_g, shared FCN_G width
  bool train_embedding = false;
};

/// One two-layer GCN: Z = f2(CM * f1(CM * LF * W1) * W2). The defaults give
/// a leaky rectifier on layer 1 and identity on layer 2, so Z can carry
/// signed values for the dot-product readout and zero rows of CM stay zero.
struct GcnParams {
  Matrix W1, W2;
  Matrix grad_W1, grad_W2;
  Activation act1 = Activation::leaky_relu;
  Activation act2 = Activation::identity;

  GcnParams() = default;
  GcnParams(std::size_t d, std::size_t d1, std::size_t d_out, std::uint64_t seed);

  void zero_grad();
  void collect(const std::string& prefix, ParamList& out);
};

struct GcnActs {
  Matrix a1;  // CM * LF
  Matrix s1;  // a1 * W1
  Matrix h1;  // f1(s1)
  Matrix a2;  // CM * h1
  Matrix s2;  // a2 * W2
  Matrix z;   // f2(s2)
};

Matrix gcn_forward(const Matrix& lf, const Matrix& cm, const GcnParams& p, GcnActs* acts = nullptr);
/// Accumulates grad_W1/grad_W2; adds the gradient wrt LF into *grad_lf when
/// non-null.
void gcn_backward(const Matrix& cm, GcnParams& p, const GcnActs& acts, const Matrix& grad_z,
                  Matrix* grad_lf);

/// Read C rows x d columns of label feature vectors. Header row names the
/// value columns; each data row starts with its "category/class" key and
/// must follow schema order.
Matrix load_label_embedding_csv(const std::string& path, const LabelSchema& schema);

/// Gaussian rows, mean 0, std 1/sqrt(d), seeded; optionally trainable.
struct LabelEmbedding {
  Matrix lf;  // C x d
  Matrix grad_lf;
  bool trainable = false;

  LabelEmbedding() = default;
  LabelEmbedding(std::size_t num_classes, std::size_t dim, std::uint64_t seed, bool trainable);

  void zero_grad();
  void collect(const std::string& prefix, ParamList& out);
};

/// The graph model: a shared label embedding, one GCN per branch, a
/// weight-shared two-layer trunk (Linear + BN + Swish twice), and per-branch
/// per-category classifier heads. The readout is the dot-product
/// compatibility s = x * Z^T between image features and GCN label
/// representations.
class GraphModel {
 public:
  GraphModel() = default;
  GraphModel(const GraphConfig& cfg, const LabelSchema& schema, std::uint64_t seed);

  struct BranchActs {
    GcnActs gcn;
    Matrix feats;  // branch image features (B x D)
    Matrix s;      // compatibility (B x C)
    Matrix t1, u1, a1;  // trunk layer 1: linear, bn, swish
    BatchNormLayer::Cache bn1;
    Matrix t2, u2, a2;  // trunk layer 2
    BatchNormLayer::Cache bn2;
    Matrix logits;  // B x C
  };
  struct Acts {
    std::array<BranchActs, 3> branch;
  };

  Acts forward(const Matrix& cm, const Matrix& f_clinical, const Matrix& f_dermoscopy,
               const Matrix& f_fused, Mode mode);

  struct BackwardResult {
    double loss = 0.0;
    Matrix d_clinical, d_dermoscopy, d_fused;  // grads wrt the input features
  };
  /// L_G: sum of the active branch losses; accumulates every graph-model
  /// gradient and returns the gradients wrt the branch input features.
  /// `branch_mask` drops branches from the loss (ablation support).
  BackwardResult loss_backward(const Acts& acts, const Matrix& cm, const Matrix& targets,
                               std::array<bool, 3> branch_mask = {true, true, true});

  struct BranchProbs {
    Matrix p_c, p_d, p_f;
  };
  BranchProbs branch_probs(const Acts& acts) const;
  Matrix combined_probs(const BranchProbs& probs) const;

  const std::vector<double>& branch_weights() const { return branch_weights_; }
  void set_branch_weights(const std::vector<double>& w);

  const Matrix& label_embedding() const { return embedding_.lf; }
  /// Replace the seeded embedding with user-supplied rows (C x d).
  void set_label_embedding(const Matrix& lf);
  const GcnParams& gcn(Branch b) const { return gcn_[static_cast<std::size_t>(b)]; }
  GcnParams& gcn(Branch b) { return gcn_[static_cast<std::size_t>(b)]; }

  const GraphConfig& config() const { return cfg_; }
  const CategoryLayout& layout() const { return layout_; }

  ParamList params();
  void zero_grad();
  void begin_bn_reestimate();
  void end_bn_reestimate();

 private:
  Matrix head_logits(std::size_t branch, const Matrix& a2) const;

  GraphConfig cfg_;
  CategoryLayout layout_;
  std::vector<std::string> category_names_;
  LabelEmbedding embedding_;
  std::array<GcnParams, 3> gcn_;
  LinearLayer trunk1_, trunk2_;
  BatchNormLayer bn1_, bn2_;
  std::array<std::vector<LinearLayer>, 3> heads_;  // [branch][category]
  std::vector<double> branch_weights_;
};

}  // namespace geln
