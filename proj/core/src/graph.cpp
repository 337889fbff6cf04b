#include "geln/graph.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "geln/errors.hpp"
#include "geln/rng.hpp"

namespace geln {

namespace {

constexpr double kLeakySlope = 0.2;

Matrix activate(const Matrix& x, Activation act) {
  if (act == Activation::identity) return x;
  Matrix y = x;
  for (double& v : y.data())
    if (v < 0.0) v *= kLeakySlope;
  return y;
}

Matrix activate_backward(const Matrix& x, const Matrix& grad_out, Activation act) {
  if (act == Activation::identity) return grad_out;
  Matrix g = grad_out;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x.data()[i] < 0.0) g.data()[i] *= kLeakySlope;
  return g;
}

}  // namespace

std::string to_string(Branch b) {
  switch (b) {
    case Branch::clinical: return "clinical";
    case Branch::dermoscopy: return "dermoscopy";
    case Branch::fused: return "fused";
  }
  return "?";
}

GcnParams::GcnParams(std::size_t d, std::size_t d1, std::size_t d_out, std::uint64_t seed)
    : W1(d, d1), W2(d1, d_out), grad_W1(d, d1), grad_W2(d1, d_out) {
  Rng rng(seed);
  const double bound1 = std::sqrt(6.0 / static_cast<double>(d + d1));
  for (double& w : W1.data()) w = (2.0 * rng.uniform() - 1.0) * bound1;
  const double bound2 = std::sqrt(6.0 / static_cast<double>(d1 + d_out));
  for (double& w : W2.data()) w = (2.0 * rng.uniform() - 1.0) * bound2;
}

void GcnParams::zero_grad() {
  std::fill(grad_W1.data().begin(), grad_W1.data().end(), 0.0);
  std::fill(grad_W2.data().begin(), grad_W2.data().end(), 0.0);
}

void GcnParams::collect(const std::string& prefix, ParamList& out) {
  out.push_back({prefix + ".W1", {W1.rows(), W1.cols()}, &W1.data(), &grad_W1.data()});
  out.push_back({prefix + ".W2", {W2.rows(), W2.cols()}, &W2.data(), &grad_W2.data()});
}

Matrix gcn_forward(const Matrix& lf, const Matrix& cm, const GcnParams& p, GcnActs* acts) {
  if (cm.rows() != cm.cols() || cm.rows() != lf.rows())
    throw ValidationError("gcn_forward: CM must be CxC matching the embedding rows");
  if (lf.cols() != p.W1.rows()) throw ValidationError("gcn_forward: embedding/W1 shape mismatch");

  Matrix a1 = matmul(cm, lf);
  Matrix s1 = matmul(a1, p.W1);
  Matrix h1 = activate(s1, p.act1);
  Matrix a2 = matmul(cm, h1);
  Matrix s2 = matmul(a2, p.W2);
  Matrix z = activate(s2, p.act2);
  if (acts) {
    acts->a1 = std::move(a1);
    acts->s1 = std::move(s1);
    acts->h1 = std::move(h1);
    acts->a2 = std::move(a2);
    acts->s2 = std::move(s2);
    acts->z = z;
  }
  return z;
}

void gcn_backward(const Matrix& cm, GcnParams& p, const GcnActs& acts, const Matrix& grad_z,
                  Matrix* grad_lf) {
  const Matrix ds2 = activate_backward(acts.s2, grad_z, p.act2);
  add_inplace(p.grad_W2, matmul_at_b(acts.a2, ds2));
  const Matrix da2 = matmul_a_bt(ds2, p.W2);
  const Matrix dh1 = matmul_at_b(cm, da2);  // conditional CM is not symmetric: propagate via CM^T
  const Matrix ds1 = activate_backward(acts.s1, dh1, p.act1);
  add_inplace(p.grad_W1, matmul_at_b(acts.a1, ds1));
  if (grad_lf) {
    const Matrix da1 = matmul_a_bt(ds1, p.W1);
    add_inplace(*grad_lf, matmul_at_b(cm, da1));
  }
}

Matrix load_label_embedding_csv(const std::string& path, const LabelSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embedding csv: " + path);

  const auto split_line = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };

  std::string line;
  if (!std::getline(in, line)) throw ValidationError("embedding csv: empty file");
  const std::size_t dim = split_line(line).size() - 1;
  if (dim == 0) throw ValidationError("embedding csv: header names no value columns");

  Matrix lf(schema.total_classes(), dim);
  for (std::size_t i = 0; i < schema.total_classes(); ++i) {
    if (!std::getline(in, line))
      throw ValidationError("embedding csv: missing row for " + schema.class_key(i));
    const auto cells = split_line(line);
    if (cells.size() != dim + 1)
      throw ValidationError("embedding csv: row " + std::to_string(i) + " column count mismatch");
    if (cells[0] != schema.class_key(i))
      throw ValidationError("embedding csv: row label '" + cells[0] +
                            "' does not match schema order");
    for (std::size_t j = 0; j < dim; ++j) {
      try {
        lf(i, j) = std::stod(cells[j + 1]);
      } catch (const std::exception&) {
        throw ValidationError("embedding csv: bad number at row " + std::to_string(i));
      }
    }
  }
  return lf;
}

LabelEmbedding::LabelEmbedding(std::size_t num_classes, std::size_t dim, std::uint64_t seed,
                               bool trainable_flag)
    : lf(num_classes, dim), grad_lf(num_classes, dim), trainable(trainable_flag) {
  Rng rng(seed);
  const double std_dev = 1.0 / std::sqrt(static_cast<double>(dim));
  for (double& v : lf.data()) v = rng.gaussian() * std_dev;
}

void LabelEmbedding::zero_grad() {
  std::fill(grad_lf.data().begin(), grad_lf.data().end(), 0.0);
}

void LabelEmbedding::collect(const std::string& prefix, ParamList& out) {
  out.push_back({prefix, {lf.rows(), lf.cols()}, &lf.data(),
                 trainable ? &grad_lf.data() : nullptr});
}

GraphModel::GraphModel(const GraphConfig& cfg, const LabelSchema& schema, std::uint64_t seed)
    : cfg_(cfg),
      layout_(schema.layout()),
      embedding_(schema.total_classes(), cfg.embed_dim, derive_seed(seed, "label_embedding"),
                 cfg.train_embedding),
      trunk1_(schema.total_classes(), cfg.trunk_hidden, derive_seed(seed, "trunk.fc1")),
      trunk2_(cfg.trunk_hidden, cfg.trunk_hidden, derive_seed(seed, "trunk.fc2")),
      bn1_(cfg.trunk_hidden),
      bn2_(cfg.trunk_hidden),
      branch_weights_(3, 1.0 / 3.0) {
  for (const auto& cat : schema.categories()) category_names_.push_back(cat.name);
  for (Branch b : kBranches) {
    const auto bi = static_cast<std::size_t>(b);
    gcn_[bi] = GcnParams(cfg.embed_dim, cfg.gcn_hidden, cfg.feature_dim,
                         derive_seed(seed, "gcn." + to_string(b)));
    heads_[bi].reserve(layout_.num_categories());
    for (std::size_t cat = 0; cat < layout_.num_categories(); ++cat) {
      heads_[bi].emplace_back(
          cfg.trunk_hidden, layout_.sizes[cat],
          derive_seed(seed, "heads." + to_string(b) + "." + category_names_[cat]));
    }
  }
}

Matrix GraphModel::head_logits(std::size_t branch, const Matrix& a2) const {
  Matrix logits(a2.rows(), layout_.total);
  for (std::size_t cat = 0; cat < layout_.num_categories(); ++cat) {
    const Matrix block = heads_[branch][cat].forward(a2);
    const std::size_t off = layout_.offsets[cat];
    for (std::size_t i = 0; i < block.rows(); ++i)
      for (std::size_t j = 0; j < block.cols(); ++j) logits(i, off + j) = block(i, j);
  }
  return logits;
}

GraphModel::Acts GraphModel::forward(const Matrix& cm, const Matrix& f_clinical,
                                     const Matrix& f_dermoscopy, const Matrix& f_fused,
                                     Mode mode) {
  Acts acts;
  const std::array<const Matrix*, 3> feats = {&f_clinical, &f_dermoscopy, &f_fused};
  for (Branch b : kBranches) {
    const auto bi = static_cast<std::size_t>(b);
    auto& ba = acts.branch[bi];
    ba.feats = *feats[bi];
    if (ba.feats.cols() != cfg_.feature_dim)
      throw ValidationError("graph forward: feature width must equal feature_dim");
    gcn_forward(embedding_.lf, cm, gcn_[bi], &ba.gcn);
    ba.s = matmul_a_bt(ba.feats, ba.gcn.z);  // B x C compatibility
    ba.t1 = trunk1_.forward(ba.s);
    ba.u1 = bn1_.forward(ba.t1, mode, &ba.bn1);
    ba.a1 = swish_forward(ba.u1);
    ba.t2 = trunk2_.forward(ba.a1);
    ba.u2 = bn2_.forward(ba.t2, mode, &ba.bn2);
    ba.a2 = swish_forward(ba.u2);
    ba.logits = head_logits(bi, ba.a2);
  }
  return acts;
}

GraphModel::BackwardResult GraphModel::loss_backward(const Acts& acts, const Matrix& cm,
                                                     const Matrix& targets,
                                                     std::array<bool, 3> branch_mask) {
  BackwardResult result;
  std::array<Matrix, 3> d_feats;
  for (Branch b : kBranches) {
    const auto bi = static_cast<std::size_t>(b);
    const auto& ba = acts.branch[bi];
    if (!branch_mask[bi]) {
      d_feats[bi] = Matrix(ba.feats.rows(), ba.feats.cols());
      continue;
    }
    const auto ce = category_softmax_ce(ba.logits, targets, layout_);
    result.loss += ce.loss;

    // heads: slice the logit gradient per category block
    Matrix da2(ba.a2.rows(), ba.a2.cols());
    for (std::size_t cat = 0; cat < layout_.num_categories(); ++cat) {
      const std::size_t off = layout_.offsets[cat], k = layout_.sizes[cat];
      Matrix g(ba.logits.rows(), k);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < k; ++j) g(i, j) = ce.grad_logits(i, off + j);
      add_inplace(da2, heads_[bi][cat].backward(ba.a2, g));
    }

    // shared trunk (gradient accumulates across all three branches)
    const Matrix du2 = swish_backward(ba.u2, da2);
    const Matrix dt2 = bn2_.backward(ba.bn2, du2);
    const Matrix da1 = trunk2_.backward(ba.a1, dt2);
    const Matrix du1 = swish_backward(ba.u1, da1);
    const Matrix dt1 = bn1_.backward(ba.bn1, du1);
    const Matrix ds = trunk1_.backward(ba.s, dt1);

    // s = feats * Z^T
    d_feats[bi] = matmul(ds, ba.gcn.z);
    const Matrix dz = matmul_at_b(ds, ba.feats);
    gcn_backward(cm, gcn_[bi], ba.gcn, dz,
                 embedding_.trainable ? &embedding_.grad_lf : nullptr);
  }
  result.d_clinical = std::move(d_feats[0]);
  result.d_dermoscopy = std::move(d_feats[1]);
  result.d_fused = std::move(d_feats[2]);
  return result;
}

GraphModel::BranchProbs GraphModel::branch_probs(const Acts& acts) const {
  return {category_softmax(acts.branch[0].logits, layout_),
          category_softmax(acts.branch[1].logits, layout_),
          category_softmax(acts.branch[2].logits, layout_)};
}

Matrix GraphModel::combined_probs(const BranchProbs& probs) const {
  Matrix out(probs.p_c.rows(), probs.p_c.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data()[i] = branch_weights_[0] * probs.p_c.data()[i] +
                    branch_weights_[1] * probs.p_d.data()[i] +
                    branch_weights_[2] * probs.p_f.data()[i];
  }
  return out;
}

void GraphModel::set_label_embedding(const Matrix& lf) {
  if (lf.rows() != embedding_.lf.rows() || lf.cols() != embedding_.lf.cols())
    throw ValidationError("label embedding: expected " + std::to_string(embedding_.lf.rows()) +
                          "x" + std::to_string(embedding_.lf.cols()) + ", got " +
                          std::to_string(lf.rows()) + "x" + std::to_string(lf.cols()));
  if (!lf.all_finite()) throw ValidationError("label embedding: non-finite values");
  embedding_.lf = lf;
}

void GraphModel::set_branch_weights(const std::vector<double>& w) {
  if (w.size() != 3) throw ValidationError("branch weights: expected 3 entries");
  double sum = 0.0;
  for (double x : w) {
    if (x < 0.0) throw ValidationError("branch weights: must be nonnegative");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("branch weights: must sum to 1");
  branch_weights_ = w;
}

ParamList GraphModel::params() {
  ParamList out;
  embedding_.collect("label_embedding", out);
  for (Branch b : kBranches)
    gcn_[static_cast<std::size_t>(b)].collect("gcn." + to_string(b), out);
  trunk1_.collect("trunk.fc1", out);
  bn1_.collect("trunk.bn1", out);
  trunk2_.collect("trunk.fc2", out);
  bn2_.collect("trunk.bn2", out);
  for (Branch b : kBranches) {
    const auto bi = static_cast<std::size_t>(b);
    for (std::size_t cat = 0; cat < heads_[bi].size(); ++cat)
      heads_[bi][cat].collect("heads." + to_string(b) + "." + category_names_[cat], out);
  }
  out.push_back({"branch_weights", {branch_weights_.size()}, &branch_weights_, nullptr});
  return out;
}

void GraphModel::zero_grad() {
  embedding_.zero_grad();
  for (auto& g : gcn_) g.zero_grad();
  trunk1_.zero_grad();
  trunk2_.zero_grad();
  bn1_.zero_grad();
  bn2_.zero_grad();
  for (auto& branch : heads_)
    for (auto& h : branch) h.zero_grad();
}

void GraphModel::begin_bn_reestimate() {
  bn1_.begin_reestimate();
  bn2_.begin_reestimate();
}

void GraphModel::end_bn_reestimate() {
  bn1_.end_reestimate();
  bn2_.end_reestimate();
}

}  // namespace geln
