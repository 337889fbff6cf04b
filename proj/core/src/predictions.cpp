#include "geln/predictions.hpp"

#include "geln/errors.hpp"

namespace geln {

std::string to_string(PredictionSource s) {
  switch (s) {
    case PredictionSource::p_fc: return "P_FC";
    case PredictionSource::p_fd: return "P_FD";
    case PredictionSource::p_ff: return "P_FF";
    case PredictionSource::p_f: return "P_F";
    case PredictionSource::p_gc: return "P_GC";
    case PredictionSource::p_gd: return "P_GD";
    case PredictionSource::p_gf: return "P_GF";
    case PredictionSource::p_g: return "P_G";
    case PredictionSource::p_total: return "P_total";
  }
  return "?";
}

namespace {

std::vector<std::string> case_ids(const Dataset& ds) {
  std::vector<std::string> ids;
  ids.reserve(ds.size());
  for (const auto& c : ds.cases()) ids.push_back(c.id);
  return ids;
}

void copy_rows(Matrix& dst, const Matrix& src, std::size_t row_off) {
  for (std::size_t i = 0; i < src.rows(); ++i)
    for (std::size_t j = 0; j < src.cols(); ++j) dst(row_off + i, j) = src(i, j);
}

std::vector<std::size_t> batch_indices(std::size_t begin, std::size_t end) {
  std::vector<std::size_t> idx(end - begin);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = begin + i;
  return idx;
}

}  // namespace

FusionPredictions predict_fusion(const FusionModel& model, const Dataset& ds,
                                 std::size_t batch_size) {
  if (ds.empty()) throw ValidationError("predict_fusion: empty dataset");
  const std::size_t c_total = model.layout().total;
  FusionPredictions out;
  out.p_fc = {PredictionSource::p_fc, case_ids(ds), Matrix(ds.size(), c_total)};
  out.p_fd = {PredictionSource::p_fd, case_ids(ds), Matrix(ds.size(), c_total)};
  out.p_ff = {PredictionSource::p_ff, case_ids(ds), Matrix(ds.size(), c_total)};

  for (std::size_t begin = 0; begin < ds.size(); begin += batch_size) {
    const std::size_t end = std::min(begin + batch_size, ds.size());
    const auto idx = batch_indices(begin, end);
    const Matrix clin = features_matrix(ds, idx, Modality::clinical);
    const Matrix derm = features_matrix(ds, idx, Modality::dermoscopy);
    const auto acts = model.forward(clin, derm);
    const auto probs = model.branch_probs(acts);
    copy_rows(out.p_fc.probs, probs.p_c, begin);
    copy_rows(out.p_fd.probs, probs.p_d, begin);
    copy_rows(out.p_ff.probs, probs.p_f, begin);
  }
  return out;
}

GraphPredictions predict_graph(GraphModel& model, const FusionModel& encoders, const Matrix& cm,
                               const Dataset& ds, std::size_t batch_size) {
  if (ds.empty()) throw ValidationError("predict_graph: empty dataset");
  const std::size_t c_total = model.layout().total;
  GraphPredictions out;
  out.p_gc = {PredictionSource::p_gc, case_ids(ds), Matrix(ds.size(), c_total)};
  out.p_gd = {PredictionSource::p_gd, case_ids(ds), Matrix(ds.size(), c_total)};
  out.p_gf = {PredictionSource::p_gf, case_ids(ds), Matrix(ds.size(), c_total)};

  for (std::size_t begin = 0; begin < ds.size(); begin += batch_size) {
    const std::size_t end = std::min(begin + batch_size, ds.size());
    const auto idx = batch_indices(begin, end);
    const Matrix clin = features_matrix(ds, idx, Modality::clinical);
    const Matrix derm = features_matrix(ds, idx, Modality::dermoscopy);
    const auto enc_acts = encoders.forward(clin, derm);
    const auto acts = model.forward(cm, enc_acts.f_c, enc_acts.f_d, enc_acts.f_f, Mode::eval);
    const auto probs = model.branch_probs(acts);
    copy_rows(out.p_gc.probs, probs.p_c, begin);
    copy_rows(out.p_gd.probs, probs.p_d, begin);
    copy_rows(out.p_gf.probs, probs.p_f, begin);
  }
  return out;
}

}  // namespace geln
