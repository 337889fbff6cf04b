#include "geln/cooccur.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "geln/errors.hpp"

namespace geln {

std::string to_string(CmMode m) {
  return m == CmMode::raw_conditional ? "raw" : "row-stochastic";
}

CmMode cm_mode_from_string(const std::string& s) {
  if (s == "raw" || s == "raw_conditional") return CmMode::raw_conditional;
  if (s == "row-stochastic" || s == "row_stochastic") return CmMode::row_stochastic;
  throw ValidationError("unknown cm mode '" + s + "'");
}

CooccurrenceCounts count_cooccurrence(const Dataset& train_and_val) {
  if (train_and_val.empty()) throw ValidationError("count_cooccurrence: empty dataset");
  const auto& schema = train_and_val.schema();
  const std::size_t c_total = schema.total_classes();

  CooccurrenceCounts counts;
  counts.num_classes = c_total;
  counts.m.assign(c_total * c_total, 0);

  std::vector<std::size_t> carried;
  carried.reserve(schema.num_categories());
  for (const auto& cs : train_and_val.cases()) {
    if (cs.split == Split::test) continue;
    ++counts.n_cases;
    carried.clear();
    for (std::size_t cat = 0; cat < schema.num_categories(); ++cat) {
      const auto& name = schema.categories()[cat].name;
      const auto cls = schema.find_class(cat, cs.labels.at(name));
      carried.push_back(schema.global_index(cat, *cls));
    }
    for (std::size_t a : carried) {
      for (std::size_t b : carried) ++counts.count(a, b);
    }
  }
  if (counts.n_cases == 0)
    throw ValidationError("count_cooccurrence: no train or val cases in dataset");
  return counts;
}

CorrelationMatrix build_conditional_matrix(const CooccurrenceCounts& counts) {
  const std::size_t c_total = counts.num_classes;
  CorrelationMatrix result;
  result.mode = CmMode::raw_conditional;
  result.source_counts = counts;
  result.cm = Matrix(c_total, c_total);
  for (std::size_t i = 0; i < c_total; ++i) {
    const std::int64_t mi = counts.count(i, i);
    if (mi == 0) continue;  // zero-occurrence class: whole row stays zero
    for (std::size_t j = 0; j < c_total; ++j) {
      result.cm(i, j) = static_cast<double>(counts.count(i, j)) / static_cast<double>(mi);
    }
  }
  return result;
}

CorrelationMatrix normalize_matrix(const CorrelationMatrix& cm, CmMode mode) {
  if (cm.mode != CmMode::raw_conditional)
    throw ValidationError("normalize_matrix: input must be in raw_conditional mode");
  CorrelationMatrix out = cm;
  if (mode == CmMode::raw_conditional) return out;
  out.mode = CmMode::row_stochastic;
  for (std::size_t i = 0; i < out.cm.rows(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < out.cm.cols(); ++j) sum += out.cm(i, j);
    if (sum <= 0.0) continue;
    for (std::size_t j = 0; j < out.cm.cols(); ++j) out.cm(i, j) /= sum;
  }
  return out;
}

void save_cm_csv(const CorrelationMatrix& cm, const LabelSchema& schema, const std::string& path) {
  const std::size_t c_total = schema.total_classes();
  if (cm.cm.rows() != c_total || cm.cm.cols() != c_total)
    throw ValidationError("save_cm_csv: matrix size does not match schema");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write cm csv: " + path);

  out << "label";
  for (std::size_t j = 0; j < c_total; ++j) out << "," << schema.class_key(j);
  out << "\n";
  char buf[64];
  for (std::size_t i = 0; i < c_total; ++i) {
    out << schema.class_key(i);
    for (std::size_t j = 0; j < c_total; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", cm.cm(i, j));
      out << "," << buf;
    }
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

CorrelationMatrix load_cm_csv(const std::string& path, const LabelSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open cm csv: " + path);
  const std::size_t c_total = schema.total_classes();

  const auto split_line = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };

  std::string line;
  if (!std::getline(in, line)) throw ValidationError("cm csv: empty file");
  auto header = split_line(line);
  if (header.size() != c_total + 1) throw ValidationError("cm csv: header column count mismatch");
  for (std::size_t j = 0; j < c_total; ++j) {
    if (header[j + 1] != schema.class_key(j))
      throw ValidationError("cm csv: header label '" + header[j + 1] + "' does not match schema");
  }

  CorrelationMatrix result;
  result.cm = Matrix(c_total, c_total);
  for (std::size_t i = 0; i < c_total; ++i) {
    if (!std::getline(in, line)) throw ValidationError("cm csv: missing row " + std::to_string(i));
    auto cells = split_line(line);
    if (cells.size() != c_total + 1)
      throw ValidationError("cm csv: row " + std::to_string(i) + " column count mismatch");
    if (cells[0] != schema.class_key(i))
      throw ValidationError("cm csv: row label '" + cells[0] + "' does not match schema");
    for (std::size_t j = 0; j < c_total; ++j) {
      try {
        result.cm(i, j) = std::stod(cells[j + 1]);
      } catch (const std::exception&) {
        throw ValidationError("cm csv: bad number at row " + std::to_string(i));
      }
    }
  }
  return result;
}

}  // namespace geln
