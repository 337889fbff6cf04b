#include "geln/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "geln/errors.hpp"

namespace geln {

namespace {

constexpr char kMagic[8] = {'G', 'E', 'L', 'N', 'C', 'K', 'P', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& out, double d) { put_u64(out, std::bit_cast<std::uint64_t>(d)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamList& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  out.write(kMagic, sizeof(kMagic));
  put_u64(out, params.size());
  for (const auto& p : params) {
    put_u64(out, p.path.size());
    out.write(p.path.data(), static_cast<std::streamsize>(p.path.size()));
    put_u64(out, p.shape.size());
    for (std::size_t d : p.shape) put_u64(out, d);
    for (double v : *p.value) put_f64(out, v);
  }
  if (!out) throw IoError("write failed: " + path);
}

void load_checkpoint(const std::string& path, const ParamList& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ValidationError("checkpoint: bad magic in " + path);
  const std::uint64_t n = get_u64(in);
  if (n != params.size())
    throw ValidationError("checkpoint: entry count mismatch (file " + std::to_string(n) +
                          ", model " + std::to_string(params.size()) + ")");
  for (const auto& p : params) {
    const std::uint64_t len = get_u64(in);
    std::string name(len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(len));
    if (name != p.path)
      throw ValidationError("checkpoint: expected parameter '" + p.path + "', found '" + name +
                            "'");
    const std::uint64_t ndim = get_u64(in);
    std::vector<std::size_t> shape(ndim);
    for (auto& d : shape) d = static_cast<std::size_t>(get_u64(in));
    if (shape != p.shape) throw ValidationError("checkpoint: shape mismatch for '" + p.path + "'");
    if (shape_product(shape) != p.value->size())
      throw ValidationError("checkpoint: size mismatch for '" + p.path + "'");
    for (double& v : *p.value) v = get_f64(in);
    if (!in) throw ValidationError("checkpoint: truncated file " + path);
  }
}

std::string checkpoint_to_json(const ParamList& params) {
  nlohmann::json entries = nlohmann::json::object();
  for (const auto& p : params) {
    entries[p.path] = {{"shape", p.shape}, {"data", *p.value}};
  }
  nlohmann::json doc = {{"format", "geln-checkpoint"}, {"version", 1}, {"params", entries}};
  return doc.dump();
}

void checkpoint_from_json(const std::string& text, const ParamList& params) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("checkpoint json: ") + e.what());
  }
  try {
    const auto& entries = doc.at("params");
    for (const auto& p : params) {
      if (!entries.contains(p.path))
        throw ValidationError("checkpoint json: missing parameter '" + p.path + "'");
      const auto& e = entries.at(p.path);
      const auto shape = e.at("shape").get<std::vector<std::size_t>>();
      if (shape != p.shape)
        throw ValidationError("checkpoint json: shape mismatch for '" + p.path + "'");
      const auto data = e.at("data").get<std::vector<double>>();
      if (data.size() != p.value->size())
        throw ValidationError("checkpoint json: size mismatch for '" + p.path + "'");
      *p.value = data;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("checkpoint json: ") + e.what());
  }
}

void save_checkpoint_json(const std::string& path, const ParamList& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  out << checkpoint_to_json(params) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

void load_checkpoint_json(const std::string& path, const ParamList& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  checkpoint_from_json(buf.str(), params);
}

}  // namespace geln
