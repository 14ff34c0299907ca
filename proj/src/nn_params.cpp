#include "scanet/nn/params.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace scanet::nn {

namespace {

Mat init_matrix(int rows, int cols, Init init, Rng& rng) {
  Mat m(rows, cols);
  switch (init) {
    case Init::Zeros:
      m.setZero();
      break;
    case Init::Ones:
      m.setOnes();
      break;
    case Init::TruncNormal02:
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
          double v = rng.normal(0.0, 0.02);
          while (std::abs(v) > 0.04) v = rng.normal(0.0, 0.02);
          m(r, c) = v;
        }
      break;
    case Init::XavierUniform: {
      const double bound = std::sqrt(6.0 / (rows + cols));
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
      break;
    }
  }
  return m;
}

constexpr char kMagic[8] = {'S', 'C', 'N', 'C', 'K', 'P', 'T', '1'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

NodePtr ParamStore::create(const std::string& name, int rows, int cols, Init init, Rng& rng) {
  return create(name, init_matrix(rows, cols, init, rng));
}

NodePtr ParamStore::create(const std::string& name, Mat value) {
  check(!has(name), "ParamStore: duplicate parameter " + name);
  auto node = make_param(std::move(value));
  params_[name] = node;
  order_.push_back(name);
  return node;
}

NodePtr ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  check(it != params_.end(), "ParamStore: unknown parameter " + name);
  return it->second;
}

void ParamStore::zero_grads() {
  for (auto& [name, p] : params_) {
    if (p->grad.size() == 0) p->grad = Mat::Zero(p->rows(), p->cols());
    p->zero_grad();
  }
}

std::vector<NodePtr> ParamStore::group(const std::string& prefix) const {
  std::vector<NodePtr> out;
  for (const auto& name : order_)
    if (name.rfind(prefix, 0) == 0) out.push_back(params_.at(name));
  return out;
}

std::vector<NodePtr> ParamStore::all() const {
  std::vector<NodePtr> out;
  out.reserve(order_.size());
  for (const auto& name : order_) out.push_back(params_.at(name));
  return out;
}

std::map<std::string, Mat> ParamStore::snapshot() const {
  std::map<std::string, Mat> snap;
  for (const auto& [name, p] : params_) snap[name] = p->value;
  return snap;
}

void ParamStore::restore(const std::map<std::string, Mat>& snap) {
  for (const auto& [name, v] : snap) {
    auto it = params_.find(name);
    if (it != params_.end()) it->second->value = v;
  }
}

void save_checkpoint(const std::string& path, const ParamStore& store,
                     const std::string& meta_json) {
  std::ofstream os(path, std::ios::binary);
  check_data(os.good(), "checkpoint: cannot open for writing: " + path);
  os.write(kMagic, sizeof(kMagic));
  write_pod<uint32_t>(os, kVersion);
  write_pod<uint32_t>(os, static_cast<uint32_t>(meta_json.size()));
  os.write(meta_json.data(), static_cast<std::streamsize>(meta_json.size()));
  write_pod<uint64_t>(os, store.size());
  for (const auto& name : store.names()) {
    const Mat& m = store.get(name)->value;
    write_pod<uint32_t>(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod<uint64_t>(os, static_cast<uint64_t>(m.rows()));
    write_pod<uint64_t>(os, static_cast<uint64_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) write_pod<double>(os, m(r, c));
  }
  check_data(os.good(), "checkpoint: write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  check_data(is.good(), "checkpoint: cannot open: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  check_data(is.good() && std::memcmp(magic, kMagic, sizeof(kMagic)) == 0,
             "checkpoint: bad magic in " + path);
  const uint32_t version = read_pod<uint32_t>(is);
  check_data(version == kVersion,
             "checkpoint: unsupported format version " + std::to_string(version));
  const uint32_t meta_len = read_pod<uint32_t>(is);
  Checkpoint ckpt;
  ckpt.meta_json.resize(meta_len);
  is.read(ckpt.meta_json.data(), meta_len);
  const uint64_t count = read_pod<uint64_t>(is);
  for (uint64_t i = 0; i < count; ++i) {
    const uint32_t name_len = read_pod<uint32_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const auto rows = static_cast<Eigen::Index>(read_pod<uint64_t>(is));
    const auto cols = static_cast<Eigen::Index>(read_pod<uint64_t>(is));
    Mat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = read_pod<double>(is);
    check_data(is.good(), "checkpoint: truncated file: " + path);
    ckpt.tensors[name] = std::move(m);
  }
  return ckpt;
}

std::vector<std::string> load_into_store(const Checkpoint& ckpt, ParamStore& store,
                                         const std::vector<std::string>& optional_prefixes) {
  auto is_optional = [&](const std::string& name) {
    for (const auto& p : optional_prefixes)
      if (name.rfind(p, 0) == 0) return true;
    return false;
  };
  std::vector<std::string> missing;
  for (const auto& name : store.names()) {
    auto it = ckpt.tensors.find(name);
    if (it == ckpt.tensors.end()) {
      check_data(is_optional(name), "checkpoint: missing required parameter " + name);
      missing.push_back(name);
      continue;
    }
    NodePtr p = store.get(name);
    check_data(it->second.rows() == p->value.rows() && it->second.cols() == p->value.cols(),
               "checkpoint: shape mismatch for " + name + " (file " +
                   std::to_string(it->second.rows()) + "x" + std::to_string(it->second.cols()) +
                   ", model " + std::to_string(p->value.rows()) + "x" +
                   std::to_string(p->value.cols()) + ")");
    p->value = it->second;
  }
  return missing;
}

}  // namespace scanet::nn
