#pragma once

#include <map>
#include <string>
#include <vector>

#include "scanet/nn/graph.hpp"
#include "scanet/rng.hpp"

namespace scanet::nn {

enum class Init { Zeros, Ones, TruncNormal02, XavierUniform };

// Named parameter registry. Names are dotted paths ("backbone.rgb.block0.qkv_w",
// "scam.0.kv_r_w", "head_rgb.cls.conv2_b") so checkpoints can be loaded
// partially by namespace.
class ParamStore {
 public:
  NodePtr create(const std::string& name, int rows, int cols, Init init, Rng& rng);
  NodePtr create(const std::string& name, Mat value);

  bool has(const std::string& name) const { return params_.count(name) > 0; }
  NodePtr get(const std::string& name) const;
  const std::vector<std::string>& names() const { return order_; }
  size_t size() const { return order_.size(); }

  void zero_grads();

  // Parameters whose name starts with the given dotted prefix.
  std::vector<NodePtr> group(const std::string& prefix) const;
  std::vector<NodePtr> all() const;

  std::map<std::string, Mat> snapshot() const;
  void restore(const std::map<std::string, Mat>& snap);

 private:
  std::map<std::string, NodePtr> params_;
  std::vector<std::string> order_;
};

// Flat named-parameter checkpoint archive.
//
// Binary layout (little endian):
//   8 bytes   magic "SCNCKPT1"
//   u32       format version (currently 1)
//   u32       metadata length in bytes, followed by that many bytes of JSON
//   u64       parameter count
//   repeated: u32 name length, name bytes, u64 rows, u64 cols,
//             rows*cols f64 values in row-major order
void save_checkpoint(const std::string& path, const ParamStore& store,
                     const std::string& meta_json);

struct Checkpoint {
  std::string meta_json;
  std::map<std::string, Mat> tensors;
};

Checkpoint load_checkpoint(const std::string& path);

// Copies checkpoint tensors into the store. Every store parameter must be
// present with a matching shape, except parameters under `optional_prefixes`
// (ablation configs may drop whole namespaces). Extra checkpoint tensors are
// ignored. Returns the names that were left at their initialized values.
std::vector<std::string> load_into_store(const Checkpoint& ckpt, ParamStore& store,
                                         const std::vector<std::string>& optional_prefixes);

}  // namespace scanet::nn
