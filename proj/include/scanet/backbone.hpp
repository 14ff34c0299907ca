#pragma once

#include <opencv2/core.hpp>
#include <utility>
#include <vector>

#include "scanet/image.hpp"
#include "scanet/nn/params.hpp"

namespace scanet {

class Scam;

enum class Branch { Rgb, Sonar };
enum class Role { Template, Search };

// Concatenated template+search token sequence for one modality branch.
// Layout is [Z; X]: template tokens first.
struct TokenSeq {
  nn::NodePtr tokens;  // (N, C), N = n_z + n_x
  int n_z = 0;
  int n_x = 0;

  int n() const { return n_z + n_x; }
};

struct BackboneConfig {
  int depth = 12;
  int dim = 192;
  int heads = 3;
  int patch = 16;
  std::vector<int> scam_layers = {4, 7, 10};  // 1-based block indices
  int template_size = 128;
  int search_size = 256;
  bool share_branches = false;

  int template_grid() const { return template_size / patch; }
  int search_grid() const { return search_size / patch; }
  int template_tokens() const { return template_grid() * template_grid(); }
  int search_tokens() const { return search_grid() * search_grid(); }
  void validate() const;
};

struct BlockParams {
  nn::NodePtr ln1_g, ln1_b, qkv_w, qkv_b, proj_w, proj_b;
  nn::NodePtr ln2_g, ln2_b, fc1_w, fc1_b, fc2_w, fc2_b;
};

// Pre-norm transformer block with joint attention over all template+search
// tokens, GELU feed-forward (hidden 4C), residual additions. Shape preserving.
TokenSeq joint_attention_block(const TokenSeq& h, const BlockParams& p, int heads);

// Two parallel per-modality transformer stacks with shared patch embedding
// logic and optional cross-modal modules inserted between blocks.
class Backbone {
 public:
  Backbone(BackboneConfig cfg, nn::ParamStore& store, Rng& rng);

  const BackboneConfig& config() const { return cfg_; }

  // patch embedding + learned positional table (separate tables per role)
  nn::NodePtr embed(const cv::Mat& crop, Branch branch, Role role) const;
  TokenSeq embed_pair(const cv::Mat& tmpl, const cv::Mat& search, Branch branch) const;

  TokenSeq block_forward(const TokenSeq& h, Branch branch, int layer) const;  // layer 0-based

  // Runs `depth` blocks per branch; after each 1-based layer index listed in
  // cfg.scam_layers, applies the matching cross-modal module from `scams`.
  // `scams` must have exactly one entry per configured insertion point.
  std::pair<TokenSeq, TokenSeq> forward_dual(const TokenSeq& h_rgb, const TokenSeq& h_son,
                                             const std::vector<const Scam*>& scams) const;

  const BlockParams& block(Branch branch, int layer) const;

 private:
  struct BranchParams {
    nn::NodePtr embed_w, embed_b, pos_z, pos_x;
    std::vector<BlockParams> blocks;
  };

  const BranchParams& branch(Branch b) const {
    return (b == Branch::Sonar && !cfg_.share_branches) ? son_ : rgb_;
  }

  BackboneConfig cfg_;
  BranchParams rgb_, son_;  // son_ unused when branches are shared
};

// Bilinear resampling of a learned positional table between square grids,
// used when a checkpoint was trained at a different crop size.
nn::Mat interpolate_pos_table(const nn::Mat& table, int from_grid, int to_grid);

}  // namespace scanet
