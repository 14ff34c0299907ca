#pragma once

#include <string>
#include <utility>

#include "scanet/backbone.hpp"
#include "scanet/nn/params.hpp"

namespace scanet {

// Gate applied to the cross-modal attention map. ReLU is the full design;
// Softmax is the ablation variant without background suppression.
enum class ScamGate { Relu, Softmax };

struct ScamOptions {
  ScamGate gate = ScamGate::Relu;
  bool use_gim = true;
  // The integration residual adds the module input by default; set to true
  // to add the post-attention features instead.
  bool residual_from_attn = false;
  bool pre_norm = false;  // optional normalization of the Q path, off by default
  int gim_hidden_ratio = 4;
};

// All-zero parameters make the module an exact identity, so it can be
// inserted into a pretrained stack without disturbing it.
enum class ScamInit { Zero, Random };

// Spatial cross-attention module: a gated cross-modal spatial attention
// layer followed by two independent global integration modules. Each
// branch queries with its own tokens against the other branch's keys and
// aggregates its own values:
//
//   attn_r = gate(Q_r K_s^T / sqrt(C)) V_r + H_r
//   out_r  = GIM_r(attn_r) + H_r
//
// and symmetrically for the other branch.
class Scam {
 public:
  Scam(const std::string& name, int dim, ScamOptions opts, ScamInit init, nn::ParamStore& store,
       Rng& rng);

  // cross-attention layer only (gate + own-value aggregation + residual)
  std::pair<nn::NodePtr, nn::NodePtr> sca_forward(const nn::NodePtr& h_rgb,
                                                  const nn::NodePtr& h_son) const;

  // GIM(h_attn) + h_residual for one branch
  nn::NodePtr gim_forward(const nn::NodePtr& h_attn, const nn::NodePtr& h_residual,
                          Branch branch) const;

  std::pair<nn::NodePtr, nn::NodePtr> forward(const nn::NodePtr& h_rgb,
                                              const nn::NodePtr& h_son) const;
  std::pair<TokenSeq, TokenSeq> forward(const TokenSeq& h_rgb, const TokenSeq& h_son) const;

  const ScamOptions& options() const { return opts_; }
  int dim() const { return dim_; }

 private:
  struct GimParams {
    nn::NodePtr fc1_w, fc1_b, fc2_w, fc2_b;
  };

  nn::NodePtr gim_apply(const nn::NodePtr& h, const GimParams& g) const;

  int dim_;
  ScamOptions opts_;
  nn::NodePtr kv_rgb_w_, kv_son_w_;  // C -> 2C, no bias
  nn::NodePtr norm_rgb_g_, norm_rgb_b_, norm_son_g_, norm_son_b_;  // only when pre_norm
  GimParams gim_rgb_, gim_son_;
};

}  // namespace scanet
