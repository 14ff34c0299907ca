#include "scanet/scam.hpp"

#include <cmath>

namespace scanet {

using nn::NodePtr;

Scam::Scam(const std::string& name, int dim, ScamOptions opts, ScamInit init,
           nn::ParamStore& store, Rng& rng)
    : dim_(dim), opts_(opts) {
  check(dim >= 1, "scam: dim must be >= 1");
  check(opts_.gim_hidden_ratio >= 1, "scam: gim hidden ratio must be >= 1");
  const int hidden = dim * opts_.gim_hidden_ratio;

  const nn::Init kv_init = init == ScamInit::Zero ? nn::Init::Zeros : nn::Init::TruncNormal02;
  const nn::Init fc1_init = init == ScamInit::Zero ? nn::Init::Zeros : nn::Init::XavierUniform;
  kv_rgb_w_ = store.create(name + ".kv_r_w", dim, 2 * dim, kv_init, rng);
  kv_son_w_ = store.create(name + ".kv_s_w", dim, 2 * dim, kv_init, rng);

  auto make_gim = [&](const std::string& prefix) {
    GimParams g;
    g.fc1_w = store.create(prefix + ".fc1_w", dim, hidden, fc1_init, rng);
    g.fc1_b = store.create(prefix + ".fc1_b", 1, hidden, nn::Init::Zeros, rng);
    // second layer starts at zero either way so a fresh module begins as a
    // pure attention residual
    g.fc2_w = store.create(prefix + ".fc2_w", hidden, dim, nn::Init::Zeros, rng);
    g.fc2_b = store.create(prefix + ".fc2_b", 1, dim, nn::Init::Zeros, rng);
    return g;
  };
  gim_rgb_ = make_gim(name + ".gim_r");
  gim_son_ = make_gim(name + ".gim_s");

  if (opts_.pre_norm) {
    norm_rgb_g_ = store.create(name + ".norm_r_g", 1, dim, nn::Init::Ones, rng);
    norm_rgb_b_ = store.create(name + ".norm_r_b", 1, dim, nn::Init::Zeros, rng);
    norm_son_g_ = store.create(name + ".norm_s_g", 1, dim, nn::Init::Ones, rng);
    norm_son_b_ = store.create(name + ".norm_s_b", 1, dim, nn::Init::Zeros, rng);
  }
}

std::pair<NodePtr, NodePtr> Scam::sca_forward(const nn::NodePtr& h_rgb,
                                              const nn::NodePtr& h_son) const {
  check(h_rgb->rows() == h_son->rows() && h_rgb->cols() == h_son->cols(),
        "scam: modality token shapes differ");
  check(h_rgb->cols() == dim_, "scam: token dim mismatch");

  NodePtr q_r = h_rgb;  // the Q path has no learned projection
  NodePtr q_s = h_son;
  if (opts_.pre_norm) {
    q_r = nn::layer_norm(h_rgb, norm_rgb_g_, norm_rgb_b_);
    q_s = nn::layer_norm(h_son, norm_son_g_, norm_son_b_);
  }

  NodePtr kv_r = nn::matmul(h_rgb, kv_rgb_w_);
  NodePtr kv_s = nn::matmul(h_son, kv_son_w_);
  NodePtr k_r = nn::slice_cols(kv_r, 0, dim_);
  NodePtr v_r = nn::slice_cols(kv_r, dim_, dim_);
  NodePtr k_s = nn::slice_cols(kv_s, 0, dim_);
  NodePtr v_s = nn::slice_cols(kv_s, dim_, dim_);

  const double inv_sqrt_c = 1.0 / std::sqrt(static_cast<double>(dim_));
  auto gate = [&](const NodePtr& scores) {
    return opts_.gate == ScamGate::Relu ? nn::relu(scores) : nn::softmax_rows(scores);
  };
  // own-modality queries and values, other-modality keys
  NodePtr attn_r = gate(nn::scale(nn::matmul_nt(q_r, k_s), inv_sqrt_c));
  NodePtr attn_s = gate(nn::scale(nn::matmul_nt(q_s, k_r), inv_sqrt_c));
  NodePtr out_r = nn::add(nn::matmul(attn_r, v_r), h_rgb);
  NodePtr out_s = nn::add(nn::matmul(attn_s, v_s), h_son);
  return {out_r, out_s};
}

NodePtr Scam::gim_apply(const nn::NodePtr& h, const GimParams& g) const {
  NodePtr mid = nn::gelu(nn::add_row(nn::matmul(h, g.fc1_w), g.fc1_b));
  return nn::add_row(nn::matmul(mid, g.fc2_w), g.fc2_b);
}

NodePtr Scam::gim_forward(const nn::NodePtr& h_attn, const nn::NodePtr& h_residual,
                          Branch branch) const {
  const GimParams& g = branch == Branch::Rgb ? gim_rgb_ : gim_son_;
  return nn::add(gim_apply(h_attn, g), h_residual);
}

std::pair<NodePtr, NodePtr> Scam::forward(const nn::NodePtr& h_rgb,
                                          const nn::NodePtr& h_son) const {
  auto [attn_r, attn_s] = sca_forward(h_rgb, h_son);
  if (!opts_.use_gim) return {attn_r, attn_s};
  const NodePtr& res_r = opts_.residual_from_attn ? attn_r : h_rgb;
  const NodePtr& res_s = opts_.residual_from_attn ? attn_s : h_son;
  return {gim_forward(attn_r, res_r, Branch::Rgb), gim_forward(attn_s, res_s, Branch::Sonar)};
}

std::pair<TokenSeq, TokenSeq> Scam::forward(const TokenSeq& h_rgb, const TokenSeq& h_son) const {
  auto [r, s] = forward(h_rgb.tokens, h_son.tokens);
  return {TokenSeq{r, h_rgb.n_z, h_rgb.n_x}, TokenSeq{s, h_son.n_z, h_son.n_x}};
}

}  // namespace scanet
