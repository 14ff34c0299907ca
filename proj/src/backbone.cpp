#include "scanet/backbone.hpp"

#include <cmath>

#include "scanet/scam.hpp"

namespace scanet {

using nn::Mat;
using nn::NodePtr;

void BackboneConfig::validate() const {
  check(depth >= 1, "backbone: depth must be >= 1");
  check(dim >= 1 && heads >= 1 && dim % heads == 0, "backbone: dim must divide by heads");
  check(patch >= 1, "backbone: patch stride must be >= 1");
  check(template_size % patch == 0 && search_size % patch == 0,
        "backbone: crop sizes must be divisible by the patch stride");
  for (int layer : scam_layers)
    check(layer >= 1 && layer <= depth,
          "backbone: scam layer index " + std::to_string(layer) + " outside [1, depth]");
}

TokenSeq joint_attention_block(const TokenSeq& h, const BlockParams& p, int heads) {
  const int c = h.tokens->cols();
  check(p.qkv_w->rows() == c, "joint_attention_block: dim mismatch with block parameters");
  check(c % heads == 0, "joint_attention_block: dim must divide by heads");
  const int dh = c / heads;

  NodePtr x = nn::layer_norm(h.tokens, p.ln1_g, p.ln1_b);
  NodePtr qkv = nn::add_row(nn::matmul(x, p.qkv_w), p.qkv_b);  // (N, 3C)
  NodePtr q = nn::slice_cols(qkv, 0, c);
  NodePtr k = nn::slice_cols(qkv, c, c);
  NodePtr v = nn::slice_cols(qkv, 2 * c, c);

  std::vector<NodePtr> head_out;
  head_out.reserve(heads);
  for (int i = 0; i < heads; ++i) {
    NodePtr qi = nn::slice_cols(q, i * dh, dh);
    NodePtr ki = nn::slice_cols(k, i * dh, dh);
    NodePtr vi = nn::slice_cols(v, i * dh, dh);
    NodePtr attn = nn::softmax_rows(nn::scale(nn::matmul_nt(qi, ki), 1.0 / std::sqrt(dh)));
    head_out.push_back(nn::matmul(attn, vi));
  }
  NodePtr merged = heads == 1 ? head_out[0] : nn::hstack(head_out);
  NodePtr attn_proj = nn::add_row(nn::matmul(merged, p.proj_w), p.proj_b);
  NodePtr h1 = nn::add(h.tokens, attn_proj);

  NodePtr y = nn::layer_norm(h1, p.ln2_g, p.ln2_b);
  NodePtr ff = nn::add_row(
      nn::matmul(nn::gelu(nn::add_row(nn::matmul(y, p.fc1_w), p.fc1_b)), p.fc2_w), p.fc2_b);
  return TokenSeq{nn::add(h1, ff), h.n_z, h.n_x};
}

namespace {

BlockParams create_block(const std::string& prefix, int c, nn::ParamStore& store, Rng& rng) {
  BlockParams b;
  b.ln1_g = store.create(prefix + ".ln1_g", 1, c, nn::Init::Ones, rng);
  b.ln1_b = store.create(prefix + ".ln1_b", 1, c, nn::Init::Zeros, rng);
  b.qkv_w = store.create(prefix + ".qkv_w", c, 3 * c, nn::Init::TruncNormal02, rng);
  b.qkv_b = store.create(prefix + ".qkv_b", 1, 3 * c, nn::Init::Zeros, rng);
  b.proj_w = store.create(prefix + ".proj_w", c, c, nn::Init::TruncNormal02, rng);
  b.proj_b = store.create(prefix + ".proj_b", 1, c, nn::Init::Zeros, rng);
  b.ln2_g = store.create(prefix + ".ln2_g", 1, c, nn::Init::Ones, rng);
  b.ln2_b = store.create(prefix + ".ln2_b", 1, c, nn::Init::Zeros, rng);
  b.fc1_w = store.create(prefix + ".fc1_w", c, 4 * c, nn::Init::TruncNormal02, rng);
  b.fc1_b = store.create(prefix + ".fc1_b", 1, 4 * c, nn::Init::Zeros, rng);
  b.fc2_w = store.create(prefix + ".fc2_w", 4 * c, c, nn::Init::TruncNormal02, rng);
  b.fc2_b = store.create(prefix + ".fc2_b", 1, c, nn::Init::Zeros, rng);
  return b;
}

BlockParams copy_block(const std::string& prefix, const BlockParams& src, nn::ParamStore& store) {
  BlockParams b;
  b.ln1_g = store.create(prefix + ".ln1_g", src.ln1_g->value);
  b.ln1_b = store.create(prefix + ".ln1_b", src.ln1_b->value);
  b.qkv_w = store.create(prefix + ".qkv_w", src.qkv_w->value);
  b.qkv_b = store.create(prefix + ".qkv_b", src.qkv_b->value);
  b.proj_w = store.create(prefix + ".proj_w", src.proj_w->value);
  b.proj_b = store.create(prefix + ".proj_b", src.proj_b->value);
  b.ln2_g = store.create(prefix + ".ln2_g", src.ln2_g->value);
  b.ln2_b = store.create(prefix + ".ln2_b", src.ln2_b->value);
  b.fc1_w = store.create(prefix + ".fc1_w", src.fc1_w->value);
  b.fc1_b = store.create(prefix + ".fc1_b", src.fc1_b->value);
  b.fc2_w = store.create(prefix + ".fc2_w", src.fc2_w->value);
  b.fc2_b = store.create(prefix + ".fc2_b", src.fc2_b->value);
  return b;
}

}  // namespace

Backbone::Backbone(BackboneConfig cfg, nn::ParamStore& store, Rng& rng) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const int c = cfg_.dim;
  const int patch_dim = cfg_.patch * cfg_.patch * 3;

  auto build_branch = [&](const std::string& prefix) {
    BranchParams bp;
    bp.embed_w = store.create(prefix + ".embed_w", patch_dim, c, nn::Init::TruncNormal02, rng);
    bp.embed_b = store.create(prefix + ".embed_b", 1, c, nn::Init::Zeros, rng);
    bp.pos_z = store.create(prefix + ".pos_z", cfg_.template_tokens(), c,
                            nn::Init::TruncNormal02, rng);
    bp.pos_x =
        store.create(prefix + ".pos_x", cfg_.search_tokens(), c, nn::Init::TruncNormal02, rng);
    for (int i = 0; i < cfg_.depth; ++i)
      bp.blocks.push_back(create_block(prefix + ".block" + std::to_string(i), c, store, rng));
    return bp;
  };

  if (cfg_.share_branches) {
    rgb_ = build_branch("backbone.shared");
  } else {
    rgb_ = build_branch("backbone.rgb");
    // the sonar branch starts from the same initialization, then diverges
    BranchParams sp;
    sp.embed_w = store.create("backbone.son.embed_w", rgb_.embed_w->value);
    sp.embed_b = store.create("backbone.son.embed_b", rgb_.embed_b->value);
    sp.pos_z = store.create("backbone.son.pos_z", rgb_.pos_z->value);
    sp.pos_x = store.create("backbone.son.pos_x", rgb_.pos_x->value);
    for (int i = 0; i < cfg_.depth; ++i)
      sp.blocks.push_back(
          copy_block("backbone.son.block" + std::to_string(i), rgb_.blocks[i], store));
    son_ = std::move(sp);
  }
}

NodePtr Backbone::embed(const cv::Mat& crop, Branch br, Role role) const {
  const BranchParams& bp = branch(br);
  Mat patches = image::patch_matrix(crop, cfg_.patch);
  const NodePtr& pos = role == Role::Template ? bp.pos_z : bp.pos_x;
  check(patches.rows() == pos->rows(),
        "backbone: crop token count " + std::to_string(patches.rows()) +
            " does not match positional table " + std::to_string(pos->rows()));
  NodePtr tokens = nn::add_row(nn::matmul(nn::make_const(std::move(patches)), bp.embed_w),
                               bp.embed_b);
  return nn::add(tokens, pos);
}

TokenSeq Backbone::embed_pair(const cv::Mat& tmpl, const cv::Mat& search, Branch br) const {
  NodePtr z = embed(tmpl, br, Role::Template);
  NodePtr x = embed(search, br, Role::Search);
  return TokenSeq{nn::vstack(z, x), static_cast<int>(z->rows()), static_cast<int>(x->rows())};
}

TokenSeq Backbone::block_forward(const TokenSeq& h, Branch br, int layer) const {
  check(layer >= 0 && layer < cfg_.depth, "backbone: layer out of range");
  return joint_attention_block(h, branch(br).blocks[layer], cfg_.heads);
}

std::pair<TokenSeq, TokenSeq> Backbone::forward_dual(const TokenSeq& h_rgb, const TokenSeq& h_son,
                                                     const std::vector<const Scam*>& scams) const {
  check(h_rgb.tokens->rows() == h_son.tokens->rows() &&
            h_rgb.tokens->cols() == h_son.tokens->cols(),
        "forward_dual: branch token shapes differ");
  check(scams.size() == cfg_.scam_layers.size(),
        "forward_dual: got " + std::to_string(scams.size()) + " cross-modal modules for " +
            std::to_string(cfg_.scam_layers.size()) + " insertion points");

  TokenSeq r = h_rgb;
  TokenSeq s = h_son;
  size_t next_scam = 0;
  for (int layer = 0; layer < cfg_.depth; ++layer) {
    r = block_forward(r, Branch::Rgb, layer);
    s = block_forward(s, Branch::Sonar, layer);
    if (next_scam < cfg_.scam_layers.size() && cfg_.scam_layers[next_scam] == layer + 1) {
      std::tie(r, s) = scams[next_scam]->forward(r, s);
      ++next_scam;
    }
  }
  return {r, s};
}

const BlockParams& Backbone::block(Branch br, int layer) const {
  check(layer >= 0 && layer < cfg_.depth, "backbone: layer out of range");
  return branch(br).blocks[layer];
}

nn::Mat interpolate_pos_table(const nn::Mat& table, int from_grid, int to_grid) {
  check(table.rows() == static_cast<Eigen::Index>(from_grid) * from_grid,
        "interpolate_pos_table: table does not match source grid");
  if (from_grid == to_grid) return table;
  const int c = static_cast<int>(table.cols());
  nn::Mat out(to_grid * to_grid, c);
  for (int y = 0; y < to_grid; ++y) {
    for (int x = 0; x < to_grid; ++x) {
      // align corners
      const double sy = to_grid > 1 ? static_cast<double>(y) * (from_grid - 1) / (to_grid - 1)
                                    : 0.0;
      const double sx = to_grid > 1 ? static_cast<double>(x) * (from_grid - 1) / (to_grid - 1)
                                    : 0.0;
      const int y0 = std::min(static_cast<int>(sy), from_grid - 1);
      const int x0 = std::min(static_cast<int>(sx), from_grid - 1);
      const int y1 = std::min(y0 + 1, from_grid - 1);
      const int x1 = std::min(x0 + 1, from_grid - 1);
      const double fy = sy - y0;
      const double fx = sx - x0;
      out.row(y * to_grid + x) =
          (1 - fy) * (1 - fx) * table.row(y0 * from_grid + x0) +
          (1 - fy) * fx * table.row(y0 * from_grid + x1) +
          fy * (1 - fx) * table.row(y1 * from_grid + x0) + fy * fx * table.row(y1 * from_grid + x1);
    }
  }
  return out;
}

}  // namespace scanet
