#pragma once

#include <unordered_map>
#include <vector>

#include "scanet/nn/graph.hpp"

namespace scanet::nn {

// AdamW with decoupled weight decay. Parameter groups carry their own
// learning rate (the cross-attention module trains slower than the rest).
class AdamW {
 public:
  struct Group {
    std::vector<NodePtr> params;
    double lr = 1e-5;
  };

  explicit AdamW(std::vector<Group> groups, double weight_decay = 1e-4, double beta1 = 0.9,
                 double beta2 = 0.999, double eps = 1e-8)
      : groups_(std::move(groups)),
        weight_decay_(weight_decay),
        beta1_(beta1),
        beta2_(beta2),
        eps_(eps) {}

  void step();
  void zero_grad();
  long step_count() const { return t_; }

 private:
  struct Slot {
    Mat m, v;
  };

  std::vector<Group> groups_;
  std::unordered_map<Node*, Slot> slots_;
  double weight_decay_, beta1_, beta2_, eps_;
  long t_ = 0;
};

}  // namespace scanet::nn
