#include "scanet/nn/optim.hpp"

#include <cmath>

namespace scanet::nn {

void AdamW::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  for (auto& g : groups_) {
    for (auto& p : g.params) {
      if (p->grad.size() == 0) continue;
      auto& slot = slots_[p.get()];
      if (slot.m.size() == 0) {
        slot.m = Mat::Zero(p->rows(), p->cols());
        slot.v = Mat::Zero(p->rows(), p->cols());
      }
      slot.m = beta1_ * slot.m + (1.0 - beta1_) * p->grad;
      slot.v = beta2_ * slot.v + (1.0 - beta2_) * p->grad.cwiseProduct(p->grad);
      const Mat mhat = slot.m / bc1;
      const Mat vhat = slot.v / bc2;
      // decoupled decay: applied directly to weights, not through the moments
      p->value -= g.lr * weight_decay_ * p->value;
      p->value -= g.lr * (mhat.array() / (vhat.array().sqrt() + eps_)).matrix();
    }
  }
}

void AdamW::zero_grad() {
  for (auto& g : groups_)
    for (auto& p : g.params) p->zero_grad();
}

}  // namespace scanet::nn
