#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "scanet/common.hpp"

namespace scanet::nn {

using Mat = Eigen::MatrixXd;

class Node;
using NodePtr = std::shared_ptr<Node>;

// One value in a reverse-mode autodiff graph. Values are dense double
// matrices; token sequences are (N, C), score maps are (H*W, channels),
// scalars are (1, 1). Nodes are created per forward pass; parameter leaves
// persist across passes and accumulate gradients until zeroed.
class Node {
 public:
  Mat value;
  Mat grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backprop;  // pulls this->grad into parents

  explicit Node(Mat v) : value(std::move(v)) {}

  void accumulate(const Mat& g) {
    if (grad.size() == 0) grad = Mat::Zero(value.rows(), value.cols());
    grad += g;
  }

  void zero_grad() { grad.setZero(); }

  int rows() const { return static_cast<int>(value.rows()); }
  int cols() const { return static_cast<int>(value.cols()); }
};

// Gradient recording is on by default; suspend it around inference-only
// forwards so no graph is retained.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool saved_;
};

NodePtr make_const(Mat v);
NodePtr make_param(Mat v);

// Generic op constructor for modules that define their own fused ops (the
// loss functions do). `backprop` may be empty for non-differentiable ops.
NodePtr make_op(Mat value, std::vector<NodePtr> parents, std::function<void(Node&)> backprop);

// ---- arithmetic ----
NodePtr add(const NodePtr& a, const NodePtr& b);
NodePtr sub(const NodePtr& a, const NodePtr& b);
NodePtr hadamard(const NodePtr& a, const NodePtr& b);
NodePtr scale(const NodePtr& a, double s);

// ---- linear algebra ----
NodePtr matmul(const NodePtr& a, const NodePtr& b);     // a * b
NodePtr matmul_nt(const NodePtr& a, const NodePtr& b);  // a * b^T
NodePtr add_row(const NodePtr& a, const NodePtr& bias); // bias (1, C) broadcast over rows

// ---- activations ----
NodePtr relu(const NodePtr& a);
NodePtr gelu(const NodePtr& a);  // exact erf form
NodePtr sigmoid(const NodePtr& a);
NodePtr softmax_rows(const NodePtr& a);

// Pre-norm layer norm over each row; gamma/beta are (1, C).
NodePtr layer_norm(const NodePtr& a, const NodePtr& gamma, const NodePtr& beta,
                   double eps = 1e-6);

// ---- shape ----
NodePtr slice_rows(const NodePtr& a, int r0, int n);
NodePtr slice_cols(const NodePtr& a, int c0, int n);
NodePtr vstack(const NodePtr& a, const NodePtr& b);
NodePtr hstack(const std::vector<NodePtr>& parts);
NodePtr gather_row(const NodePtr& a, int row);  // (1, C)

// ---- reductions ----
NodePtr sum_all(const NodePtr& a);   // (1, 1)
NodePtr mean_all(const NodePtr& a);  // (1, 1)

// 3x3 same-padding convolution over a row-major spatial grid.
// x is (h*w, c_in) with row index = y*w + x; weight is (9*c_in, c_out)
// with kernel-position-major column blocks; bias is (1, c_out).
NodePtr conv3x3(const NodePtr& x, const NodePtr& weight, const NodePtr& bias, int h, int w);

// Runs reverse-mode accumulation from a scalar root. Parameter leaves keep
// their grads (accumulating across calls) until zeroed.
void backward(const NodePtr& root);

// GELU pieces shared with test oracles.
double gelu_scalar(double x);

}  // namespace scanet::nn
