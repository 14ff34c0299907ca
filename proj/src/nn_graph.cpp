#include "scanet/nn/graph.hpp"

#include <cmath>
#include <unordered_set>

namespace scanet::nn {

namespace {

thread_local bool g_grad_enabled = true;

void check_same_shape(const NodePtr& a, const NodePtr& b, const char* op) {
  check(a->rows() == b->rows() && a->cols() == b->cols(),
        std::string(op) + ": shape mismatch (" + std::to_string(a->rows()) + "x" +
            std::to_string(a->cols()) + " vs " + std::to_string(b->rows()) + "x" +
            std::to_string(b->cols()) + ")");
}

bool any_requires_grad(const std::vector<NodePtr>& parents) {
  for (const auto& p : parents)
    if (p->requires_grad) return true;
  return false;
}

}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : saved_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = saved_; }

NodePtr make_const(Mat v) { return std::make_shared<Node>(std::move(v)); }

NodePtr make_param(Mat v) {
  auto n = std::make_shared<Node>(std::move(v));
  n->requires_grad = true;
  return n;
}

NodePtr make_op(Mat value, std::vector<NodePtr> parents, std::function<void(Node&)> backprop) {
  auto n = std::make_shared<Node>(std::move(value));
  if (g_grad_enabled && any_requires_grad(parents)) {
    n->requires_grad = true;
    n->parents = std::move(parents);
    n->backprop = std::move(backprop);
  }
  return n;
}

NodePtr add(const NodePtr& a, const NodePtr& b) {
  check_same_shape(a, b, "add");
  return make_op(a->value + b->value, {a, b}, [a = a.get(), b = b.get()](Node& n) {
    if (a->requires_grad) a->accumulate(n.grad);
    if (b->requires_grad) b->accumulate(n.grad);
  });
}

NodePtr sub(const NodePtr& a, const NodePtr& b) {
  check_same_shape(a, b, "sub");
  return make_op(a->value - b->value, {a, b}, [a = a.get(), b = b.get()](Node& n) {
    if (a->requires_grad) a->accumulate(n.grad);
    if (b->requires_grad) b->accumulate(-n.grad);
  });
}

NodePtr hadamard(const NodePtr& a, const NodePtr& b) {
  check_same_shape(a, b, "hadamard");
  return make_op(a->value.cwiseProduct(b->value), {a, b}, [a = a.get(), b = b.get()](Node& n) {
    if (a->requires_grad) a->accumulate(n.grad.cwiseProduct(b->value));
    if (b->requires_grad) b->accumulate(n.grad.cwiseProduct(a->value));
  });
}

NodePtr scale(const NodePtr& a, double s) {
  return make_op(a->value * s, {a}, [a = a.get(), s](Node& n) {
    if (a->requires_grad) a->accumulate(n.grad * s);
  });
}

NodePtr matmul(const NodePtr& a, const NodePtr& b) {
  check(a->cols() == b->rows(), "matmul: inner dimension mismatch");
  return make_op(a->value * b->value, {a, b}, [a = a.get(), b = b.get()](Node& n) {
    if (a->requires_grad) a->accumulate(n.grad * b->value.transpose());
    if (b->requires_grad) b->accumulate(a->value.transpose() * n.grad);
  });
}

NodePtr matmul_nt(const NodePtr& a, const NodePtr& b) {
  check(a->cols() == b->cols(), "matmul_nt: inner dimension mismatch");
  return make_op(a->value * b->value.transpose(), {a, b}, [a = a.get(), b = b.get()](Node& n) {
    if (a->requires_grad) a->accumulate(n.grad * b->value);
    if (b->requires_grad) b->accumulate(n.grad.transpose() * a->value);
  });
}

NodePtr add_row(const NodePtr& a, const NodePtr& bias) {
  check(bias->rows() == 1 && bias->cols() == a->cols(), "add_row: bias must be (1, C)");
  Mat v = a->value;
  v.rowwise() += bias->value.row(0);
  return make_op(std::move(v), {a, bias}, [a = a.get(), bias = bias.get()](Node& n) {
    if (a->requires_grad) a->accumulate(n.grad);
    if (bias->requires_grad) bias->accumulate(n.grad.colwise().sum());
  });
}

NodePtr relu(const NodePtr& a) {
  return make_op(a->value.cwiseMax(0.0), {a}, [a = a.get()](Node& n) {
    if (!a->requires_grad) return;
    Mat mask = (a->value.array() > 0.0).cast<double>().matrix();
    a->accumulate(n.grad.cwiseProduct(mask));
  });
}

double gelu_scalar(double x) { return 0.5 * x * std::erfc(-x * M_SQRT1_2); }

namespace {
double gelu_grad_scalar(double x) {
  const double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  const double Phi = 0.5 * std::erfc(-x * M_SQRT1_2);
  return Phi + x * phi;
}
}  // namespace

NodePtr gelu(const NodePtr& a) {
  Mat v = a->value.unaryExpr([](double x) { return gelu_scalar(x); });
  return make_op(std::move(v), {a}, [a = a.get()](Node& n) {
    if (!a->requires_grad) return;
    Mat d = a->value.unaryExpr([](double x) { return gelu_grad_scalar(x); });
    a->accumulate(n.grad.cwiseProduct(d));
  });
}

NodePtr sigmoid(const NodePtr& a) {
  Mat v = a->value.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  auto n = make_op(v, {a}, nullptr);
  if (n->requires_grad) {
    n->backprop = [a = a.get(), v = n->value](Node& n2) {
      Mat d = v.cwiseProduct((1.0 - v.array()).matrix());
      a->accumulate(n2.grad.cwiseProduct(d));
    };
  }
  return n;
}

NodePtr softmax_rows(const NodePtr& a) {
  Mat v(a->rows(), a->cols());
  for (int r = 0; r < a->rows(); ++r) {
    const double m = a->value.row(r).maxCoeff();
    Eigen::RowVectorXd e = (a->value.row(r).array() - m).exp();
    v.row(r) = e / e.sum();
  }
  auto n = make_op(v, {a}, nullptr);
  if (n->requires_grad) {
    n->backprop = [a = a.get(), y = n->value](Node& n2) {
      Mat dx(y.rows(), y.cols());
      for (int r = 0; r < y.rows(); ++r) {
        const double dot = n2.grad.row(r).dot(y.row(r));
        dx.row(r) = y.row(r).cwiseProduct((n2.grad.row(r).array() - dot).matrix());
      }
      a->accumulate(dx);
    };
  }
  return n;
}

NodePtr layer_norm(const NodePtr& a, const NodePtr& gamma, const NodePtr& beta, double eps) {
  check(gamma->rows() == 1 && gamma->cols() == a->cols(), "layer_norm: gamma must be (1, C)");
  check(beta->rows() == 1 && beta->cols() == a->cols(), "layer_norm: beta must be (1, C)");
  const int rows = a->rows();
  const int c = a->cols();
  Mat xhat(rows, c);
  Eigen::VectorXd inv_std(rows);
  for (int r = 0; r < rows; ++r) {
    const double mu = a->value.row(r).mean();
    const double var = (a->value.row(r).array() - mu).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (a->value.row(r).array() - mu) * inv_std(r);
  }
  Mat v = xhat;
  for (int r = 0; r < rows; ++r)
    v.row(r) = v.row(r).cwiseProduct(gamma->value.row(0)) + beta->value.row(0);
  return make_op(std::move(v), {a, gamma, beta},
                 [a = a.get(), gamma = gamma.get(), beta = beta.get(), xhat, inv_std](Node& n) {
                   const int rows = static_cast<int>(xhat.rows());
                   const int c = static_cast<int>(xhat.cols());
                   if (beta->requires_grad) beta->accumulate(n.grad.colwise().sum());
                   if (gamma->requires_grad)
                     gamma->accumulate(n.grad.cwiseProduct(xhat).colwise().sum());
                   if (!a->requires_grad) return;
                   Mat dx(rows, c);
                   for (int r = 0; r < rows; ++r) {
                     Eigen::RowVectorXd dxhat =
                         n.grad.row(r).cwiseProduct(gamma->value.row(0));
                     const double m1 = dxhat.mean();
                     const double m2 = dxhat.cwiseProduct(xhat.row(r)).mean();
                     dx.row(r) =
                         (inv_std(r) * (dxhat.array() - m1 - xhat.row(r).array() * m2))
                             .matrix();
                   }
                   a->accumulate(dx);
                 });
}

NodePtr slice_rows(const NodePtr& a, int r0, int n) {
  check(r0 >= 0 && n >= 0 && r0 + n <= a->rows(), "slice_rows: out of range");
  return make_op(a->value.middleRows(r0, n), {a}, [a = a.get(), r0, n](Node& nd) {
    if (!a->requires_grad) return;
    Mat g = Mat::Zero(a->rows(), a->cols());
    g.middleRows(r0, n) = nd.grad;
    a->accumulate(g);
  });
}

NodePtr slice_cols(const NodePtr& a, int c0, int n) {
  check(c0 >= 0 && n >= 0 && c0 + n <= a->cols(), "slice_cols: out of range");
  return make_op(a->value.middleCols(c0, n), {a}, [a = a.get(), c0, n](Node& nd) {
    if (!a->requires_grad) return;
    Mat g = Mat::Zero(a->rows(), a->cols());
    g.middleCols(c0, n) = nd.grad;
    a->accumulate(g);
  });
}

NodePtr vstack(const NodePtr& a, const NodePtr& b) {
  check(a->cols() == b->cols(), "vstack: column mismatch");
  Mat v(a->rows() + b->rows(), a->cols());
  v << a->value, b->value;
  return make_op(std::move(v), {a, b}, [a = a.get(), b = b.get()](Node& n) {
    if (a->requires_grad) a->accumulate(n.grad.topRows(a->rows()));
    if (b->requires_grad) b->accumulate(n.grad.bottomRows(b->rows()));
  });
}

NodePtr hstack(const std::vector<NodePtr>& parts) {
  check(!parts.empty(), "hstack: empty");
  int cols = 0;
  for (const auto& p : parts) {
    check(p->rows() == parts[0]->rows(), "hstack: row mismatch");
    cols += p->cols();
  }
  Mat v(parts[0]->rows(), cols);
  int at = 0;
  for (const auto& p : parts) {
    v.middleCols(at, p->cols()) = p->value;
    at += p->cols();
  }
  std::vector<NodePtr> parent_copy = parts;
  return make_op(std::move(v), parent_copy, [parts](Node& n) {
    int at = 0;
    for (const auto& p : parts) {
      if (p->requires_grad) p->accumulate(n.grad.middleCols(at, p->cols()));
      at += p->cols();
    }
  });
}

NodePtr gather_row(const NodePtr& a, int row) {
  check(row >= 0 && row < a->rows(), "gather_row: out of range");
  return make_op(a->value.row(row), {a}, [a = a.get(), row](Node& n) {
    if (!a->requires_grad) return;
    Mat g = Mat::Zero(a->rows(), a->cols());
    g.row(row) = n.grad;
    a->accumulate(g);
  });
}

NodePtr sum_all(const NodePtr& a) {
  Mat v(1, 1);
  v(0, 0) = a->value.sum();
  return make_op(std::move(v), {a}, [a = a.get()](Node& n) {
    if (a->requires_grad)
      a->accumulate(Mat::Constant(a->rows(), a->cols(), n.grad(0, 0)));
  });
}

NodePtr mean_all(const NodePtr& a) {
  const double inv = 1.0 / static_cast<double>(a->value.size());
  Mat v(1, 1);
  v(0, 0) = a->value.sum() * inv;
  return make_op(std::move(v), {a}, [a = a.get(), inv](Node& n) {
    if (a->requires_grad)
      a->accumulate(Mat::Constant(a->rows(), a->cols(), n.grad(0, 0) * inv));
  });
}

namespace {
// kernel-position-major im2col for a 3x3 same-padding conv
Mat im2col3x3(const Mat& x, int h, int w) {
  const int cin = static_cast<int>(x.cols());
  Mat m = Mat::Zero(h * w, 9 * cin);
  for (int y = 0; y < h; ++y) {
    for (int xx = 0; xx < w; ++xx) {
      const int r = y * w + xx;
      for (int ky = 0; ky < 3; ++ky) {
        const int sy = y + ky - 1;
        if (sy < 0 || sy >= h) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int sx = xx + kx - 1;
          if (sx < 0 || sx >= w) continue;
          m.block(r, (ky * 3 + kx) * cin, 1, cin) = x.row(sy * w + sx);
        }
      }
    }
  }
  return m;
}
}  // namespace

NodePtr conv3x3(const NodePtr& x, const NodePtr& weight, const NodePtr& bias, int h, int w) {
  const int cin = x->cols();
  check(x->rows() == h * w, "conv3x3: grid size mismatch");
  check(weight->rows() == 9 * cin, "conv3x3: weight rows must be 9*c_in");
  check(bias->rows() == 1 && bias->cols() == weight->cols(), "conv3x3: bias shape");
  Mat m = im2col3x3(x->value, h, w);
  Mat v = m * weight->value;
  v.rowwise() += bias->value.row(0);
  return make_op(std::move(v), {x, weight, bias},
                 [x = x.get(), weight = weight.get(), bias = bias.get(), m, h, w, cin](Node& n) {
                   if (bias->requires_grad) bias->accumulate(n.grad.colwise().sum());
                   if (weight->requires_grad) weight->accumulate(m.transpose() * n.grad);
                   if (!x->requires_grad) return;
                   Mat dm = n.grad * weight->value.transpose();
                   Mat dx = Mat::Zero(h * w, cin);
                   for (int y = 0; y < h; ++y) {
                     for (int xx = 0; xx < w; ++xx) {
                       const int r = y * w + xx;
                       for (int ky = 0; ky < 3; ++ky) {
                         const int sy = y + ky - 1;
                         if (sy < 0 || sy >= h) continue;
                         for (int kx = 0; kx < 3; ++kx) {
                           const int sx = xx + kx - 1;
                           if (sx < 0 || sx >= w) continue;
                           dx.row(sy * w + sx) += dm.block(r, (ky * 3 + kx) * cin, 1, cin);
                         }
                       }
                     }
                   }
                   x->accumulate(dx);
                 });
}

void backward(const NodePtr& root) {
  check(root->rows() == 1 && root->cols() == 1, "backward: root must be scalar");
  if (!root->requires_grad) return;

  // iterative postorder DFS over grad-requiring ancestry
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  struct Frame {
    Node* node;
    size_t next_parent;
  };
  std::vector<Frame> stack{{root.get(), 0}};
  visited.insert(root.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      Node* p = f.node->parents[f.next_parent++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }

  root->accumulate(Mat::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backprop && n->grad.size() != 0) n->backprop(*n);
  }
}

}  // namespace scanet::nn
