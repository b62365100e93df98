#include "geots/nn/tensor.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace geots::nn {

namespace {

std::atomic<int> g_next_id{1};

std::shared_ptr<Node> make_node(Mat value, const char* op,
                                std::vector<std::shared_ptr<Node>> parents) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->op = op;
  n->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  n->parents = std::move(parents);
  for (const auto& p : n->parents)
    if (p->requires_grad) n->requires_grad = true;
  return n;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream os;
    os << op << ": shape mismatch (" << a.rows() << "x" << a.cols() << " vs "
       << b.rows() << "x" << b.cols() << ")";
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

Tensor Tensor::constant(Mat v) {
  return Tensor(make_node(std::move(v), "const", {}));
}

Tensor Tensor::scalar(double v) { return constant(Mat::Constant(1, 1, v)); }

Tensor Tensor::param(Mat v) {
  auto n = make_node(std::move(v), "param", {});
  n->requires_grad = true;
  n->ensure_grad();
  return Tensor(n);
}

double Tensor::item() const {
  if (rows() != 1 || cols() != 1)
    throw std::logic_error("Tensor::item: tensor is not 1x1");
  return node_->value(0, 0);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    std::ostringstream os;
    os << "matmul: inner dimensions differ (" << a.rows() << "x" << a.cols()
       << " * " << b.rows() << "x" << b.cols() << ")";
    throw std::invalid_argument(os.str());
  }
  auto n = make_node(a.value() * b.value(), "matmul", {a.node(), b.node()});
  Node* an = a.node().get(); Node* bn = b.node().get(); Node* out = n.get();
  n->backward = [an, bn, out]() {
    if (an->requires_grad) {
      an->ensure_grad();
      an->grad.noalias() += out->grad * bn->value.transpose();
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      bn->grad.noalias() += an->value.transpose() * out->grad;
    }
  };
  return Tensor(n);
}

Tensor operator+(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  auto n = make_node(a.value() + b.value(), "add", {a.node(), b.node()});
  Node* an = a.node().get(); Node* bn = b.node().get(); Node* out = n.get();
  n->backward = [an, bn, out]() {
    if (an->requires_grad) { an->ensure_grad(); an->grad += out->grad; }
    if (bn->requires_grad) { bn->ensure_grad(); bn->grad += out->grad; }
  };
  return Tensor(n);
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  auto n = make_node(a.value() - b.value(), "sub", {a.node(), b.node()});
  Node* an = a.node().get(); Node* bn = b.node().get(); Node* out = n.get();
  n->backward = [an, bn, out]() {
    if (an->requires_grad) { an->ensure_grad(); an->grad += out->grad; }
    if (bn->requires_grad) { bn->ensure_grad(); bn->grad -= out->grad; }
  };
  return Tensor(n);
}

Tensor operator-(const Tensor& a) { return scale(a, -1.0); }

Tensor hadamard(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "hadamard");
  auto n = make_node(a.value().cwiseProduct(b.value()), "hadamard",
                     {a.node(), b.node()});
  Node* an = a.node().get(); Node* bn = b.node().get(); Node* out = n.get();
  n->backward = [an, bn, out]() {
    if (an->requires_grad) {
      an->ensure_grad();
      an->grad += out->grad.cwiseProduct(bn->value);
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      bn->grad += out->grad.cwiseProduct(an->value);
    }
  };
  return Tensor(n);
}

Tensor scale(const Tensor& a, double s) {
  auto n = make_node(a.value() * s, "scale", {a.node()});
  Node* an = a.node().get(); Node* out = n.get();
  n->backward = [an, out, s]() {
    if (an->requires_grad) { an->ensure_grad(); an->grad += out->grad * s; }
  };
  return Tensor(n);
}

Tensor add_scalar(const Tensor& a, double s) {
  auto n = make_node(a.value().array() + s, "add_scalar", {a.node()});
  Node* an = a.node().get(); Node* out = n.get();
  n->backward = [an, out]() {
    if (an->requires_grad) { an->ensure_grad(); an->grad += out->grad; }
  };
  return Tensor(n);
}

Tensor add_rowwise(const Tensor& a, const Tensor& row) {
  if (row.rows() != 1 || row.cols() != a.cols())
    throw std::invalid_argument("add_rowwise: row must be 1 x cols(a)");
  Mat v = a.value();
  v.rowwise() += row.value().row(0);
  auto n = make_node(std::move(v), "add_rowwise", {a.node(), row.node()});
  Node* an = a.node().get(); Node* rn = row.node().get(); Node* out = n.get();
  n->backward = [an, rn, out]() {
    if (an->requires_grad) { an->ensure_grad(); an->grad += out->grad; }
    if (rn->requires_grad) {
      rn->ensure_grad();
      rn->grad += out->grad.colwise().sum();
    }
  };
  return Tensor(n);
}

Tensor transpose(const Tensor& a) {
  auto n = make_node(a.value().transpose(), "transpose", {a.node()});
  Node* an = a.node().get(); Node* out = n.get();
  n->backward = [an, out]() {
    if (an->requires_grad) {
      an->ensure_grad();
      an->grad += out->grad.transpose();
    }
  };
  return Tensor(n);
}

Tensor sigmoid(const Tensor& a) {
  Mat v = a.value().unaryExpr([](double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                    : std::exp(x) / (1.0 + std::exp(x));
  });
  auto n = make_node(std::move(v), "sigmoid", {a.node()});
  Node* an = a.node().get(); Node* out = n.get();
  n->backward = [an, out]() {
    if (!an->requires_grad) return;
    an->ensure_grad();
    an->grad.array() +=
        out->grad.array() * out->value.array() * (1.0 - out->value.array());
  };
  return Tensor(n);
}

Tensor tanh_act(const Tensor& a) {
  auto n = make_node(a.value().array().tanh(), "tanh", {a.node()});
  Node* an = a.node().get(); Node* out = n.get();
  n->backward = [an, out]() {
    if (!an->requires_grad) return;
    an->ensure_grad();
    an->grad.array() +=
        out->grad.array() * (1.0 - out->value.array().square());
  };
  return Tensor(n);
}

Tensor relu(const Tensor& a) {
  auto n = make_node(a.value().cwiseMax(0.0), "relu", {a.node()});
  Node* an = a.node().get(); Node* out = n.get();
  n->backward = [an, out]() {
    if (!an->requires_grad) return;
    an->ensure_grad();
    an->grad.array() +=
        out->grad.array() * (an->value.array() > 0.0).cast<double>();
  };
  return Tensor(n);
}

Tensor silu(const Tensor& a) {
  Mat sig = a.value().unaryExpr([](double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                    : std::exp(x) / (1.0 + std::exp(x));
  });
  auto n = make_node(a.value().cwiseProduct(sig), "silu", {a.node()});
  Node* an = a.node().get(); Node* out = n.get();
  n->backward = [an, out, sig]() {
    if (!an->requires_grad) return;
    an->ensure_grad();
    // d/dx x*s(x) = s(x) (1 + x (1 - s(x)))
    an->grad.array() += out->grad.array() * sig.array() *
                        (1.0 + an->value.array() * (1.0 - sig.array()));
  };
  return Tensor(n);
}

Tensor square(const Tensor& a) {
  auto n = make_node(a.value().array().square(), "square", {a.node()});
  Node* an = a.node().get(); Node* out = n.get();
  n->backward = [an, out]() {
    if (!an->requires_grad) return;
    an->ensure_grad();
    an->grad.array() += 2.0 * out->grad.array() * an->value.array();
  };
  return Tensor(n);
}

Tensor softmax_rows(const Tensor& a) {
  Mat v = a.value();
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    const double mx = v.row(r).maxCoeff();
    v.row(r) = (v.row(r).array() - mx).exp();
    v.row(r) /= v.row(r).sum();
  }
  auto n = make_node(std::move(v), "softmax_rows", {a.node()});
  Node* an = a.node().get(); Node* out = n.get();
  n->backward = [an, out]() {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (Eigen::Index r = 0; r < out->value.rows(); ++r) {
      const auto y = out->value.row(r).array();
      const auto g = out->grad.row(r).array();
      const double dot = (y * g).sum();
      an->grad.row(r).array() += y * (g - dot);
    }
  };
  return Tensor(n);
}

Tensor sum_all(const Tensor& a) {
  auto n = make_node(Mat::Constant(1, 1, a.value().sum()), "sum", {a.node()});
  Node* an = a.node().get(); Node* out = n.get();
  n->backward = [an, out]() {
    if (!an->requires_grad) return;
    an->ensure_grad();
    an->grad.array() += out->grad(0, 0);
  };
  return Tensor(n);
}

Tensor mean_all(const Tensor& a) {
  const double inv = 1.0 / static_cast<double>(a.value().size());
  return scale(sum_all(a), inv);
}

Tensor slice_cols(const Tensor& a, int start, int count) {
  if (start < 0 || count < 0 || start + count > a.cols())
    throw std::out_of_range("slice_cols: range out of bounds");
  auto n = make_node(a.value().middleCols(start, count), "slice_cols", {a.node()});
  Node* an = a.node().get(); Node* out = n.get();
  n->backward = [an, out, start, count]() {
    if (!an->requires_grad) return;
    an->ensure_grad();
    an->grad.middleCols(start, count) += out->grad;
  };
  return Tensor(n);
}

Tensor slice_rows(const Tensor& a, int start, int count) {
  if (start < 0 || count < 0 || start + count > a.rows())
    throw std::out_of_range("slice_rows: range out of bounds");
  auto n = make_node(a.value().middleRows(start, count), "slice_rows", {a.node()});
  Node* an = a.node().get(); Node* out = n.get();
  n->backward = [an, out, start, count]() {
    if (!an->requires_grad) return;
    an->ensure_grad();
    an->grad.middleRows(start, count) += out->grad;
  };
  return Tensor(n);
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const auto rows = parts.front().rows();
  Eigen::Index total = 0;
  std::vector<std::shared_ptr<Node>> parents;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("concat_cols: row mismatch");
    total += p.cols();
    parents.push_back(p.node());
  }
  Mat v(rows, total);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    v.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  auto n = make_node(std::move(v), "concat_cols", std::move(parents));
  Node* out = n.get();
  n->backward = [out]() {
    Eigen::Index at = 0;
    for (auto& p : out->parents) {
      const auto w = p->value.cols();
      if (p->requires_grad) {
        p->ensure_grad();
        p->grad += out->grad.middleCols(at, w);
      }
      at += w;
    }
  };
  return Tensor(n);
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  const auto cols = parts.front().cols();
  Eigen::Index total = 0;
  std::vector<std::shared_ptr<Node>> parents;
  for (const auto& p : parts) {
    if (p.cols() != cols) throw std::invalid_argument("concat_rows: column mismatch");
    total += p.rows();
    parents.push_back(p.node());
  }
  Mat v(total, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    v.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  auto n = make_node(std::move(v), "concat_rows", std::move(parents));
  Node* out = n.get();
  n->backward = [out]() {
    Eigen::Index at = 0;
    for (auto& p : out->parents) {
      const auto h = p->value.rows();
      if (p->requires_grad) {
        p->ensure_grad();
        p->grad += out->grad.middleRows(at, h);
      }
      at += h;
    }
  };
  return Tensor(n);
}

Tensor mse(const Tensor& pred, const Mat& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw std::invalid_argument("mse: prediction/target shape mismatch");
  return mean_all(square(pred - Tensor::constant(target)));
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.rows() != 1 || loss.cols() != 1)
    throw std::invalid_argument("backward: loss must be a 1x1 tensor");
  if (!std::isfinite(loss.value()(0, 0)))
    throw std::runtime_error("backward: loss is not finite");

  // topological order by iterative DFS
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{loss.node().get(), 0}};
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (!visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) {
    if (!n->value.allFinite()) {
      std::ostringstream os;
      os << "backward: non-finite value in op '" << n->op << "' (node " << n->id << ")";
      throw std::runtime_error(os.str());
    }
  }

  auto root = loss.node();
  root->ensure_grad();
  root->grad(0, 0) = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && n->requires_grad) {
      n->ensure_grad();
      n->backward();
    }
  }
}

}  // namespace geots::nn
