#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace geots::nn {

using Mat = Eigen::MatrixXd;

/// One node of the reverse-mode tape. Values are dense 2-D matrices; scalars
/// are 1x1. The backward closure pulls this node's gradient into its parents.
struct Node {
  Mat value;
  Mat grad;
  bool requires_grad = false;
  const char* op = "leaf";
  int id = 0;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void()> backward;

  void ensure_grad() {
    if (grad.size() == 0) grad = Mat::Zero(value.rows(), value.cols());
  }
};

/// Lightweight handle to a graph node. Copy freely; ops build new nodes.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

  /// Graph input that gradients do not flow into.
  static Tensor constant(Mat v);
  static Tensor scalar(double v);
  /// Trainable leaf.
  static Tensor param(Mat v);

  bool defined() const { return static_cast<bool>(node_); }
  const Mat& value() const { return node_->value; }
  Mat& value() { return node_->value; }
  const Mat& grad() const { return node_->grad; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  double item() const;
  bool requires_grad() const { return node_->requires_grad; }
  void zero_grad() { node_->grad.setZero(); }

  std::shared_ptr<Node> node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// --- graph construction ---------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
/// Broadcast-add a 1 x n row (e.g. bias) to every row of a.
Tensor add_rowwise(const Tensor& a, const Tensor& row);
Tensor transpose(const Tensor& a);

Tensor sigmoid(const Tensor& a);
Tensor tanh_act(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor silu(const Tensor& a);
Tensor square(const Tensor& a);
Tensor softmax_rows(const Tensor& a);

Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);
Tensor slice_cols(const Tensor& a, int start, int count);
Tensor slice_rows(const Tensor& a, int start, int count);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);

/// Mean squared error between prediction and a constant target.
Tensor mse(const Tensor& pred, const Mat& target);

/// Reverse-mode accumulation from a finite 1x1 loss into every reachable
/// parameter's grad. Throws on non-finite intermediates (names the op).
void backward(const Tensor& loss);

/// Named trainable parameters of a model, in registration order.
struct ParamMap {
  std::vector<std::pair<std::string, Tensor>> items;

  void add(const std::string& name, const Tensor& t) { items.emplace_back(name, t); }
  void zero_grad() {
    for (auto& [name, t] : items) t.node()->grad.setZero();
  }
  std::size_t size() const { return items.size(); }
};

}  // namespace geots::nn
