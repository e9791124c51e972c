// Copyright 2026 The fasr Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Dense 2-D tensors with define-by-run reverse-mode differentiation.
//
// Every op evaluates eagerly when it is called and, if any input requires a
// gradient (and grad mode is on), records a backward closure on the result
// node. backward() walks the recorded graph in reverse topological order.
// Convolution feature maps are carried as (positions x channels) matrices
// with the spatial extent passed alongside, so conv/pool reduce to im2col
// plus matmul.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace fasr {

// Row-major dense matrix of doubles.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0);
  Matrix(int r, int c, std::vector<double> values);

  static Matrix row_vector(std::span<const double> values);

  std::size_t size() const noexcept { return data.size(); }
  bool empty() const noexcept { return data.empty(); }
  double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  double* row_ptr(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
  const double* row_ptr(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }
  std::span<const double> row(int r) const { return {row_ptr(r), static_cast<std::size_t>(cols)}; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  std::uint64_t id = 0;
  std::string op;
  Matrix value;
  Matrix grad;  // allocated lazily during backward
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  std::function<void(Node& self)> backward_fn;

  // Zero-initialized gradient buffer of value's shape.
  Matrix& grad_buffer();
};

// Handle to a node in the computation graph. Cheap to copy.
class Var {
 public:
  Var() = default;
  explicit Var(NodePtr node) : node_(std::move(node)) {}

  // Leaf value. Leaves with requires_grad collect gradients in backward().
  static Var leaf(Matrix value, bool requires_grad = false, std::string name = "leaf");
  static Var constant(Matrix value) { return leaf(std::move(value), false, "const"); }
  static Var scalar(double v) { return constant(Matrix(1, 1, v)); }

  bool defined() const noexcept { return node_ != nullptr; }
  const Matrix& value() const { return node_->value; }
  // Direct access for leaves only (used by optimizers and gradcheck).
  Matrix& mutable_value() { return node_->value; }
  const Matrix& grad() const { return node_->grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  void zero_grad() { node_->grad = Matrix(); }
  int rows() const { return node_->value.rows; }
  int cols() const { return node_->value.cols; }
  bool requires_grad() const { return node_->requires_grad; }
  double item() const;
  std::uint64_t id() const { return node_->id; }
  const std::string& op() const { return node_->op; }
  Node* node() const { return node_.get(); }
  const NodePtr& ptr() const { return node_; }

 private:
  NodePtr node_;
};

// Populates grad for every requires_grad node reachable from `loss`.
// Throws ShapeError when loss is not 1x1.
void backward(const Var& loss);

// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// Builds a node for an op implemented outside this file. `backward` is
// attached only when some parent requires a gradient; it should accumulate
// into self.parents[i]->grad_buffer() for parents with requires_grad.
Var make_op(std::string op, Matrix value, std::vector<Var> parents, std::function<void(Node& self)> backward);

// Linear algebra.
Var matmul(const Var& a, const Var& b);     // a . b
Var matmul_nt(const Var& a, const Var& b);  // a . b^T
Var transpose(const Var& a);
// x . W^T + bias, with W stored (out x in) and bias (1 x out).
Var linear(const Var& x, const Var& weight, const Var& bias);

// Elementwise (shapes must match exactly).
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
// Adds a 1 x cols row to every row of a.
Var add_row(const Var& a, const Var& row);

Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var relu(const Var& a);

// Row-wise softmax / log-softmax (max-shifted).
Var softmax(const Var& a);
Var log_softmax(const Var& a);

// Structural.
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(const Var& a, int begin, int count);
Var slice_rows(const Var& a, int begin, int count);
Var reshape(const Var& a, int rows, int cols);

// Reductions to 1x1.
Var sum(const Var& a);
Var mean(const Var& a);

// Row gather: result row i = table row ids[i].
Var embedding(const Var& table, std::span<const int> ids);
// Picks a(i, cols[i]) for every row; result is rows x 1.
Var pick(const Var& a, std::span<const int> cols);

// Inverted dropout with a seeded Bernoulli mask. p == 0 returns a unchanged.
Var dropout(const Var& a, double p, std::uint64_t seed);

// 3x3 same-padded patches of an (height*width) x channels map; result is
// (height*width) x (9*channels), patch-major then channel.
Var im2col3x3(const Var& a, int height, int width);
// 2x2 stride-2 max pooling with ceil output extent (partial windows pool
// over the cells that exist).
Var maxpool2x2(const Var& a, int height, int width);
// Same-padded sliding windows of a 1 x T row: result is T x width.
Var unfold1d(const Var& a, int width);

}  // namespace fasr
