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

#include "fasr/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <unordered_set>

#include "fasr/error.hpp"
#include "fasr/simd/kernels.hpp"

namespace fasr {

Matrix::Matrix(int r, int c, double fill)
    : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

Matrix::Matrix(int r, int c, std::vector<double> values) : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != static_cast<std::size_t>(r) * static_cast<std::size_t>(c)) {
    throw ShapeError("Matrix", 0,
                     std::to_string(data.size()) + " values for " + std::to_string(r) + "x" +
                         std::to_string(c));
  }
}

Matrix Matrix::row_vector(std::span<const double> values) {
  return Matrix(1, static_cast<int>(values.size()), std::vector<double>(values.begin(), values.end()));
}

Matrix& Node::grad_buffer() {
  if (grad.empty() && !value.empty()) grad = Matrix(value.rows, value.cols, 0.0);
  if (grad.rows != value.rows || grad.cols != value.cols) grad = Matrix(value.rows, value.cols, 0.0);
  return grad;
}

namespace {

thread_local bool t_grad_enabled = true;
std::atomic<std::uint64_t> g_next_id{1};

std::uint64_t next_id() { return g_next_id.fetch_add(1, std::memory_order_relaxed); }

std::string dims(const Matrix& m) { return std::to_string(m.rows) + "x" + std::to_string(m.cols); }

const simd::KernelTable& k() { return simd::active(); }

// Creates a result node. Parents are recorded only when a gradient can flow.
NodePtr make_node(std::uint64_t id, std::string op, Matrix value, std::vector<NodePtr> parents) {
  auto node = std::make_shared<Node>();
  node->id = id;
  node->op = std::move(op);
  node->value = std::move(value);
  bool needs = false;
  if (t_grad_enabled) {
    for (const auto& p : parents) needs = needs || p->requires_grad;
  }
  node->requires_grad = needs;
  if (needs) node->parents = std::move(parents);
  return node;
}

// Parent i's gradient buffer when it wants one, else nullptr.
Matrix* parent_grad(Node& self, std::size_t i) {
  Node& p = *self.parents[i];
  return p.requires_grad ? &p.grad_buffer() : nullptr;
}

void require_same_shape(const char* op, std::uint64_t id, const Var& a, const Var& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(op, id, dims(a.value()) + " vs " + dims(b.value()));
  }
}

template <typename Fwd, typename Deriv>
Var pointwise(const char* op, const Var& a, Fwd fwd, Deriv deriv_from_output) {
  const std::uint64_t id = next_id();
  Matrix out(a.rows(), a.cols());
  const auto& in = a.value().data;
  for (std::size_t i = 0; i < in.size(); ++i) out.data[i] = fwd(in[i]);
  auto node = make_node(id, op, std::move(out), {a.ptr()});
  if (node->requires_grad) {
    node->backward_fn = [deriv_from_output](Node& self) {
      Matrix* ga = parent_grad(self, 0);
      if (ga == nullptr) return;
      const auto& y = self.value.data;
      const auto& x = self.parents[0]->value.data;
      const auto& gy = self.grad.data;
      for (std::size_t i = 0; i < y.size(); ++i) ga->data[i] += gy[i] * deriv_from_output(x[i], y[i]);
    };
  }
  return Var(node);
}

}  // namespace

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

Var Var::leaf(Matrix value, bool requires_grad, std::string name) {
  auto node = std::make_shared<Node>();
  node->id = next_id();
  node->op = std::move(name);
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  return Var(node);
}

double Var::item() const {
  if (rows() != 1 || cols() != 1) throw ShapeError("item", id(), "expected 1x1, got " + dims(value()));
  return value().data[0];
}

void backward(const Var& loss) {
  if (!loss.defined()) throw std::invalid_argument("backward on undefined value");
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw ShapeError("backward", loss.id(), "loss must be 1x1, got " + dims(loss.value()));
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS; reversed it is a valid topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(loss.node(), 0);
  visited.insert(loss.node());
  while (!stack.empty()) {
    auto& [node, next_parent] = stack.back();
    if (next_parent < node->parents.size()) {
      Node* p = node->parents[next_parent++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node()->grad_buffer().data[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
  }
}

Var make_op(std::string op, Matrix value, std::vector<Var> parents, std::function<void(Node& self)> backward_fn) {
  std::vector<NodePtr> nodes;
  nodes.reserve(parents.size());
  for (const auto& p : parents) nodes.push_back(p.ptr());
  auto node = make_node(next_id(), std::move(op), std::move(value), std::move(nodes));
  if (node->requires_grad) node->backward_fn = std::move(backward_fn);
  return Var(node);
}

Var matmul(const Var& a, const Var& b) {
  const std::uint64_t id = next_id();
  if (a.cols() != b.rows()) throw ShapeError("matmul", id, dims(a.value()) + " . " + dims(b.value()));
  const int m = a.rows(), kk = a.cols(), n = b.cols();
  Matrix out(m, n);
  const auto& kt = k();
  for (int i = 0; i < m; ++i) {
    double* c = out.row_ptr(i);
    for (int p = 0; p < kk; ++p) kt.axpy(a.value()(i, p), b.value().row_ptr(p), c, n);
  }
  auto node = make_node(id, "matmul", std::move(out), {a.ptr(), b.ptr()});
  if (node->requires_grad) {
    node->backward_fn = [](Node& self) {
      const Matrix& A = self.parents[0]->value;
      const Matrix& B = self.parents[1]->value;
      const Matrix& G = self.grad;
      const auto& kt = k();
      const int m = A.rows, kk = A.cols, n = B.cols;
      if (Matrix* ga = parent_grad(self, 0)) {
        for (int i = 0; i < m; ++i)
          for (int p = 0; p < kk; ++p) (*ga)(i, p) += kt.dot(G.row_ptr(i), B.row_ptr(p), n);
      }
      if (Matrix* gb = parent_grad(self, 1)) {
        for (int i = 0; i < m; ++i)
          for (int p = 0; p < kk; ++p) kt.axpy(A(i, p), G.row_ptr(i), gb->row_ptr(p), n);
      }
    };
  }
  return Var(node);
}

namespace {

// out = a . b^T (+ bias row when given).
Matrix matmul_nt_values(const Matrix& a, const Matrix& b, const Matrix* bias) {
  const int m = a.rows, n = b.rows, kk = a.cols;
  Matrix out(m, n);
  const auto& kt = k();
  for (int i = 0; i < m; ++i) {
    const double* ar = a.row_ptr(i);
    double* o = out.row_ptr(i);
    for (int j = 0; j < n; ++j) o[j] = kt.dot(ar, b.row_ptr(j), kk);
    if (bias != nullptr) kt.acc(bias->data.data(), o, n);
  }
  return out;
}

void matmul_nt_backward(Node& self, std::size_t a_idx, std::size_t b_idx) {
  const Matrix& A = self.parents[a_idx]->value;
  const Matrix& B = self.parents[b_idx]->value;
  const Matrix& G = self.grad;
  const auto& kt = k();
  const int m = A.rows, n = B.rows, kk = A.cols;
  if (Matrix* ga = parent_grad(self, a_idx)) {
    for (int i = 0; i < m; ++i) {
      double* gr = ga->row_ptr(i);
      const double* g = G.row_ptr(i);
      for (int j = 0; j < n; ++j)
        if (g[j] != 0.0) kt.axpy(g[j], B.row_ptr(j), gr, kk);
    }
  }
  if (Matrix* gb = parent_grad(self, b_idx)) {
    for (int i = 0; i < m; ++i) {
      const double* ar = A.row_ptr(i);
      const double* g = G.row_ptr(i);
      for (int j = 0; j < n; ++j)
        if (g[j] != 0.0) kt.axpy(g[j], ar, gb->row_ptr(j), kk);
    }
  }
}

}  // namespace

Var matmul_nt(const Var& a, const Var& b) {
  const std::uint64_t id = next_id();
  if (a.cols() != b.cols()) throw ShapeError("matmul_nt", id, dims(a.value()) + " . (" + dims(b.value()) + ")^T");
  auto node = make_node(id, "matmul_nt", matmul_nt_values(a.value(), b.value(), nullptr), {a.ptr(), b.ptr()});
  if (node->requires_grad) node->backward_fn = [](Node& self) { matmul_nt_backward(self, 0, 1); };
  return Var(node);
}

Var linear(const Var& x, const Var& weight, const Var& bias) {
  const std::uint64_t id = next_id();
  if (x.cols() != weight.cols()) {
    throw ShapeError("linear", id, "input " + dims(x.value()) + " vs weight " + dims(weight.value()));
  }
  if (bias.rows() != 1 || bias.cols() != weight.rows()) {
    throw ShapeError("linear", id, "bias " + dims(bias.value()) + " vs weight " + dims(weight.value()));
  }
  auto node = make_node(id, "linear", matmul_nt_values(x.value(), weight.value(), &bias.value()),
                        {x.ptr(), weight.ptr(), bias.ptr()});
  if (node->requires_grad) {
    node->backward_fn = [](Node& self) {
      matmul_nt_backward(self, 0, 1);
      if (Matrix* gb = parent_grad(self, 2)) {
        for (int i = 0; i < self.grad.rows; ++i) k().acc(self.grad.row_ptr(i), gb->data.data(), gb->cols);
      }
    };
  }
  return Var(node);
}

Var transpose(const Var& a) {
  const std::uint64_t id = next_id();
  const Matrix& A = a.value();
  Matrix out(A.cols, A.rows);
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j) out(j, i) = A(i, j);
  auto node = make_node(id, "transpose", std::move(out), {a.ptr()});
  if (node->requires_grad) {
    node->backward_fn = [](Node& self) {
      Matrix* ga = parent_grad(self, 0);
      if (ga == nullptr) return;
      for (int i = 0; i < ga->rows; ++i)
        for (int j = 0; j < ga->cols; ++j) (*ga)(i, j) += self.grad(j, i);
    };
  }
  return Var(node);
}

Var add(const Var& a, const Var& b) {
  const std::uint64_t id = next_id();
  require_same_shape("add", id, a, b);
  Matrix out(a.rows(), a.cols());
  k().add(a.value().data.data(), b.value().data.data(), out.data.data(), out.size());
  auto node = make_node(id, "add", std::move(out), {a.ptr(), b.ptr()});
  if (node->requires_grad) {
    node->backward_fn = [](Node& self) {
      for (std::size_t i = 0; i < 2; ++i)
        if (Matrix* g = parent_grad(self, i)) k().acc(self.grad.data.data(), g->data.data(), g->size());
    };
  }
  return Var(node);
}

Var sub(const Var& a, const Var& b) {
  const std::uint64_t id = next_id();
  require_same_shape("sub", id, a, b);
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = a.value().data[i] - b.value().data[i];
  auto node = make_node(id, "sub", std::move(out), {a.ptr(), b.ptr()});
  if (node->requires_grad) {
    node->backward_fn = [](Node& self) {
      if (Matrix* g = parent_grad(self, 0)) k().acc(self.grad.data.data(), g->data.data(), g->size());
      if (Matrix* g = parent_grad(self, 1)) k().axpy(-1.0, self.grad.data.data(), g->data.data(), g->size());
    };
  }
  return Var(node);
}

Var mul(const Var& a, const Var& b) {
  const std::uint64_t id = next_id();
  require_same_shape("mul", id, a, b);
  Matrix out(a.rows(), a.cols());
  k().mul(a.value().data.data(), b.value().data.data(), out.data.data(), out.size());
  auto node = make_node(id, "mul", std::move(out), {a.ptr(), b.ptr()});
  if (node->requires_grad) {
    node->backward_fn = [](Node& self) {
      const auto& gy = self.grad.data;
      if (Matrix* g = parent_grad(self, 0))
        k().mul_acc(gy.data(), self.parents[1]->value.data.data(), g->data.data(), g->size());
      if (Matrix* g = parent_grad(self, 1))
        k().mul_acc(gy.data(), self.parents[0]->value.data.data(), g->data.data(), g->size());
    };
  }
  return Var(node);
}

Var scale(const Var& a, double factor) {
  const std::uint64_t id = next_id();
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = a.value().data[i] * factor;
  auto node = make_node(id, "scale", std::move(out), {a.ptr()});
  if (node->requires_grad) {
    node->backward_fn = [factor](Node& self) {
      if (Matrix* g = parent_grad(self, 0)) k().axpy(factor, self.grad.data.data(), g->data.data(), g->size());
    };
  }
  return Var(node);
}

Var add_row(const Var& a, const Var& row) {
  const std::uint64_t id = next_id();
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ShapeError("add_row", id, dims(a.value()) + " + row " + dims(row.value()));
  }
  Matrix out = a.value();
  for (int i = 0; i < out.rows; ++i) k().acc(row.value().data.data(), out.row_ptr(i), out.cols);
  auto node = make_node(id, "add_row", std::move(out), {a.ptr(), row.ptr()});
  if (node->requires_grad) {
    node->backward_fn = [](Node& self) {
      if (Matrix* g = parent_grad(self, 0)) k().acc(self.grad.data.data(), g->data.data(), g->size());
      if (Matrix* g = parent_grad(self, 1))
        for (int i = 0; i < self.grad.rows; ++i) k().acc(self.grad.row_ptr(i), g->data.data(), g->cols);
    };
  }
  return Var(node);
}

Var tanh(const Var& a) {
  return pointwise(
      "tanh", a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(const Var& a) {
  return pointwise(
      "sigmoid", a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var relu(const Var& a) {
  return pointwise(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var softmax(const Var& a) {
  const std::uint64_t id = next_id();
  Matrix out(a.rows(), a.cols());
  for (int i = 0; i < out.rows; ++i) {
    const double* x = a.value().row_ptr(i);
    double* y = out.row_ptr(i);
    const double m = *std::max_element(x, x + out.cols);
    double z = 0.0;
    for (int j = 0; j < out.cols; ++j) z += (y[j] = std::exp(x[j] - m));
    for (int j = 0; j < out.cols; ++j) y[j] /= z;
  }
  auto node = make_node(id, "softmax", std::move(out), {a.ptr()});
  if (node->requires_grad) {
    node->backward_fn = [](Node& self) {
      Matrix* ga = parent_grad(self, 0);
      if (ga == nullptr) return;
      for (int i = 0; i < self.value.rows; ++i) {
        const double* y = self.value.row_ptr(i);
        const double* gy = self.grad.row_ptr(i);
        const double s = k().dot(y, gy, self.value.cols);
        double* gx = ga->row_ptr(i);
        for (int j = 0; j < self.value.cols; ++j) gx[j] += y[j] * (gy[j] - s);
      }
    };
  }
  return Var(node);
}

Var log_softmax(const Var& a) {
  const std::uint64_t id = next_id();
  Matrix out(a.rows(), a.cols());
  for (int i = 0; i < out.rows; ++i) {
    const double* x = a.value().row_ptr(i);
    double* y = out.row_ptr(i);
    const double m = *std::max_element(x, x + out.cols);
    double z = 0.0;
    for (int j = 0; j < out.cols; ++j) z += std::exp(x[j] - m);
    const double lse = m + std::log(z);
    for (int j = 0; j < out.cols; ++j) y[j] = x[j] - lse;
  }
  auto node = make_node(id, "log_softmax", std::move(out), {a.ptr()});
  if (node->requires_grad) {
    node->backward_fn = [](Node& self) {
      Matrix* ga = parent_grad(self, 0);
      if (ga == nullptr) return;
      for (int i = 0; i < self.value.rows; ++i) {
        const double* y = self.value.row_ptr(i);
        const double* gy = self.grad.row_ptr(i);
        double s = 0.0;
        for (int j = 0; j < self.value.cols; ++j) s += gy[j];
        double* gx = ga->row_ptr(i);
        for (int j = 0; j < self.value.cols; ++j) gx[j] += gy[j] - std::exp(y[j]) * s;
      }
    };
  }
  return Var(node);
}

Var concat_cols(std::span<const Var> parts) {
  const std::uint64_t id = next_id();
  if (parts.empty()) throw ShapeError("concat_cols", id, "no inputs");
  const int rows = parts[0].rows();
  int cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw ShapeError("concat_cols", id, "row counts differ: " + dims(p.value()));
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<NodePtr> parents;
  int offset = 0;
  for (const auto& p : parts) {
    for (int i = 0; i < rows; ++i) std::copy_n(p.value().row_ptr(i), p.cols(), out.row_ptr(i) + offset);
    offset += p.cols();
    parents.push_back(p.ptr());
  }
  auto node = make_node(id, "concat_cols", std::move(out), std::move(parents));
  if (node->requires_grad) {
    node->backward_fn = [](Node& self) {
      int offset = 0;
      for (std::size_t pi = 0; pi < self.parents.size(); ++pi) {
        const int w = self.parents[pi]->value.cols;
        if (Matrix* g = parent_grad(self, pi))
          for (int i = 0; i < self.grad.rows; ++i) k().acc(self.grad.row_ptr(i) + offset, g->row_ptr(i), w);
        offset += w;
      }
    };
  }
  return Var(node);
}

Var concat_rows(std::span<const Var> parts) {
  const std::uint64_t id = next_id();
  if (parts.empty()) throw ShapeError("concat_rows", id, "no inputs");
  const int cols = parts[0].cols();
  int rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) throw ShapeError("concat_rows", id, "column counts differ: " + dims(p.value()));
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::vector<NodePtr> parents;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    std::copy(p.value().data.begin(), p.value().data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(offset));
    offset += p.value().size();
    parents.push_back(p.ptr());
  }
  auto node = make_node(id, "concat_rows", std::move(out), std::move(parents));
  if (node->requires_grad) {
    node->backward_fn = [](Node& self) {
      std::size_t offset = 0;
      for (std::size_t pi = 0; pi < self.parents.size(); ++pi) {
        const std::size_t n = self.parents[pi]->value.size();
        if (Matrix* g = parent_grad(self, pi)) k().acc(self.grad.data.data() + offset, g->data.data(), n);
        offset += n;
      }
    };
  }
  return Var(node);
}

Var slice_cols(const Var& a, int begin, int count) {
  const std::uint64_t id = next_id();
  if (begin < 0 || count < 0 || begin + count > a.cols()) {
    throw ShapeError("slice_cols", id,
                     "[" + std::to_string(begin) + ", +" + std::to_string(count) + ") of " + dims(a.value()));
  }
  Matrix out(a.rows(), count);
  for (int i = 0; i < a.rows(); ++i) std::copy_n(a.value().row_ptr(i) + begin, count, out.row_ptr(i));
  auto node = make_node(id, "slice_cols", std::move(out), {a.ptr()});
  if (node->requires_grad) {
    node->backward_fn = [begin, count](Node& self) {
      if (Matrix* g = parent_grad(self, 0))
        for (int i = 0; i < self.grad.rows; ++i) k().acc(self.grad.row_ptr(i), g->row_ptr(i) + begin, count);
    };
  }
  return Var(node);
}

Var slice_rows(const Var& a, int begin, int count) {
  const std::uint64_t id = next_id();
  if (begin < 0 || count < 0 || begin + count > a.rows()) {
    throw ShapeError("slice_rows", id,
                     "[" + std::to_string(begin) + ", +" + std::to_string(count) + ") of " + dims(a.value()));
  }
  const std::size_t off = static_cast<std::size_t>(begin) * a.cols();
  const std::size_t n = static_cast<std::size_t>(count) * a.cols();
  Matrix out(count, a.cols());
  std::copy_n(a.value().data.begin() + static_cast<std::ptrdiff_t>(off), n, out.data.begin());
  auto node = make_node(id, "slice_rows", std::move(out), {a.ptr()});
  if (node->requires_grad) {
    node->backward_fn = [off, n](Node& self) {
      if (Matrix* g = parent_grad(self, 0)) k().acc(self.grad.data.data(), g->data.data() + off, n);
    };
  }
  return Var(node);
}

Var reshape(const Var& a, int rows, int cols) {
  const std::uint64_t id = next_id();
  if (static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) != a.value().size()) {
    throw ShapeError("reshape", id, dims(a.value()) + " -> " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  auto node = make_node(id, "reshape", Matrix(rows, cols, a.value().data), {a.ptr()});
  if (node->requires_grad) {
    node->backward_fn = [](Node& self) {
      if (Matrix* g = parent_grad(self, 0)) k().acc(self.grad.data.data(), g->data.data(), g->size());
    };
  }
  return Var(node);
}

Var sum(const Var& a) {
  const std::uint64_t id = next_id();
  double s = 0.0;
  for (double v : a.value().data) s += v;
  auto node = make_node(id, "sum", Matrix(1, 1, s), {a.ptr()});
  if (node->requires_grad) {
    node->backward_fn = [](Node& self) {
      if (Matrix* g = parent_grad(self, 0))
        for (double& v : g->data) v += self.grad.data[0];
    };
  }
  return Var(node);
}

Var mean(const Var& a) {
  const std::uint64_t id = next_id();
  if (a.value().empty()) throw ShapeError("mean", id, "empty input");
  const double n = static_cast<double>(a.value().size());
  double s = 0.0;
  for (double v : a.value().data) s += v;
  auto node = make_node(id, "mean", Matrix(1, 1, s / n), {a.ptr()});
  if (node->requires_grad) {
    node->backward_fn = [n](Node& self) {
      if (Matrix* g = parent_grad(self, 0))
        for (double& v : g->data) v += self.grad.data[0] / n;
    };
  }
  return Var(node);
}

Var embedding(const Var& table, std::span<const int> ids) {
  const std::uint64_t id = next_id();
  Matrix out(static_cast<int>(ids.size()), table.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table.rows()) {
      throw ShapeError("embedding", id, "index " + std::to_string(ids[i]) + " outside table " + dims(table.value()));
    }
    std::copy_n(table.value().row_ptr(ids[i]), table.cols(), out.row_ptr(static_cast<int>(i)));
  }
  auto node = make_node(id, "embedding", std::move(out), {table.ptr()});
  if (node->requires_grad) {
    node->backward_fn = [rows = std::vector<int>(ids.begin(), ids.end())](Node& self) {
      if (Matrix* g = parent_grad(self, 0))
        for (std::size_t i = 0; i < rows.size(); ++i)
          k().acc(self.grad.row_ptr(static_cast<int>(i)), g->row_ptr(rows[i]), g->cols);
    };
  }
  return Var(node);
}

Var pick(const Var& a, std::span<const int> cols) {
  const std::uint64_t id = next_id();
  if (static_cast<int>(cols.size()) != a.rows()) {
    throw ShapeError("pick", id, std::to_string(cols.size()) + " indices for " + dims(a.value()));
  }
  Matrix out(a.rows(), 1);
  for (int i = 0; i < a.rows(); ++i) {
    if (cols[i] < 0 || cols[i] >= a.cols()) {
      throw ShapeError("pick", id, "index " + std::to_string(cols[i]) + " outside " + dims(a.value()));
    }
    out(i, 0) = a.value()(i, cols[i]);
  }
  auto node = make_node(id, "pick", std::move(out), {a.ptr()});
  if (node->requires_grad) {
    node->backward_fn = [idx = std::vector<int>(cols.begin(), cols.end())](Node& self) {
      if (Matrix* g = parent_grad(self, 0))
        for (std::size_t i = 0; i < idx.size(); ++i) (*g)(static_cast<int>(i), idx[i]) += self.grad.data[i];
    };
  }
  return Var(node);
}

Var dropout(const Var& a, double p, std::uint64_t seed) {
  if (p <= 0.0) return a;
  const std::uint64_t id = next_id();
  if (p >= 1.0) throw ShapeError("dropout", id, "probability must be < 1");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(1.0 - p);
  const double s = 1.0 / (1.0 - p);
  std::vector<double> mask(a.value().size());
  for (double& m : mask) m = keep(rng) ? s : 0.0;
  Matrix out(a.rows(), a.cols());
  k().mul(a.value().data.data(), mask.data(), out.data.data(), out.size());
  auto node = make_node(id, "dropout", std::move(out), {a.ptr()});
  if (node->requires_grad) {
    node->backward_fn = [mask = std::move(mask)](Node& self) {
      if (Matrix* g = parent_grad(self, 0)) k().mul_acc(self.grad.data.data(), mask.data(), g->data.data(), g->size());
    };
  }
  return Var(node);
}

Var im2col3x3(const Var& a, int height, int width) {
  const std::uint64_t id = next_id();
  if (a.rows() != height * width) {
    throw ShapeError("im2col3x3", id, dims(a.value()) + " is not " + std::to_string(height) + "*" +
                                          std::to_string(width) + " positions");
  }
  const int c = a.cols();
  Matrix out(height * width, 9 * c);
  const Matrix& in = a.value();
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double* o = out.row_ptr(y * width + x);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx, o += c) {
          const int yy = y + dy, xx = x + dx;
          if (yy < 0 || yy >= height || xx < 0 || xx >= width) continue;
          std::copy_n(in.row_ptr(yy * width + xx), c, o);
        }
      }
    }
  }
  auto node = make_node(id, "im2col3x3", std::move(out), {a.ptr()});
  if (node->requires_grad) {
    node->backward_fn = [height, width](Node& self) {
      Matrix* g = parent_grad(self, 0);
      if (g == nullptr) return;
      const int c = g->cols;
      for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
          const double* o = self.grad.row_ptr(y * width + x);
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx, o += c) {
              const int yy = y + dy, xx = x + dx;
              if (yy < 0 || yy >= height || xx < 0 || xx >= width) continue;
              k().acc(o, g->row_ptr(yy * width + xx), c);
            }
          }
        }
      }
    };
  }
  return Var(node);
}

Var maxpool2x2(const Var& a, int height, int width) {
  const std::uint64_t id = next_id();
  if (a.rows() != height * width) {
    throw ShapeError("maxpool2x2", id, dims(a.value()) + " is not " + std::to_string(height) + "*" +
                                           std::to_string(width) + " positions");
  }
  const int oh = (height + 1) / 2, ow = (width + 1) / 2, c = a.cols();
  Matrix out(oh * ow, c, -std::numeric_limits<double>::infinity());
  std::vector<int> argmax(out.size(), -1);
  const Matrix& in = a.value();
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int src = y * width + x;
      const int dst = (y / 2) * ow + (x / 2);
      for (int ch = 0; ch < c; ++ch) {
        const std::size_t o = static_cast<std::size_t>(dst) * c + ch;
        if (argmax[o] < 0 || in(src, ch) > out.data[o]) {
          out.data[o] = in(src, ch);
          argmax[o] = src;
        }
      }
    }
  }
  auto node = make_node(id, "maxpool2x2", std::move(out), {a.ptr()});
  if (node->requires_grad) {
    node->backward_fn = [argmax = std::move(argmax)](Node& self) {
      Matrix* g = parent_grad(self, 0);
      if (g == nullptr) return;
      const int c = g->cols;
      for (std::size_t o = 0; o < argmax.size(); ++o)
        (*g)(argmax[o], static_cast<int>(o % c)) += self.grad.data[o];
    };
  }
  return Var(node);
}

Var unfold1d(const Var& a, int width) {
  const std::uint64_t id = next_id();
  if (a.rows() != 1 || width <= 0 || width % 2 == 0) {
    throw ShapeError("unfold1d", id, "expects a 1xT row and odd width, got " + dims(a.value()));
  }
  const int t_len = a.cols(), half = width / 2;
  Matrix out(t_len, width);
  for (int t = 0; t < t_len; ++t)
    for (int j = 0; j < width; ++j) {
      const int src = t + j - half;
      if (src >= 0 && src < t_len) out(t, j) = a.value().data[src];
    }
  auto node = make_node(id, "unfold1d", std::move(out), {a.ptr()});
  if (node->requires_grad) {
    node->backward_fn = [width, half](Node& self) {
      Matrix* g = parent_grad(self, 0);
      if (g == nullptr) return;
      const int t_len = g->cols;
      for (int t = 0; t < t_len; ++t)
        for (int j = 0; j < width; ++j) {
          const int src = t + j - half;
          if (src >= 0 && src < t_len) g->data[src] += self.grad(t, j);
        }
    };
  }
  return Var(node);
}

}  // namespace fasr
