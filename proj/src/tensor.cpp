// Copyright 2026 the edgesynth authors.
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

#include "edgesynth/tensor.hpp"

#include <sstream>
#include <unordered_set>

namespace edgesynth {

namespace {
thread_local bool g_grad_enabled = true;
}

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

bool grad_enabled() { return g_grad_enabled; }

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t e : s) {
    if (e <= 0) throw ShapeError("non-positive extent in shape " + shape_str(s));
    n *= e;
  }
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) os << ",";
    os << s[i];
  }
  os << "]";
  return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  auto n = std::make_shared<detail::Node>();
  const int64_t count = shape_numel(shape);
  n->shape = std::move(shape);
  n->data.assign(static_cast<size_t>(count), value);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data,
                         bool requires_grad) {
  if (shape_numel(shape) != static_cast<int64_t>(data.size())) {
    throw ShapeError("data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_str(shape));
  }
  auto n = std::make_shared<detail::Node>();
  n->shape = std::move(shape);
  n->data = std::move(data);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_data({1}, {value}, requires_grad);
}

const Shape& Tensor::shape() const { return node_->shape; }
int Tensor::rank() const { return static_cast<int>(node_->shape.size()); }
int64_t Tensor::dim(size_t i) const { return node_->shape.at(i); }
int64_t Tensor::numel() const { return node_->numel(); }

double* Tensor::data() { return node_->data.data(); }
const double* Tensor::data() const { return node_->data.data(); }

double Tensor::item() const {
  if (numel() != 1) {
    throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  }
  return node_->data[0];
}

bool Tensor::requires_grad() const { return node_->requires_grad; }
void Tensor::set_requires_grad(bool rg) { node_->requires_grad = rg; }

bool Tensor::has_grad() const { return defined() && !node_->grad.empty(); }

std::vector<double> Tensor::grad() const {
  if (!node_->grad.empty()) return node_->grad;
  return std::vector<double>(node_->data.size(), 0.0);
}

void Tensor::zero_grad() {
  node_->grad.clear();
  node_->backward_ran = false;
}

Tensor Tensor::detach() const {
  auto n = std::make_shared<detail::Node>();
  n->shape = node_->shape;
  n->data = node_->data;
  n->requires_grad = false;
  return Tensor(std::move(n));
}

Tensor make_op(Shape shape, std::vector<double> data,
               const std::vector<Tensor>& inputs,
               std::function<void(detail::Node&)> backward_fn) {
  if (shape_numel(shape) != static_cast<int64_t>(data.size())) {
    throw ShapeError("op output data length does not match shape " +
                     shape_str(shape));
  }
  auto n = std::make_shared<detail::Node>();
  n->shape = std::move(shape);
  n->data = std::move(data);
  bool track = false;
  if (g_grad_enabled) {
    for (const Tensor& t : inputs) {
      if (t.defined() && t.node()->requires_grad) {
        track = true;
        break;
      }
    }
  }
  if (track) {
    n->requires_grad = true;
    for (const Tensor& t : inputs) {
      if (t.defined()) n->parents.push_back(t.node());
    }
    n->backward_fn = std::move(backward_fn);
  }
  return Tensor::wrap(std::move(n));
}

void backward(const Tensor& loss) {
  if (!loss.defined()) throw ShapeError("backward on undefined tensor");
  if (loss.numel() != 1) {
    throw ShapeError("backward root must be scalar, got shape " +
                     shape_str(loss.shape()));
  }
  detail::Node* root = loss.node().get();
  if (!root->requires_grad) {
    throw GradientStateError(
        "backward root does not require grad (was it built under "
        "NoGradGuard?)");
  }
  if (root->backward_ran) {
    throw GradientStateError(
        "backward already ran on this tape; build a fresh forward pass first");
  }
  root->backward_ran = true;

  // Iterative post-order DFS. Post-order emits a node after everything it
  // depends on, so the reversed list is a reverse-topological schedule.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  struct Frame {
    detail::Node* n;
    size_t next;
  };
  std::vector<Frame> stack;
  stack.push_back({root, 0});
  visited.insert(root);
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.n->parents.size()) {
      detail::Node* p = f.n->parents[f.next++].get();
      if (visited.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(f.n);
      stack.pop_back();
    }
  }

  root->ensure_grad();
  root->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
}

}  // namespace edgesynth
