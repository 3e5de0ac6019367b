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

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "edgesynth/errors.hpp"

namespace edgesynth {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

namespace detail {

// One node of the define-by-run tape. Every forward op creates a fresh node;
// the tape for a loss is the set of nodes reachable from it through `parents`.
struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until a consumer contributes
  bool requires_grad = false;
  bool backward_ran = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad and accumulates into the parents' grad buffers.
  std::function<void(Node&)> backward_fn;

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  void ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
  }
};

}  // namespace detail

// Grad-mode switch. While a NoGradGuard is alive, ops produce plain leaves
// and record nothing on the tape.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

bool grad_enabled();

// Dense N-d array of doubles with shared storage. Copies are cheap handles to
// the same node, which is what makes define-by-run graphs natural to build.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  int rank() const;
  int64_t dim(size_t i) const;
  int64_t numel() const;

  double* data();
  const double* data() const;
  double operator[](int64_t i) const { return data()[i]; }
  double item() const;

  bool requires_grad() const;
  void set_requires_grad(bool rg);

  bool has_grad() const;
  // Copy of the gradient buffer; zeros when no gradient has been accumulated.
  std::vector<double> grad() const;
  void zero_grad();

  // New leaf sharing nothing with the tape (data is copied).
  Tensor detach() const;

  std::shared_ptr<detail::Node> node() const { return node_; }
  static Tensor wrap(std::shared_ptr<detail::Node> n) {
    return Tensor(std::move(n));
  }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
  std::shared_ptr<detail::Node> node_;
};

// Builds an op output node. The backward_fn is recorded only when grad mode
// is on and at least one input participates in differentiation; otherwise the
// result is a plain leaf.
Tensor make_op(Shape shape, std::vector<double> data,
               const std::vector<Tensor>& inputs,
               std::function<void(detail::Node&)> backward_fn);

// Reverse-mode sweep from a scalar loss. Visits the tape in reverse
// topological order, so a node's gradient is complete before its own
// backward_fn reads it. Running backward twice on the same root, or on a
// root that does not require grad, throws GradientStateError.
void backward(const Tensor& loss);

}  // namespace edgesynth
