// Copyright 2026 The Scanpath Authors. All Rights Reserved.
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

#include "scanpath/autograd/tape.hpp"

#include "scanpath/core/error.hpp"
#include "scanpath/simd/kernels.hpp"

namespace scanpath::ad {

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return {this, nodes_.size() - 1};
}

Var Tape::parameter(nn::Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return {this, it->second};
  const bool track = grad_enabled_ && p.trainable;
  nodes_.push_back(Node{p.value, {}, {}, track ? &p : nullptr, track});
  param_nodes_.emplace(&p, nodes_.size() - 1);
  return {this, nodes_.size() - 1};
}

Var Tape::record(Matrix value, std::initializer_list<std::size_t> parents,
                 BackwardFn fn) {
  bool needs = false;
  if (grad_enabled_)
    for (std::size_t p : parents) needs = needs || nodes_[p].needs_grad;
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(fn) : BackwardFn{},
                        nullptr, needs});
  return {this, nodes_.size() - 1};
}

Var Tape::record(Matrix value, const std::vector<std::size_t>& parents, BackwardFn fn) {
  bool needs = false;
  if (grad_enabled_)
    for (std::size_t p : parents) needs = needs || nodes_[p].needs_grad;
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(fn) : BackwardFn{},
                        nullptr, needs});
  return {this, nodes_.size() - 1};
}

Matrix& Tape::grad_for(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !n.value.empty()) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var root) {
  if (root.rows() != 1 || root.cols() != 1) throw ShapeError("backward: root must be 1x1");
  if (!nodes_[root.id()].needs_grad) return;
  grad_for(root.id())(0, 0) = 1.0;
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param != nullptr) {
      simd::active().axpy(1.0, n.grad.data(), n.param->grad.data(), n.grad.size());
    }
  }
}

}  // namespace scanpath::ad
