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

#pragma once

#include <cstddef>
#include <functional>
#include <unordered_map>
#include <vector>

#include "scanpath/core/matrix.hpp"
#include "scanpath/nn/parameter.hpp"

namespace scanpath::ad {

class Tape;

// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape
// lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode autodiff over matrices. Operations append nodes; backward()
// walks them in reverse and accumulates parameter gradients into
// Parameter::grad. With gradients disabled the tape only stores values.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  // A parameter is recorded once per tape; later calls reuse the node.
  Var parameter(nn::Parameter& p);

  // Records an op result. `parents` are the node ids the result depends on;
  // the node needs a gradient iff any parent does.
  Var record(Matrix value, std::initializer_list<std::size_t> parents, BackwardFn fn);
  Var record(Matrix value, const std::vector<std::size_t>& parents, BackwardFn fn);

  // Seeds d(root)/d(root) = 1 for a 1x1 root and propagates.
  void backward(Var root);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  const Matrix& grad(std::size_t id) const { return nodes_[id].grad; }
  // Gradient buffer of a parent, allocated on first use.
  Matrix& grad_for(std::size_t id);

  bool grad_enabled() const { return grad_enabled_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    BackwardFn backward;
    nn::Parameter* param = nullptr;
    bool needs_grad = false;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const nn::Parameter*, std::size_t> param_nodes_;
  bool grad_enabled_;
};

inline const Matrix& Var::value() const { return tape_->value(id_); }

}  // namespace scanpath::ad
