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

#include <string>
#include <vector>

#include "scanpath/core/matrix.hpp"

namespace scanpath::nn {

// A named tensor owned by a module. Non-trainable parameters hold buffers
// such as batch-norm running statistics; they are checkpointed but never
// touched by optimizers.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, Matrix v, bool train = true)
      : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()),
        trainable(train) {}

  void zero_grad() { grad.fill(0.0); }
};

using ParameterRefs = std::vector<Parameter*>;

inline std::size_t count_scalars(const ParameterRefs& ps, bool trainable_only = true) {
  std::size_t n = 0;
  for (const Parameter* p : ps)
    if (!trainable_only || p->trainable) n += p->value.size();
  return n;
}

inline void zero_grads(const ParameterRefs& ps) {
  for (Parameter* p : ps) p->zero_grad();
}

}  // namespace scanpath::nn
