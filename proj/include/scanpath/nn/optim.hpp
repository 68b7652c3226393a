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

#include <cstdint>
#include <string>
#include <vector>

#include "scanpath/nn/parameter.hpp"

namespace scanpath::nn {

struct NamedTensor {
  std::string name;
  Matrix value;
};

// Optimizers hold per-parameter moment buffers aligned with the parameter
// list given at construction. Non-trainable entries are skipped.
class Adam {
 public:
  struct Options {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  Adam(ParameterRefs params, Options opts);

  void step();
  void set_lr(double lr) { opts_.lr = lr; }
  double lr() const { return opts_.lr; }

  std::vector<NamedTensor> state(const std::string& prefix) const;
  void load_state(const std::string& prefix, const std::vector<NamedTensor>& tensors);

 private:
  ParameterRefs params_;
  Options opts_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::uint64_t t_ = 0;
};

class RmsProp {
 public:
  struct Options {
    double lr = 1e-5;
    double alpha = 0.99;
    double eps = 1e-8;
  };

  RmsProp(ParameterRefs params, Options opts);

  void step();
  void set_lr(double lr) { opts_.lr = lr; }
  double lr() const { return opts_.lr; }

  std::vector<NamedTensor> state(const std::string& prefix) const;
  void load_state(const std::string& prefix, const std::vector<NamedTensor>& tensors);

 private:
  ParameterRefs params_;
  Options opts_;
  std::vector<Matrix> sq_;
};

}  // namespace scanpath::nn
