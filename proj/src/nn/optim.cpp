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

#include "scanpath/nn/optim.hpp"

#include <cmath>
#include <map>

#include "scanpath/core/error.hpp"

namespace scanpath::nn {
namespace {

const Matrix& find_tensor(const std::vector<NamedTensor>& tensors, const std::string& name) {
  for (const NamedTensor& t : tensors)
    if (t.name == name) return t.value;
  throw FormatError("optimizer state missing tensor " + name);
}

}  // namespace

Adam::Adam(ParameterRefs params, Options opts) : params_(std::move(params)), opts_(opts) {
  for (const Parameter* p : params_) {
    m_.emplace_back(p->value.rows(), p->value.cols());
    v_.emplace_back(p->value.rows(), p->value.cols());
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    if (!p.trainable) continue;
    Matrix& m = m_[i];
    Matrix& v = v_[i];
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double g = p.grad[j];
      m[j] = opts_.beta1 * m[j] + (1.0 - opts_.beta1) * g;
      v[j] = opts_.beta2 * v[j] + (1.0 - opts_.beta2) * g * g;
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p.value[j] -= opts_.lr * mhat / (std::sqrt(vhat) + opts_.eps);
    }
  }
}

std::vector<NamedTensor> Adam::state(const std::string& prefix) const {
  std::vector<NamedTensor> out;
  out.push_back({prefix + ".step", Matrix(1, 1, static_cast<double>(t_))});
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!params_[i]->trainable) continue;
    out.push_back({prefix + ".m." + params_[i]->name, m_[i]});
    out.push_back({prefix + ".v." + params_[i]->name, v_[i]});
  }
  return out;
}

void Adam::load_state(const std::string& prefix, const std::vector<NamedTensor>& tensors) {
  t_ = static_cast<std::uint64_t>(find_tensor(tensors, prefix + ".step")[0]);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!params_[i]->trainable) continue;
    m_[i] = find_tensor(tensors, prefix + ".m." + params_[i]->name);
    v_[i] = find_tensor(tensors, prefix + ".v." + params_[i]->name);
  }
}

RmsProp::RmsProp(ParameterRefs params, Options opts) : params_(std::move(params)), opts_(opts) {
  for (const Parameter* p : params_) sq_.emplace_back(p->value.rows(), p->value.cols());
}

void RmsProp::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    if (!p.trainable) continue;
    Matrix& s = sq_[i];
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double g = p.grad[j];
      s[j] = opts_.alpha * s[j] + (1.0 - opts_.alpha) * g * g;
      p.value[j] -= opts_.lr * g / (std::sqrt(s[j]) + opts_.eps);
    }
  }
}

std::vector<NamedTensor> RmsProp::state(const std::string& prefix) const {
  std::vector<NamedTensor> out;
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i]->trainable) out.push_back({prefix + ".sq." + params_[i]->name, sq_[i]});
  return out;
}

void RmsProp::load_state(const std::string& prefix, const std::vector<NamedTensor>& tensors) {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i]->trainable) sq_[i] = find_tensor(tensors, prefix + ".sq." + params_[i]->name);
}

}  // namespace scanpath::nn
