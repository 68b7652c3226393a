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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <unistd.h>

#include "scanpath/autograd/ops.hpp"
#include "scanpath/autograd/tape.hpp"
#include "scanpath/core/rng.hpp"
#include "scanpath/embeddings.hpp"
#include "scanpath/nn/parameter.hpp"

namespace scanpath::testing {

inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
  Matrix m(rows, cols);
  for (double& x : m.values()) x = scale * standard_normal(rng);
  return m;
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t checked = 0;
};

// Compares tape gradients of a scalar loss against central differences for
// every entry of every parameter. The relative error uses
// max(|analytic|, |numeric|, floor) as the denominator so entries whose true
// gradient is ~0 are judged on absolute error.
inline GradCheckResult grad_check(const nn::ParameterRefs& params,
                                  const std::function<ad::Var(ad::Tape&)>& loss,
                                  double h = 1e-6, double floor = 1e-4) {
  for (nn::Parameter* p : params) p->zero_grad();
  {
    ad::Tape tape;
    tape.backward(loss(tape));
  }
  auto eval = [&] {
    ad::Tape tape(false);
    return loss(tape).value()(0, 0);
  };
  GradCheckResult r;
  for (nn::Parameter* p : params) {
    if (!p->trainable) continue;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double orig = p->value[i];
      p->value[i] = orig + h;
      const double up = eval();
      p->value[i] = orig - h;
      const double down = eval();
      p->value[i] = orig;
      const double numeric = (up - down) / (2 * h);
      const double analytic = p->grad[i];
      const double abs_err = std::abs(numeric - analytic);
      const double denom = std::max({std::abs(numeric), std::abs(analytic), floor});
      r.max_abs_error = std::max(r.max_abs_error, abs_err);
      r.max_rel_error = std::max(r.max_rel_error, abs_err / denom);
      ++r.checked;
    }
  }
  return r;
}

// Random text embedding with `count` live tokens, rounded through float32.
inline TextEmbedding random_embedding(Rng& rng, const std::string& id, std::size_t count,
                                      std::size_t max_tokens, std::size_t dim) {
  TextEmbedding e{id, Matrix(max_tokens, dim), count, Matrix(1, dim)};
  for (std::size_t t = 0; t < count; ++t)
    for (std::size_t d = 0; d < dim; ++d) e.tokens(t, d) = 0.5 * standard_normal(rng);
  for (std::size_t d = 0; d < dim; ++d) e.cls(0, d) = 0.5 * standard_normal(rng);
  embeddings::quantize_to_float32(e);
  return e;
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("scanpath-test-" + tag + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace scanpath::testing
