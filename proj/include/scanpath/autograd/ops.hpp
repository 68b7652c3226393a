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

#include <span>
#include <vector>

#include "scanpath/autograd/tape.hpp"

// Differentiable matrix operations recorded on a Tape. Shapes are checked
// eagerly and violations raise ShapeError.
namespace scanpath::ad {

Var matmul(Var a, Var b);     // a * b
Var matmul_nt(Var a, Var b);  // a * b^T

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var add_row(Var a, Var row);  // broadcast a 1 x C row over every row of a
Var mul_row(Var a, Var row);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
// Elementwise product with a constant matrix (masks, fixed weights).
Var mul_const(Var a, const Matrix& c);
// Row i multiplied by s[i].
Var scale_rows(Var a, std::vector<double> s);

Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
Var log(Var a);
Var square(Var a);
// Gradient passes only where lo <= a <= hi.
Var clamp(Var a, double lo, double hi);

// Row-wise softmax. When `allowed` is non-empty it has one flag per column
// and disallowed columns receive probability exactly 0.
Var softmax_rows(Var a, const std::vector<bool>& allowed = {});

Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_rows(Var a, std::size_t start, std::size_t count);
Var slice_cols(Var a, std::size_t start, std::size_t count);
Var gather_rows(Var a, std::vector<std::size_t> index);

Var sum(Var a);   // 1 x 1
Var mean(Var a);  // 1 x 1
// (n * block) x C -> n x C, mean over each consecutive block of rows.
Var block_mean_rows(Var a, std::size_t block);

// Per-row standardization (no affine part).
Var layer_norm(Var a, double eps = 1e-5);

struct BatchNormOutput {
  Var y;
  Matrix batch_mean;  // 1 x C
  Matrix batch_var;   // 1 x C, biased
  std::size_t count = 0;
};
// Per-column standardization using statistics over rows with mask > 0; rows
// with mask 0 are output as zeros and do not influence the statistics.
BatchNormOutput batch_norm(Var a, const std::vector<double>& row_mask, double eps = 1e-5);
// Standardization with fixed statistics (inference).
Var normalize_fixed(Var a, const Matrix& mean, const Matrix& var,
                    const std::vector<double>& row_mask, double eps = 1e-5);

// Fused LSTM pointwise stage. `pre` is N x 4H gate pre-activations ordered
// [input, forget, cell, output]; returns N x 2H laid out as [h | c].
Var lstm_pointwise(Var pre, Var c_prev);

// Row i: m[i] * fresh + (1 - m[i]) * old.
Var row_blend(Var fresh, Var old, std::vector<double> m);

}  // namespace scanpath::ad
