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
#include <string>
#include <vector>

#include "scanpath/autograd/ops.hpp"
#include "scanpath/core/rng.hpp"
#include "scanpath/nn/parameter.hpp"

namespace scanpath::nn {

// Weights and biases drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Matrix uniform_fan_in(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng);

class Linear {
 public:
  Linear() = default;
  Linear(std::string name, std::size_t in, std::size_t out, Rng& rng);

  ad::Var operator()(ad::Var x);
  void collect(ParameterRefs& out);
  std::size_t in_features() const { return weight_.value.rows(); }
  std::size_t out_features() const { return weight_.value.cols(); }

 private:
  Parameter weight_;  // in x out
  Parameter bias_;    // 1 x out
};

class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(std::string name, std::size_t width);

  ad::Var operator()(ad::Var x);
  void collect(ParameterRefs& out);

 private:
  Parameter gamma_;
  Parameter beta_;
};

// Batch normalization over the rows selected by a mask. Training mode uses
// batch statistics and updates the running estimates (momentum 0.1, unbiased
// variance); evaluation mode uses the running estimates. Masked rows are
// output as zeros.
class BatchNorm {
 public:
  BatchNorm() = default;
  BatchNorm(std::string name, std::size_t width);

  ad::Var forward(ad::Var x, const std::vector<double>& row_mask, bool train);
  void collect(ParameterRefs& out);

 private:
  Parameter gamma_;
  Parameter beta_;
  Parameter running_mean_;
  Parameter running_var_;
  double momentum_ = 0.1;
};

// Inverted dropout; identity when !train or rate == 0.
ad::Var dropout(ad::Var x, double rate, bool train, Rng* rng);

// Multi-head self-attention over a batch laid out sample-major: row n*T + t
// holds step t of sample n. `allowed_keys[n][t]` masks keys per sample.
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(std::string name, std::size_t width, std::size_t heads, Rng& rng);

  ad::Var forward(ad::Var x, std::size_t batch, std::size_t steps,
                  const std::vector<std::vector<bool>>& allowed_keys);
  void collect(ParameterRefs& out);

 private:
  std::size_t width_ = 0;
  std::size_t heads_ = 1;
  Linear qkv_;
  Linear out_;
};

// Post-norm encoder block: LN(x + MHA(x)), then LN(h + FF(h)) with ReLU.
class TransformerEncoderLayer {
 public:
  TransformerEncoderLayer() = default;
  TransformerEncoderLayer(std::string name, std::size_t width, std::size_t heads,
                          std::size_t ff_dim, Rng& rng);

  ad::Var forward(ad::Var x, std::size_t batch, std::size_t steps,
                  const std::vector<std::vector<bool>>& allowed_keys);
  void collect(ParameterRefs& out);

 private:
  MultiHeadAttention attn_;
  LayerNorm norm1_;
  Linear ff1_;
  Linear ff2_;
  LayerNorm norm2_;
};

// Sinusoidal positional encoding table, steps x width.
Matrix sinusoidal_encoding(std::size_t steps, std::size_t width);

struct LstmOutput {
  ad::Var sequence;  // (T * N) x 2H, time-major, rows past a sample's length are zero
  ad::Var final;     // N x 2H: forward state after the last valid step | backward state at t=0
};

// Bidirectional LSTM over a time-major batch (row t*N + n). Each sample runs
// only over its first lengths[n] steps; the state is frozen past the end, so
// results do not depend on how many padded steps are supplied.
class BiLstm {
 public:
  BiLstm() = default;
  BiLstm(std::string name, std::size_t in, std::size_t hidden, Rng& rng);

  LstmOutput forward(ad::Var x, std::size_t batch, std::size_t steps,
                     const std::vector<std::size_t>& lengths);
  void collect(ParameterRefs& out);
  std::size_t hidden() const { return hidden_; }

 private:
  struct Direction {
    Parameter w_ih;
    Parameter w_hh;
    Parameter bias;
  };
  std::pair<ad::Var, ad::Var> run(Direction& d, ad::Var x, std::size_t batch,
                                  std::size_t steps, const std::vector<std::size_t>& lengths,
                                  bool reverse);

  std::size_t hidden_ = 0;
  Direction fwd_;
  Direction bwd_;
};

// Index maps between sample-major (n*T + t) and time-major (t*N + n) layouts.
// `steps_out` may be shorter than `steps_in` to drop trailing padding.
std::vector<std::size_t> to_time_major(std::size_t batch, std::size_t steps_in,
                                       std::size_t steps_out);
std::vector<std::size_t> to_sample_major(std::size_t batch, std::size_t steps);

// 1 where t < lengths[n], time-major.
std::vector<double> time_major_mask(const std::vector<std::size_t>& lengths,
                                    std::size_t steps);

}  // namespace scanpath::nn
