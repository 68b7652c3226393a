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

#include "scanpath/nn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "scanpath/core/error.hpp"

namespace scanpath::nn {

Matrix uniform_fan_in(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Matrix m(rows, cols);
  for (double& v : m.values()) v = (2.0 * uniform01(rng) - 1.0) * bound;
  return m;
}

Linear::Linear(std::string name, std::size_t in, std::size_t out, Rng& rng)
    : weight_(name + ".weight", uniform_fan_in(in, out, in, rng)),
      bias_(name + ".bias", uniform_fan_in(1, out, in, rng)) {}

ad::Var Linear::operator()(ad::Var x) {
  ad::Tape& t = x.tape();
  return ad::add_row(ad::matmul(x, t.parameter(weight_)), t.parameter(bias_));
}

void Linear::collect(ParameterRefs& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

LayerNorm::LayerNorm(std::string name, std::size_t width)
    : gamma_(name + ".gamma", Matrix(1, width, 1.0)), beta_(name + ".beta", Matrix(1, width)) {}

ad::Var LayerNorm::operator()(ad::Var x) {
  ad::Tape& t = x.tape();
  return ad::add_row(ad::mul_row(ad::layer_norm(x), t.parameter(gamma_)), t.parameter(beta_));
}

void LayerNorm::collect(ParameterRefs& out) {
  out.push_back(&gamma_);
  out.push_back(&beta_);
}

BatchNorm::BatchNorm(std::string name, std::size_t width)
    : gamma_(name + ".gamma", Matrix(1, width, 1.0)),
      beta_(name + ".beta", Matrix(1, width)),
      running_mean_(name + ".running_mean", Matrix(1, width), false),
      running_var_(name + ".running_var", Matrix(1, width, 1.0), false) {}

ad::Var BatchNorm::forward(ad::Var x, const std::vector<double>& row_mask, bool train) {
  ad::Tape& t = x.tape();
  ad::Var normed;
  if (train) {
    ad::BatchNormOutput bn = ad::batch_norm(x, row_mask);
    if (bn.count > 1) {
      const double unbias =
          static_cast<double>(bn.count) / static_cast<double>(bn.count - 1);
      for (std::size_t c = 0; c < bn.batch_mean.cols(); ++c) {
        running_mean_.value[c] =
            (1.0 - momentum_) * running_mean_.value[c] + momentum_ * bn.batch_mean[c];
        running_var_.value[c] =
            (1.0 - momentum_) * running_var_.value[c] + momentum_ * bn.batch_var[c] * unbias;
      }
    }
    normed = bn.y;
  } else {
    normed = ad::normalize_fixed(x, running_mean_.value, running_var_.value, row_mask);
  }
  ad::Var y = ad::add_row(ad::mul_row(normed, t.parameter(gamma_)), t.parameter(beta_));
  return ad::scale_rows(y, row_mask);
}

void BatchNorm::collect(ParameterRefs& out) {
  out.push_back(&gamma_);
  out.push_back(&beta_);
  out.push_back(&running_mean_);
  out.push_back(&running_var_);
}

ad::Var dropout(ad::Var x, double rate, bool train, Rng* rng) {
  if (!train || rate <= 0.0) return x;
  if (rng == nullptr) throw Error("dropout in training mode needs a generator");
  Matrix mask(x.rows(), x.cols());
  const double keep = 1.0 - rate;
  for (double& m : mask.values()) m = uniform01(*rng) < keep ? 1.0 / keep : 0.0;
  return ad::mul_const(x, mask);
}

MultiHeadAttention::MultiHeadAttention(std::string name, std::size_t width,
                                       std::size_t heads, Rng& rng)
    : width_(width),
      heads_(heads),
      qkv_(name + ".qkv", width, 3 * width, rng),
      out_(name + ".out", width, width, rng) {
  if (heads == 0 || width % heads != 0)
    throw ValidationError("attention width must be divisible by the head count");
}

ad::Var MultiHeadAttention::forward(ad::Var x, std::size_t batch, std::size_t steps,
                                    const std::vector<std::vector<bool>>& allowed_keys) {
  if (x.rows() != batch * steps || x.cols() != width_)
    throw ShapeError("attention input shape");
  const std::size_t dh = width_ / heads_;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  ad::Var qkv = qkv_(x);
  std::vector<ad::Var> samples;
  samples.reserve(batch);
  std::vector<ad::Var> head_out(heads_);
  for (std::size_t n = 0; n < batch; ++n) {
    ad::Var block = ad::slice_rows(qkv, n * steps, steps);
    const std::vector<bool>& allowed =
        allowed_keys.empty() ? std::vector<bool>{} : allowed_keys[n];
    for (std::size_t h = 0; h < heads_; ++h) {
      ad::Var q = ad::slice_cols(block, h * dh, dh);
      ad::Var k = ad::slice_cols(block, width_ + h * dh, dh);
      ad::Var v = ad::slice_cols(block, 2 * width_ + h * dh, dh);
      ad::Var p = ad::softmax_rows(ad::scale(ad::matmul_nt(q, k), inv_sqrt), allowed);
      head_out[h] = ad::matmul(p, v);
    }
    samples.push_back(heads_ == 1 ? head_out[0] : ad::concat_cols(head_out));
  }
  ad::Var merged = batch == 1 ? samples[0] : ad::concat_rows(samples);
  return out_(merged);
}

void MultiHeadAttention::collect(ParameterRefs& out) {
  qkv_.collect(out);
  out_.collect(out);
}

TransformerEncoderLayer::TransformerEncoderLayer(std::string name, std::size_t width,
                                                 std::size_t heads, std::size_t ff_dim,
                                                 Rng& rng)
    : attn_(name + ".attn", width, heads, rng),
      norm1_(name + ".norm1", width),
      ff1_(name + ".ff1", width, ff_dim, rng),
      ff2_(name + ".ff2", ff_dim, width, rng),
      norm2_(name + ".norm2", width) {}

ad::Var TransformerEncoderLayer::forward(ad::Var x, std::size_t batch, std::size_t steps,
                                         const std::vector<std::vector<bool>>& allowed_keys) {
  ad::Var h = norm1_(ad::add(x, attn_.forward(x, batch, steps, allowed_keys)));
  return norm2_(ad::add(h, ff2_(ad::relu(ff1_(h)))));
}

void TransformerEncoderLayer::collect(ParameterRefs& out) {
  attn_.collect(out);
  norm1_.collect(out);
  ff1_.collect(out);
  ff2_.collect(out);
  norm2_.collect(out);
}

Matrix sinusoidal_encoding(std::size_t steps, std::size_t width) {
  Matrix pe(steps, width);
  for (std::size_t pos = 0; pos < steps; ++pos) {
    for (std::size_t i = 0; i < width; ++i) {
      const double pair = static_cast<double>(i - i % 2);
      const double angle =
          static_cast<double>(pos) / std::pow(10000.0, pair / static_cast<double>(width));
      pe(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

BiLstm::BiLstm(std::string name, std::size_t in, std::size_t hidden, Rng& rng)
    : hidden_(hidden) {
  auto make = [&](const std::string& dir) {
    return Direction{
        Parameter(name + "." + dir + ".w_ih", uniform_fan_in(in, 4 * hidden, hidden, rng)),
        Parameter(name + "." + dir + ".w_hh", uniform_fan_in(hidden, 4 * hidden, hidden, rng)),
        Parameter(name + "." + dir + ".bias", uniform_fan_in(1, 4 * hidden, hidden, rng))};
  };
  fwd_ = make("fwd");
  bwd_ = make("bwd");
}

std::pair<ad::Var, ad::Var> BiLstm::run(Direction& d, ad::Var x, std::size_t batch,
                                        std::size_t steps,
                                        const std::vector<std::size_t>& lengths,
                                        bool reverse) {
  ad::Tape& t = x.tape();
  const std::size_t h = hidden_;
  ad::Var xw = ad::add_row(ad::matmul(x, t.parameter(d.w_ih)), t.parameter(d.bias));
  ad::Var w_hh = t.parameter(d.w_hh);
  ad::Var state_h = t.constant(Matrix(batch, h));
  ad::Var state_c = t.constant(Matrix(batch, h));
  std::vector<ad::Var> outputs(steps);
  std::vector<double> m(batch);
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t step = reverse ? steps - 1 - s : s;
    bool all_valid = true;
    bool none_valid = true;
    for (std::size_t n = 0; n < batch; ++n) {
      m[n] = step < lengths[n] ? 1.0 : 0.0;
      all_valid = all_valid && m[n] == 1.0;
      none_valid = none_valid && m[n] == 0.0;
    }
    if (none_valid) {
      outputs[step] = t.constant(Matrix(batch, h));
      continue;
    }
    ad::Var pre = ad::add(ad::slice_rows(xw, step * batch, batch), ad::matmul(state_h, w_hh));
    ad::Var hc = ad::lstm_pointwise(pre, state_c);
    ad::Var h_new = ad::slice_cols(hc, 0, h);
    ad::Var c_new = ad::slice_cols(hc, h, h);
    if (all_valid) {
      state_h = h_new;
      state_c = c_new;
      outputs[step] = h_new;
    } else {
      state_h = ad::row_blend(h_new, state_h, m);
      state_c = ad::row_blend(c_new, state_c, m);
      outputs[step] = ad::scale_rows(h_new, m);
    }
  }
  return {ad::concat_rows(outputs), state_h};
}

LstmOutput BiLstm::forward(ad::Var x, std::size_t batch, std::size_t steps,
                           const std::vector<std::size_t>& lengths) {
  if (x.rows() != batch * steps) throw ShapeError("lstm input rows != batch * steps");
  if (lengths.size() != batch) throw ShapeError("lstm lengths size != batch");
  auto [fs, ff] = run(fwd_, x, batch, steps, lengths, false);
  auto [bs, bf] = run(bwd_, x, batch, steps, lengths, true);
  const ad::Var seq[] = {fs, bs};
  const ad::Var fin[] = {ff, bf};
  return {ad::concat_cols(seq), ad::concat_cols(fin)};
}

void BiLstm::collect(ParameterRefs& out) {
  for (Direction* d : {&fwd_, &bwd_}) {
    out.push_back(&d->w_ih);
    out.push_back(&d->w_hh);
    out.push_back(&d->bias);
  }
}

std::vector<std::size_t> to_time_major(std::size_t batch, std::size_t steps_in,
                                       std::size_t steps_out) {
  std::vector<std::size_t> idx(batch * steps_out);
  for (std::size_t t = 0; t < steps_out; ++t)
    for (std::size_t n = 0; n < batch; ++n) idx[t * batch + n] = n * steps_in + t;
  return idx;
}

std::vector<std::size_t> to_sample_major(std::size_t batch, std::size_t steps) {
  std::vector<std::size_t> idx(batch * steps);
  for (std::size_t n = 0; n < batch; ++n)
    for (std::size_t t = 0; t < steps; ++t) idx[n * steps + t] = t * batch + n;
  return idx;
}

std::vector<double> time_major_mask(const std::vector<std::size_t>& lengths,
                                    std::size_t steps) {
  const std::size_t batch = lengths.size();
  std::vector<double> m(batch * steps, 0.0);
  for (std::size_t t = 0; t < steps; ++t)
    for (std::size_t n = 0; n < batch; ++n) m[t * batch + n] = t < lengths[n] ? 1.0 : 0.0;
  return m;
}

}  // namespace scanpath::nn
