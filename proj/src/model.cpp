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

#include "scanpath/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "scanpath/autograd/ops.hpp"
#include "scanpath/core/error.hpp"

namespace scanpath {
namespace {

std::size_t meta_size(const std::map<std::string, std::string>& meta, const std::string& key) {
  auto it = meta.find(key);
  if (it == meta.end()) throw FormatError("checkpoint config lacks " + key);
  return static_cast<std::size_t>(std::stoull(it->second));
}

double meta_double(const std::map<std::string, std::string>& meta, const std::string& key) {
  auto it = meta.find(key);
  if (it == meta.end()) throw FormatError("checkpoint config lacks " + key);
  return std::stod(it->second);
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Builds the sample-major (N * T) x width input: token rows | noise rows,
// plus the sinusoidal encoding.
Matrix generator_input(std::span<const TextEmbedding* const> embs,
                       std::span<const NoiseBlock> noise, const GeneratorConfig& cfg,
                       const Matrix& positional) {
  const std::size_t n = embs.size(), steps = cfg.max_len, width = cfg.width();
  Matrix x(n * steps, width);
  for (std::size_t b = 0; b < n; ++b) {
    const TextEmbedding& e = *embs[b];
    const Matrix& z = noise[b].values;
    if (e.tokens.rows() != steps || e.tokens.cols() != cfg.emb_dim)
      throw ShapeError("generator: embedding for '" + e.sentence_id + "' is " +
                       std::to_string(e.tokens.rows()) + "x" + std::to_string(e.tokens.cols()));
    if (z.rows() != steps || z.cols() != cfg.noise_dim)
      throw ShapeError("generator: noise block shape mismatch");
    for (std::size_t t = 0; t < steps; ++t) {
      double* row = x.data() + (b * steps + t) * width;
      std::copy_n(e.tokens.data() + t * cfg.emb_dim, cfg.emb_dim, row);
      std::copy_n(z.data() + t * cfg.noise_dim, cfg.noise_dim, row + cfg.emb_dim);
      for (std::size_t c = 0; c < width; ++c) row[c] += positional(t, c);
    }
  }
  return x;
}

}  // namespace

void GeneratorConfig::validate() const {
  if (max_len == 0 || emb_dim == 0 || layers == 0 || heads == 0 || ff_dim == 0 ||
      head_hidden == 0)
    throw ValidationError("generator config: sizes must be positive");
  if (width() % heads != 0)
    throw ValidationError("generator config: width " + std::to_string(width()) +
                          " not divisible by " + std::to_string(heads) + " heads");
}

std::map<std::string, std::string> GeneratorConfig::to_meta(const std::string& p) const {
  return {{p + "max_len", std::to_string(max_len)},
          {p + "emb_dim", std::to_string(emb_dim)},
          {p + "noise_dim", std::to_string(noise_dim)},
          {p + "layers", std::to_string(layers)},
          {p + "heads", std::to_string(heads)},
          {p + "ff_dim", std::to_string(ff_dim)},
          {p + "head_hidden", std::to_string(head_hidden)},
          {p + "mask_padded_tokens", mask_padded_tokens ? "1" : "0"}};
}

GeneratorConfig GeneratorConfig::from_meta(const std::map<std::string, std::string>& m,
                                           const std::string& p) {
  GeneratorConfig c;
  c.max_len = meta_size(m, p + "max_len");
  c.emb_dim = meta_size(m, p + "emb_dim");
  c.noise_dim = meta_size(m, p + "noise_dim");
  c.layers = meta_size(m, p + "layers");
  c.heads = meta_size(m, p + "heads");
  c.ff_dim = meta_size(m, p + "ff_dim");
  c.head_hidden = meta_size(m, p + "head_hidden");
  c.mask_padded_tokens = meta_size(m, p + "mask_padded_tokens") != 0;
  return c;
}

void DiscriminatorConfig::validate() const {
  if (max_len == 0 || emb_dim == 0 || hidden == 0 || fusion_heads == 0 || ff_hidden == 0)
    throw ValidationError("discriminator config: sizes must be positive");
  if ((4 * hidden) % fusion_heads != 0)
    throw ValidationError("discriminator config: 4*hidden not divisible by fusion heads");
  if (dropout < 0.0 || dropout >= 1.0)
    throw ValidationError("discriminator config: dropout must lie in [0, 1)");
}

std::map<std::string, std::string> DiscriminatorConfig::to_meta(const std::string& p) const {
  return {{p + "max_len", std::to_string(max_len)},
          {p + "emb_dim", std::to_string(emb_dim)},
          {p + "hidden", std::to_string(hidden)},
          {p + "dropout", fmt_double(dropout)},
          {p + "fusion_heads", std::to_string(fusion_heads)},
          {p + "ff_hidden", std::to_string(ff_hidden)}};
}

DiscriminatorConfig DiscriminatorConfig::from_meta(const std::map<std::string, std::string>& m,
                                                   const std::string& p) {
  DiscriminatorConfig c;
  c.max_len = meta_size(m, p + "max_len");
  c.emb_dim = meta_size(m, p + "emb_dim");
  c.hidden = meta_size(m, p + "hidden");
  c.dropout = meta_double(m, p + "dropout");
  c.fusion_heads = meta_size(m, p + "fusion_heads");
  c.ff_hidden = meta_size(m, p + "ff_hidden");
  return c;
}

NoiseBlock sample_noise(std::uint64_t seed, std::size_t rows, std::size_t cols) {
  Rng rng = make_rng(seed);
  NoiseBlock nb{Matrix(rows, cols), seed};
  for (double& v : nb.values.values()) v = standard_normal(rng);
  return nb;
}

Generator::Generator(GeneratorConfig cfg, std::uint64_t init_seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng = make_rng(init_seed);
  positional_ = nn::sinusoidal_encoding(cfg_.max_len, cfg_.width());
  for (std::size_t l = 0; l < cfg_.layers; ++l)
    encoder_.emplace_back("gen.encoder." + std::to_string(l), cfg_.width(), cfg_.heads,
                          cfg_.ff_dim, rng);
  scan_hidden_ = nn::Linear("gen.scan_head.hidden", cfg_.width(), cfg_.head_hidden, rng);
  scan_out_ = nn::Linear("gen.scan_head.out", cfg_.head_hidden, 3, rng);
  cls_hidden_ = nn::Linear("gen.cls_head.hidden", cfg_.width(), cfg_.head_hidden, rng);
  cls_out_ = nn::Linear("gen.cls_head.out", cfg_.head_hidden, cfg_.emb_dim, rng);
}

GeneratorBatch Generator::forward(ad::Tape& tape, std::span<const TextEmbedding* const> embs,
                                  std::span<const NoiseBlock> noise) {
  if (embs.size() != noise.size() || embs.empty())
    throw ShapeError("generator: need one noise block per embedding");
  const std::size_t n = embs.size(), steps = cfg_.max_len;
  std::vector<std::vector<bool>> allowed;
  if (cfg_.mask_padded_tokens) {
    allowed.resize(n);
    for (std::size_t b = 0; b < n; ++b) {
      allowed[b].assign(steps, false);
      const std::size_t count = std::min(embs[b]->token_count, steps);
      for (std::size_t t = 0; t < std::max<std::size_t>(count, 1); ++t) allowed[b][t] = true;
    }
  }
  ad::Var h = tape.constant(generator_input(embs, noise, cfg_, positional_));
  for (auto& layer : encoder_) h = layer.forward(h, n, steps, allowed);

  ad::Var raw = scan_out_(ad::relu(scan_hidden_(h)));
  const ad::Var cols[] = {ad::slice_cols(raw, 0, 2), ad::sigmoid(ad::slice_cols(raw, 2, 1))};
  ad::Var steps_out = ad::concat_cols(cols);

  ad::Var pooled = ad::block_mean_rows(h, steps);
  ad::Var cls = cls_out_(ad::relu(cls_hidden_(pooled)));
  return {steps_out, cls, n};
}

GeneratorOutput Generator::forward(const TextEmbedding& emb, const NoiseBlock& noise) {
  ad::Tape tape(false);
  const TextEmbedding* e[] = {&emb};
  GeneratorBatch b = forward(tape, e, std::span<const NoiseBlock>(&noise, 1));
  return {b.steps.value(), b.cls.value()};
}

nn::ParameterRefs Generator::parameters() {
  nn::ParameterRefs out;
  for (auto& layer : encoder_) layer.collect(out);
  scan_hidden_.collect(out);
  scan_out_.collect(out);
  cls_hidden_.collect(out);
  cls_out_.collect(out);
  return out;
}

std::size_t Generator::parameter_count() { return nn::count_scalars(parameters()); }

Discriminator::Discriminator(DiscriminatorConfig cfg, std::uint64_t init_seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng = make_rng(init_seed);
  const std::size_t h = cfg_.hidden;
  text_lstm_ = nn::BiLstm("disc.text_lstm", cfg_.emb_dim, h, rng);
  text_norm_ = nn::BatchNorm("disc.text_norm", 2 * h);
  scan_lstm_ = nn::BiLstm("disc.scan_lstm", 3, h, rng);
  scan_norm_ = nn::BatchNorm("disc.scan_norm", 2 * h);
  fusion_ = nn::MultiHeadAttention("disc.fusion", 4 * h, cfg_.fusion_heads, rng);
  post_lstm_ = nn::BiLstm("disc.post_lstm", 4 * h, h, rng);
  ff_hidden_ = nn::Linear("disc.ff.hidden", 2 * h, cfg_.ff_hidden, rng);
  ff_out_ = nn::Linear("disc.ff.out", cfg_.ff_hidden, 1, rng);
}

ad::Var Discriminator::forward(ad::Tape& tape, std::span<const TextEmbedding* const> embs,
                               ad::Var steps, const std::vector<std::size_t>& scan_lengths,
                               bool train, Rng* rng) {
  const std::size_t n = embs.size(), horizon = cfg_.max_len;
  if (n == 0 || steps.rows() != n * horizon || steps.cols() != 3 || scan_lengths.size() != n)
    throw ShapeError("discriminator: input shape mismatch");
  std::vector<std::size_t> text_len(n), merged_len(n);
  std::size_t active = 1;
  Matrix text(n * horizon, cfg_.emb_dim);
  for (std::size_t b = 0; b < n; ++b) {
    const TextEmbedding& e = *embs[b];
    if (e.tokens.rows() != horizon || e.tokens.cols() != cfg_.emb_dim)
      throw ShapeError("discriminator: embedding for '" + e.sentence_id + "' has wrong shape");
    text_len[b] = std::clamp<std::size_t>(e.token_count, 1, horizon);
    const std::size_t sl = std::clamp<std::size_t>(scan_lengths[b], 1, horizon);
    merged_len[b] = std::max(text_len[b], sl);
    active = std::max(active, merged_len[b]);
    std::copy_n(e.tokens.data(), e.tokens.size(), text.data() + b * horizon * cfg_.emb_dim);
  }
  std::vector<std::size_t> scan_len(n);
  for (std::size_t b = 0; b < n; ++b) scan_len[b] = std::clamp<std::size_t>(scan_lengths[b], 1, horizon);

  // Time-major views truncated to the longest active sequence.
  const std::vector<std::size_t> tm = nn::to_time_major(n, horizon, active);
  ad::Var text_tm = ad::gather_rows(tape.constant(std::move(text)), tm);
  ad::Var scan_tm = ad::gather_rows(steps, tm);

  ad::Var text_seq = text_lstm_.forward(text_tm, n, active, text_len).sequence;
  text_seq = text_norm_.forward(text_seq, nn::time_major_mask(text_len, active), train);
  text_seq = nn::dropout(text_seq, cfg_.dropout, train, rng);

  ad::Var scan_seq = scan_lstm_.forward(scan_tm, n, active, scan_len).sequence;
  scan_seq = scan_norm_.forward(scan_seq, nn::time_major_mask(scan_len, active), train);
  scan_seq = nn::dropout(scan_seq, cfg_.dropout, train, rng);

  const ad::Var branches[] = {text_seq, scan_seq};
  ad::Var merged = ad::concat_cols(branches);

  std::vector<std::vector<bool>> allowed(n, std::vector<bool>(active, false));
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t t = 0; t < merged_len[b]; ++t) allowed[b][t] = true;
  ad::Var merged_sm = ad::gather_rows(merged, nn::to_sample_major(n, active));
  ad::Var fused_sm = fusion_.forward(merged_sm, n, active, allowed);
  ad::Var fused = ad::gather_rows(fused_sm, nn::to_time_major(n, active, active));

  ad::Var final = post_lstm_.forward(fused, n, active, merged_len).final;
  return ad::sigmoid(ff_out_(ad::relu(ff_hidden_(final))));
}

double Discriminator::forward(const TextEmbedding& emb, const Matrix& steps, bool train,
                              Rng* rng) {
  ad::Tape tape(false);
  const TextEmbedding* e[] = {&emb};
  ad::Var s = tape.constant(steps);
  return forward(tape, e, s, {eos_length(steps)}, train, rng).value()(0, 0);
}

nn::ParameterRefs Discriminator::parameters() {
  nn::ParameterRefs out;
  text_lstm_.collect(out);
  text_norm_.collect(out);
  scan_lstm_.collect(out);
  scan_norm_.collect(out);
  fusion_.collect(out);
  post_lstm_.collect(out);
  ff_hidden_.collect(out);
  ff_out_.collect(out);
  return out;
}

std::size_t Discriminator::parameter_count() { return nn::count_scalars(parameters()); }

std::size_t eos_length(const Matrix& steps, double tau, std::size_t offset,
                       std::size_t horizon) {
  if (horizon == 0) horizon = steps.rows() - offset;
  for (std::size_t k = 0; k < horizon; ++k)
    if (steps(offset + k, 2) > tau) return k + 1;
  return horizon;
}

Scanpath truncate_at_eos(const GeneratorOutput& out, const NormMeta& meta, double tau,
                         const std::string& participant_id, const std::string& sentence_id) {
  if (!(tau > 0.0 && tau < 1.0)) throw ValidationError("tau must lie in (0, 1)");
  if (meta.sentence_len == 0) throw ValidationError("sentence length must be positive");
  const std::size_t len = eos_length(out.steps, tau);
  const double words = static_cast<double>(meta.sentence_len);
  Scanpath sp{participant_id, sentence_id, {}};
  sp.fixations.reserve(len);
  for (std::size_t i = 0; i < len; ++i) {
    const double idx = std::clamp(std::round(out.steps(i, 0) * words), 0.0, words - 1.0);
    const double dur = std::clamp(out.steps(i, 1), 0.0, 1.0) * meta.p99_duration_ms;
    sp.fixations.push_back({static_cast<std::size_t>(idx), dur});
  }
  return sp;
}

NormalizedScanpath truncate_normalized(const GeneratorOutput& out, const NormMeta& meta,
                                       double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw ValidationError("tau must lie in (0, 1)");
  NormalizedScanpath ns;
  ns.participant_id = "generated";
  ns.meta = meta;
  ns.true_length = eos_length(out.steps, tau);
  ns.steps = Matrix(out.steps.rows(), 3);
  for (std::size_t i = 0; i < ns.true_length; ++i) {
    ns.steps(i, 0) = std::clamp(out.steps(i, 0), 0.0, 1.0);
    ns.steps(i, 1) = std::clamp(out.steps(i, 1), 0.0, 1.0);
  }
  ns.steps(ns.true_length - 1, 2) = 1.0;
  return ns;
}

}  // namespace scanpath
