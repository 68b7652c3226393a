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
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "scanpath/autograd/tape.hpp"
#include "scanpath/corpus.hpp"
#include "scanpath/embeddings.hpp"
#include "scanpath/nn/layers.hpp"

namespace scanpath {

struct GeneratorConfig {
  std::size_t max_len = kMaxScanpathLength;
  std::size_t emb_dim = kEmbeddingDim;
  std::size_t noise_dim = 8;  // 776 - 768
  std::size_t layers = 3;
  std::size_t heads = 4;
  std::size_t ff_dim = 2048;
  std::size_t head_hidden = 256;
  // Attention keys past a sentence's token_count are masked out.
  bool mask_padded_tokens = true;

  std::size_t width() const { return emb_dim + noise_dim; }
  void validate() const;
  std::map<std::string, std::string> to_meta(const std::string& prefix) const;
  static GeneratorConfig from_meta(const std::map<std::string, std::string>& meta,
                                   const std::string& prefix);
};

struct DiscriminatorConfig {
  std::size_t max_len = kMaxScanpathLength;
  std::size_t emb_dim = kEmbeddingDim;
  std::size_t hidden = 64;
  double dropout = 0.3;
  std::size_t fusion_heads = 4;
  std::size_t ff_hidden = 64;

  void validate() const;
  std::map<std::string, std::string> to_meta(const std::string& prefix) const;
  static DiscriminatorConfig from_meta(const std::map<std::string, std::string>& meta,
                                       const std::string& prefix);
};

// i.i.d. standard-normal rows x cols block; identical for identical seeds.
struct NoiseBlock {
  Matrix values;
  std::uint64_t seed = 0;
};

NoiseBlock sample_noise(std::uint64_t seed, std::size_t rows = kMaxScanpathLength,
                        std::size_t cols = 8);

// Values of one generator pass: max_len x 3 steps (position, duration,
// eos probability) and the reconstructed CLS vector (1 x emb_dim).
struct GeneratorOutput {
  Matrix steps;
  Matrix cls_recon;
};

// Differentiable batch result. `steps` is sample-major ((N * max_len) x 3)
// with the eos column already squashed; `cls` is N x emb_dim.
struct GeneratorBatch {
  ad::Var steps;
  ad::Var cls;
  std::size_t batch = 0;
};

class Generator {
 public:
  Generator(GeneratorConfig cfg, std::uint64_t init_seed);

  GeneratorBatch forward(ad::Tape& tape, std::span<const TextEmbedding* const> embs,
                         std::span<const NoiseBlock> noise);
  GeneratorOutput forward(const TextEmbedding& emb, const NoiseBlock& noise);

  nn::ParameterRefs parameters();
  std::size_t parameter_count();
  const GeneratorConfig& config() const { return cfg_; }

 private:
  GeneratorConfig cfg_;
  Matrix positional_;
  std::vector<nn::TransformerEncoderLayer> encoder_;
  nn::Linear scan_hidden_;
  nn::Linear scan_out_;
  nn::Linear cls_hidden_;
  nn::Linear cls_out_;
};

class Discriminator {
 public:
  Discriminator(DiscriminatorConfig cfg, std::uint64_t init_seed);

  // `steps` is sample-major ((N * max_len) x 3); `scan_lengths[n]` is the
  // number of leading steps of sample n to read. Returns N x 1 probabilities
  // that each scanpath is real. Dropout and batch statistics are used only
  // when `train` is set, in which case `rng` drives the dropout masks.
  ad::Var forward(ad::Tape& tape, std::span<const TextEmbedding* const> embs, ad::Var steps,
                  const std::vector<std::size_t>& scan_lengths, bool train, Rng* rng);
  double forward(const TextEmbedding& emb, const Matrix& steps, bool train = false,
                 Rng* rng = nullptr);

  nn::ParameterRefs parameters();
  std::size_t parameter_count();
  const DiscriminatorConfig& config() const { return cfg_; }

 private:
  DiscriminatorConfig cfg_;
  nn::BiLstm text_lstm_;
  nn::BatchNorm text_norm_;
  nn::BiLstm scan_lstm_;
  nn::BatchNorm scan_norm_;
  nn::MultiHeadAttention fusion_;
  nn::BiLstm post_lstm_;
  nn::Linear ff_hidden_;
  nn::Linear ff_out_;
};

// Scanpath length rule: the smallest k (1-based) with eos_k > tau, or the
// full horizon when no step exceeds tau. Reads `steps` rows
// [offset, offset + horizon).
std::size_t eos_length(const Matrix& steps, double tau = 0.5, std::size_t offset = 0,
                       std::size_t horizon = 0);

// Cuts a generator output at eos_length and maps it back to word indices
// (nearest integer, clamped to the sentence) and milliseconds (times p99).
Scanpath truncate_at_eos(const GeneratorOutput& out, const NormMeta& meta, double tau = 0.5,
                         const std::string& participant_id = "generated",
                         const std::string& sentence_id = "");

// Same cut, kept in normalized space for downstream consumers.
NormalizedScanpath truncate_normalized(const GeneratorOutput& out, const NormMeta& meta,
                                       double tau = 0.5);

}  // namespace scanpath
