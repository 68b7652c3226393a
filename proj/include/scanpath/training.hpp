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
#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "scanpath/corpus.hpp"
#include "scanpath/embeddings.hpp"
#include "scanpath/losses.hpp"
#include "scanpath/metrics.hpp"
#include "scanpath/model.hpp"
#include "scanpath/nn/checkpoint.hpp"

namespace scanpath {

struct TrainConfig {
  std::size_t batch_size = 128;
  double gen_lr = 1e-4;
  double disc_lr = 1e-5;
  std::size_t epochs = 300;
  std::string gen_optimizer = "adam";
  std::string disc_optimizer = "rmsprop";
  LossWeights weights;
  std::uint64_t seed = 0;
  std::size_t checkpoint_every = 10;
  // Validation scoring after every epoch; 0 disables it.
  std::size_t eval_noise_samples = 1;
  double tau = 0.5;
  std::size_t threads = 1;
  GeneratorConfig gen;
  DiscriminatorConfig disc;

  void validate() const;
  // Flat key=value text; '#' starts a comment. Unknown keys are rejected.
  static TrainConfig parse(std::istream& in);
  static TrainConfig load(const std::filesystem::path& path);
  // Applies one key=value pair; returns false for unknown keys.
  bool set(const std::string& key, const std::string& value);
  std::string to_text() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double lg = 0.0;
  double ls = 0.0;
  double lr = 0.0;
  double gen_term = 0.0;
  double disc_loss = 0.0;
  std::optional<MetricReport> val;

  nlohmann::json to_json() const;
  static EpochRecord from_json(const nlohmann::json& j);
};

struct RunHistory {
  std::vector<EpochRecord> epochs;

  std::string to_jsonl() const;
  static RunHistory from_jsonl(const std::string& text);
};

// Anything that maps (embedding, noise seed) to a generator output; lets
// tests evaluate stubs through the same path as trained generators.
using GenerateFn = std::function<GeneratorOutput(const TextEmbedding&, std::uint64_t)>;

namespace training {

// Noise seed of draw `k` for evaluation item `item`.
std::uint64_t eval_noise_seed(std::uint64_t seed, std::size_t item, std::size_t k);

// For every real scanpath, generates `n_noise` samples, cuts them at the
// eos threshold and scores each against the real one; all pair scores are
// averaged. The reduction order is fixed regardless of `threads`.
MetricReport evaluate(const GenerateFn& generate, std::span<const NormalizedScanpath> part,
                      const EmbeddingMap& embs, std::size_t n_noise, std::uint64_t seed,
                      double tau = 0.5, std::size_t threads = 1);
MetricReport evaluate_checkpoint(Generator& gen, std::span<const NormalizedScanpath> part,
                                 const EmbeddingMap& embs, std::size_t n_noise,
                                 std::uint64_t seed, double tau = 0.5, std::size_t threads = 1);

struct TrainOptions {
  // Checkpoints, history.jsonl and diagnostics land here when set.
  std::optional<std::filesystem::path> out_dir;
  // Resume from a checkpoint written by an earlier run with the same config.
  std::optional<std::filesystem::path> resume_from;
  // Stop after this many epochs in total (defaults to cfg.epochs); used to
  // simulate interruptions.
  std::optional<std::size_t> stop_after;
  // Called after every epoch with the record just appended.
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  Generator gen;
  Discriminator disc;
  RunHistory history;
  double p99_duration_ms = 0.0;
};

// Alternates one discriminator update and one generator update per batch.
// Raises ValidationError before the first epoch when a sentence lacks an
// embedding and DivergenceError (after writing diagnostics.json) when a loss
// becomes non-finite.
TrainResult train(const TrainConfig& cfg, const Partition<NormalizedScanpath>& split,
                  const EmbeddingMap& embs, const TrainOptions& opts = {});

// Generator checkpoints carry the config needed to rebuild the network.
void save_generator(const std::filesystem::path& path, Generator& gen, double p99_duration_ms);
struct LoadedGenerator {
  Generator gen;
  double p99_duration_ms = 0.0;
};
LoadedGenerator load_generator(const std::filesystem::path& path);
Discriminator load_discriminator(const std::filesystem::path& path);

}  // namespace training
}  // namespace scanpath
