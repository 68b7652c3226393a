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

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "scanpath/corpus.hpp"
#include "scanpath/embeddings.hpp"
#include "scanpath/losses.hpp"
#include "scanpath/model.hpp"

namespace scanpath {

struct TaskExample {
  std::string sentence_id;
  int label = 0;
  std::string text;
  std::optional<std::string> pair_text;
};

// Counts reads of real scanpaths so callers can verify that a configuration
// never looked at them.
class AccessCounter {
 public:
  AccessCounter() = default;
  AccessCounter(const AccessCounter& o) : n_(o.n_.load()) {}
  AccessCounter& operator=(const AccessCounter& o) {
    n_ = o.n_.load();
    return *this;
  }
  void bump() const { n_.fetch_add(1, std::memory_order_relaxed); }
  std::size_t count() const { return n_.load(); }
  void reset() { n_ = 0; }

 private:
  mutable std::atomic<std::size_t> n_{0};
};

// Pair inputs keep the second sentence's embedding and scanpath under
// sentence_id + kPairSuffix.
inline constexpr const char* kPairSuffix = "::pair";

struct TaskData {
  std::vector<TaskExample> examples;
  EmbeddingMap embeddings;
  std::map<std::string, NormalizedScanpath> real;

  const NormalizedScanpath& real_scanpath(const std::string& id) const;
  bool has_real(const std::string& id) const { return real.contains(id); }
  AccessCounter real_reads;
};

enum class SourceKind { kNone, kRandom, kReal, kGenerated, kRealPlusGenerated };

std::string to_string(SourceKind k);
SourceKind parse_source(const std::string& s);

struct ClassifierConfig {
  std::size_t max_len = kMaxScanpathLength;
  std::size_t emb_dim = kEmbeddingDim;
  std::size_t hidden = 64;
  double dropout = 0.3;
  std::size_t ff_hidden = 64;

  void validate() const;
  std::map<std::string, std::string> to_meta(const std::string& prefix) const;
  static ClassifierConfig from_meta(const std::map<std::string, std::string>& meta,
                                    const std::string& prefix);
};

// Two BiLSTM + batch-norm branches (text, scanpath) concatenated per step,
// a post-merge BiLSTM and a feed-forward head with a logistic output.
class Classifier {
 public:
  Classifier(ClassifierConfig cfg, std::uint64_t init_seed);

  // `steps` is sample-major ((N * max_len) x 3). Returns N x 1 class-1
  // probabilities.
  ad::Var forward(ad::Tape& tape, std::span<const TextEmbedding* const> embs, ad::Var steps,
                  const std::vector<std::size_t>& scan_lengths, bool train, Rng* rng);
  // Without steps the scanpath branch receives zeros, read under the
  // eos-threshold length rule like any other step matrix.
  double forward(const TextEmbedding& emb, const Matrix* steps = nullptr);

  nn::ParameterRefs parameters();
  const ClassifierConfig& config() const { return cfg_; }

 private:
  ClassifierConfig cfg_;
  nn::BiLstm text_lstm_;
  nn::BatchNorm text_norm_;
  nn::BiLstm scan_lstm_;
  nn::BatchNorm scan_norm_;
  nn::BiLstm post_lstm_;
  nn::Linear ff_hidden_;
  nn::Linear ff_out_;
};

// A scanpath as the classifier reads it: max_len x 3 normalized steps and the
// number of leading steps that count.
struct ScanInput {
  Matrix steps;
  std::size_t length = 1;
};

namespace downstream {

// Reads {"sentence_id", "text", "label", optional "pair_text"} lines.
std::vector<TaskExample> parse_task(std::istream& in);
std::vector<TaskExample> read_task(const std::filesystem::path& path);

// Conditioning input of an example: the sentence embedding, or for pair
// inputs both embeddings joined along the token axis with a row of -1s in
// between (truncated to max_tokens).
TextEmbedding example_embedding(const TaskData& data, const TaskExample& ex);
Matrix join_pair_steps(const ScanInput& a, const ScanInput& b, std::size_t* length);

// Scanpath inputs for every example under one source, fixed per run.
// kRealPlusGenerated is not a single source and is rejected here.
std::vector<ScanInput> resolve_source(SourceKind kind, const TaskData& data,
                                      Generator* gen, std::uint64_t seed, double tau);

ScanInput random_scanpath(Rng& rng, std::size_t max_len);

// Fold id per example; classes are shuffled separately and dealt round-robin
// so each fold keeps the global label balance.
std::vector<std::size_t> stratified_folds(std::span<const int> labels, std::size_t folds,
                                          std::uint64_t seed);

struct ClassifierTraining {
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  ClassifierConfig clf;

  void validate() const;
};

struct ConfigurationResult {
  SourceKind train_source = SourceKind::kNone;
  SourceKind test_source = SourceKind::kNone;
  double weighted_f1 = 0.0;  // mean over folds
  std::vector<double> fold_f1;

  nlohmann::json to_json() const;
};

// k-fold cross-validated weighted F1 of a classifier trained with scanpaths
// from `train_src` and tested with scanpaths from `test_src`. Folds run on
// up to `threads` workers with per-fold seeds, so results do not depend on
// the thread count.
ConfigurationResult run_configuration(SourceKind train_src, SourceKind test_src,
                                      const TaskData& data, const ClassifierTraining& cfg,
                                      Generator* gen, std::size_t folds, std::uint64_t seed,
                                      double tau = 0.5, std::size_t threads = 1);

// Trains a classifier on all examples with the given scanpath inputs.
void fit_classifier(Classifier& clf, std::span<const TextEmbedding> embs,
                    std::span<const ScanInput> scans, std::span<const int> labels,
                    const ClassifierTraining& cfg, std::uint64_t seed);
std::vector<int> predict(Classifier& clf, std::span<const TextEmbedding> embs,
                         std::span<const ScanInput> scans);

struct SyntheticTask {
  TaskData data;  // `real` holds the oracle scanpaths
  std::vector<std::string> triggers;
};

// Planted-signal task: label = exactly one of two trigger words present.
// Oracle scanpaths read every word once, 0.9 duration on triggers and 0.1
// elsewhere. Word embeddings are random per type; a few distractor types sit
// close to the triggers.
SyntheticTask make_synthetic_task(std::uint64_t seed, std::size_t n_examples,
                                  std::size_t dim = 16);

struct IntentConfig {
  std::size_t epochs = 5;
  std::size_t batch_size = 32;
  double lr_gen = 1e-4;
  double lr_clf = 1e-3;
  double task_weight = 1.0;
  double gan_weight = 1.0;  // weight of the net generator loss terms
  LossWeights weights;
  double tau = 0.5;

  void validate() const;
};

struct IntentHistory {
  std::vector<double> task_loss;
  std::vector<double> task_f1;

  nlohmann::json to_json() const;
};

// Joint finetuning: the classifier reads generated steps end to end and is
// updated on the task loss; the generator is updated on task loss plus the
// net generator loss (content terms use real scanpaths where present, the
// adversarial term is used when a discriminator is given, which stays
// frozen).
IntentHistory intent_finetune(Generator& gen, Classifier& clf, Discriminator* disc,
                              const TaskData& data, const IntentConfig& cfg,
                              std::uint64_t seed);

// Mean normalized duration of generated fixations that land on the given
// words (one noise draw per example, fixed by `seed`).
double mean_duration_on_words(Generator& gen, const TaskData& data,
                              const std::set<std::string>& words, std::uint64_t seed,
                              double tau = 0.5);

// Generated scanpaths per example in the normalized archive layout.
std::vector<NormalizedScanpath> export_features(Generator& gen, const TaskData& data,
                                                std::size_t n_noise, std::uint64_t seed,
                                                double tau, double p99_duration_ms);

void save_classifier(const std::filesystem::path& path, Classifier& clf);
Classifier load_classifier(const std::filesystem::path& path);

}  // namespace downstream
}  // namespace scanpath
