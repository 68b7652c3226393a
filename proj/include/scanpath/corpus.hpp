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
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "scanpath/core/matrix.hpp"

namespace scanpath {

// Fixed scanpath horizon; longer scanpaths are trimmed, shorter ones padded.
inline constexpr std::size_t kMaxScanpathLength = 80;

struct Fixation {
  std::size_t word_index = 0;
  double duration_ms = 0.0;

  friend bool operator==(const Fixation&, const Fixation&) = default;
};

// Temporal fixation sequence of one participant over one sentence. Word
// indices may repeat and need not increase (regressions).
struct Scanpath {
  std::string participant_id;
  std::string sentence_id;
  std::vector<Fixation> fixations;

  friend bool operator==(const Scanpath&, const Scanpath&) = default;
};

struct Sentence {
  std::string sentence_id;
  std::vector<std::string> words;
};

struct NormMeta {
  double p99_duration_ms = 0.0;
  std::size_t sentence_len = 0;
};

// kMaxScanpathLength x 3 steps of (position, duration, eos). Steps at or past
// true_length are (0, 0, 0); eos is 1 only at true_length - 1.
struct NormalizedScanpath {
  std::string participant_id;
  std::string sentence_id;
  Matrix steps;
  std::size_t true_length = 0;
  NormMeta meta;
};

template <typename T>
struct Partition {
  std::vector<T> train;
  std::vector<T> val;
  std::vector<T> test;
  std::uint64_t seed = 0;
};

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

namespace corpus {

// Parses UTF-8 CSV with the exact header
// `participant_id,sentence_id,word_index,duration_ms`. Rows of one
// (participant, sentence) pair must appear in fixation order; the output keeps
// pairs in order of first appearance. Errors carry 1-based file line numbers.
std::vector<Scanpath> parse_fixation_records(std::istream& in);
std::vector<Scanpath> read_fixation_csv(const std::filesystem::path& path);
void write_fixation_records(std::ostream& out, std::span<const Scanpath> corpus);

// Whitespace tokenization used to define word indices.
std::vector<std::string> tokenize(const std::string& text);
// JSON Lines: {"sentence_id": ..., "text": ...}
std::vector<Sentence> parse_sentences(std::istream& in);
std::vector<Sentence> read_sentences(const std::filesystem::path& path);

// Percentile with linear interpolation between closest ranks: position
// q/100 * (n - 1) in the sorted sample.
double percentile_linear(std::vector<double> values, double q);

struct CapResult {
  std::vector<Scanpath> corpus;
  double p99 = 0.0;
  std::size_t dropped_fixations = 0;
  std::size_t dropped_scanpaths = 0;
};

// Drops fixations longer than the 99th percentile duration (and scanpaths
// left empty); the percentile is returned as the duration scale.
CapResult cap_outlier_durations(std::vector<Scanpath> corpus);

NormalizedScanpath normalize(const Scanpath& sp, const Sentence& sentence, double p99,
                             std::size_t max_len = kMaxScanpathLength);
NormalizedScanpath normalize(const Scanpath& sp, std::size_t sentence_len, double p99,
                             std::size_t max_len = kMaxScanpathLength);

// Inverse of normalize on the kept steps: word index = round(position * len),
// duration = duration * p99.
Scanpath denormalize(const NormalizedScanpath& ns);

// Splits by sentence id so all scanpaths of a sentence land in one part.
// Deterministic in `seed`; every part receives at least one sentence.
template <typename T>
Partition<T> split(const std::vector<T>& items,
                   const std::function<const std::string&(const T&)>& sentence_of,
                   SplitRatios ratios, std::uint64_t seed);

// Assigns sentence ids to parts; exposed for reuse by the templated split.
struct SentenceAssignment {
  std::vector<std::string> train, val, test;
};
SentenceAssignment assign_sentences(std::vector<std::string> ids, SplitRatios ratios,
                                    std::uint64_t seed);

// Full ingest: cap outlier durations, normalize against the sentences and
// split by sentence id.
struct PreparedCorpus {
  Partition<NormalizedScanpath> split;
  double p99 = 0.0;
  std::size_t dropped_fixations = 0;
  std::size_t dropped_scanpaths = 0;
};
PreparedCorpus prepare(std::vector<Scanpath> raw, const std::vector<Sentence>& sentences,
                       SplitRatios ratios, std::uint64_t seed);

// NormalizedScanpath archive, JSON Lines.
void write_normalized(std::ostream& out, std::span<const NormalizedScanpath> items);
void write_normalized(const std::filesystem::path& path,
                      std::span<const NormalizedScanpath> items);
std::vector<NormalizedScanpath> parse_normalized(std::istream& in);
std::vector<NormalizedScanpath> read_normalized(const std::filesystem::path& path);

}  // namespace corpus
}  // namespace scanpath

#include "scanpath/corpus_split.ipp"
