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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "scanpath/corpus.hpp"

namespace scanpath {

// A fixation in normalized 1-D space: position = word / sentence_len,
// duration = ms / p99 (clipped to [0, 1]).
struct NormalizedFixation {
  double position = 0.0;
  double duration = 0.0;
};

struct SaccadeVector {
  double amplitude = 0.0;  // end_pos - start_pos
  double start_pos = 0.0;
  double end_pos = 0.0;
  double start_dur = 0.0;
  double end_dur = 0.0;
};

struct Alignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double cost = 0.0;
};

// Per-pair MultiMatch similarities; a dimension is empty when undefined for
// the pair (see multimatch).
struct MultiMatchScores {
  std::optional<double> vector;
  std::optional<double> length;
  std::optional<double> position;
  std::optional<double> duration;
};

struct MetricReport {
  double vector = 0.0;
  double length = 0.0;
  double position = 0.0;
  double duration = 0.0;
  double nld = 0.0;
  // Pairs contributing to each dimension; pairs where a dimension is
  // undefined are skipped for that dimension only.
  std::size_t n_vector = 0;
  std::size_t n_length = 0;
  std::size_t n_position = 0;
  std::size_t n_duration = 0;
  std::size_t n_nld = 0;
  std::size_t n_pairs = 0;

  nlohmann::json to_json(bool with_counts = true) const;
  static MetricReport from_json(const nlohmann::json& j);
};

namespace metrics {

std::vector<NormalizedFixation> normalized_fixations(const Scanpath& sp, const NormMeta& meta);

// n - 1 saccades for n fixations; empty input raises ValidationError.
std::vector<SaccadeVector> to_saccades(std::span<const NormalizedFixation> fixations);

// Global alignment of two saccade sequences minimizing the summed
// |amplitude difference| of matched pairs plus |amplitude| of every unmatched
// saccade. Ties prefer a match, then leaving a saccade of `b` unmatched, then
// leaving a saccade of `a` unmatched.
Alignment align(std::span<const SaccadeVector> a, std::span<const SaccadeVector> b);

// 1-D MultiMatch without the direction dimension. Over aligned saccade pairs:
//   vector   = 1 - |amp_g - amp_r| / 2
//   length   = 1 - ||amp_g| - |amp_r|| / 2
//   position = 1 - |end_g - end_r|
//   duration = 1 - |dur_g - dur_r| / max(dur_g, dur_r)  (pairs with max 0 skipped)
// each averaged and clipped to [0, 1]. Two single-fixation scanpaths score
// 1 on vector/length and compare their fixations directly; a single-fixation
// scanpath against a longer one leaves every dimension undefined.
MultiMatchScores multimatch(std::span<const NormalizedFixation> g,
                            std::span<const NormalizedFixation> r);

// Each fixation emits max(1, ceil(ms / bin_ms)) copies of the symbol
// 'A' + word_index. Word indices >= 94 raise ValidationError.
std::string temporal_bin(const Scanpath& sp, double bin_ms = 50.0);

std::size_t levenshtein(std::string_view a, std::string_view b);

// LD of the temporally binned strings divided by the longer length.
double nld(const Scanpath& g, const Scanpath& r, double bin_ms = 50.0);

// Averages per-pair scores into a report.
class ReportAccumulator {
 public:
  void add(const MultiMatchScores& mm, double nld_value);
  void merge(const ReportAccumulator& other);
  MetricReport finish() const;

 private:
  double sums_[5] = {0, 0, 0, 0, 0};
  std::size_t counts_[5] = {0, 0, 0, 0, 0};
  std::size_t pairs_ = 0;
};

// Scores generated `g` against ground truth `r` over the same sentence.
void score_pair(ReportAccumulator& acc, const Scanpath& g, const Scanpath& r,
                const NormMeta& meta);

// Top-line similarity among humans: for every sentence read by at least two
// participants, each unordered participant pair is scored once; pair scores
// are averaged per sentence, then over sentences.
MetricReport inter_subject(std::span<const NormalizedScanpath> corpus);

// Weighted F1 (weights = class support in the real labels) of attended vs
// skipped words. Generated and real scanpaths are paired by sentence id; the
// per-pair scores are averaged, or with `pooled` the confusion counts are
// summed first.
double skipping_f1(std::span<const Scanpath> generated, std::span<const Scanpath> real,
                   const std::map<std::string, std::size_t>& sentence_lengths,
                   bool pooled = false);

// Weighted F1 over two labels; exposed for the downstream harness.
double weighted_f1(std::span<const int> truth, std::span<const int> predicted);

}  // namespace metrics
}  // namespace scanpath
