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
#include <vector>

#include "scanpath/corpus.hpp"
#include "scanpath/embeddings.hpp"

namespace scanpath::synthetic {

// Rule-based reading corpus with procedurally generated embeddings, used to
// check that training learns something measurable without real eyetracking
// data. Readers move left to right; fixation duration is proportional to
// word length, short words are skipped at `skip_rate`, and after a fixation
// a regression to an earlier word happens at `regression_rate`.
struct ReadingCorpusOptions {
  std::size_t sentences = 500;
  std::size_t participants = 1;
  std::size_t min_words = 6;
  std::size_t max_words = 14;
  std::size_t vocabulary = 300;
  std::size_t dim = 16;
  double ms_per_letter = 30.0;
  double duration_jitter = 0.1;  // relative standard deviation
  std::size_t short_word_max_letters = 3;
  double skip_rate = 0.3;
  double regression_rate = 0.1;
};

struct ReadingCorpus {
  std::vector<Sentence> sentences;
  std::vector<Scanpath> scanpaths;
  std::vector<TextEmbedding> embeddings;  // one per sentence, shape 80 x dim
  EmbeddingShape shape;
};

ReadingCorpus make_reading_corpus(std::uint64_t seed, const ReadingCorpusOptions& opts = {});

}  // namespace scanpath::synthetic
