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

#include "scanpath/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scanpath/core/error.hpp"
#include "scanpath/core/rng.hpp"

namespace scanpath::synthetic {
namespace {

std::size_t uniform_int(Rng& rng, std::size_t lo, std::size_t hi) {
  const auto span = static_cast<double>(hi - lo + 1);
  return lo + std::min(hi - lo, static_cast<std::size_t>(uniform01(rng) * span));
}

}  // namespace

ReadingCorpus make_reading_corpus(std::uint64_t seed, const ReadingCorpusOptions& opts) {
  if (opts.sentences < 3 || opts.participants == 0 || opts.vocabulary == 0 || opts.dim < 2 ||
      opts.min_words == 0 || opts.min_words > opts.max_words ||
      opts.max_words > kMaxScanpathLength)
    throw ValidationError("synthetic reading corpus: invalid options");
  Rng rng = make_rng(seed);

  // Word types: a letter count and a random vector whose first coordinate
  // encodes the length, so the generator can read it off the embedding.
  struct WordType {
    std::string text;
    std::size_t letters;
    std::vector<double> vec;
  };
  std::vector<WordType> vocab(opts.vocabulary);
  const double scale = 1.0 / std::sqrt(static_cast<double>(opts.dim));
  for (std::size_t v = 0; v < vocab.size(); ++v) {
    WordType& w = vocab[v];
    w.letters = uniform_int(rng, 1, 12);
    w.text = std::string(w.letters, static_cast<char>('a' + v % 26)) + std::to_string(v);
    w.vec.resize(opts.dim);
    w.vec[0] = static_cast<double>(w.letters) / 12.0;
    for (std::size_t d = 1; d < opts.dim; ++d) w.vec[d] = standard_normal(rng) * scale;
  }

  ReadingCorpus out;
  out.shape = {kMaxScanpathLength, opts.dim};
  for (std::size_t s = 0; s < opts.sentences; ++s) {
    const std::size_t n = uniform_int(rng, opts.min_words, opts.max_words);
    std::vector<std::size_t> words(n);
    for (auto& w : words) w = uniform_int(rng, 0, vocab.size() - 1);

    Sentence sent{"syn-" + std::to_string(s), {}};
    TextEmbedding emb{sent.sentence_id, Matrix(kMaxScanpathLength, opts.dim), n,
                      Matrix(1, opts.dim)};
    for (std::size_t i = 0; i < n; ++i) {
      const WordType& w = vocab[words[i]];
      sent.words.push_back(w.text);
      for (std::size_t d = 0; d < opts.dim; ++d) {
        emb.tokens(i, d) = w.vec[d];
        emb.cls(0, d) += w.vec[d] / static_cast<double>(n);
      }
    }
    embeddings::quantize_to_float32(emb);

    for (std::size_t p = 0; p < opts.participants; ++p) {
      Scanpath sp{"P" + std::to_string(p), sent.sentence_id, {}};
      auto fixate = [&](std::size_t i) {
        const double jitter = std::max(0.2, 1.0 + opts.duration_jitter * standard_normal(rng));
        const double ms = opts.ms_per_letter * static_cast<double>(vocab[words[i]].letters) * jitter;
        sp.fixations.push_back({i, std::round(ms)});
      };
      for (std::size_t i = 0; i < n; ++i) {
        const bool is_short = vocab[words[i]].letters <= opts.short_word_max_letters;
        // The first and last word are always read so no scanpath ends empty.
        if (is_short && i != 0 && i + 1 != n && uniform01(rng) < opts.skip_rate) continue;
        fixate(i);
        if (i > 0 && uniform01(rng) < opts.regression_rate) {
          const std::size_t back = uniform_int(rng, 1, std::min<std::size_t>(2, i));
          fixate(i - back);
        }
      }
      if (sp.fixations.size() > kMaxScanpathLength) sp.fixations.resize(kMaxScanpathLength);
      out.scanpaths.push_back(std::move(sp));
    }
    out.sentences.push_back(std::move(sent));
    out.embeddings.push_back(std::move(emb));
  }
  return out;
}

}  // namespace scanpath::synthetic
