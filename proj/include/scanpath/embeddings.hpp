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
#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "scanpath/core/matrix.hpp"

namespace scanpath {

inline constexpr std::size_t kEmbeddingTokens = 80;
inline constexpr std::size_t kEmbeddingDim = 768;

// Per-sentence conditioning input: a max_tokens x dim token matrix (rows past
// token_count are zero) and a sentence-level CLS vector of length dim.
struct TextEmbedding {
  std::string sentence_id;
  Matrix tokens;
  std::size_t token_count = 0;
  Matrix cls;  // 1 x dim
};

struct EmbeddingShape {
  std::size_t max_tokens = kEmbeddingTokens;
  std::size_t dim = kEmbeddingDim;
};

using EmbeddingMap = std::map<std::string, TextEmbedding>;

namespace embeddings {

// Throws ShapeError / ValidationError when the record violates the shape,
// token_count, zero-padding or finiteness invariants.
void validate(const TextEmbedding& e, EmbeddingShape shape);

// Binary archive, little-endian:
//   "SPEMB1" | u32 record_count | u32 max_tokens | u32 dim
//   per record: u16 id_length, UTF-8 id, u16 token_count,
//               max_tokens*dim float32 tokens, dim float32 CLS
// Values are stored as float32.
void write_archive(std::ostream& out, const std::vector<TextEmbedding>& records,
                   EmbeddingShape shape = {});
void write_archive(const std::filesystem::path& path, const std::vector<TextEmbedding>& records,
                   EmbeddingShape shape = {});

struct LoadResult {
  EmbeddingMap map;
  std::vector<std::string> warnings;  // duplicate ids (last one wins)
};

// The header must declare exactly `expected`; otherwise ShapeError.
LoadResult load_archive(std::istream& in, EmbeddingShape expected = {},
                        const std::string& source = "<stream>");
LoadResult load_archive(const std::filesystem::path& path, EmbeddingShape expected = {});

const TextEmbedding& lookup(const EmbeddingMap& map, const std::string& sentence_id);

// Rounds every entry through float32 so in-memory values match what an
// archive round trip produces.
void quantize_to_float32(TextEmbedding& e);

}  // namespace embeddings
}  // namespace scanpath
