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

#include "scanpath/embeddings.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "scanpath/core/error.hpp"
#include "scanpath/io/binary.hpp"

namespace scanpath::embeddings {
namespace {
constexpr char kMagic[6] = {'S', 'P', 'E', 'M', 'B', '1'};
}

void validate(const TextEmbedding& e, EmbeddingShape shape) {
  const std::string who = "embedding '" + e.sentence_id + "'";
  if (e.tokens.rows() != shape.max_tokens || e.tokens.cols() != shape.dim)
    throw ShapeError(who + ": token matrix must be " + std::to_string(shape.max_tokens) + "x" +
                     std::to_string(shape.dim));
  if (e.cls.size() != shape.dim)
    throw ShapeError(who + ": CLS length " + std::to_string(e.cls.size()) + " != " +
                     std::to_string(shape.dim));
  if (e.token_count == 0 || e.token_count > shape.max_tokens)
    throw ValidationError(who + ": token_count " + std::to_string(e.token_count) +
                          " outside 1.." + std::to_string(shape.max_tokens));
  if (!e.tokens.all_finite() || !e.cls.all_finite())
    throw ValidationError(who + ": contains NaN or Inf");
  for (std::size_t r = e.token_count; r < e.tokens.rows(); ++r)
    for (double v : e.tokens.row(r))
      if (v != 0.0) throw ValidationError(who + ": padding rows must be zero");
}

void write_archive(std::ostream& out, const std::vector<TextEmbedding>& records,
                   EmbeddingShape shape) {
  io::BinaryWriter w(out);
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(static_cast<std::uint32_t>(records.size()));
  w.u32(static_cast<std::uint32_t>(shape.max_tokens));
  w.u32(static_cast<std::uint32_t>(shape.dim));
  for (const TextEmbedding& e : records) {
    validate(e, shape);
    if (e.sentence_id.size() > std::numeric_limits<std::uint16_t>::max())
      throw ValidationError("sentence id too long");
    w.u16(static_cast<std::uint16_t>(e.sentence_id.size()));
    w.bytes(e.sentence_id.data(), e.sentence_id.size());
    w.u16(static_cast<std::uint16_t>(e.token_count));
    for (double v : e.tokens.values()) w.f32(static_cast<float>(v));
    for (double v : e.cls.values()) w.f32(static_cast<float>(v));
  }
}

void write_archive(const std::filesystem::path& path, const std::vector<TextEmbedding>& records,
                   EmbeddingShape shape) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_archive(out, records, shape);
  if (!out) throw Error("write failed for " + path.string());
}

LoadResult load_archive(std::istream& in, EmbeddingShape expected, const std::string& source) {
  io::BinaryReader r(in, source);
  char magic[6];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw FormatError(source + ": bad magic or version (expected SPEMB1)");
  const std::uint32_t count = r.u32();
  const std::uint32_t max_tokens = r.u32();
  const std::uint32_t dim = r.u32();
  if (max_tokens != expected.max_tokens || dim != expected.dim)
    throw ShapeError(source + ": archive declares " + std::to_string(max_tokens) + "x" +
                     std::to_string(dim) + ", expected " + std::to_string(expected.max_tokens) +
                     "x" + std::to_string(expected.dim));
  LoadResult result;
  for (std::uint32_t i = 0; i < count; ++i) {
    TextEmbedding e;
    e.sentence_id = r.string(r.u16());
    e.token_count = r.u16();
    e.tokens = Matrix(max_tokens, dim);
    for (double& v : e.tokens.values()) v = r.f32();
    e.cls = Matrix(1, dim);
    for (double& v : e.cls.values()) v = r.f32();
    validate(e, expected);
    if (result.map.contains(e.sentence_id))
      result.warnings.push_back("duplicate sentence_id '" + e.sentence_id + "': last record wins");
    result.map.insert_or_assign(e.sentence_id, std::move(e));
  }
  return result;
}

LoadResult load_archive(const std::filesystem::path& path, EmbeddingShape expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open embedding archive " + path.string());
  return load_archive(in, expected, path.string());
}

const TextEmbedding& lookup(const EmbeddingMap& map, const std::string& sentence_id) {
  auto it = map.find(sentence_id);
  if (it == map.end())
    throw MissingKeyError("no embedding for sentence_id '" + sentence_id + "'");
  return it->second;
}

void quantize_to_float32(TextEmbedding& e) {
  for (double& v : e.tokens.values()) v = static_cast<float>(v);
  for (double& v : e.cls.values()) v = static_cast<float>(v);
}

}  // namespace scanpath::embeddings
