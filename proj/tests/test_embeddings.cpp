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

#include <gtest/gtest.h>

#include <cstring>
#include <limits>
#include <sstream>

#include "scanpath/core/error.hpp"
#include "scanpath/embeddings.hpp"
#include "support.hpp"

namespace scanpath {
namespace {

constexpr EmbeddingShape kShape{6, 4};

TextEmbedding sample(const std::string& id, std::size_t count, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return testing::random_embedding(rng, id, count, kShape.max_tokens, kShape.dim);
}

// Archive bytes assembled by hand, independent of the library writer.
std::string handmade_archive(const std::vector<TextEmbedding>& records, EmbeddingShape shape) {
  std::string s = "SPEMB1";
  auto put = [&](const void* p, std::size_t n) { s.append(static_cast<const char*>(p), n); };
  auto u32 = [&](std::uint32_t v) { put(&v, 4); };
  auto u16 = [&](std::uint16_t v) { put(&v, 2); };
  u32(static_cast<std::uint32_t>(records.size()));
  u32(static_cast<std::uint32_t>(shape.max_tokens));
  u32(static_cast<std::uint32_t>(shape.dim));
  for (const auto& e : records) {
    u16(static_cast<std::uint16_t>(e.sentence_id.size()));
    s += e.sentence_id;
    u16(static_cast<std::uint16_t>(e.token_count));
    for (double v : e.tokens.values()) {
      const float f = static_cast<float>(v);
      put(&f, 4);
    }
    for (double v : e.cls.values()) {
      const float f = static_cast<float>(v);
      put(&f, 4);
    }
  }
  return s;
}

TEST(EmbeddingArchive, WriterMatchesLayoutByteForByte) {
  const std::vector<TextEmbedding> recs{sample("a", 3, 1), sample("bb", 6, 2)};
  std::ostringstream out;
  embeddings::write_archive(out, recs, kShape);
  EXPECT_EQ(out.str(), handmade_archive(recs, kShape));
}

TEST(EmbeddingArchive, RoundTripIsExactForFloat32Values) {
  const std::vector<TextEmbedding> recs{sample("a", 3, 1), sample("b", 1, 2)};
  std::stringstream io;
  embeddings::write_archive(io, recs, kShape);
  const auto loaded = embeddings::load_archive(io, kShape);
  EXPECT_TRUE(loaded.warnings.empty());
  ASSERT_EQ(loaded.map.size(), 2u);
  const TextEmbedding& a = embeddings::lookup(loaded.map, "a");
  EXPECT_EQ(a.tokens, recs[0].tokens);
  EXPECT_EQ(a.cls, recs[0].cls);
  EXPECT_EQ(a.token_count, 3u);
  EXPECT_THROW(embeddings::lookup(loaded.map, "zzz"), MissingKeyError);
}

TEST(EmbeddingArchive, DuplicateIdsWarnLastWins) {
  TextEmbedding first = sample("dup", 2, 1), second = sample("dup", 4, 2);
  std::istringstream in(handmade_archive({first, second}, kShape));
  const auto loaded = embeddings::load_archive(in, kShape);
  ASSERT_EQ(loaded.warnings.size(), 1u);
  EXPECT_EQ(loaded.map.at("dup").token_count, 4u);
}

TEST(EmbeddingArchive, RejectsShapeMismatchBadMagicAndTruncation) {
  const std::string good = handmade_archive({sample("a", 3, 1)}, kShape);
  {
    std::istringstream in(good);
    EXPECT_THROW(embeddings::load_archive(in, {6, 5}), ShapeError);
  }
  {
    std::string bad = good;
    bad[5] = '2';
    std::istringstream in(bad);
    EXPECT_THROW(embeddings::load_archive(in, kShape), FormatError);
  }
  {
    std::istringstream in(good.substr(0, good.size() - 3));
    EXPECT_THROW(embeddings::load_archive(in, kShape), FormatError);
  }
}

TEST(EmbeddingArchive, LoaderValidatesRecords) {
  TextEmbedding zero_count = sample("z", 3, 1);
  zero_count.token_count = 0;
  TextEmbedding dirty_pad = sample("d", 3, 2);
  dirty_pad.tokens(5, 0) = 1.0f;
  TextEmbedding nan = sample("n", 3, 3);
  nan.cls(0, 1) = std::numeric_limits<double>::quiet_NaN();
  TextEmbedding too_many = sample("t", 3, 4);
  too_many.token_count = 7;
  for (const auto& bad : {zero_count, dirty_pad, nan, too_many}) {
    SCOPED_TRACE(bad.sentence_id);
    std::istringstream in(handmade_archive({bad}, kShape));
    EXPECT_THROW(embeddings::load_archive(in, kShape), ValidationError);
    std::ostringstream out;
    EXPECT_THROW(embeddings::write_archive(out, {bad}, kShape), ValidationError);
  }
}

TEST(EmbeddingValidate, ShapeErrors) {
  TextEmbedding e = sample("a", 3, 1);
  EXPECT_NO_THROW(embeddings::validate(e, kShape));
  EXPECT_THROW(embeddings::validate(e, {7, 4}), ShapeError);
  e.cls = Matrix(1, 3);
  EXPECT_THROW(embeddings::validate(e, kShape), ShapeError);
}

TEST(EmbeddingValidate, DefaultShapeIs80By768) {
  Rng rng = make_rng(5);
  const TextEmbedding e = testing::random_embedding(rng, "x", 12, 80, 768);
  std::stringstream io;
  embeddings::write_archive(io, {e});
  const auto loaded = embeddings::load_archive(io);
  EXPECT_EQ(loaded.map.at("x").tokens.rows(), 80u);
  EXPECT_EQ(loaded.map.at("x").cls.cols(), 768u);
}

TEST(EmbeddingValidate, QuantizeMatchesFloat32) {
  TextEmbedding e{"q", Matrix(1, 2), 1, Matrix(1, 2)};
  e.tokens(0, 0) = 0.1;
  embeddings::quantize_to_float32(e);
  EXPECT_EQ(e.tokens(0, 0), static_cast<double>(0.1f));
}

}  // namespace
}  // namespace scanpath
