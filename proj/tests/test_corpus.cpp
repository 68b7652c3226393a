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

#include <set>
#include <sstream>

#include "scanpath/core/error.hpp"
#include "scanpath/corpus.hpp"
#include "support.hpp"

namespace scanpath {
namespace {

constexpr const char* kHeader = "participant_id,sentence_id,word_index,duration_ms\n";

std::vector<Scanpath> parse(const std::string& body) {
  std::istringstream in(std::string(kHeader) + body);
  return corpus::parse_fixation_records(in);
}

TEST(FixationCsv, GroupsByParticipantAndSentence) {
  const auto c = parse("p1,s1,0,200\np1,s1,2,150.5\np2,s1,1,90\np1,s2,0,100\n");
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[0].participant_id, "p1");
  EXPECT_EQ(c[0].fixations.size(), 2u);
  EXPECT_EQ(c[0].fixations[1], (Fixation{2, 150.5}));
  EXPECT_EQ(c[2].sentence_id, "s2");
}

TEST(FixationCsv, RoundTrip) {
  const auto c = parse("p1,s1,0,200\np1,s1,2,150.5\np2,s1,1,90\n");
  std::ostringstream out;
  corpus::write_fixation_records(out, c);
  std::istringstream in(out.str());
  EXPECT_EQ(corpus::parse_fixation_records(in), c);
}

TEST(FixationCsv, RejectsBadInputWithLineNumbers) {
  std::istringstream bad_header("a,b,c,d\n");
  EXPECT_THROW(corpus::parse_fixation_records(bad_header), ParseError);
  try {
    parse("p1,s1,0,200\np1,s1,x,10\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 3u);
  }
  EXPECT_THROW(parse("p1,s1,0\n"), ParseError);
  EXPECT_THROW(parse("p1,s1,0,10,5\n"), ParseError);
  EXPECT_THROW(parse("p1,s1,-1,10\n"), ValidationError);
  EXPECT_THROW(parse("p1,s1,0,0\n"), ValidationError);
  EXPECT_THROW(parse("p1,s1,0,-5\n"), ValidationError);
}

TEST(Sentences, ParseAndTokenize) {
  std::istringstream in(
      "{\"sentence_id\": \"s1\", \"text\": \"The  quick\\tfox\"}\n\n"
      "{\"sentence_id\": \"s2\", \"text\": \"jumps\"}\n");
  const auto s = corpus::parse_sentences(in);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].words, (std::vector<std::string>{"The", "quick", "fox"}));
  std::istringstream bad("{\"sentence_id\": 3}\n");
  EXPECT_THROW(corpus::parse_sentences(bad), ParseError);
  std::istringstream empty("{\"sentence_id\": \"s\", \"text\": \"   \"}\n");
  EXPECT_THROW(corpus::parse_sentences(empty), ParseError);
}

TEST(Percentile, LinearInterpolation) {
  std::vector<double> v;
  for (int i = 100; i >= 1; --i) v.push_back(i);
  EXPECT_NEAR(corpus::percentile_linear(v, 99.0), 99.01, 1e-12);
  EXPECT_EQ(corpus::percentile_linear(v, 0.0), 1.0);
  EXPECT_EQ(corpus::percentile_linear(v, 100.0), 100.0);
  EXPECT_EQ(corpus::percentile_linear({5.0}, 99.0), 5.0);
  EXPECT_THROW(corpus::percentile_linear({}, 50.0), ValidationError);
}

TEST(Cap, DropsOutliersAndEmptyScanpaths) {
  std::vector<Scanpath> c;
  Scanpath a{"p", "s1", {}};
  for (int i = 1; i <= 99; ++i) a.fixations.push_back({0, static_cast<double>(i)});
  c.push_back(a);
  c.push_back({"q", "s1", {{0, 1000.0}}});
  const auto r = corpus::cap_outlier_durations(c);
  EXPECT_NEAR(r.p99, 108.01, 1e-9);
  EXPECT_EQ(r.dropped_fixations, 1u);
  EXPECT_EQ(r.dropped_scanpaths, 1u);
  ASSERT_EQ(r.corpus.size(), 1u);
  EXPECT_EQ(r.corpus[0].fixations.size(), 99u);
}

TEST(Normalize, StepsLayoutAndInverse) {
  const Scanpath sp{"p", "s", {{0, 100}, {3, 50}, {1, 400}}};
  const auto ns = corpus::normalize(sp, 4, 200.0);
  EXPECT_EQ(ns.true_length, 3u);
  EXPECT_EQ(ns.steps.rows(), kMaxScanpathLength);
  EXPECT_EQ(ns.steps(1, 0), 0.75);
  EXPECT_EQ(ns.steps(0, 1), 0.5);
  EXPECT_EQ(ns.steps(2, 1), 1.0);  // clipped
  EXPECT_EQ(ns.steps(2, 2), 1.0);
  EXPECT_EQ(ns.steps(1, 2), 0.0);
  for (std::size_t i = 3; i < kMaxScanpathLength; ++i)
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(ns.steps(i, c), 0.0);
  const Scanpath back = corpus::denormalize(ns);
  EXPECT_EQ(back.fixations[1], (Fixation{3, 50}));
  EXPECT_EQ(back.fixations[2].duration_ms, 200.0);
}

TEST(Normalize, TrimsToHorizonAndValidates) {
  Scanpath sp{"p", "s", {}};
  for (int i = 0; i < 100; ++i) sp.fixations.push_back({static_cast<std::size_t>(i % 5), 10});
  const auto ns = corpus::normalize(sp, 5, 20.0);
  EXPECT_EQ(ns.true_length, kMaxScanpathLength);
  EXPECT_EQ(ns.steps(kMaxScanpathLength - 1, 2), 1.0);
  EXPECT_THROW(corpus::normalize(Scanpath{"p", "s", {{5, 10}}}, 5, 20.0), ValidationError);
  EXPECT_THROW(corpus::normalize(Scanpath{"p", "s", {}}, 5, 20.0), ValidationError);
  EXPECT_THROW(corpus::normalize(sp, 5, 0.0), ValidationError);
}

TEST(Normalize, RoundTripProperty) {
  Rng rng = make_rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t len = 1 + static_cast<std::size_t>(uniform01(rng) * 30);
    Scanpath sp{"p", "s", {}};
    const std::size_t n = 1 + static_cast<std::size_t>(uniform01(rng) * 40);
    for (std::size_t i = 0; i < n; ++i)
      sp.fixations.push_back({static_cast<std::size_t>(uniform01(rng) * len),
                              1.0 + std::floor(uniform01(rng) * 300)});
    const Scanpath back = corpus::denormalize(corpus::normalize(sp, len, 512.0));
    ASSERT_EQ(back.fixations.size(), n);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(back.fixations[i].word_index, sp.fixations[i].word_index);
      EXPECT_NEAR(back.fixations[i].duration_ms, sp.fixations[i].duration_ms, 1e-9);
    }
  }
}

TEST(Split, BySentenceDeterministicAndCovering) {
  std::vector<std::string> ids;
  for (int i = 0; i < 50; ++i) ids.push_back("s" + std::to_string(i));
  const auto a = corpus::assign_sentences(ids, {}, 3);
  const auto b = corpus::assign_sentences(ids, {}, 3);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  EXPECT_EQ(a.train.size(), 40u);
  EXPECT_EQ(a.val.size(), 5u);
  EXPECT_EQ(a.test.size(), 5u);
  std::set<std::string> all(a.train.begin(), a.train.end());
  all.insert(a.val.begin(), a.val.end());
  all.insert(a.test.begin(), a.test.end());
  EXPECT_EQ(all.size(), 50u);
  // Input order does not matter.
  std::reverse(ids.begin(), ids.end());
  EXPECT_EQ(corpus::assign_sentences(ids, {}, 3).val, a.val);

  const auto small = corpus::assign_sentences({"a", "b", "c"}, {}, 1);
  EXPECT_EQ(small.train.size() + small.val.size() + small.test.size(), 3u);
  EXPECT_FALSE(small.val.empty());
  EXPECT_FALSE(small.test.empty());
  EXPECT_THROW(corpus::assign_sentences({"a", "b"}, {}, 1), ValidationError);
  EXPECT_THROW(corpus::assign_sentences(ids, {0.5, 0.2, 0.2}, 1), ValidationError);
}

TEST(Split, KeepsSentencesTogether) {
  std::vector<Scanpath> items;
  for (int s = 0; s < 20; ++s)
    for (int p = 0; p < 3; ++p)
      items.push_back({"p" + std::to_string(p), "s" + std::to_string(s), {{0, 1}}});
  const auto part = corpus::split<Scanpath>(
      items, [](const Scanpath& x) -> const std::string& { return x.sentence_id; }, {}, 9);
  std::set<std::string> train, test;
  for (const auto& x : part.train) train.insert(x.sentence_id);
  for (const auto& x : part.test) test.insert(x.sentence_id);
  for (const auto& s : test) EXPECT_FALSE(train.contains(s));
  EXPECT_EQ(part.train.size() + part.val.size() + part.test.size(), items.size());
}

TEST(Prepare, MissingSentenceIsAnError) {
  const std::vector<Sentence> sentences{{"s1", {"a", "b"}}};
  std::vector<Scanpath> raw{{"p", "s1", {{0, 10}}}, {"p", "s9", {{0, 10}}}};
  EXPECT_THROW(corpus::prepare(raw, sentences, {}, 1), MissingKeyError);
}

TEST(NormalizedArchive, RoundTripExact) {
  std::vector<NormalizedScanpath> items;
  for (int i = 0; i < 5; ++i) {
    Scanpath sp{"p" + std::to_string(i), "s", {}};
    for (int k = 0; k <= i; ++k) sp.fixations.push_back({static_cast<std::size_t>(k), 13.7 * (k + 1)});
    items.push_back(corpus::normalize(sp, 7, 97.3));
  }
  std::ostringstream out;
  corpus::write_normalized(out, items);
  std::istringstream in(out.str());
  const auto back = corpus::parse_normalized(in);
  ASSERT_EQ(back.size(), items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    EXPECT_EQ(back[i].steps, items[i].steps);
    EXPECT_EQ(back[i].true_length, items[i].true_length);
    EXPECT_EQ(back[i].meta.p99_duration_ms, items[i].meta.p99_duration_ms);
    EXPECT_EQ(back[i].meta.sentence_len, items[i].meta.sentence_len);
    EXPECT_EQ(back[i].participant_id, items[i].participant_id);
  }
  std::istringstream bad("{\"nope\": 1}\n");
  EXPECT_THROW(corpus::parse_normalized(bad), ParseError);
}

}  // namespace
}  // namespace scanpath
