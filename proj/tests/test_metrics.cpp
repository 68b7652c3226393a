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

#include <cmath>
#include <string>

#include "oracles.hpp"
#include "scanpath/core/error.hpp"
#include "scanpath/metrics.hpp"
#include "support.hpp"

namespace scanpath {
namespace {

std::string random_string(Rng& rng, std::size_t max_len, int alphabet) {
  std::string s(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(max_len + 1)), 'a');
  for (char& c : s) c = static_cast<char>('a' + static_cast<int>(uniform01(rng) * alphabet));
  return s;
}

Scanpath random_scanpath(Rng& rng, std::size_t words, std::size_t max_fix) {
  Scanpath sp{"p", "s", {}};
  const std::size_t n = 1 + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(max_fix));
  for (std::size_t i = 0; i < n; ++i)
    sp.fixations.push_back({static_cast<std::size_t>(uniform01(rng) * static_cast<double>(words)),
                            1.0 + 400.0 * uniform01(rng)});
  return sp;
}

TEST(Levenshtein, Examples) {
  EXPECT_EQ(metrics::levenshtein("kitten", "sitting"), 3u);
  EXPECT_EQ(metrics::levenshtein("", "abcd"), 4u);
  EXPECT_EQ(metrics::levenshtein("abc", ""), 3u);
  EXPECT_EQ(metrics::levenshtein("same", "same"), 0u);
  EXPECT_EQ(oracle::levenshtein_naive("kitten", "sitting"), 3u);
}

TEST(Levenshtein, MatchesNaiveRecursionOnRandomPairs) {
  Rng rng = make_rng(1);
  for (int i = 0; i < 2000; ++i) {
    const std::string a = random_string(rng, 7, 3), b = random_string(rng, 7, 3);
    ASSERT_EQ(metrics::levenshtein(a, b), oracle::levenshtein_naive(a, b)) << a << " / " << b;
  }
}

TEST(Levenshtein, MetricAxioms) {
  Rng rng = make_rng(2);
  for (int i = 0; i < 3000; ++i) {
    const std::string a = random_string(rng, 10, 4), b = random_string(rng, 10, 4),
                      c = random_string(rng, 10, 4);
    EXPECT_EQ(metrics::levenshtein(a, a), 0u);
    EXPECT_EQ(metrics::levenshtein(a, b), metrics::levenshtein(b, a));
    EXPECT_LE(metrics::levenshtein(a, c), metrics::levenshtein(a, b) + metrics::levenshtein(b, c));
  }
}

TEST(TemporalBin, Examples) {
  EXPECT_EQ(metrics::temporal_bin({"p", "s", {{2, 120}}}), "CCC");
  EXPECT_EQ(metrics::temporal_bin({"p", "s", {{0, 50}}}), "A");
  EXPECT_EQ(metrics::temporal_bin({"p", "s", {{1, 10}}}), "B");
  EXPECT_EQ(metrics::temporal_bin({"p", "s", {{0, 100}, {3, 51}}}), "AADD");
  EXPECT_EQ(metrics::temporal_bin({"p", "s", {{93, 1}}}), std::string(1, static_cast<char>('A' + 93)));
  EXPECT_THROW(metrics::temporal_bin({"p", "s", {{94, 10}}}), ValidationError);
}

TEST(Nld, ExamplesAndProperties) {
  const Scanpath a{"p", "s", {{0, 100}, {1, 50}}};
  const Scanpath b{"p", "s", {{2, 100}, {3, 50}}};
  EXPECT_EQ(metrics::nld(a, a), 0.0);
  EXPECT_EQ(metrics::nld(a, b), 1.0);
  Rng rng = make_rng(3);
  for (int i = 0; i < 500; ++i) {
    const Scanpath g = random_scanpath(rng, 12, 10), r = random_scanpath(rng, 12, 10);
    const double d = metrics::nld(g, r);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
    EXPECT_EQ(d, metrics::nld(r, g));
  }
}

TEST(Saccades, Examples) {
  const std::vector<NormalizedFixation> f{{0.1, 0.5}, {0.4, 0.2}, {0.2, 0.3}};
  const auto s = metrics::to_saccades(f);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_NEAR(s[0].amplitude, 0.3, 1e-15);
  EXPECT_NEAR(s[1].amplitude, -0.2, 1e-15);
  EXPECT_EQ(s[1].end_dur, 0.3);
  EXPECT_TRUE(metrics::to_saccades(std::vector<NormalizedFixation>{{0.3, 0.1}}).empty());
  EXPECT_THROW(metrics::to_saccades(std::vector<NormalizedFixation>{}), ValidationError);
}

TEST(Align, Examples) {
  const auto a = oracle::saccades_from_amplitudes({0.3});
  const auto b = oracle::saccades_from_amplitudes({0.3, 0.1});
  const Alignment al = metrics::align(a, b);
  ASSERT_EQ(al.pairs.size(), 1u);
  EXPECT_EQ(al.pairs[0], (std::pair<std::size_t, std::size_t>{0, 0}));
  EXPECT_NEAR(al.cost, 0.1, 1e-15);

  const Alignment flip = metrics::align(oracle::saccades_from_amplitudes({0.5}),
                                        oracle::saccades_from_amplitudes({-0.5}));
  ASSERT_EQ(flip.pairs.size(), 1u);
  EXPECT_NEAR(flip.cost, 1.0, 1e-15);

  const auto same = oracle::saccades_from_amplitudes({0.1, -0.2, 0.4});
  const Alignment id = metrics::align(same, same);
  EXPECT_EQ(id.cost, 0.0);
  ASSERT_EQ(id.pairs.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(id.pairs[i], (std::pair{i, i}));
}

TEST(Align, OptimalAgainstEnumeration) {
  Rng rng = make_rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> x, y;
    const std::size_t na = 1 + static_cast<std::size_t>(uniform01(rng) * 4);
    const std::size_t nb = 1 + static_cast<std::size_t>(uniform01(rng) * 4);
    for (std::size_t i = 0; i < na; ++i) x.push_back(uniform01(rng) * 2 - 1);
    for (std::size_t i = 0; i < nb; ++i) y.push_back(uniform01(rng) * 2 - 1);
    const auto a = oracle::saccades_from_amplitudes(x), b = oracle::saccades_from_amplitudes(y);
    const Alignment al = metrics::align(a, b);
    EXPECT_NEAR(al.cost, oracle::brute_force_alignment_cost(a, b), 1e-12);
    EXPECT_NEAR(al.cost, oracle::alignment_cost(a, b, al), 1e-12);
    for (std::size_t k = 1; k < al.pairs.size(); ++k) {
      EXPECT_LT(al.pairs[k - 1].first, al.pairs[k].first);
      EXPECT_LT(al.pairs[k - 1].second, al.pairs[k].second);
    }
  }
}

TEST(Align, TieBreakPrefersMatch) {
  // Matching 0.2 with -0.2 costs 0.4, the same as leaving both unmatched.
  const Alignment al = metrics::align(oracle::saccades_from_amplitudes({0.2}),
                                      oracle::saccades_from_amplitudes({-0.2}));
  EXPECT_EQ(al.pairs.size(), 1u);
}

TEST(MultiMatch, IdentityAndDurationRule) {
  const std::vector<NormalizedFixation> g{{0.0, 0.5}, {0.3, 0.2}, {0.6, 0.4}};
  const auto s = metrics::multimatch(g, g);
  EXPECT_EQ(*s.vector, 1.0);
  EXPECT_EQ(*s.length, 1.0);
  EXPECT_EQ(*s.position, 1.0);
  EXPECT_EQ(*s.duration, 1.0);

  const std::vector<NormalizedFixation> a{{0.0, 0.1}, {0.5, 0.5}};
  const std::vector<NormalizedFixation> b{{0.0, 0.1}, {0.5, 0.25}};
  EXPECT_NEAR(*metrics::multimatch(a, b).duration, 0.5, 1e-15);
}

TEST(MultiMatch, HandComputedPair) {
  // g: 0.0 -> 0.4 -> 0.2, r: 0.0 -> 0.2 -> 0.4. Saccades g [+0.4, -0.2],
  // r [+0.2, +0.2]; the cheapest alignment matches both pairs (cost 0.6).
  const std::vector<NormalizedFixation> g{{0.0, 0.2}, {0.4, 0.4}, {0.2, 0.1}};
  const std::vector<NormalizedFixation> r{{0.0, 0.2}, {0.2, 0.2}, {0.4, 0.4}};
  const auto s = metrics::multimatch(g, r);
  EXPECT_NEAR(*s.vector, ((1 - 0.2 / 2) + (1 - 0.4 / 2)) / 2, 1e-12);
  EXPECT_NEAR(*s.length, ((1 - 0.2 / 2) + 1.0) / 2, 1e-12);
  EXPECT_NEAR(*s.position, ((1 - 0.2) + (1 - 0.2)) / 2, 1e-12);
  EXPECT_NEAR(*s.duration, ((1 - 0.2 / 0.4) + (1 - 0.3 / 0.4)) / 2, 1e-12);
}

TEST(MultiMatch, SingleFixationHandling) {
  const std::vector<NormalizedFixation> one{{0.2, 0.5}};
  const std::vector<NormalizedFixation> other{{0.4, 0.25}};
  const std::vector<NormalizedFixation> many{{0.2, 0.5}, {0.4, 0.2}};
  const auto both = metrics::multimatch(one, other);
  EXPECT_EQ(*both.vector, 1.0);
  EXPECT_EQ(*both.length, 1.0);
  EXPECT_NEAR(*both.position, 0.8, 1e-15);
  EXPECT_NEAR(*both.duration, 0.5, 1e-15);
  const auto mixed = metrics::multimatch(one, many);
  EXPECT_FALSE(mixed.vector || mixed.length || mixed.position || mixed.duration);
  EXPECT_THROW(metrics::multimatch(one, std::vector<NormalizedFixation>{}), ValidationError);
}

TEST(MultiMatch, IdentityOnRandomScanpaths) {
  Rng rng = make_rng(5);
  for (int i = 0; i < 300; ++i) {
    const Scanpath sp = random_scanpath(rng, 20, 30);
    const auto f = metrics::normalized_fixations(sp, {500.0, 20});
    const auto s = metrics::multimatch(f, f);
    EXPECT_NEAR(*s.vector, 1.0, 1e-12);
    EXPECT_NEAR(*s.length, 1.0, 1e-12);
    EXPECT_NEAR(*s.position, 1.0, 1e-12);
    EXPECT_NEAR(*s.duration, 1.0, 1e-12);
  }
}

TEST(Report, AccumulatorSkipsUndefinedDimensions) {
  metrics::ReportAccumulator acc;
  acc.add({1.0, 0.5, 0.25, std::nullopt}, 0.2);
  acc.add({std::nullopt, std::nullopt, std::nullopt, std::nullopt}, 0.4);
  const MetricReport r = acc.finish();
  EXPECT_EQ(r.vector, 1.0);
  EXPECT_EQ(r.n_vector, 1u);
  EXPECT_EQ(r.n_duration, 0u);
  EXPECT_NEAR(r.nld, 0.3, 1e-15);
  EXPECT_EQ(r.n_pairs, 2u);
  const MetricReport back = MetricReport::from_json(r.to_json());
  EXPECT_EQ(back.nld, r.nld);
  EXPECT_EQ(back.n_vector, 1u);
}

TEST(InterSubject, IdenticalReadersScorePerfectly) {
  std::vector<NormalizedScanpath> c;
  for (const char* p : {"p1", "p2", "p3"})
    for (const char* s : {"s1", "s2"})
      c.push_back(corpus::normalize({p, s, {{0, 100}, {2, 80}, {1, 200}}}, 4, 250.0));
  const MetricReport r = metrics::inter_subject(c);
  EXPECT_NEAR(r.vector, 1.0, 1e-12);
  EXPECT_NEAR(r.duration, 1.0, 1e-12);
  EXPECT_EQ(r.nld, 0.0);
}

TEST(InterSubject, AveragesPairsThenSentences) {
  // Sentence s1 has 3 readers (3 pairs), s2 has 2 (1 pair); s3 has 1 reader
  // and is ignored.
  auto ns = [](const char* p, const char* s, std::size_t w) {
    return corpus::normalize({p, s, {{w, 100}}}, 4, 100.0);
  };
  const std::vector<NormalizedScanpath> c{ns("a", "s1", 0), ns("b", "s1", 0), ns("c", "s1", 1),
                                          ns("a", "s2", 0), ns("b", "s2", 2), ns("a", "s3", 3)};
  const MetricReport r = metrics::inter_subject(c);
  // NLD per pair: identical -> 0, different word -> 1 (both one bin).
  const double s1 = (0.0 + 1.0 + 1.0) / 3.0, s2 = 1.0;
  EXPECT_NEAR(r.nld, (s1 + s2) / 2.0, 1e-15);
  const std::vector<NormalizedScanpath> lonely{ns("a", "s1", 0), ns("a", "s2", 0)};
  EXPECT_THROW(metrics::inter_subject(lonely), ValidationError);
}

TEST(WeightedF1, MatchesReferenceValues) {
  // Reference values from a standard weighted-F1 implementation.
  const std::vector<int> t1{1, 1, 0, 0, 0}, p1{1, 0, 0, 0, 1};
  EXPECT_NEAR(metrics::weighted_f1(t1, p1), 0.6, 1e-15);
  const std::vector<int> t2{1, 0, 1, 1, 0, 0, 1}, p2{0, 0, 1, 1, 1, 0, 1};
  EXPECT_NEAR(metrics::weighted_f1(t2, p2), 0.7142857142857143, 1e-15);
  const std::vector<int> ones{1, 1, 1, 1};
  EXPECT_EQ(metrics::weighted_f1(ones, ones), 1.0);
  EXPECT_THROW(metrics::weighted_f1(t1, ones), ShapeError);
}

TEST(SkippingF1, ExactAndComplement) {
  const std::map<std::string, std::size_t> lens{{"s", 4}};
  const std::vector<Scanpath> real{{"p", "s", {{0, 1}, {2, 1}}}};
  const std::vector<Scanpath> same{{"g", "s", {{2, 1}, {0, 1}, {0, 5}}}};
  const std::vector<Scanpath> comp{{"g", "s", {{1, 1}, {3, 1}}}};
  EXPECT_EQ(metrics::skipping_f1(same, real, lens), 1.0);
  EXPECT_EQ(metrics::skipping_f1(comp, real, lens), 0.0);
  const std::vector<Scanpath> other{{"g", "t", {{1, 1}}}};
  EXPECT_THROW(metrics::skipping_f1(other, real, lens), ValidationError);
}

}  // namespace
}  // namespace scanpath
