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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scanpath/metrics.hpp"

// Independent reference implementations, written from the definitions and
// deliberately sharing no code with the library.
namespace scanpath::oracle {

// Plain recursion on the edit-distance definition: exponential, no table.
inline std::size_t levenshtein_naive(std::string_view a, std::string_view b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  const std::size_t cost = a.back() == b.back() ? 0 : 1;
  const std::string_view a1 = a.substr(0, a.size() - 1), b1 = b.substr(0, b.size() - 1);
  return std::min({levenshtein_naive(a1, b) + 1, levenshtein_naive(a, b1) + 1,
                   levenshtein_naive(a1, b1) + cost});
}

// Same recursion with memoization on the prefix lengths, for exhaustive
// sweeps where the plain form would be too slow.
class LevenshteinMemo {
 public:
  std::size_t operator()(std::string_view a, std::string_view b) {
    a_ = a;
    b_ = b;
    memo_.assign((a.size() + 1) * (b.size() + 1), kUnset);
    return rec(a.size(), b.size());
  }

 private:
  static constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();
  std::size_t rec(std::size_t i, std::size_t j) {
    if (i == 0) return j;
    if (j == 0) return i;
    std::size_t& m = memo_[i * (b_.size() + 1) + j];
    if (m != kUnset) return m;
    const std::size_t cost = a_[i - 1] == b_[j - 1] ? 0 : 1;
    m = std::min({rec(i - 1, j) + 1, rec(i, j - 1) + 1, rec(i - 1, j - 1) + cost});
    return m;
  }
  std::string_view a_, b_;
  std::vector<std::size_t> memo_;
};

// Enumerates every monotonic alignment explicitly as a list of matched
// pairs (each choice of an increasing set of pairs) and scores it; returns
// the minimum cost.
inline double brute_force_alignment_cost(std::span<const SaccadeVector> a,
                                         std::span<const SaccadeVector> b) {
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  auto score = [&] {
    std::vector<bool> used_a(a.size()), used_b(b.size());
    double c = 0;
    for (auto [i, j] : pairs) {
      used_a[i] = used_b[j] = true;
      c += std::abs(a[i].amplitude - b[j].amplitude);
    }
    for (std::size_t i = 0; i < a.size(); ++i)
      if (!used_a[i]) c += std::abs(a[i].amplitude);
    for (std::size_t j = 0; j < b.size(); ++j)
      if (!used_b[j]) c += std::abs(b[j].amplitude);
    return c;
  };
  // Extend with pairs strictly after (i0, j0).
  auto rec = [&](auto&& self, std::size_t i0, std::size_t j0) -> void {
    best = std::min(best, score());
    for (std::size_t i = i0; i < a.size(); ++i)
      for (std::size_t j = j0; j < b.size(); ++j) {
        pairs.emplace_back(i, j);
        self(self, i + 1, j + 1);
        pairs.pop_back();
      }
  };
  rec(rec, 0, 0);
  return best;
}

inline double alignment_cost(std::span<const SaccadeVector> a, std::span<const SaccadeVector> b,
                             const Alignment& al) {
  std::vector<bool> used_a(a.size()), used_b(b.size());
  double c = 0;
  for (auto [i, j] : al.pairs) {
    used_a[i] = used_b[j] = true;
    c += std::abs(a[i].amplitude - b[j].amplitude);
  }
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!used_a[i]) c += std::abs(a[i].amplitude);
  for (std::size_t j = 0; j < b.size(); ++j)
    if (!used_b[j]) c += std::abs(b[j].amplitude);
  return c;
}

inline std::vector<SaccadeVector> saccades_from_amplitudes(const std::vector<double>& amps) {
  std::vector<SaccadeVector> out;
  double pos = 0.0;
  for (double a : amps) {
    out.push_back({a, pos, pos + a, 0.0, 0.0});
    pos += a;
  }
  return out;
}

}  // namespace scanpath::oracle
