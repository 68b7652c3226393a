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

#include <set>
#include <unordered_map>

namespace scanpath::corpus {

template <typename T>
Partition<T> split(const std::vector<T>& items,
                   const std::function<const std::string&(const T&)>& sentence_of,
                   SplitRatios ratios, std::uint64_t seed) {
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const T& item : items)
    if (seen.insert(sentence_of(item)).second) ids.push_back(sentence_of(item));
  const SentenceAssignment a = assign_sentences(std::move(ids), ratios, seed);
  std::unordered_map<std::string, int> part;
  for (const auto& s : a.train) part[s] = 0;
  for (const auto& s : a.val) part[s] = 1;
  for (const auto& s : a.test) part[s] = 2;
  Partition<T> out;
  out.seed = seed;
  for (const T& item : items) {
    switch (part.at(sentence_of(item))) {
      case 0: out.train.push_back(item); break;
      case 1: out.val.push_back(item); break;
      default: out.test.push_back(item); break;
    }
  }
  return out;
}

}  // namespace scanpath::corpus
