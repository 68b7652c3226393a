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

#include "scanpath/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "scanpath/core/error.hpp"

namespace scanpath {

nlohmann::json MetricReport::to_json(bool with_counts) const {
  nlohmann::json j = {{"vector", vector},     {"length", length}, {"position", position},
                      {"duration", duration}, {"nld", nld}};
  if (with_counts) {
    j["counts"] = {{"vector", n_vector},     {"length", n_length}, {"position", n_position},
                   {"duration", n_duration}, {"nld", n_nld},       {"pairs", n_pairs}};
  }
  return j;
}

MetricReport MetricReport::from_json(const nlohmann::json& j) {
  MetricReport r;
  r.vector = j.at("vector").get<double>();
  r.length = j.at("length").get<double>();
  r.position = j.at("position").get<double>();
  r.duration = j.at("duration").get<double>();
  r.nld = j.at("nld").get<double>();
  if (j.contains("counts")) {
    const auto& c = j["counts"];
    r.n_vector = c.value("vector", std::size_t{0});
    r.n_length = c.value("length", std::size_t{0});
    r.n_position = c.value("position", std::size_t{0});
    r.n_duration = c.value("duration", std::size_t{0});
    r.n_nld = c.value("nld", std::size_t{0});
    r.n_pairs = c.value("pairs", std::size_t{0});
  }
  return r;
}

namespace metrics {
namespace {

double clip01(double v) { return std::clamp(v, 0.0, 1.0); }

double duration_similarity(double g, double r) {
  const double mx = std::max(g, r);
  return clip01(1.0 - std::abs(g - r) / mx);
}

}  // namespace

std::vector<NormalizedFixation> normalized_fixations(const Scanpath& sp, const NormMeta& meta) {
  if (meta.sentence_len == 0 || !(meta.p99_duration_ms > 0.0))
    throw ValidationError("normalization needs a positive sentence length and duration scale");
  std::vector<NormalizedFixation> out;
  out.reserve(sp.fixations.size());
  for (const Fixation& f : sp.fixations)
    out.push_back({static_cast<double>(f.word_index) / static_cast<double>(meta.sentence_len),
                   clip01(f.duration_ms / meta.p99_duration_ms)});
  return out;
}

std::vector<SaccadeVector> to_saccades(std::span<const NormalizedFixation> fixations) {
  if (fixations.empty()) throw ValidationError("saccades of an empty scanpath");
  std::vector<SaccadeVector> out;
  out.reserve(fixations.size() - 1);
  for (std::size_t i = 1; i < fixations.size(); ++i) {
    const auto& a = fixations[i - 1];
    const auto& b = fixations[i];
    out.push_back({b.position - a.position, a.position, b.position, a.duration, b.duration});
  }
  return out;
}

Alignment align(std::span<const SaccadeVector> a, std::span<const SaccadeVector> b) {
  const std::size_t n = a.size(), m = b.size();
  enum Move : unsigned char { kMatch, kSkipB, kSkipA };
  std::vector<double> cost((n + 1) * (m + 1), 0.0);
  std::vector<Move> move((n + 1) * (m + 1), kMatch);
  auto at = [m](std::size_t i, std::size_t j) { return i * (m + 1) + j; };
  for (std::size_t i = 1; i <= n; ++i) {
    cost[at(i, 0)] = cost[at(i - 1, 0)] + std::abs(a[i - 1].amplitude);
    move[at(i, 0)] = kSkipA;
  }
  for (std::size_t j = 1; j <= m; ++j) {
    cost[at(0, j)] = cost[at(0, j - 1)] + std::abs(b[j - 1].amplitude);
    move[at(0, j)] = kSkipB;
  }
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const double match =
          cost[at(i - 1, j - 1)] + std::abs(a[i - 1].amplitude - b[j - 1].amplitude);
      const double skip_b = cost[at(i, j - 1)] + std::abs(b[j - 1].amplitude);
      const double skip_a = cost[at(i - 1, j)] + std::abs(a[i - 1].amplitude);
      double best = match;
      Move mv = kMatch;
      if (skip_b < best) {
        best = skip_b;
        mv = kSkipB;
      }
      if (skip_a < best) {
        best = skip_a;
        mv = kSkipA;
      }
      cost[at(i, j)] = best;
      move[at(i, j)] = mv;
    }
  }
  Alignment out;
  out.cost = cost[at(n, m)];
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    switch (move[at(i, j)]) {
      case kMatch:
        out.pairs.emplace_back(i - 1, j - 1);
        --i;
        --j;
        break;
      case kSkipB: --j; break;
      case kSkipA: --i; break;
    }
  }
  std::reverse(out.pairs.begin(), out.pairs.end());
  return out;
}

MultiMatchScores multimatch(std::span<const NormalizedFixation> g,
                            std::span<const NormalizedFixation> r) {
  if (g.empty() || r.empty()) throw ValidationError("multimatch of an empty scanpath");
  MultiMatchScores s;
  if (g.size() == 1 && r.size() == 1) {
    s.vector = 1.0;
    s.length = 1.0;
    s.position = clip01(1.0 - std::abs(g[0].position - r[0].position));
    if (std::max(g[0].duration, r[0].duration) > 0.0)
      s.duration = duration_similarity(g[0].duration, r[0].duration);
    return s;
  }
  if (g.size() == 1 || r.size() == 1) return s;

  const auto sg = to_saccades(g);
  const auto sr = to_saccades(r);
  const Alignment al = align(sg, sr);
  if (al.pairs.empty()) return s;
  double vec = 0, len = 0, pos = 0, dur = 0;
  std::size_t n_dur = 0;
  for (auto [i, j] : al.pairs) {
    const SaccadeVector& a = sg[i];
    const SaccadeVector& b = sr[j];
    vec += clip01(1.0 - std::abs(a.amplitude - b.amplitude) / 2.0);
    len += clip01(1.0 - std::abs(std::abs(a.amplitude) - std::abs(b.amplitude)) / 2.0);
    pos += clip01(1.0 - std::abs(a.end_pos - b.end_pos));
    if (std::max(a.end_dur, b.end_dur) > 0.0) {
      dur += duration_similarity(a.end_dur, b.end_dur);
      ++n_dur;
    }
  }
  const auto np = static_cast<double>(al.pairs.size());
  s.vector = clip01(vec / np);
  s.length = clip01(len / np);
  s.position = clip01(pos / np);
  if (n_dur > 0) s.duration = clip01(dur / static_cast<double>(n_dur));
  return s;
}

std::string temporal_bin(const Scanpath& sp, double bin_ms) {
  if (!(bin_ms > 0.0)) throw ValidationError("bin size must be positive");
  std::string out;
  for (const Fixation& f : sp.fixations) {
    if (f.word_index >= 94)
      throw ValidationError("word index " + std::to_string(f.word_index) +
                            " has no symbol (must be < 94)");
    if (!(f.duration_ms >= 0.0)) throw ValidationError("fixation duration must be >= 0");
    const auto bins =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(f.duration_ms / bin_ms)));
    out.append(bins, static_cast<char>('A' + f.word_index));
  }
  return out;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      const std::size_t sub = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, sub});
      diag = up;
    }
  }
  return row[b.size()];
}

double nld(const Scanpath& g, const Scanpath& r, double bin_ms) {
  if (g.fixations.empty() || r.fixations.empty())
    throw ValidationError("NLD of an empty scanpath");
  const std::string gs = temporal_bin(g, bin_ms);
  const std::string rs = temporal_bin(r, bin_ms);
  return static_cast<double>(levenshtein(gs, rs)) /
         static_cast<double>(std::max(gs.size(), rs.size()));
}

void ReportAccumulator::add(const MultiMatchScores& mm, double nld_value) {
  const std::optional<double>* dims[] = {&mm.vector, &mm.length, &mm.position, &mm.duration};
  for (std::size_t i = 0; i < 4; ++i) {
    if (dims[i]->has_value()) {
      sums_[i] += **dims[i];
      ++counts_[i];
    }
  }
  sums_[4] += nld_value;
  ++counts_[4];
  ++pairs_;
}

void ReportAccumulator::merge(const ReportAccumulator& other) {
  for (std::size_t i = 0; i < 5; ++i) {
    sums_[i] += other.sums_[i];
    counts_[i] += other.counts_[i];
  }
  pairs_ += other.pairs_;
}

MetricReport ReportAccumulator::finish() const {
  auto avg = [this](std::size_t i) {
    return counts_[i] == 0 ? 0.0 : std::clamp(sums_[i] / static_cast<double>(counts_[i]), 0.0, 1.0);
  };
  MetricReport r;
  r.vector = avg(0);
  r.length = avg(1);
  r.position = avg(2);
  r.duration = avg(3);
  r.nld = avg(4);
  r.n_vector = counts_[0];
  r.n_length = counts_[1];
  r.n_position = counts_[2];
  r.n_duration = counts_[3];
  r.n_nld = counts_[4];
  r.n_pairs = pairs_;
  return r;
}

void score_pair(ReportAccumulator& acc, const Scanpath& g, const Scanpath& r,
                const NormMeta& meta) {
  const auto gn = normalized_fixations(g, meta);
  const auto rn = normalized_fixations(r, meta);
  acc.add(multimatch(gn, rn), nld(g, r));
}

MetricReport inter_subject(std::span<const NormalizedScanpath> corpus) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<const NormalizedScanpath*>> by_sentence;
  for (const NormalizedScanpath& ns : corpus) {
    auto [it, inserted] = by_sentence.try_emplace(ns.sentence_id);
    if (inserted) order.push_back(ns.sentence_id);
    it->second.push_back(&ns);
  }
  // Per-sentence averages are combined with equal weight per sentence.
  double sums[5] = {0, 0, 0, 0, 0};
  std::size_t counts[5] = {0, 0, 0, 0, 0};
  std::size_t shared = 0, pairs = 0;
  for (const std::string& sid : order) {
    const auto& readers = by_sentence[sid];
    std::set<std::string> participants;
    for (const auto* ns : readers) participants.insert(ns->participant_id);
    if (participants.size() < 2) continue;
    ++shared;
    ReportAccumulator acc;
    for (std::size_t i = 0; i < readers.size(); ++i) {
      for (std::size_t j = i + 1; j < readers.size(); ++j) {
        if (readers[i]->participant_id == readers[j]->participant_id) continue;
        score_pair(acc, corpus::denormalize(*readers[i]), corpus::denormalize(*readers[j]),
                   readers[j]->meta);
      }
    }
    const MetricReport r = acc.finish();
    pairs += r.n_pairs;
    const double vals[] = {r.vector, r.length, r.position, r.duration, r.nld};
    const std::size_t ns[] = {r.n_vector, r.n_length, r.n_position, r.n_duration, r.n_nld};
    for (std::size_t k = 0; k < 5; ++k) {
      if (ns[k] == 0) continue;
      sums[k] += vals[k];
      ++counts[k];
    }
  }
  if (shared == 0)
    throw ValidationError("inter-subject score needs a sentence read by at least two participants");
  auto avg = [&](std::size_t k) { return counts[k] == 0 ? 0.0 : sums[k] / static_cast<double>(counts[k]); };
  MetricReport out;
  out.vector = avg(0);
  out.length = avg(1);
  out.position = avg(2);
  out.duration = avg(3);
  out.nld = avg(4);
  out.n_vector = counts[0];
  out.n_length = counts[1];
  out.n_position = counts[2];
  out.n_duration = counts[3];
  out.n_nld = counts[4];
  out.n_pairs = pairs;
  return out;
}

double weighted_f1(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) throw ShapeError("weighted F1: length mismatch");
  if (truth.empty()) throw ValidationError("weighted F1 of an empty sample");
  double total = 0.0;
  for (int cls : {0, 1}) {
    std::size_t tp = 0, pred = 0, support = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      support += truth[i] == cls ? 1 : 0;
      pred += predicted[i] == cls ? 1 : 0;
      tp += (truth[i] == cls && predicted[i] == cls) ? 1 : 0;
    }
    if (support == 0) continue;
    const double precision = pred == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(pred);
    const double recall = static_cast<double>(tp) / static_cast<double>(support);
    const double f1 =
        precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
    total += f1 * static_cast<double>(support);
  }
  return total / static_cast<double>(truth.size());
}

namespace {

std::vector<int> attended_labels(const Scanpath& sp, std::size_t sentence_len) {
  std::vector<int> labels(sentence_len, 0);
  for (const Fixation& f : sp.fixations) {
    if (f.word_index >= sentence_len)
      throw ValidationError("skipping F1: word index past the sentence in " + sp.sentence_id);
    labels[f.word_index] = 1;
  }
  return labels;
}

}  // namespace

double skipping_f1(std::span<const Scanpath> generated, std::span<const Scanpath> real,
                   const std::map<std::string, std::size_t>& sentence_lengths, bool pooled) {
  if (real.empty()) throw ValidationError("skipping F1: no real scanpaths");
  std::unordered_map<std::string, const Scanpath*> gen_by_sentence;
  for (const Scanpath& g : generated) gen_by_sentence.try_emplace(g.sentence_id, &g);
  std::set<std::string> real_sentences;
  for (const Scanpath& r : real) real_sentences.insert(r.sentence_id);
  for (const auto& [sid, _] : gen_by_sentence)
    if (!real_sentences.contains(sid))
      throw ValidationError("skipping F1: generated sentence '" + sid + "' has no real scanpath");

  std::vector<int> all_truth, all_pred;
  double sum = 0.0;
  for (const Scanpath& r : real) {
    auto it = gen_by_sentence.find(r.sentence_id);
    if (it == gen_by_sentence.end())
      throw ValidationError("skipping F1: real sentence '" + r.sentence_id +
                            "' has no generated scanpath");
    auto len_it = sentence_lengths.find(r.sentence_id);
    if (len_it == sentence_lengths.end())
      throw MissingKeyError("skipping F1: unknown length for sentence '" + r.sentence_id + "'");
    const auto truth = attended_labels(r, len_it->second);
    const auto pred = attended_labels(*it->second, len_it->second);
    if (pooled) {
      all_truth.insert(all_truth.end(), truth.begin(), truth.end());
      all_pred.insert(all_pred.end(), pred.begin(), pred.end());
    } else {
      sum += weighted_f1(truth, pred);
    }
  }
  return pooled ? weighted_f1(all_truth, all_pred) : sum / static_cast<double>(real.size());
}

}  // namespace metrics
}  // namespace scanpath
