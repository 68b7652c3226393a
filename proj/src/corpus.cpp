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

#include "scanpath/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "scanpath/core/error.hpp"
#include "scanpath/core/rng.hpp"

namespace scanpath::corpus {
namespace {

constexpr const char* kHeader = "participant_id,sentence_id,word_index,duration_ms";

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::vector<Scanpath> parse_fixation_records(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing header", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (line != kHeader)
    throw ParseError(std::string("header must be exactly '") + kHeader + "'", 1);

  std::vector<Scanpath> out;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::vector<std::string> f = split_csv(line);
    static const char* names[] = {"participant_id", "sentence_id", "word_index", "duration_ms"};
    for (std::size_t i = 0; i < 4; ++i)
      if (f.size() <= i || trim(f[i]).empty())
        throw ParseError(std::string("missing field ") + names[i], lineno);
    if (f.size() > 4) throw ParseError("too many fields", lineno);

    Fixation fx;
    try {
      std::size_t used = 0;
      const std::string w = trim(f[2]);
      const long long wi = std::stoll(w, &used);
      if (used != w.size()) throw std::invalid_argument("trailing characters");
      if (wi < 0) throw ValidationError("row " + std::to_string(lineno) + ": negative word_index");
      fx.word_index = static_cast<std::size_t>(wi);
      const std::string d = trim(f[3]);
      fx.duration_ms = std::stod(d, &used);
      if (used != d.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::invalid_argument&) {
      throw ParseError("non-numeric word_index or duration_ms", lineno);
    } catch (const std::out_of_range&) {
      throw ParseError("numeric field out of range", lineno);
    }
    if (!std::isfinite(fx.duration_ms) || fx.duration_ms <= 0.0)
      throw ValidationError("row " + std::to_string(lineno) +
                            ": duration_ms must be positive, got " + trim(f[3]));

    auto key = std::make_pair(trim(f[0]), trim(f[1]));
    auto [it, inserted] = index.emplace(key, out.size());
    if (inserted) out.push_back(Scanpath{key.first, key.second, {}});
    out[it->second].fixations.push_back(fx);
  }
  return out;
}

std::vector<Scanpath> read_fixation_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return parse_fixation_records(in);
}

void write_fixation_records(std::ostream& out, std::span<const Scanpath> corpus) {
  out << kHeader << '\n';
  std::ostringstream num;
  num.precision(17);
  for (const Scanpath& sp : corpus) {
    for (const Fixation& f : sp.fixations) {
      num.str("");
      num << f.duration_ms;
      out << csv_field(sp.participant_id) << ',' << csv_field(sp.sentence_id) << ','
          << f.word_index << ',' << num.str() << '\n';
    }
  }
}

std::vector<std::string> tokenize(const std::string& text) {
  std::istringstream is(text);
  std::vector<std::string> words;
  std::string w;
  while (is >> w) words.push_back(w);
  return words;
}

std::vector<Sentence> parse_sentences(std::istream& in) {
  std::vector<Sentence> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
    }
    if (!j.is_object() || !j.contains("sentence_id") || !j.contains("text") ||
        !j["sentence_id"].is_string() || !j["text"].is_string())
      throw ParseError("expected {\"sentence_id\": string, \"text\": string}", lineno);
    Sentence s{j["sentence_id"].get<std::string>(), tokenize(j["text"].get<std::string>())};
    if (s.words.empty()) throw ParseError("sentence " + s.sentence_id + " has no words", lineno);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sentence> read_sentences(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return parse_sentences(in);
}

double percentile_linear(std::vector<double> values, double q) {
  if (values.empty()) throw ValidationError("percentile of an empty sample");
  if (q < 0.0 || q > 100.0) throw ValidationError("percentile must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  const double h = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

CapResult cap_outlier_durations(std::vector<Scanpath> corpus) {
  std::vector<double> durations;
  for (const Scanpath& sp : corpus)
    for (const Fixation& f : sp.fixations) durations.push_back(f.duration_ms);
  if (durations.empty()) throw ValidationError("cannot cap durations of an empty corpus");
  CapResult r;
  r.p99 = percentile_linear(std::move(durations), 99.0);
  for (Scanpath& sp : corpus) {
    const auto before = sp.fixations.size();
    std::erase_if(sp.fixations, [&](const Fixation& f) { return f.duration_ms > r.p99; });
    r.dropped_fixations += before - sp.fixations.size();
    if (sp.fixations.empty()) {
      ++r.dropped_scanpaths;
      continue;
    }
    r.corpus.push_back(std::move(sp));
  }
  return r;
}

NormalizedScanpath normalize(const Scanpath& sp, const Sentence& sentence, double p99,
                             std::size_t max_len) {
  return normalize(sp, sentence.words.size(), p99, max_len);
}

NormalizedScanpath normalize(const Scanpath& sp, std::size_t sentence_len, double p99,
                             std::size_t max_len) {
  if (sp.fixations.empty()) throw ValidationError("cannot normalize an empty scanpath");
  if (!(p99 > 0.0)) throw ValidationError("duration scale must be positive");
  if (sentence_len == 0) throw ValidationError("sentence has no words");
  NormalizedScanpath ns;
  ns.participant_id = sp.participant_id;
  ns.sentence_id = sp.sentence_id;
  ns.meta = {p99, sentence_len};
  ns.true_length = std::min(sp.fixations.size(), max_len);
  ns.steps = Matrix(max_len, 3);
  for (std::size_t i = 0; i < ns.true_length; ++i) {
    const Fixation& f = sp.fixations[i];
    if (f.word_index >= sentence_len)
      throw ValidationError("scanpath " + sp.participant_id + "/" + sp.sentence_id +
                            ": word_index " + std::to_string(f.word_index) +
                            " out of range for sentence of " + std::to_string(sentence_len) +
                            " words");
    ns.steps(i, 0) = static_cast<double>(f.word_index) / static_cast<double>(sentence_len);
    ns.steps(i, 1) = std::clamp(f.duration_ms / p99, 0.0, 1.0);
  }
  for (std::size_t i = ns.true_length; i < sp.fixations.size(); ++i)
    if (sp.fixations[i].word_index >= sentence_len)
      throw ValidationError("scanpath " + sp.participant_id + "/" + sp.sentence_id +
                            ": word_index out of range");
  ns.steps(ns.true_length - 1, 2) = 1.0;
  return ns;
}

Scanpath denormalize(const NormalizedScanpath& ns) {
  Scanpath sp{ns.participant_id, ns.sentence_id, {}};
  const double len = static_cast<double>(ns.meta.sentence_len);
  for (std::size_t i = 0; i < ns.true_length; ++i) {
    const double pos = std::round(ns.steps(i, 0) * len);
    const auto w = static_cast<std::size_t>(std::clamp(pos, 0.0, len - 1.0));
    sp.fixations.push_back({w, ns.steps(i, 1) * ns.meta.p99_duration_ms});
  }
  return sp;
}

SentenceAssignment assign_sentences(std::vector<std::string> ids, SplitRatios ratios,
                                    std::uint64_t seed) {
  const double total = ratios.train + ratios.val + ratios.test;
  if (ratios.train <= 0 || ratios.val <= 0 || ratios.test <= 0 || std::abs(total - 1.0) > 1e-9)
    throw ValidationError("split ratios must be positive and sum to 1");
  if (ids.size() < 3) throw ValidationError("need at least 3 sentences to split");
  std::sort(ids.begin(), ids.end());
  Rng rng = make_rng(seed);
  for (std::size_t i = ids.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(ids[i], ids[j]);
  }
  const auto n = static_cast<double>(ids.size());
  auto n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(ratios.val * n)));
  auto n_test = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(ratios.test * n)));
  while (n_val + n_test > ids.size() - 1) {
    if (n_val >= n_test && n_val > 1) --n_val;
    else if (n_test > 1) --n_test;
    else break;
  }
  SentenceAssignment a;
  const std::size_t n_train = ids.size() - n_val - n_test;
  a.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  a.val.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train),
               ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  a.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), ids.end());
  return a;
}

PreparedCorpus prepare(std::vector<Scanpath> raw, const std::vector<Sentence>& sentences,
                       SplitRatios ratios, std::uint64_t seed) {
  std::unordered_map<std::string, const Sentence*> by_id;
  for (const Sentence& s : sentences) by_id.emplace(s.sentence_id, &s);
  for (const Scanpath& sp : raw)
    if (!by_id.contains(sp.sentence_id))
      throw MissingKeyError("no sentence text for sentence_id '" + sp.sentence_id + "'");
  CapResult capped = cap_outlier_durations(std::move(raw));
  std::vector<NormalizedScanpath> normalized;
  normalized.reserve(capped.corpus.size());
  for (const Scanpath& sp : capped.corpus)
    normalized.push_back(normalize(sp, *by_id.at(sp.sentence_id), capped.p99));
  PreparedCorpus out;
  out.split = split<NormalizedScanpath>(
      normalized, [](const NormalizedScanpath& n) -> const std::string& { return n.sentence_id; },
      ratios, seed);
  out.p99 = capped.p99;
  out.dropped_fixations = capped.dropped_fixations;
  out.dropped_scanpaths = capped.dropped_scanpaths;
  return out;
}

void write_normalized(std::ostream& out, std::span<const NormalizedScanpath> items) {
  for (const NormalizedScanpath& ns : items) {
    nlohmann::json steps = nlohmann::json::array();
    for (std::size_t i = 0; i < ns.steps.rows(); ++i)
      steps.push_back({ns.steps(i, 0), ns.steps(i, 1), ns.steps(i, 2)});
    nlohmann::json j = {
        {"participant_id", ns.participant_id},
        {"sentence_id", ns.sentence_id},
        {"steps", std::move(steps)},
        {"true_length", ns.true_length},
        {"norm_meta",
         {{"p99_duration_ms", ns.meta.p99_duration_ms}, {"sentence_len", ns.meta.sentence_len}}}};
    out << j.dump() << '\n';
  }
}

void write_normalized(const std::filesystem::path& path,
                      std::span<const NormalizedScanpath> items) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_normalized(out, items);
}

std::vector<NormalizedScanpath> parse_normalized(std::istream& in) {
  std::vector<NormalizedScanpath> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      NormalizedScanpath ns;
      ns.participant_id = j.at("participant_id").get<std::string>();
      ns.sentence_id = j.at("sentence_id").get<std::string>();
      ns.true_length = j.at("true_length").get<std::size_t>();
      ns.meta.p99_duration_ms = j.at("norm_meta").at("p99_duration_ms").get<double>();
      ns.meta.sentence_len = j.at("norm_meta").at("sentence_len").get<std::size_t>();
      const auto& steps = j.at("steps");
      ns.steps = Matrix(steps.size(), 3);
      for (std::size_t i = 0; i < steps.size(); ++i) {
        if (steps[i].size() != 3) throw ParseError("step must have 3 values", lineno);
        for (std::size_t c = 0; c < 3; ++c) ns.steps(i, c) = steps[i][c].get<double>();
      }
      if (ns.true_length == 0 || ns.true_length > ns.steps.rows())
        throw ParseError("true_length out of range", lineno);
      out.push_back(std::move(ns));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("invalid scanpath record: ") + e.what(), lineno);
    }
  }
  return out;
}

std::vector<NormalizedScanpath> read_normalized(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return parse_normalized(in);
}

}  // namespace scanpath::corpus
