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

// Writes the on-disk inputs the CLI consumes, built from the synthetic
// generators: fixation CSV, sentences JSONL, embedding archive, train config
// and a downstream task.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "scanpath/corpus.hpp"
#include "scanpath/downstream.hpp"
#include "scanpath/embeddings.hpp"
#include "scanpath/synthetic.hpp"

namespace scanpath::testing {

struct CliCorpusFiles {
  std::filesystem::path csv, sentences, emb, config;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline CliCorpusFiles write_cli_corpus(const std::filesystem::path& dir, std::uint64_t seed,
                                       std::size_t sentences, std::size_t participants,
                                       const std::string& config_text) {
  synthetic::ReadingCorpusOptions opts;
  opts.sentences = sentences;
  opts.participants = participants;
  opts.dim = 16;
  const synthetic::ReadingCorpus rc = synthetic::make_reading_corpus(seed, opts);
  CliCorpusFiles f{dir / "fixations.csv", dir / "sentences.jsonl", dir / "emb.bin",
                   dir / "train.cfg"};
  {
    std::ofstream out(f.csv, std::ios::binary);
    corpus::write_fixation_records(out, rc.scanpaths);
  }
  std::string lines;
  for (const Sentence& s : rc.sentences) {
    std::string text;
    for (const std::string& w : s.words) text += (text.empty() ? "" : " ") + w;
    lines += nlohmann::json{{"sentence_id", s.sentence_id}, {"text", text}}.dump() + "\n";
  }
  write_text(f.sentences, lines);
  embeddings::write_archive(f.emb, rc.embeddings, rc.shape);
  write_text(f.config, "emb_dim=16\n" + config_text);
  return f;
}

struct CliTaskFiles {
  std::filesystem::path task, emb, oracle;
};

inline CliTaskFiles write_cli_task(const std::filesystem::path& dir,
                                   const downstream::SyntheticTask& t) {
  CliTaskFiles f{dir / "task.jsonl", dir / "task_emb.bin", dir / "oracle.jsonl"};
  std::string lines;
  std::vector<TextEmbedding> embs;
  std::vector<NormalizedScanpath> oracle;
  for (const TaskExample& ex : t.data.examples) {
    lines += nlohmann::json{{"sentence_id", ex.sentence_id}, {"text", ex.text}, {"label", ex.label}}
                 .dump() +
             "\n";
    embs.push_back(t.data.embeddings.at(ex.sentence_id));
    oracle.push_back(t.data.real.at(ex.sentence_id));
  }
  write_text(f.task, lines);
  const TextEmbedding& e = embs.front();
  embeddings::write_archive(f.emb, embs, {e.tokens.rows(), e.tokens.cols()});
  corpus::write_normalized(f.oracle, oracle);
  return f;
}

}  // namespace scanpath::testing
