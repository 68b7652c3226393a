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

// Command-line entry point. Machine-readable results go to stdout as JSON,
// human-readable notes to stderr.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "scanpath/core/error.hpp"
#include "scanpath/corpus.hpp"
#include "scanpath/downstream.hpp"
#include "scanpath/embeddings.hpp"
#include "scanpath/metrics.hpp"
#include "scanpath/model.hpp"
#include "scanpath/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace scanpath;

namespace {

struct Flags {
  std::string data, sentences, emb, out, config, gen, disc, text_id;
  std::uint64_t seed = 0;
  bool seed_given = false;
  double tau = 0.5;
  std::size_t noise_samples = 1;
  std::size_t folds = 10;
  std::size_t threads = 1;
  bool force = false;
};

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

// Refuses to clobber an existing file or non-empty directory.
void guard_output(const std::string& out, bool force) {
  if (out.empty()) throw ValidationError("--out is required");
  const fs::path p(out);
  if (!fs::exists(p) || force) return;
  if (fs::is_directory(p) && fs::is_empty(p)) return;
  throw ValidationError("refusing to overwrite " + out + " (use --force)");
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw ValidationError(std::string(flag) + " is required");
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

// Flat key=value files for the subcommands that are not TrainConfig.
std::map<std::string, std::string> read_kv(const std::string& path) {
  std::map<std::string, std::string> kv;
  if (path.empty()) return kv;
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path);
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", lineno);
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

class KvReader {
 public:
  explicit KvReader(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

  std::string str(const std::string& key, const std::string& def) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return def;
    std::string v = it->second;
    kv_.erase(it);
    return v;
  }
  double num(const std::string& key, double def) {
    const std::string v = str(key, "");
    if (v.empty()) return def;
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw ValidationError("config: bad value '" + v + "' for " + key);
    }
  }
  std::size_t count(const std::string& key, std::size_t def) {
    const double d = num(key, static_cast<double>(def));
    if (d < 0 || d != static_cast<double>(static_cast<std::size_t>(d)))
      throw ValidationError("config: " + key + " must be a non-negative integer");
    return static_cast<std::size_t>(d);
  }
  void finish() const {
    if (!kv_.empty()) throw ValidationError("config: unknown key '" + kv_.begin()->first + "'");
  }

 private:
  std::map<std::string, std::string> kv_;
};

std::vector<NormalizedScanpath> read_real_scanpaths(const std::string& path) {
  if (path.empty()) return {};
  return corpus::read_normalized(path);
}

EmbeddingMap load_embeddings(const std::string& path, std::size_t max_tokens, std::size_t dim) {
  require(path, "--emb");
  embeddings::LoadResult r = embeddings::load_archive(fs::path(path), {max_tokens, dim});
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  return std::move(r.map);
}

// --- subcommands ------------------------------------------------------------

int cmd_ingest(const Flags& f) {
  require(f.data, "--data");
  require(f.sentences, "--sentences");
  guard_output(f.out, f.force);
  const auto raw = corpus::read_fixation_csv(f.data);
  const auto sentences = corpus::read_sentences(f.sentences);
  const corpus::PreparedCorpus prep = corpus::prepare(raw, sentences, {}, f.seed);
  const fs::path out(f.out);
  fs::create_directories(out);
  corpus::write_normalized(out / "train.jsonl", prep.split.train);
  corpus::write_normalized(out / "val.jsonl", prep.split.val);
  corpus::write_normalized(out / "test.jsonl", prep.split.test);
  const json summary = {{"p99_duration_ms", prep.p99},
                        {"scanpaths_in", raw.size()},
                        {"dropped_fixations", prep.dropped_fixations},
                        {"dropped_scanpaths", prep.dropped_scanpaths},
                        {"train", prep.split.train.size()},
                        {"val", prep.split.val.size()},
                        {"test", prep.split.test.size()},
                        {"seed", f.seed}};
  write_file(out / "ingest.json", summary.dump(2) + "\n");
  print_json(summary);
  return 0;
}

int cmd_train(const Flags& f) {
  require(f.data, "--data");
  guard_output(f.out, f.force);
  TrainConfig cfg = f.config.empty() ? TrainConfig{} : TrainConfig::load(f.config);
  if (f.seed_given) cfg.seed = f.seed;
  cfg.threads = f.threads;
  cfg.validate();
  const fs::path dir(f.data);
  Partition<NormalizedScanpath> split;
  split.train = corpus::read_normalized(dir / "train.jsonl");
  if (fs::exists(dir / "val.jsonl")) split.val = corpus::read_normalized(dir / "val.jsonl");
  const EmbeddingMap embs = load_embeddings(f.emb, cfg.gen.max_len, cfg.gen.emb_dim);

  training::TrainOptions opts;
  opts.out_dir = fs::path(f.out);
  if (!f.gen.empty()) opts.resume_from = fs::path(f.gen);
  opts.on_epoch = [](const EpochRecord& r) {
    std::cerr << "epoch " << r.epoch << "  Lg " << r.lg << "  Ls " << r.ls << "  Lr " << r.lr
              << "  D " << r.disc_loss;
    if (r.val) std::cerr << "  val NLD " << r.val->nld;
    std::cerr << "\n";
  };
  fs::create_directories(*opts.out_dir);
  write_file(*opts.out_dir / "config.txt", cfg.to_text());
  training::TrainResult res = training::train(cfg, split, embs, opts);
  training::save_generator(*opts.out_dir / "generator.bin", res.gen, res.p99_duration_ms);
  json summary = {{"epochs", res.history.epochs.size()},
                  {"out", f.out},
                  {"generator", (*opts.out_dir / "generator.bin").string()},
                  {"checkpoint", (*opts.out_dir / "last.bin").string()}};
  if (!res.history.epochs.empty()) summary["last"] = res.history.epochs.back().to_json();
  print_json(summary);
  return 0;
}

int cmd_generate(const Flags& f) {
  require(f.gen, "--gen");
  require(f.sentences, "--sentences");
  if (!f.out.empty()) guard_output(f.out, f.force);
  if (f.noise_samples == 0) throw ValidationError("--noise-samples must be >= 1");
  training::LoadedGenerator lg = training::load_generator(f.gen);
  const GeneratorConfig& gc = lg.gen.config();
  const EmbeddingMap embs = load_embeddings(f.emb, gc.max_len, gc.emb_dim);
  const auto sentences = corpus::read_sentences(f.sentences);

  json items = json::array();
  bool matched = false;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const Sentence& s = sentences[i];
    if (!f.text_id.empty() && s.sentence_id != f.text_id) continue;
    matched = true;
    const TextEmbedding& emb = embeddings::lookup(embs, s.sentence_id);
    for (std::size_t k = 0; k < f.noise_samples; ++k) {
      const GeneratorOutput out = lg.gen.forward(
          emb, sample_noise(training::eval_noise_seed(f.seed, i, k), gc.max_len, gc.noise_dim));
      const NormMeta meta{lg.p99_duration_ms, s.words.size()};
      const Scanpath sp = truncate_at_eos(out, meta, f.tau, "generated", s.sentence_id);
      json fix = json::array();
      for (const Fixation& x : sp.fixations)
        fix.push_back({{"word_index", x.word_index},
                       {"word", s.words[x.word_index]},
                       {"duration_ms", x.duration_ms},
                       {"position", static_cast<double>(x.word_index) / static_cast<double>(s.words.size())},
                       {"duration", x.duration_ms / lg.p99_duration_ms}});
      items.push_back({{"sentence_id", s.sentence_id},
                       {"sample", k},
                       {"words", s.words},
                       {"fixations", fix}});
    }
  }
  if (!f.text_id.empty() && !matched)
    throw MissingKeyError("no sentence with id '" + f.text_id + "'");
  const json doc = {{"seed", f.seed}, {"tau", f.tau}, {"p99_duration_ms", lg.p99_duration_ms},
                    {"scanpaths", items}};
  if (f.out.empty()) {
    print_json(doc);
  } else {
    write_file(f.out, doc.dump(2) + "\n");
    print_json({{"out", f.out}, {"count", items.size()}});
  }
  return 0;
}

int cmd_eval(const Flags& f) {
  require(f.gen, "--gen");
  require(f.data, "--data");
  if (!f.out.empty()) guard_output(f.out, f.force);
  training::LoadedGenerator lg = training::load_generator(f.gen);
  const GeneratorConfig& gc = lg.gen.config();
  const EmbeddingMap embs = load_embeddings(f.emb, gc.max_len, gc.emb_dim);
  const auto part = corpus::read_normalized(f.data);
  const MetricReport r =
      training::evaluate_checkpoint(lg.gen, part, embs, f.noise_samples, f.seed, f.tau, f.threads);
  const json j = r.to_json();
  if (!f.out.empty()) write_file(f.out, j.dump(2) + "\n");
  print_json(j);
  return 0;
}

int cmd_intersubject(const Flags& f) {
  require(f.data, "--data");
  if (!f.out.empty()) guard_output(f.out, f.force);
  std::vector<NormalizedScanpath> items;
  if (fs::path(f.data).extension() == ".csv") {
    require(f.sentences, "--sentences");
    const corpus::PreparedCorpus prep = corpus::prepare(
        corpus::read_fixation_csv(f.data), corpus::read_sentences(f.sentences), {}, f.seed);
    for (const auto* part : {&prep.split.train, &prep.split.val, &prep.split.test})
      items.insert(items.end(), part->begin(), part->end());
  } else {
    items = corpus::read_normalized(f.data);
  }
  const json j = metrics::inter_subject(items).to_json();
  if (!f.out.empty()) write_file(f.out, j.dump(2) + "\n");
  print_json(j);
  return 0;
}

TaskData load_task_data(const Flags& f, std::size_t max_tokens, std::size_t dim,
                        const std::string& real_path) {
  require(f.data, "--data");
  TaskData data;
  data.examples = downstream::read_task(f.data);
  data.embeddings = load_embeddings(f.emb, max_tokens, dim);
  for (NormalizedScanpath& ns : read_real_scanpaths(real_path)) {
    const std::string id = ns.sentence_id;
    data.real.insert_or_assign(id, std::move(ns));
  }
  return data;
}

int cmd_downstream(const Flags& f) {
  if (!f.out.empty()) guard_output(f.out, f.force);
  KvReader kv(read_kv(f.config));
  downstream::ClassifierTraining tc;
  tc.epochs = kv.count("epochs", tc.epochs);
  tc.batch_size = kv.count("batch_size", tc.batch_size);
  tc.lr = kv.num("lr", tc.lr);
  tc.clf.hidden = kv.count("hidden", tc.clf.hidden);
  tc.clf.dropout = kv.num("dropout", tc.clf.dropout);
  tc.clf.ff_hidden = kv.count("ff_hidden", tc.clf.ff_hidden);
  std::size_t emb_dim = kv.count("emb_dim", kEmbeddingDim);
  const std::string real_path = kv.str("real_scanpaths", "");
  const std::string configs = kv.str("configurations", "none:none");
  kv.finish();

  std::optional<training::LoadedGenerator> lg;
  if (!f.gen.empty()) {
    lg.emplace(training::load_generator(f.gen));
    emb_dim = lg->gen.config().emb_dim;
  }
  const TaskData data = load_task_data(f, kMaxScanpathLength, emb_dim, real_path);

  json results = json::array();
  std::stringstream ss(configs);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw ValidationError("configurations entries look like train_source:test_source");
    const SourceKind tr = parse_source(item.substr(0, colon));
    const SourceKind te = parse_source(item.substr(colon + 1));
    const auto r = downstream::run_configuration(tr, te, data, tc, lg ? &lg->gen : nullptr,
                                                 f.folds, f.seed, f.tau, f.threads);
    std::cerr << to_string(tr) << " -> " << to_string(te) << ": weighted F1 " << r.weighted_f1
              << "\n";
    results.push_back(r.to_json());
  }
  const json doc = {{"folds", f.folds}, {"seed", f.seed}, {"results", results}};
  if (!f.out.empty()) write_file(f.out, doc.dump(2) + "\n");
  print_json(doc);
  return 0;
}

int cmd_finetune_intent(const Flags& f) {
  require(f.gen, "--gen");
  guard_output(f.out, f.force);
  KvReader kv(read_kv(f.config));
  downstream::IntentConfig ic;
  ic.epochs = kv.count("epochs", ic.epochs);
  ic.batch_size = kv.count("batch_size", ic.batch_size);
  ic.lr_gen = kv.num("lr_gen", ic.lr_gen);
  ic.lr_clf = kv.num("lr_clf", ic.lr_clf);
  ic.task_weight = kv.num("task_weight", ic.task_weight);
  ic.gan_weight = kv.num("gan_weight", ic.gan_weight);
  ic.weights.alpha = kv.num("alpha", ic.weights.alpha);
  ic.weights.beta = kv.num("beta", ic.weights.beta);
  ic.weights.gamma = kv.num("gamma", ic.weights.gamma);
  ic.tau = f.tau;
  downstream::ClassifierTraining pre;
  pre.epochs = kv.count("clf_pretrain_epochs", 10);
  pre.batch_size = ic.batch_size;
  pre.lr = ic.lr_clf;
  pre.clf.hidden = kv.count("clf_hidden", pre.clf.hidden);
  pre.clf.dropout = kv.num("clf_dropout", pre.clf.dropout);
  pre.clf.ff_hidden = kv.count("clf_ff_hidden", pre.clf.ff_hidden);
  const std::string real_path = kv.str("real_scanpaths", "");
  kv.finish();

  training::LoadedGenerator lg = training::load_generator(f.gen);
  const GeneratorConfig& gc = lg.gen.config();
  const TaskData data = load_task_data(f, gc.max_len, gc.emb_dim, real_path);
  std::optional<Discriminator> disc;
  if (!f.disc.empty()) disc.emplace(training::load_discriminator(f.disc));

  pre.clf.max_len = gc.max_len;
  pre.clf.emb_dim = gc.emb_dim;
  Classifier clf(pre.clf, derive_seed(f.seed, 1));
  if (pre.epochs > 0) {
    std::vector<TextEmbedding> embs;
    std::vector<int> labels;
    for (const TaskExample& ex : data.examples) {
      embs.push_back(downstream::example_embedding(data, ex));
      labels.push_back(ex.label);
    }
    const auto scans = downstream::resolve_source(SourceKind::kGenerated, data, &lg.gen,
                                                  derive_seed(f.seed, 2), f.tau);
    downstream::fit_classifier(clf, embs, scans, labels, pre, derive_seed(f.seed, 3));
  }
  const downstream::IntentHistory hist = downstream::intent_finetune(
      lg.gen, clf, disc ? &*disc : nullptr, data, ic, derive_seed(f.seed, 4));
  const fs::path out(f.out);
  fs::create_directories(out);
  training::save_generator(out / "generator.bin", lg.gen, lg.p99_duration_ms);
  downstream::save_classifier(out / "classifier.bin", clf);
  write_file(out / "history.json", hist.to_json().dump(2) + "\n");
  print_json({{"out", f.out}, {"history", hist.to_json()}});
  return 0;
}

int cmd_export_features(const Flags& f) {
  require(f.gen, "--gen");
  guard_output(f.out, f.force);
  training::LoadedGenerator lg = training::load_generator(f.gen);
  const GeneratorConfig& gc = lg.gen.config();
  TaskData data;
  if (!f.data.empty()) {
    data.examples = downstream::read_task(f.data);
  } else {
    require(f.sentences, "--data or --sentences");
    for (const Sentence& s : corpus::read_sentences(f.sentences)) {
      TaskExample ex;
      ex.sentence_id = s.sentence_id;
      for (const auto& w : s.words) ex.text += (ex.text.empty() ? "" : " ") + w;
      data.examples.push_back(std::move(ex));
    }
  }
  data.embeddings = load_embeddings(f.emb, gc.max_len, gc.emb_dim);
  const auto items = downstream::export_features(lg.gen, data, f.noise_samples, f.seed, f.tau,
                                                 lg.p99_duration_ms);
  corpus::write_normalized(fs::path(f.out), items);
  print_json({{"out", f.out}, {"count", items.size()}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scanpath generation toolkit", "scanpath"};
  app.require_subcommand(1, 1);
  Flags f;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", f.seed, "Random seed")->each([&](const std::string&) { f.seed_given = true; });
    sub->add_option("--threads", f.threads, "Worker thread cap")->check(CLI::PositiveNumber);
    sub->add_flag("--force", f.force, "Overwrite existing outputs");
    sub->add_option("--out", f.out, "Output path");
  };
  auto* ingest = app.add_subcommand("ingest", "Normalize and split raw fixation records");
  ingest->add_option("--data", f.data, "Fixation CSV");
  ingest->add_option("--sentences", f.sentences, "Sentences JSONL");
  add_common(ingest);

  auto* train = app.add_subcommand("train", "Train the generator and discriminator");
  train->add_option("--data", f.data, "Directory written by ingest");
  train->add_option("--emb", f.emb, "Embedding archive");
  train->add_option("--config", f.config, "key=value training config");
  train->add_option("--gen", f.gen, "Training checkpoint to resume from");
  add_common(train);

  auto* generate = app.add_subcommand("generate", "Generate scanpaths for sentences");
  generate->add_option("--gen", f.gen, "Generator checkpoint");
  generate->add_option("--emb", f.emb, "Embedding archive");
  generate->add_option("--sentences", f.sentences, "Sentences JSONL");
  generate->add_option("--text-id", f.text_id, "Only this sentence id");
  generate->add_option("--tau", f.tau, "EOS threshold")->check(CLI::Range(0.0, 1.0));
  generate->add_option("--noise-samples", f.noise_samples, "Samples per sentence");
  add_common(generate);

  auto* eval = app.add_subcommand("eval", "Score a generator against real scanpaths");
  eval->add_option("--gen", f.gen, "Generator checkpoint");
  eval->add_option("--data", f.data, "Normalized scanpath archive");
  eval->add_option("--emb", f.emb, "Embedding archive");
  eval->add_option("--tau", f.tau, "EOS threshold")->check(CLI::Range(0.0, 1.0));
  eval->add_option("--noise-samples", f.noise_samples, "Samples per scanpath");
  add_common(eval);

  auto* inter = app.add_subcommand("intersubject", "Inter-subject agreement on shared sentences");
  inter->add_option("--data", f.data, "Normalized archive or fixation CSV");
  inter->add_option("--sentences", f.sentences, "Sentences JSONL (CSV input only)");
  add_common(inter);

  auto* down = app.add_subcommand("downstream", "Cross-validated classifier with scanpaths");
  down->add_option("--data", f.data, "Task JSONL");
  down->add_option("--emb", f.emb, "Embedding archive");
  down->add_option("--config", f.config, "key=value downstream config");
  down->add_option("--gen", f.gen, "Generator checkpoint for generated sources");
  down->add_option("--folds", f.folds, "Cross-validation folds");
  down->add_option("--tau", f.tau, "EOS threshold")->check(CLI::Range(0.0, 1.0));
  add_common(down);

  auto* intent = app.add_subcommand("finetune-intent", "Finetune the generator on a task loss");
  intent->add_option("--data", f.data, "Task JSONL");
  intent->add_option("--emb", f.emb, "Embedding archive");
  intent->add_option("--config", f.config, "key=value finetuning config");
  intent->add_option("--gen", f.gen, "Generator checkpoint");
  intent->add_option("--disc", f.disc, "Training checkpoint holding the discriminator");
  intent->add_option("--tau", f.tau, "EOS threshold")->check(CLI::Range(0.0, 1.0));
  add_common(intent);

  auto* exp = app.add_subcommand("export-features", "Write generated scanpaths per sentence");
  exp->add_option("--gen", f.gen, "Generator checkpoint");
  exp->add_option("--emb", f.emb, "Embedding archive");
  exp->add_option("--data", f.data, "Task JSONL");
  exp->add_option("--sentences", f.sentences, "Sentences JSONL");
  exp->add_option("--tau", f.tau, "EOS threshold")->check(CLI::Range(0.0, 1.0));
  exp->add_option("--noise-samples", f.noise_samples, "Samples per sentence");
  add_common(exp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*ingest) return cmd_ingest(f);
    if (*train) return cmd_train(f);
    if (*generate) return cmd_generate(f);
    if (*eval) return cmd_eval(f);
    if (*inter) return cmd_intersubject(f);
    if (*down) return cmd_downstream(f);
    if (*intent) return cmd_finetune_intent(f);
    if (*exp) return cmd_export_features(f);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
