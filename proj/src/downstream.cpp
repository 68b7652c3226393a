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

#include "scanpath/downstream.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "scanpath/autograd/ops.hpp"
#include "scanpath/core/error.hpp"
#include "scanpath/core/parallel.hpp"
#include "scanpath/metrics.hpp"
#include "scanpath/nn/checkpoint.hpp"
#include "scanpath/nn/optim.hpp"

namespace scanpath {
namespace {

std::size_t meta_size(const std::map<std::string, std::string>& meta, const std::string& key) {
  auto it = meta.find(key);
  if (it == meta.end()) throw FormatError("checkpoint config lacks " + key);
  return static_cast<std::size_t>(std::stoull(it->second));
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void fisher_yates(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(v[i - 1], v[std::min(j, i - 1)]);
  }
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace

const NormalizedScanpath& TaskData::real_scanpath(const std::string& id) const {
  real_reads.bump();
  auto it = real.find(id);
  if (it == real.end()) throw MissingKeyError("no real scanpath for sentence_id '" + id + "'");
  return it->second;
}

std::string to_string(SourceKind k) {
  switch (k) {
    case SourceKind::kNone: return "none";
    case SourceKind::kRandom: return "random";
    case SourceKind::kReal: return "real";
    case SourceKind::kGenerated: return "generated";
    case SourceKind::kRealPlusGenerated: return "real_plus_generated";
  }
  return "?";
}

SourceKind parse_source(const std::string& s) {
  for (SourceKind k : {SourceKind::kNone, SourceKind::kRandom, SourceKind::kReal,
                       SourceKind::kGenerated, SourceKind::kRealPlusGenerated})
    if (to_string(k) == s) return k;
  throw ValidationError("unknown scanpath source '" + s +
                        "' (none|random|real|generated|real_plus_generated)");
}

void ClassifierConfig::validate() const {
  if (max_len == 0 || emb_dim == 0 || hidden == 0 || ff_hidden == 0)
    throw ValidationError("classifier config: sizes must be positive");
  if (dropout < 0.0 || dropout >= 1.0)
    throw ValidationError("classifier config: dropout must lie in [0, 1)");
}

std::map<std::string, std::string> ClassifierConfig::to_meta(const std::string& p) const {
  return {{p + "max_len", std::to_string(max_len)},
          {p + "emb_dim", std::to_string(emb_dim)},
          {p + "hidden", std::to_string(hidden)},
          {p + "dropout", fmt(dropout)},
          {p + "ff_hidden", std::to_string(ff_hidden)}};
}

ClassifierConfig ClassifierConfig::from_meta(const std::map<std::string, std::string>& m,
                                             const std::string& p) {
  ClassifierConfig c;
  c.max_len = meta_size(m, p + "max_len");
  c.emb_dim = meta_size(m, p + "emb_dim");
  c.hidden = meta_size(m, p + "hidden");
  auto it = m.find(p + "dropout");
  if (it == m.end()) throw FormatError("checkpoint config lacks " + p + "dropout");
  c.dropout = std::stod(it->second);
  c.ff_hidden = meta_size(m, p + "ff_hidden");
  return c;
}

Classifier::Classifier(ClassifierConfig cfg, std::uint64_t init_seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng = make_rng(init_seed);
  const std::size_t h = cfg_.hidden;
  text_lstm_ = nn::BiLstm("clf.text_lstm", cfg_.emb_dim, h, rng);
  text_norm_ = nn::BatchNorm("clf.text_norm", 2 * h);
  scan_lstm_ = nn::BiLstm("clf.scan_lstm", 3, h, rng);
  scan_norm_ = nn::BatchNorm("clf.scan_norm", 2 * h);
  post_lstm_ = nn::BiLstm("clf.post_lstm", 4 * h, h, rng);
  ff_hidden_ = nn::Linear("clf.ff.hidden", 2 * h, cfg_.ff_hidden, rng);
  ff_out_ = nn::Linear("clf.ff.out", cfg_.ff_hidden, 1, rng);
}

ad::Var Classifier::forward(ad::Tape& tape, std::span<const TextEmbedding* const> embs,
                            ad::Var steps, const std::vector<std::size_t>& scan_lengths,
                            bool train, Rng* rng) {
  const std::size_t n = embs.size(), horizon = cfg_.max_len;
  if (n == 0 || steps.rows() != n * horizon || steps.cols() != 3 || scan_lengths.size() != n)
    throw ShapeError("classifier: input shape mismatch");
  std::vector<std::size_t> text_len(n), scan_len(n), merged_len(n);
  std::size_t active = 1;
  Matrix text(n * horizon, cfg_.emb_dim);
  for (std::size_t b = 0; b < n; ++b) {
    const TextEmbedding& e = *embs[b];
    if (e.tokens.rows() != horizon || e.tokens.cols() != cfg_.emb_dim)
      throw ShapeError("classifier: embedding for '" + e.sentence_id + "' has wrong shape");
    text_len[b] = std::clamp<std::size_t>(e.token_count, 1, horizon);
    scan_len[b] = std::clamp<std::size_t>(scan_lengths[b], 1, horizon);
    merged_len[b] = std::max(text_len[b], scan_len[b]);
    active = std::max(active, merged_len[b]);
    std::copy_n(e.tokens.data(), e.tokens.size(), text.data() + b * horizon * cfg_.emb_dim);
  }
  const std::vector<std::size_t> tm = nn::to_time_major(n, horizon, active);
  ad::Var text_tm = ad::gather_rows(tape.constant(std::move(text)), tm);
  ad::Var scan_tm = ad::gather_rows(steps, tm);

  ad::Var text_seq = text_lstm_.forward(text_tm, n, active, text_len).sequence;
  text_seq = text_norm_.forward(text_seq, nn::time_major_mask(text_len, active), train);
  text_seq = nn::dropout(text_seq, cfg_.dropout, train, rng);

  ad::Var scan_seq = scan_lstm_.forward(scan_tm, n, active, scan_len).sequence;
  scan_seq = scan_norm_.forward(scan_seq, nn::time_major_mask(scan_len, active), train);
  scan_seq = nn::dropout(scan_seq, cfg_.dropout, train, rng);

  const ad::Var branches[] = {text_seq, scan_seq};
  ad::Var final = post_lstm_.forward(ad::concat_cols(branches), n, active, merged_len).final;
  return ad::sigmoid(ff_out_(ad::relu(ff_hidden_(final))));
}

double Classifier::forward(const TextEmbedding& emb, const Matrix* steps) {
  const Matrix zeros(cfg_.max_len, 3);
  const Matrix& s = steps != nullptr ? *steps : zeros;
  ad::Tape tape(false);
  const TextEmbedding* e[] = {&emb};
  return forward(tape, e, tape.constant(s), {eos_length(s)}, false, nullptr).value()(0, 0);
}

nn::ParameterRefs Classifier::parameters() {
  nn::ParameterRefs out;
  text_lstm_.collect(out);
  text_norm_.collect(out);
  scan_lstm_.collect(out);
  scan_norm_.collect(out);
  post_lstm_.collect(out);
  ff_hidden_.collect(out);
  ff_out_.collect(out);
  return out;
}

namespace downstream {

std::vector<TaskExample> parse_task(std::istream& in) {
  std::vector<TaskExample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
    }
    if (!j.is_object() || !j.contains("sentence_id") || !j["sentence_id"].is_string() ||
        !j.contains("text") || !j["text"].is_string() || !j.contains("label") ||
        !j["label"].is_number_integer())
      throw ParseError("expected sentence_id (string), text (string), label (integer)", lineno);
    TaskExample ex;
    ex.sentence_id = j["sentence_id"].get<std::string>();
    ex.text = j["text"].get<std::string>();
    ex.label = j["label"].get<int>();
    if (ex.label != 0 && ex.label != 1) throw ParseError("label must be 0 or 1", lineno);
    if (j.contains("pair_text") && !j["pair_text"].is_null()) {
      if (!j["pair_text"].is_string()) throw ParseError("pair_text must be a string", lineno);
      ex.pair_text = j["pair_text"].get<std::string>();
    }
    if (corpus::tokenize(ex.text).empty()) throw ParseError("empty text", lineno);
    out.push_back(std::move(ex));
  }
  if (out.empty()) throw ValidationError("task file has no examples");
  return out;
}

std::vector<TaskExample> read_task(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open task file " + path.string());
  return parse_task(in);
}

TextEmbedding example_embedding(const TaskData& data, const TaskExample& ex) {
  const TextEmbedding& first = embeddings::lookup(data.embeddings, ex.sentence_id);
  if (!ex.pair_text) return first;
  const TextEmbedding& second =
      embeddings::lookup(data.embeddings, ex.sentence_id + kPairSuffix);
  const std::size_t rows = first.tokens.rows(), dim = first.tokens.cols();
  TextEmbedding out{ex.sentence_id, Matrix(rows, dim), 0, first.cls};
  std::size_t r = 0;
  for (std::size_t i = 0; i < first.token_count && r < rows; ++i, ++r)
    std::copy_n(first.tokens.data() + i * dim, dim, out.tokens.data() + r * dim);
  if (r < rows) std::fill_n(out.tokens.data() + (r++) * dim, dim, -1.0);
  for (std::size_t i = 0; i < second.token_count && r < rows; ++i, ++r)
    std::copy_n(second.tokens.data() + i * dim, dim, out.tokens.data() + r * dim);
  out.token_count = r;
  return out;
}

Matrix join_pair_steps(const ScanInput& a, const ScanInput& b, std::size_t* length) {
  const std::size_t rows = a.steps.rows();
  Matrix out(rows, 3);
  std::size_t r = 0;
  for (std::size_t i = 0; i < a.length && r < rows; ++i, ++r)
    for (std::size_t c = 0; c < 3; ++c) out(r, c) = a.steps(i, c);
  if (r < rows) {
    for (std::size_t c = 0; c < 3; ++c) out(r, c) = -1.0;
    ++r;
  }
  for (std::size_t i = 0; i < b.length && r < rows; ++i, ++r)
    for (std::size_t c = 0; c < 3; ++c) out(r, c) = b.steps(i, c);
  if (length != nullptr) *length = r;
  return out;
}

ScanInput random_scanpath(Rng& rng, std::size_t max_len) {
  ScanInput s{Matrix(max_len, 3), 1};
  s.length = 1 + std::min(max_len - 1,
                          static_cast<std::size_t>(uniform01(rng) * static_cast<double>(max_len)));
  for (std::size_t i = 0; i < s.length; ++i) {
    s.steps(i, 0) = uniform01(rng);
    s.steps(i, 1) = uniform01(rng);
  }
  s.steps(s.length - 1, 2) = 1.0;
  return s;
}

std::vector<ScanInput> resolve_source(SourceKind kind, const TaskData& data, Generator* gen,
                                      std::uint64_t seed, double tau) {
  if (kind == SourceKind::kRealPlusGenerated)
    throw ValidationError("real_plus_generated combines two sources; resolve real and generated");
  const std::size_t n = data.examples.size();
  if (n == 0) throw ValidationError("task has no examples");
  const std::size_t max_len =
      embeddings::lookup(data.embeddings, data.examples.front().sentence_id).tokens.rows();
  std::vector<ScanInput> out(n);
  auto finish_pair = [&](const TaskExample& ex, ScanInput a, ScanInput b) {
    if (!ex.pair_text) return a;
    ScanInput joined;
    joined.steps = join_pair_steps(a, b, &joined.length);
    return joined;
  };

  switch (kind) {
    case SourceKind::kNone:
      for (auto& s : out) {
        s.steps = Matrix(max_len, 3);
        s.length = eos_length(s.steps, tau);
      }
      break;
    case SourceKind::kRandom: {
      Rng rng = make_rng(derive_seed(seed, 11));
      for (std::size_t i = 0; i < n; ++i) {
        ScanInput a = random_scanpath(rng, max_len);
        ScanInput b = data.examples[i].pair_text ? random_scanpath(rng, max_len) : ScanInput{};
        out[i] = finish_pair(data.examples[i], std::move(a), std::move(b));
      }
      break;
    }
    case SourceKind::kReal:
      for (std::size_t i = 0; i < n; ++i) {
        const TaskExample& ex = data.examples[i];
        const NormalizedScanpath& ra = data.real_scanpath(ex.sentence_id);
        ScanInput a{ra.steps, ra.true_length};
        ScanInput b;
        if (ex.pair_text) {
          const NormalizedScanpath& rb = data.real_scanpath(ex.sentence_id + kPairSuffix);
          b = {rb.steps, rb.true_length};
        }
        out[i] = finish_pair(ex, std::move(a), std::move(b));
      }
      break;
    case SourceKind::kGenerated: {
      if (gen == nullptr) throw ValidationError("generated scanpaths need a generator (--gen)");
      const GeneratorConfig& gc = gen->config();
      auto generate = [&](const std::string& id, std::uint64_t s) {
        const GeneratorOutput o =
            gen->forward(embeddings::lookup(data.embeddings, id), sample_noise(s, gc.max_len, gc.noise_dim));
        return ScanInput{o.steps, eos_length(o.steps, tau)};
      };
      const std::uint64_t base = derive_seed(seed, 12);
      for (std::size_t i = 0; i < n; ++i) {
        const TaskExample& ex = data.examples[i];
        ScanInput a = generate(ex.sentence_id, derive_seed(base, 2 * i));
        ScanInput b = ex.pair_text ? generate(ex.sentence_id + kPairSuffix, derive_seed(base, 2 * i + 1))
                                   : ScanInput{};
        out[i] = finish_pair(ex, std::move(a), std::move(b));
      }
      break;
    }
    case SourceKind::kRealPlusGenerated: break;
  }
  return out;
}

std::vector<std::size_t> stratified_folds(std::span<const int> labels, std::size_t folds,
                                          std::uint64_t seed) {
  if (folds < 2) throw ValidationError("need at least 2 folds");
  if (labels.size() < folds) throw ValidationError("fewer examples than folds");
  Rng rng = make_rng(seed);
  std::vector<std::size_t> out(labels.size());
  std::size_t next = 0;
  for (int cls : {0, 1}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) members.push_back(i);
    fisher_yates(members, rng);
    for (std::size_t i : members) out[i] = next++ % folds;
  }
  return out;
}

void ClassifierTraining::validate() const {
  if (epochs == 0 || batch_size == 0) throw ValidationError("classifier epochs/batch must be >= 1");
  if (!(lr > 0.0)) throw ValidationError("classifier learning rate must be > 0");
  clf.validate();
}

nlohmann::json ConfigurationResult::to_json() const {
  return {{"train_source", to_string(train_source)},
          {"test_source", to_string(test_source)},
          {"weighted_f1", weighted_f1},
          {"fold_f1", fold_f1}};
}

namespace {

struct Batch {
  std::vector<const TextEmbedding*> embs;
  Matrix steps;
  std::vector<std::size_t> lengths;
};

Batch make_batch(std::span<const TextEmbedding> embs, std::span<const ScanInput> scans,
                 std::span<const std::size_t> idx, std::size_t max_len) {
  Batch b{{}, Matrix(idx.size() * max_len, 3), {}};
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const ScanInput& s = scans[idx[k]];
    if (s.steps.rows() != max_len || s.steps.cols() != 3)
      throw ShapeError("classifier: scanpath input must be max_len x 3");
    b.embs.push_back(&embs[idx[k]]);
    std::copy_n(s.steps.data(), max_len * 3, b.steps.data() + k * max_len * 3);
    b.lengths.push_back(s.length);
  }
  return b;
}

}  // namespace

void fit_classifier(Classifier& clf, std::span<const TextEmbedding> embs,
                    std::span<const ScanInput> scans, std::span<const int> labels,
                    const ClassifierTraining& cfg, std::uint64_t seed) {
  cfg.validate();
  if (embs.size() != scans.size() || embs.size() != labels.size() || embs.empty())
    throw ShapeError("classifier training inputs disagree in length");
  const nn::ParameterRefs params = clf.parameters();
  nn::Adam opt(params, {.lr = cfg.lr});
  Rng rng = make_rng(seed);
  const std::size_t max_len = clf.config().max_len;
  std::vector<std::size_t> order = iota(embs.size());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    fisher_yates(order, rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - start);
      const std::span<const std::size_t> idx(order.data() + start, n);
      Batch b = make_batch(embs, scans, idx, max_len);
      std::vector<double> y(n);
      for (std::size_t k = 0; k < n; ++k) y[k] = labels[idx[k]];
      nn::zero_grads(params);
      ad::Tape tape;
      ad::Var p = clf.forward(tape, b.embs, tape.constant(std::move(b.steps)), b.lengths, true, &rng);
      ad::Var loss = losses::binary_cross_entropy(p, y);
      if (!std::isfinite(loss.value()(0, 0)))
        throw DivergenceError("classifier loss became non-finite at epoch " + std::to_string(epoch + 1));
      tape.backward(loss);
      opt.step();
    }
  }
}

std::vector<int> predict(Classifier& clf, std::span<const TextEmbedding> embs,
                         std::span<const ScanInput> scans) {
  const std::size_t max_len = clf.config().max_len;
  const std::vector<std::size_t> all = iota(embs.size());
  std::vector<int> out;
  out.reserve(embs.size());
  constexpr std::size_t kChunk = 64;
  for (std::size_t start = 0; start < all.size(); start += kChunk) {
    const std::size_t n = std::min(kChunk, all.size() - start);
    Batch b = make_batch(embs, scans, std::span<const std::size_t>(all.data() + start, n), max_len);
    ad::Tape tape(false);
    ad::Var p = clf.forward(tape, b.embs, tape.constant(std::move(b.steps)), b.lengths, false, nullptr);
    for (std::size_t k = 0; k < n; ++k) out.push_back(p.value()(k, 0) > 0.5 ? 1 : 0);
  }
  return out;
}

ConfigurationResult run_configuration(SourceKind train_src, SourceKind test_src,
                                      const TaskData& data, const ClassifierTraining& cfg,
                                      Generator* gen, std::size_t folds, std::uint64_t seed,
                                      double tau, std::size_t threads) {
  if (test_src == SourceKind::kRealPlusGenerated)
    throw ValidationError("real_plus_generated is a training source only");
  const std::size_t n = data.examples.size();
  if (n == 0) throw ValidationError("task has no examples");
  auto needs = [&](SourceKind k) {
    return train_src == k || test_src == k ||
           (train_src == SourceKind::kRealPlusGenerated &&
            (k == SourceKind::kReal || k == SourceKind::kGenerated));
  };
  if (needs(SourceKind::kReal))
    for (const TaskExample& ex : data.examples)
      if (!data.has_real(ex.sentence_id) ||
          (ex.pair_text && !data.has_real(ex.sentence_id + kPairSuffix)))
        throw ValidationError("real scanpaths requested but missing for '" + ex.sentence_id + "'");
  if (needs(SourceKind::kGenerated) && gen == nullptr)
    throw ValidationError("generated scanpaths need a generator (--gen)");

  std::vector<TextEmbedding> embs;
  std::vector<int> labels;
  embs.reserve(n);
  for (const TaskExample& ex : data.examples) {
    embs.push_back(example_embedding(data, ex));
    labels.push_back(ex.label);
  }
  ClassifierTraining tc = cfg;
  tc.clf.max_len = embs.front().tokens.rows();
  tc.clf.emb_dim = embs.front().tokens.cols();
  tc.validate();

  std::map<SourceKind, std::vector<ScanInput>> scans;
  for (SourceKind k : {SourceKind::kNone, SourceKind::kRandom, SourceKind::kReal,
                       SourceKind::kGenerated})
    if (needs(k)) scans[k] = resolve_source(k, data, gen, seed, tau);

  const std::vector<std::size_t> fold_of =
      stratified_folds(labels, folds, derive_seed(seed, 21));
  ConfigurationResult result{train_src, test_src, 0.0, {}};
  result.fold_f1 = parallel_map(folds, threads, [&](std::size_t f) {
    std::vector<TextEmbedding> tr_e, te_e;
    std::vector<ScanInput> tr_s, te_s;
    std::vector<int> tr_y, te_y;
    for (std::size_t i = 0; i < n; ++i) {
      if (fold_of[i] == f) {
        te_e.push_back(embs[i]);
        te_s.push_back(scans.at(test_src)[i]);
        te_y.push_back(labels[i]);
      } else if (train_src == SourceKind::kRealPlusGenerated) {
        for (SourceKind k : {SourceKind::kReal, SourceKind::kGenerated}) {
          tr_e.push_back(embs[i]);
          tr_s.push_back(scans.at(k)[i]);
          tr_y.push_back(labels[i]);
        }
      } else {
        tr_e.push_back(embs[i]);
        tr_s.push_back(scans.at(train_src)[i]);
        tr_y.push_back(labels[i]);
      }
    }
    Classifier clf(tc.clf, derive_seed(seed, 100 + f));
    fit_classifier(clf, tr_e, tr_s, tr_y, tc, derive_seed(seed, 200 + f));
    return metrics::weighted_f1(te_y, predict(clf, te_e, te_s));
  });
  double sum = 0.0;
  for (double v : result.fold_f1) sum += v;
  result.weighted_f1 = sum / static_cast<double>(folds);
  return result;
}

SyntheticTask make_synthetic_task(std::uint64_t seed, std::size_t n_examples, std::size_t dim) {
  if (n_examples < 100) throw ValidationError("synthetic task needs at least 100 examples");
  if (dim < 2) throw ValidationError("synthetic task needs dim >= 2");
  Rng rng = make_rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  auto random_vec = [&] {
    std::vector<double> v(dim);
    for (double& x : v) x = standard_normal(rng) * scale;
    return v;
  };

  struct Word {
    std::string text;
    std::vector<double> vec;
  };
  std::vector<Word> fillers;
  const std::vector<std::string> triggers = {"zeta", "theta"};
  std::vector<Word> trig;
  for (const auto& t : triggers) trig.push_back({t, random_vec()});
  // Distractors: near copies of the trigger vectors.
  for (std::size_t t = 0; t < trig.size(); ++t) {
    for (std::size_t k = 0; k < 2; ++k) {
      Word w{trig[t].text + "x" + std::to_string(k), trig[t].vec};
      for (double& x : w.vec) x += 0.35 * scale * standard_normal(rng);
      fillers.push_back(std::move(w));
    }
  }
  for (std::size_t v = 0; v < 60; ++v) fillers.push_back({"w" + std::to_string(v), random_vec()});

  SyntheticTask task;
  task.triggers = triggers;
  constexpr double kTriggerDuration = 0.9, kOtherDuration = 0.1;
  for (std::size_t e = 0; e < n_examples; ++e) {
    const std::size_t len = 8 + std::min<std::size_t>(6, static_cast<std::size_t>(uniform01(rng) * 7));
    std::vector<const Word*> words(len);
    for (auto& w : words)
      w = &fillers[std::min(fillers.size() - 1,
                            static_cast<std::size_t>(uniform01(rng) * static_cast<double>(fillers.size())))];
    std::vector<bool> is_trigger(len, false);
    int present = 0;
    for (const Word& t : trig) {
      if (uniform01(rng) >= 0.5) continue;
      std::size_t pos;
      do {
        pos = std::min(len - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(len)));
      } while (is_trigger[pos]);
      words[pos] = &t;
      is_trigger[pos] = true;
      ++present;
    }

    TaskExample ex;
    ex.sentence_id = "task-" + std::to_string(e);
    ex.label = present == 1 ? 1 : 0;
    TextEmbedding emb{ex.sentence_id, Matrix(kMaxScanpathLength, dim), len, Matrix(1, dim)};
    NormalizedScanpath oracle;
    oracle.participant_id = "oracle";
    oracle.sentence_id = ex.sentence_id;
    oracle.steps = Matrix(kMaxScanpathLength, 3);
    oracle.true_length = len;
    oracle.meta = {1000.0, len};
    for (std::size_t i = 0; i < len; ++i) {
      ex.text += (i ? " " : "") + words[i]->text;
      for (std::size_t d = 0; d < dim; ++d) {
        emb.tokens(i, d) = words[i]->vec[d];
        emb.cls(0, d) += words[i]->vec[d] / static_cast<double>(len);
      }
      oracle.steps(i, 0) = static_cast<double>(i) / static_cast<double>(len);
      oracle.steps(i, 1) = is_trigger[i] ? kTriggerDuration : kOtherDuration;
    }
    oracle.steps(len - 1, 2) = 1.0;
    embeddings::quantize_to_float32(emb);
    task.data.embeddings.emplace(ex.sentence_id, std::move(emb));
    task.data.real.emplace(ex.sentence_id, std::move(oracle));
    task.data.examples.push_back(std::move(ex));
  }
  return task;
}

void IntentConfig::validate() const {
  if (batch_size == 0) throw ValidationError("intent batch size must be >= 1");
  if (lr_gen < 0.0 || !(lr_clf > 0.0)) throw ValidationError("intent learning rates invalid");
  if (task_weight < 0.0 || gan_weight < 0.0) throw ValidationError("loss weights must be >= 0");
  if (!(tau > 0.0 && tau < 1.0)) throw ValidationError("tau must lie in (0, 1)");
  weights.validate();
}

nlohmann::json IntentHistory::to_json() const {
  nlohmann::json epochs = nlohmann::json::array();
  for (std::size_t e = 0; e < task_loss.size(); ++e)
    epochs.push_back({{"epoch", e + 1}, {"task_loss", task_loss[e]}, {"task_f1", task_f1[e]}});
  return epochs;
}

namespace {

std::vector<const TextEmbedding*> generator_inputs(const TaskData& data) {
  std::vector<const TextEmbedding*> out;
  for (const TaskExample& ex : data.examples) {
    if (ex.pair_text)
      throw ValidationError("intent finetuning does not support pair inputs ('" +
                            ex.sentence_id + "')");
    out.push_back(&embeddings::lookup(data.embeddings, ex.sentence_id));
  }
  return out;
}

double intent_f1(Generator& gen, Classifier& clf, const TaskData& data,
                 const std::vector<const TextEmbedding*>& embs, std::uint64_t seed, double tau) {
  const GeneratorConfig& gc = gen.config();
  std::vector<TextEmbedding> e;
  std::vector<ScanInput> s;
  std::vector<int> y;
  for (std::size_t i = 0; i < embs.size(); ++i) {
    const GeneratorOutput o = gen.forward(*embs[i], sample_noise(derive_seed(seed, i), gc.max_len, gc.noise_dim));
    e.push_back(*embs[i]);
    s.push_back({o.steps, eos_length(o.steps, tau)});
    y.push_back(data.examples[i].label);
  }
  return metrics::weighted_f1(y, predict(clf, e, s));
}

}  // namespace

IntentHistory intent_finetune(Generator& gen, Classifier& clf, Discriminator* disc,
                              const TaskData& data, const IntentConfig& cfg,
                              std::uint64_t seed) {
  cfg.validate();
  const std::vector<const TextEmbedding*> all_embs = generator_inputs(data);
  if (all_embs.empty()) throw ValidationError("task has no examples");
  const GeneratorConfig& gc = gen.config();
  if (clf.config().max_len != gc.max_len || clf.config().emb_dim != gc.emb_dim)
    throw ShapeError("classifier and generator disagree on embedding shape");
  const nn::ParameterRefs gparams = gen.parameters();
  const nn::ParameterRefs cparams = clf.parameters();
  nn::ParameterRefs dparams;
  if (disc != nullptr) dparams = disc->parameters();
  nn::Adam gopt(gparams, {.lr = cfg.lr_gen});
  nn::Adam copt(cparams, {.lr = cfg.lr_clf});
  Rng rng = make_rng(seed);
  const std::size_t T = gc.max_len;

  IntentHistory hist;
  std::vector<std::size_t> order = iota(all_embs.size());
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    fisher_yates(order, rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - start);
      std::vector<const TextEmbedding*> embs(n);
      std::vector<NoiseBlock> noise;
      std::vector<double> y(n);
      Matrix cls(n, gc.emb_dim);
      std::vector<std::size_t> real_rows;
      std::vector<const NormalizedScanpath*> targets;
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = order[start + k];
        const TaskExample& ex = data.examples[i];
        embs[k] = all_embs[i];
        noise.push_back(sample_noise(rng(), T, gc.noise_dim));
        y[k] = ex.label;
        std::copy_n(embs[k]->cls.data(), gc.emb_dim, cls.data() + k * gc.emb_dim);
        if (cfg.gan_weight > 0.0 && data.has_real(ex.sentence_id)) {
          targets.push_back(&data.real_scanpath(ex.sentence_id));
          for (std::size_t t = 0; t < T; ++t) real_rows.push_back(k * T + t);
        }
      }
      nn::zero_grads(gparams);
      nn::zero_grads(cparams);
      nn::zero_grads(dparams);
      ad::Tape tape;
      GeneratorBatch gb = gen.forward(tape, embs, noise);
      std::vector<std::size_t> lengths(n);
      for (std::size_t k = 0; k < n; ++k) lengths[k] = eos_length(gb.steps.value(), cfg.tau, k * T, T);
      ad::Var prob = clf.forward(tape, embs, gb.steps, lengths, true, &rng);
      ad::Var task = losses::binary_cross_entropy(prob, y);
      ad::Var total = ad::scale(task, cfg.task_weight);
      if (cfg.gan_weight > 0.0) {
        ad::Var eq6 = losses::text_content_loss(gb.cls, cls);
        if (!targets.empty())
          eq6 = ad::add(eq6, losses::scanpath_content_loss(ad::gather_rows(gb.steps, real_rows),
                                                           targets, cfg.weights));
        if (disc != nullptr)
          eq6 = ad::add(eq6, losses::generator_adversarial_term(
                                 disc->forward(tape, embs, gb.steps, lengths, false, nullptr)));
        total = ad::add(total, ad::scale(eq6, cfg.gan_weight));
      }
      const double tl = task.value()(0, 0);
      if (!std::isfinite(total.value()(0, 0)))
        throw DivergenceError("intent finetuning loss became non-finite at epoch " +
                              std::to_string(epoch) + " (task loss " + std::to_string(tl) + ")");
      tape.backward(total);
      copt.step();
      gopt.step();
      loss_sum += tl * static_cast<double>(n);
    }
    hist.task_loss.push_back(loss_sum / static_cast<double>(order.size()));
    hist.task_f1.push_back(intent_f1(gen, clf, data, all_embs, derive_seed(seed, 31), cfg.tau));
  }
  return hist;
}

double mean_duration_on_words(Generator& gen, const TaskData& data,
                              const std::set<std::string>& words, std::uint64_t seed,
                              double tau) {
  const GeneratorConfig& gc = gen.config();
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    const TaskExample& ex = data.examples[i];
    const std::vector<std::string> toks = corpus::tokenize(ex.text);
    const GeneratorOutput o = gen.forward(embeddings::lookup(data.embeddings, ex.sentence_id),
                                          sample_noise(derive_seed(seed, i), gc.max_len, gc.noise_dim));
    const std::size_t len = eos_length(o.steps, tau);
    const double w = static_cast<double>(toks.size());
    for (std::size_t k = 0; k < len; ++k) {
      const auto idx = static_cast<std::size_t>(std::clamp(std::round(o.steps(k, 0) * w), 0.0, w - 1.0));
      if (!words.contains(toks[idx])) continue;
      sum += std::clamp(o.steps(k, 1), 0.0, 1.0);
      ++count;
    }
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

std::vector<NormalizedScanpath> export_features(Generator& gen, const TaskData& data,
                                                std::size_t n_noise, std::uint64_t seed,
                                                double tau, double p99_duration_ms) {
  if (n_noise == 0) throw ValidationError("noise samples must be >= 1");
  const GeneratorConfig& gc = gen.config();
  std::vector<std::pair<std::string, std::string>> inputs;  // id, text
  for (const TaskExample& ex : data.examples) {
    inputs.emplace_back(ex.sentence_id, ex.text);
    if (ex.pair_text) inputs.emplace_back(ex.sentence_id + kPairSuffix, *ex.pair_text);
  }
  std::vector<NormalizedScanpath> out;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto& [id, text] = inputs[i];
    const TextEmbedding& emb = embeddings::lookup(data.embeddings, id);
    const NormMeta meta{p99_duration_ms, corpus::tokenize(text).size()};
    for (std::size_t k = 0; k < n_noise; ++k) {
      const GeneratorOutput o =
          gen.forward(emb, sample_noise(derive_seed(derive_seed(seed, i), k), gc.max_len, gc.noise_dim));
      NormalizedScanpath ns = truncate_normalized(o, meta, tau);
      ns.participant_id = "generated-" + std::to_string(k);
      ns.sentence_id = id;
      out.push_back(std::move(ns));
    }
  }
  return out;
}

void save_classifier(const std::filesystem::path& path, Classifier& clf) {
  nn::Checkpoint ck;
  ck.meta = clf.config().to_meta("clf.");
  ck.meta["kind"] = "classifier";
  nn::store_parameters(ck, clf.parameters());
  nn::write_checkpoint(path, ck);
}

Classifier load_classifier(const std::filesystem::path& path) {
  const nn::Checkpoint ck = nn::read_checkpoint(path);
  Classifier clf(ClassifierConfig::from_meta(ck.meta, "clf."), 0);
  nn::load_parameters(ck, clf.parameters());
  return clf;
}

}  // namespace downstream
}  // namespace scanpath
