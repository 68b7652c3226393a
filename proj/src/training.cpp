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

#include "scanpath/training.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "scanpath/autograd/ops.hpp"
#include "scanpath/core/error.hpp"
#include "scanpath/core/parallel.hpp"
#include "scanpath/nn/optim.hpp"

namespace scanpath {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end)
    throw ValidationError("config: bad value '" + v + "' for " + key);
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw ValidationError("config: bad boolean '" + v + "' for " + key);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size == 0) throw ValidationError("batch_size must be >= 1");
  if (!(gen_lr > 0.0) || !(disc_lr > 0.0)) throw ValidationError("learning rates must be > 0");
  if (gen_optimizer != "adam") throw ValidationError("gen_optimizer must be adam");
  if (disc_optimizer != "rmsprop") throw ValidationError("disc_optimizer must be rmsprop");
  if (!(tau > 0.0 && tau < 1.0)) throw ValidationError("tau must lie in (0, 1)");
  if (threads == 0) throw ValidationError("threads must be >= 1");
  weights.validate();
  gen.validate();
  disc.validate();
  if (gen.emb_dim != disc.emb_dim || gen.max_len != disc.max_len)
    throw ValidationError("generator and discriminator disagree on embedding shape");
}

bool TrainConfig::set(const std::string& key, const std::string& v) {
  using S = std::size_t;
  if (key == "batch_size") batch_size = parse_number<S>(key, v);
  else if (key == "gen_lr") gen_lr = parse_number<double>(key, v);
  else if (key == "disc_lr") disc_lr = parse_number<double>(key, v);
  else if (key == "epochs") epochs = parse_number<S>(key, v);
  else if (key == "gen_optimizer") gen_optimizer = v;
  else if (key == "disc_optimizer") disc_optimizer = v;
  else if (key == "alpha") weights.alpha = parse_number<double>(key, v);
  else if (key == "beta") weights.beta = parse_number<double>(key, v);
  else if (key == "gamma") weights.gamma = parse_number<double>(key, v);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, v);
  else if (key == "checkpoint_every") checkpoint_every = parse_number<S>(key, v);
  else if (key == "eval_noise_samples") eval_noise_samples = parse_number<S>(key, v);
  else if (key == "tau") tau = parse_number<double>(key, v);
  else if (key == "threads") threads = parse_number<S>(key, v);
  else if (key == "emb_dim") gen.emb_dim = disc.emb_dim = parse_number<S>(key, v);
  else if (key == "gen_noise_dim") gen.noise_dim = parse_number<S>(key, v);
  else if (key == "gen_layers") gen.layers = parse_number<S>(key, v);
  else if (key == "gen_heads") gen.heads = parse_number<S>(key, v);
  else if (key == "gen_ff_dim") gen.ff_dim = parse_number<S>(key, v);
  else if (key == "gen_head_hidden") gen.head_hidden = parse_number<S>(key, v);
  else if (key == "gen_mask_padded_tokens") gen.mask_padded_tokens = parse_bool(key, v);
  else if (key == "disc_hidden") disc.hidden = parse_number<S>(key, v);
  else if (key == "disc_dropout") disc.dropout = parse_number<double>(key, v);
  else if (key == "disc_fusion_heads") disc.fusion_heads = parse_number<S>(key, v);
  else if (key == "disc_ff_hidden") disc.ff_hidden = parse_number<S>(key, v);
  else return false;
  return true;
}

TrainConfig TrainConfig::parse(std::istream& in) {
  TrainConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", lineno);
    const std::string key = trim(line.substr(0, eq));
    if (!cfg.set(key, trim(line.substr(eq + 1))))
      throw ParseError("unknown config key '" + key + "'", lineno);
  }
  cfg.validate();
  return cfg;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  return parse(in);
}

std::string TrainConfig::to_text() const {
  std::ostringstream os;
  os << "batch_size=" << batch_size << "\ngen_lr=" << fmt(gen_lr) << "\ndisc_lr="
     << fmt(disc_lr) << "\nepochs=" << epochs << "\ngen_optimizer=" << gen_optimizer
     << "\ndisc_optimizer=" << disc_optimizer << "\nalpha=" << fmt(weights.alpha)
     << "\nbeta=" << fmt(weights.beta) << "\ngamma=" << fmt(weights.gamma) << "\nseed=" << seed
     << "\ncheckpoint_every=" << checkpoint_every
     << "\neval_noise_samples=" << eval_noise_samples << "\ntau=" << fmt(tau)
     << "\nthreads=" << threads << "\nemb_dim=" << gen.emb_dim
     << "\ngen_noise_dim=" << gen.noise_dim << "\ngen_layers=" << gen.layers
     << "\ngen_heads=" << gen.heads << "\ngen_ff_dim=" << gen.ff_dim
     << "\ngen_head_hidden=" << gen.head_hidden
     << "\ngen_mask_padded_tokens=" << (gen.mask_padded_tokens ? 1 : 0)
     << "\ndisc_hidden=" << disc.hidden << "\ndisc_dropout=" << fmt(disc.dropout)
     << "\ndisc_fusion_heads=" << disc.fusion_heads << "\ndisc_ff_hidden=" << disc.ff_hidden
     << "\n";
  return os.str();
}

nlohmann::json EpochRecord::to_json() const {
  nlohmann::json j = {{"epoch", epoch}, {"Lg", lg},       {"Ls", ls},
                      {"Lr", lr},       {"gen_term", gen_term}, {"disc_loss", disc_loss}};
  j["val"] = val ? val->to_json() : nlohmann::json(nullptr);
  return j;
}

EpochRecord EpochRecord::from_json(const nlohmann::json& j) {
  EpochRecord r;
  r.epoch = j.at("epoch").get<std::size_t>();
  r.lg = j.at("Lg").get<double>();
  r.ls = j.at("Ls").get<double>();
  r.lr = j.at("Lr").get<double>();
  r.gen_term = j.at("gen_term").get<double>();
  r.disc_loss = j.at("disc_loss").get<double>();
  if (j.contains("val") && !j["val"].is_null()) r.val = MetricReport::from_json(j["val"]);
  return r;
}

std::string RunHistory::to_jsonl() const {
  std::string out;
  for (const EpochRecord& r : epochs) out += r.to_json().dump() + "\n";
  return out;
}

RunHistory RunHistory::from_jsonl(const std::string& text) {
  RunHistory h;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!trim(line).empty()) h.epochs.push_back(EpochRecord::from_json(nlohmann::json::parse(line)));
  return h;
}

namespace training {

std::uint64_t eval_noise_seed(std::uint64_t seed, std::size_t item, std::size_t k) {
  return derive_seed(derive_seed(seed, item), k);
}

MetricReport evaluate(const GenerateFn& generate, std::span<const NormalizedScanpath> part,
                      const EmbeddingMap& embs, std::size_t n_noise, std::uint64_t seed,
                      double tau, std::size_t threads) {
  if (part.empty()) throw ValidationError("evaluation split is empty");
  if (n_noise == 0) throw ValidationError("noise samples must be >= 1");
  for (const NormalizedScanpath& ns : part) embeddings::lookup(embs, ns.sentence_id);
  auto per_item = parallel_map(part.size(), threads, [&](std::size_t j) {
    const NormalizedScanpath& real = part[j];
    const TextEmbedding& emb = embs.at(real.sentence_id);
    const Scanpath truth = corpus::denormalize(real);
    metrics::ReportAccumulator acc;
    for (std::size_t k = 0; k < n_noise; ++k) {
      const GeneratorOutput out = generate(emb, eval_noise_seed(seed, j, k));
      const Scanpath g = truncate_at_eos(out, real.meta, tau, "generated", real.sentence_id);
      metrics::score_pair(acc, g, truth, real.meta);
    }
    return acc;
  });
  metrics::ReportAccumulator total;
  for (const auto& acc : per_item) total.merge(acc);
  return total.finish();
}

MetricReport evaluate_checkpoint(Generator& gen, std::span<const NormalizedScanpath> part,
                                 const EmbeddingMap& embs, std::size_t n_noise,
                                 std::uint64_t seed, double tau, std::size_t threads) {
  const GeneratorConfig& c = gen.config();
  GenerateFn fn = [&gen, &c](const TextEmbedding& e, std::uint64_t s) {
    return gen.forward(e, sample_noise(s, c.max_len, c.noise_dim));
  };
  return evaluate(fn, part, embs, n_noise, seed, tau, threads);
}

namespace {

constexpr const char* kKindTrain = "train-state";
constexpr const char* kKindGenerator = "generator";

void fisher_yates(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(v[i - 1], v[std::min(j, i - 1)]);
  }
}

void append_tensors(nn::Checkpoint& ckpt, std::vector<nn::NamedTensor> tensors) {
  for (auto& t : tensors) ckpt.tensors.push_back(std::move(t));
}

void require_finite(double v, const char* what, std::size_t epoch, std::size_t batch,
                    const std::vector<std::string>& sentences,
                    const std::optional<std::filesystem::path>& out_dir) {
  if (std::isfinite(v)) return;
  nlohmann::json diag = {{"error", std::string("non-finite ") + what},
                         {"epoch", epoch},
                         {"batch", batch},
                         {"value", std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf")},
                         {"sentence_ids", sentences}};
  std::string where;
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    const auto path = *out_dir / "diagnostics.json";
    std::ofstream(path) << diag.dump(2) << "\n";
    where = " (diagnostics in " + path.string() + ")";
  }
  throw DivergenceError(std::string("non-finite ") + what + " at epoch " +
                        std::to_string(epoch) + ", batch " + std::to_string(batch) + where);
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const Partition<NormalizedScanpath>& split,
                  const EmbeddingMap& embs, const TrainOptions& opts) {
  cfg.validate();
  if (split.train.empty()) throw ValidationError("training split is empty");
  for (const auto* part : {&split.train, &split.val}) {
    for (const NormalizedScanpath& ns : *part) {
      const TextEmbedding& e = embeddings::lookup(embs, ns.sentence_id);
      if (e.tokens.rows() != cfg.gen.max_len || e.tokens.cols() != cfg.gen.emb_dim)
        throw ShapeError("embedding for '" + ns.sentence_id + "' does not match emb_dim " +
                         std::to_string(cfg.gen.emb_dim));
      if (ns.steps.rows() != cfg.gen.max_len)
        throw ShapeError("scanpath horizon does not match the generator");
    }
  }
  const double p99 = split.train.front().meta.p99_duration_ms;
  const std::size_t T = cfg.gen.max_len;

  TrainResult res{Generator(cfg.gen, derive_seed(cfg.seed, 2)),
                  Discriminator(cfg.disc, derive_seed(cfg.seed, 3)), {}, p99};
  Generator& gen = res.gen;
  Discriminator& disc = res.disc;
  const nn::ParameterRefs gparams = gen.parameters();
  const nn::ParameterRefs dparams = disc.parameters();
  nn::Adam gopt(gparams, {.lr = cfg.gen_lr});
  nn::RmsProp dopt(dparams, {.lr = cfg.disc_lr});
  Rng rng = make_rng(derive_seed(cfg.seed, 1));
  double best_nld = std::numeric_limits<double>::infinity();
  std::size_t start_epoch = 0;

  auto make_checkpoint = [&](std::size_t epoch) {
    nn::Checkpoint ck;
    ck.meta = cfg.gen.to_meta("gen.");
    ck.meta.merge(cfg.disc.to_meta("disc."));
    ck.meta["kind"] = kKindTrain;
    ck.meta["epoch"] = std::to_string(epoch);
    ck.meta["p99_duration_ms"] = fmt(p99);
    ck.meta["rng"] = rng_state(rng);
    ck.meta["best_nld"] = fmt(best_nld);
    ck.meta["config"] = cfg.to_text();
    ck.meta["history"] = res.history.to_jsonl();
    nn::store_parameters(ck, gparams);
    nn::store_parameters(ck, dparams);
    append_tensors(ck, gopt.state("opt.gen"));
    append_tensors(ck, dopt.state("opt.disc"));
    return ck;
  };

  if (opts.resume_from) {
    const nn::Checkpoint ck = nn::read_checkpoint(*opts.resume_from);
    auto kind = ck.meta.find("kind");
    if (kind == ck.meta.end() || kind->second != kKindTrain)
      throw FormatError(opts.resume_from->string() + " is not a training-state checkpoint");
    nn::load_parameters(ck, gparams);
    nn::load_parameters(ck, dparams);
    gopt.load_state("opt.gen", ck.tensors);
    dopt.load_state("opt.disc", ck.tensors);
    restore_rng_state(rng, ck.meta.at("rng"));
    start_epoch = std::stoull(ck.meta.at("epoch"));
    best_nld = std::stod(ck.meta.at("best_nld"));
    res.history = RunHistory::from_jsonl(ck.meta.at("history"));
  }

  // Sentence groups in order of first appearance; shuffled per epoch.
  std::vector<std::vector<std::size_t>> groups;
  {
    std::unordered_map<std::string, std::size_t> group_of;
    for (std::size_t i = 0; i < split.train.size(); ++i) {
      auto [it, fresh] = group_of.try_emplace(split.train[i].sentence_id, groups.size());
      if (fresh) groups.emplace_back();
      groups[it->second].push_back(i);
    }
  }

  if (opts.out_dir) std::filesystem::create_directories(*opts.out_dir);
  const std::size_t last_epoch = std::min(cfg.epochs, opts.stop_after.value_or(cfg.epochs));

  for (std::size_t epoch = start_epoch + 1; epoch <= last_epoch; ++epoch) {
    std::vector<std::size_t> order(groups.size());
    for (std::size_t g = 0; g < order.size(); ++g) order[g] = g;
    fisher_yates(order, rng);
    std::vector<std::size_t> flat;
    flat.reserve(split.train.size());
    for (std::size_t g : order) flat.insert(flat.end(), groups[g].begin(), groups[g].end());

    double sum_lg = 0, sum_ls = 0, sum_lr = 0, sum_gt = 0, sum_dl = 0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < flat.size(); start += cfg.batch_size, ++batch_no) {
      const std::size_t n = std::min(cfg.batch_size, flat.size() - start);
      std::vector<const NormalizedScanpath*> targets(n);
      std::vector<const TextEmbedding*> batch_embs(n);
      std::vector<NoiseBlock> noise;
      std::vector<std::string> ids(n);
      noise.reserve(n);
      Matrix real_steps(n * T, 3);
      Matrix real_cls(n, cfg.gen.emb_dim);
      std::vector<std::size_t> real_len(n);
      for (std::size_t b = 0; b < n; ++b) {
        const NormalizedScanpath& ns = split.train[flat[start + b]];
        targets[b] = &ns;
        ids[b] = ns.sentence_id;
        batch_embs[b] = &embs.at(ns.sentence_id);
        noise.push_back(sample_noise(rng(), T, cfg.gen.noise_dim));
        std::copy_n(ns.steps.data(), T * 3, real_steps.data() + b * T * 3);
        std::copy_n(batch_embs[b]->cls.data(), cfg.gen.emb_dim, real_cls.data() + b * cfg.gen.emb_dim);
        real_len[b] = ns.true_length;
      }
      auto lengths_of = [&](const Matrix& steps) {
        std::vector<std::size_t> len(n);
        for (std::size_t b = 0; b < n; ++b) len[b] = eos_length(steps, cfg.tau, b * T, T);
        return len;
      };

      // Discriminator update on detached generator samples.
      double d_loss;
      {
        ad::Tape frozen(false);
        const Matrix fake = gen.forward(frozen, batch_embs, noise).steps.value();
        nn::zero_grads(dparams);
        ad::Tape tape;
        ad::Var d_real = disc.forward(tape, batch_embs, tape.constant(real_steps), real_len,
                                      true, &rng);
        ad::Var d_fake = disc.forward(tape, batch_embs, tape.constant(fake), lengths_of(fake),
                                      true, &rng);
        ad::Var loss = losses::discriminator_loss(d_real, d_fake);
        d_loss = loss.value()(0, 0);
        require_finite(d_loss, "discriminator loss", epoch, batch_no, ids, opts.out_dir);
        tape.backward(loss);
        dopt.step();
      }

      // Generator update through the (just updated) discriminator.
      double lg, ls, lr, gt;
      {
        nn::zero_grads(gparams);
        nn::zero_grads(dparams);
        ad::Tape tape;
        GeneratorBatch gb = gen.forward(tape, batch_embs, noise);
        ad::Var l_s = losses::scanpath_content_loss(gb.steps, targets, cfg.weights);
        ad::Var l_r = losses::text_content_loss(gb.cls, real_cls);
        ad::Var d_fake = disc.forward(tape, batch_embs, gb.steps, lengths_of(gb.steps.value()),
                                      true, &rng);
        ad::Var g_t = losses::generator_adversarial_term(d_fake);
        ad::Var total = ad::add(ad::add(l_s, l_r), g_t);
        lg = total.value()(0, 0);
        ls = l_s.value()(0, 0);
        lr = l_r.value()(0, 0);
        gt = g_t.value()(0, 0);
        require_finite(lg, "generator loss", epoch, batch_no, ids, opts.out_dir);
        tape.backward(total);
        gopt.step();
      }
      const auto w = static_cast<double>(n);
      sum_lg += lg * w;
      sum_ls += ls * w;
      sum_lr += lr * w;
      sum_gt += gt * w;
      sum_dl += d_loss * w;
    }

    const auto total = static_cast<double>(flat.size());
    EpochRecord rec{epoch, sum_lg / total, sum_ls / total, sum_lr / total, sum_gt / total,
                    sum_dl / total, std::nullopt};
    if (cfg.eval_noise_samples > 0 && !split.val.empty())
      rec.val = evaluate_checkpoint(gen, split.val, embs, cfg.eval_noise_samples,
                                    derive_seed(cfg.seed, 4), cfg.tau, cfg.threads);
    res.history.epochs.push_back(rec);
    if (opts.on_epoch) opts.on_epoch(rec);

    if (opts.out_dir) {
      write_text_file(*opts.out_dir / "history.jsonl", res.history.to_jsonl());
      if (rec.val && rec.val->nld < best_nld) {
        best_nld = rec.val->nld;
        nn::write_checkpoint(*opts.out_dir / "best.bin", make_checkpoint(epoch));
      }
      if (cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0) {
        char name[32];
        std::snprintf(name, sizeof(name), "ckpt_epoch_%04zu.bin", epoch);
        nn::write_checkpoint(*opts.out_dir / name, make_checkpoint(epoch));
      }
      if (epoch == last_epoch) nn::write_checkpoint(*opts.out_dir / "last.bin", make_checkpoint(epoch));
    } else if (rec.val && rec.val->nld < best_nld) {
      best_nld = rec.val->nld;
    }
  }
  return res;
}

void save_generator(const std::filesystem::path& path, Generator& gen, double p99_duration_ms) {
  nn::Checkpoint ck;
  ck.meta = gen.config().to_meta("gen.");
  ck.meta["kind"] = kKindGenerator;
  ck.meta["p99_duration_ms"] = fmt(p99_duration_ms);
  nn::store_parameters(ck, gen.parameters());
  nn::write_checkpoint(path, ck);
}

LoadedGenerator load_generator(const std::filesystem::path& path) {
  const nn::Checkpoint ck = nn::read_checkpoint(path);
  LoadedGenerator out{Generator(GeneratorConfig::from_meta(ck.meta, "gen."), 0), 0.0};
  nn::load_parameters(ck, out.gen.parameters());
  auto it = ck.meta.find("p99_duration_ms");
  if (it == ck.meta.end()) throw FormatError(path.string() + " lacks p99_duration_ms");
  out.p99_duration_ms = std::stod(it->second);
  return out;
}

Discriminator load_discriminator(const std::filesystem::path& path) {
  const nn::Checkpoint ck = nn::read_checkpoint(path);
  Discriminator disc(DiscriminatorConfig::from_meta(ck.meta, "disc."), 0);
  nn::load_parameters(ck, disc.parameters());
  return disc;
}

}  // namespace training
}  // namespace scanpath
