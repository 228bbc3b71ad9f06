// src/trainer.cpp
//
// Copyright 2026  The mladv authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "mladv/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "mladv/binio.hpp"
#include "json_util.hpp"

namespace mladv {
namespace {

using jsonutil::json;

constexpr char kCheckpointMagic[8] = {'M', 'L', 'A', 'D', 'V', '1', '\0', '\0'};
constexpr std::uint32_t kCheckpointVersion = 1;

// Distinct stream for batch shuffling so that model initialization and data
// order can be varied independently of each other.
constexpr std::uint64_t kShuffleSeedSalt = 0x9e3779b97f4a7c15ull;

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::vector<std::vector<const Utterance*>> group_by_language(
    const std::vector<Utterance>& utts, std::size_t num_languages) {
  std::vector<std::vector<const Utterance*>> groups(num_languages);
  for (const Utterance& u : utts) {
    if (u.lang >= num_languages) {
      throw RoutingError("evaluation set contains language " +
                         std::to_string(u.lang) + " outside the model's " +
                         std::to_string(num_languages) + " languages");
    }
    groups[u.lang].push_back(&u);
  }
  return groups;
}

struct LossAccumulator {
  double am_sum = 0.0;
  double lid_sum = 0.0;
  std::size_t steps = 0;
  std::size_t lid_steps = 0;

  void add(const ForwardResult& fwd) {
    am_sum += fwd.loss_am;
    ++steps;
    if (fwd.loss_lid) {
      lid_sum += *fwd.loss_lid;
      ++lid_steps;
    }
  }

  double mean_am() const { return steps ? am_sum / steps : 0.0; }
  std::optional<double> mean_lid() const {
    if (lid_steps == 0) return std::nullopt;
    return lid_sum / lid_steps;
  }
  void reset() { *this = LossAccumulator{}; }
};

// Core loop shared by train() and fine_tune(). `train_utts` and `dev_utts`
// must already be routed to the model's language ids.
TrainResult run_training(MultilingualModel model,
                         const std::vector<Utterance>& train_utts,
                         const std::vector<Utterance>& dev_utts,
                         const TrainConfig& cfg) {
  TrainResult result;
  if (cfg.max_steps == 0) {
    result.model = std::move(model);
    return result;
  }
  if (train_utts.empty()) {
    throw ConfigError("train: no training utterances");
  }

  Rng shuffle_rng(cfg.seed ^ kShuffleSeedSalt);
  std::vector<std::size_t> order(train_utts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  shuffle_rng.shuffle(order);
  std::size_t cursor = 0;

  MultilingualModel best;
  bool have_best = false;
  LossAccumulator window;
  TrainHistory history;

  for (std::size_t step = 1; step <= cfg.max_steps; ++step) {
    Batch batch;
    for (std::size_t i = 0; i < cfg.batch_size; ++i) {
      if (cursor == order.size()) {
        shuffle_rng.shuffle(order);
        cursor = 0;
        if (i > 0) break;  // batches do not straddle epoch boundaries
      }
      batch.push_back(&train_utts[order[cursor++]]);
    }

    ForwardResult fwd = forward_batch(model, batch);
    if (!std::isfinite(fwd.loss_total)) {
      throw TrainError("training diverged at step " + std::to_string(step));
    }
    window.add(fwd);
    Gradients grads = backward_batch(model, fwd);
    sgd_update(model, grads, cfg.alpha, cfg.freeze_shared);

    if (step % cfg.eval_every == 0) {
      Metrics m = evaluate_dev(model, dev_utts);
      EvalRecord rec;
      rec.step = step;
      rec.per_language_acc = m.per_language_acc;
      rec.uniform_average = m.uniform_average;
      rec.loss_am = window.mean_am();
      rec.loss_lid = window.mean_lid();
      window.reset();
      history.records.push_back(std::move(rec));
      if (!have_best || m.uniform_average > history.best_accuracy) {
        history.best_accuracy = m.uniform_average;
        history.best_step = step;
        best = model;
        have_best = true;
      }
    }
  }

  result.model = have_best ? std::move(best) : std::move(model);
  result.history = std::move(history);
  return result;
}

std::vector<Utterance> filter_language(const std::vector<Utterance>& utts,
                                       std::uint32_t lang) {
  std::vector<Utterance> out;
  for (const Utterance& u : utts) {
    if (u.lang == lang) {
      out.push_back(u);
      out.back().lang = 0;
    }
  }
  return out;
}

std::size_t language_index(const Corpus& corpus, const std::string& name) {
  for (std::size_t l = 0; l < corpus.manifest.languages.size(); ++l) {
    if (corpus.manifest.languages[l].name == name) return l;
  }
  throw ConfigError("unknown language '" + name + "' in corpus");
}

}  // namespace

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::kMono:
      return "mono";
    case TrainMode::kMulti:
      return "multi";
    case TrainMode::kAdversarial:
      return "adv";
  }
  return "?";
}

TrainMode train_mode_from_string(const std::string& s) {
  if (s == "mono") return TrainMode::kMono;
  if (s == "multi") return TrainMode::kMulti;
  if (s == "adv" || s == "adversarial") return TrainMode::kAdversarial;
  throw ConfigError("unknown training mode '" + s + "'");
}

void TrainConfig::validate() const {
  if (!(alpha > 0.0)) throw ConfigError("train: alpha must be positive");
  if (batch_size == 0) throw ConfigError("train: batch_size must be >= 1");
  if (lambda < 0.0) throw ConfigError("train: lambda must be nonnegative");
  if (max_steps > 0) {
    if (eval_every == 0 || eval_every > max_steps) {
      throw ConfigError("train: eval_every must be in [1, max_steps]");
    }
  }
  if (mode == TrainMode::kMono && target_language.empty()) {
    throw ConfigError("train: mono mode requires a target language");
  }
}

Metrics evaluate_dev(const MultilingualModel& model,
                     const std::vector<Utterance>& dev_set) {
  const std::size_t num_languages = model.config.num_languages;
  auto groups = group_by_language(dev_set, num_languages);
  Metrics m;
  double sum = 0.0;
  for (std::size_t l = 0; l < num_languages; ++l) {
    if (groups[l].empty()) {
      throw EvalError("evaluate_dev: no utterances for language '" +
                      model.language_names[l] + "'");
    }
    const double acc = frame_accuracy(model, groups[l], l);
    m.per_language_acc.push_back(acc);
    sum += acc;
  }
  m.uniform_average = sum / static_cast<double>(num_languages);
  return m;
}

TrainResult train(const ModelConfig& base, const Corpus& corpus,
                  const TrainConfig& cfg) {
  cfg.validate();
  const Manifest& manifest = corpus.manifest;

  ModelConfig mcfg = base;
  mcfg.feature_dim = manifest.feature_dim;

  if (cfg.mode == TrainMode::kMono) {
    const std::size_t lang = language_index(corpus, cfg.target_language);
    mcfg.num_languages = 1;
    mcfg.states_per_language = {manifest.languages[lang].num_states};
    mcfg.lid_head = false;
    mcfg.lambda = 0.0;
    MultilingualModel model =
        build_model(mcfg, cfg.seed, {manifest.languages[lang].name});
    auto train_utts = filter_language(corpus.train,
                                      static_cast<std::uint32_t>(lang));
    auto dev_utts = filter_language(corpus.dev,
                                    static_cast<std::uint32_t>(lang));
    if (train_utts.empty()) {
      throw ConfigError("train: language '" + cfg.target_language +
                        "' has no training utterances");
    }
    return run_training(std::move(model), train_utts, dev_utts, cfg);
  }

  mcfg.num_languages = manifest.languages.size();
  mcfg.states_per_language.clear();
  std::vector<std::string> names;
  for (const LanguageInfo& info : manifest.languages) {
    mcfg.states_per_language.push_back(info.num_states);
    names.push_back(info.name);
  }
  mcfg.lid_head = cfg.mode == TrainMode::kAdversarial;
  mcfg.lambda = cfg.mode == TrainMode::kAdversarial ? cfg.lambda : 0.0;
  MultilingualModel model = build_model(mcfg, cfg.seed, std::move(names));
  return run_training(std::move(model), corpus.train, corpus.dev, cfg);
}

TrainResult fine_tune(const MultilingualModel& base_model, std::size_t lang,
                      const Corpus& corpus, const TrainConfig& cfg) {
  if (lang >= base_model.config.num_languages) {
    throw ConfigError("fine_tune: language index " + std::to_string(lang) +
                      " out of range");
  }
  TrainConfig mono_cfg = cfg;
  mono_cfg.mode = TrainMode::kMono;
  mono_cfg.target_language = base_model.language_names[lang];
  mono_cfg.lambda = 0.0;
  mono_cfg.validate();

  // Monolingual sub-model: shared layers plus this language's AM branch; the
  // adversary is not carried over.
  ModelConfig mcfg = base_model.config;
  mcfg.num_languages = 1;
  mcfg.states_per_language = {base_model.config.states_per_language[lang]};
  mcfg.lid_head = false;
  mcfg.lambda = 0.0;
  MultilingualModel sub;
  sub.config = mcfg;
  sub.language_names = {base_model.language_names[lang]};
  sub.shared = base_model.shared;
  sub.am = {base_model.am[lang]};

  const std::size_t corpus_lang = language_index(corpus,
                                                 sub.language_names[0]);
  if (corpus.manifest.languages[corpus_lang].num_states !=
      mcfg.states_per_language[0]) {
    throw ConfigError("fine_tune: state count mismatch between model and "
                      "corpus for '" + sub.language_names[0] + "'");
  }
  auto train_utts = filter_language(corpus.train,
                                    static_cast<std::uint32_t>(corpus_lang));
  auto dev_utts = filter_language(corpus.dev,
                                  static_cast<std::uint32_t>(corpus_lang));
  return run_training(std::move(sub), train_utts, dev_utts, mono_cfg);
}

// ---- persistence -------------------------------------------------------------

namespace {

json history_to_json(const TrainHistory& history) {
  json j;
  j["best_step"] = history.best_step;
  j["best_accuracy"] = history.best_accuracy;
  json records = json::array();
  for (const EvalRecord& r : history.records) {
    json rj;
    rj["step"] = r.step;
    rj["per_language_acc"] = r.per_language_acc;
    rj["uniform_average"] = r.uniform_average;
    rj["loss_am"] = r.loss_am;
    if (r.loss_lid) {
      rj["loss_lid"] = *r.loss_lid;
    } else {
      rj["loss_lid"] = nullptr;
    }
    records.push_back(std::move(rj));
  }
  j["records"] = std::move(records);
  return j;
}

TrainHistory history_from_json(const json& j, const std::string& ctx) {
  jsonutil::check_object(j, ctx);
  jsonutil::reject_unknown_keys(j, {"best_step", "best_accuracy", "records"},
                                ctx);
  TrainHistory h;
  h.best_step = jsonutil::get_u64(j, "best_step", ctx);
  h.best_accuracy = jsonutil::get_double(j, "best_accuracy", ctx);
  for (const json& rj : jsonutil::require(j, "records", ctx)) {
    EvalRecord r;
    r.step = jsonutil::get_u64(rj, "step", ctx);
    r.uniform_average = jsonutil::get_double(rj, "uniform_average", ctx);
    r.loss_am = jsonutil::get_double(rj, "loss_am", ctx);
    const json& lid = jsonutil::require(rj, "loss_lid", ctx);
    if (!lid.is_null()) r.loss_lid = lid.get<double>();
    for (const json& a : jsonutil::require(rj, "per_language_acc", ctx)) {
      r.per_language_acc.push_back(a.get<double>());
    }
    h.records.push_back(std::move(r));
  }
  return h;
}

json train_cfg_to_json(const TrainConfig& cfg) {
  json j;
  j["mode"] = to_string(cfg.mode);
  j["alpha"] = cfg.alpha;
  j["batch_size"] = cfg.batch_size;
  j["max_steps"] = cfg.max_steps;
  j["eval_every"] = cfg.eval_every;
  j["lambda"] = cfg.lambda;
  j["seed"] = cfg.seed;
  j["target_language"] = cfg.target_language;
  j["freeze_shared"] = cfg.freeze_shared;
  return j;
}

TrainConfig train_cfg_from_json(const json& j, const std::string& ctx) {
  jsonutil::check_object(j, ctx);
  jsonutil::reject_unknown_keys(
      j, {"mode", "alpha", "batch_size", "max_steps", "eval_every", "lambda",
          "seed", "target_language", "freeze_shared"},
      ctx);
  TrainConfig cfg;
  cfg.mode = train_mode_from_string(jsonutil::get_string(j, "mode", ctx));
  cfg.alpha = jsonutil::get_double(j, "alpha", ctx);
  cfg.batch_size = jsonutil::get_u64(j, "batch_size", ctx);
  cfg.max_steps = jsonutil::get_u64(j, "max_steps", ctx);
  cfg.eval_every = jsonutil::get_u64(j, "eval_every", ctx);
  cfg.lambda = jsonutil::get_double(j, "lambda", ctx);
  cfg.seed = jsonutil::get_u64(j, "seed", ctx);
  cfg.target_language = jsonutil::get_string(j, "target_language", ctx);
  cfg.freeze_shared = jsonutil::require(j, "freeze_shared", ctx).get<bool>();
  return cfg;
}

json model_cfg_to_json(const ModelConfig& cfg) {
  json j;
  j["feature_dim"] = cfg.feature_dim;
  j["num_languages"] = cfg.num_languages;
  j["states_per_language"] = cfg.states_per_language;
  j["shared_layers"] = cfg.shared_layers;
  j["shared_hidden"] = cfg.shared_hidden;
  j["am_hidden"] = cfg.am_hidden;
  j["lid_hidden"] = cfg.lid_hidden;
  j["lambda"] = cfg.lambda;
  j["lid_head"] = cfg.lid_head;
  return j;
}

ModelConfig model_cfg_from_json(const json& j, const std::string& ctx) {
  jsonutil::check_object(j, ctx);
  jsonutil::reject_unknown_keys(
      j, {"feature_dim", "num_languages", "states_per_language",
          "shared_layers", "shared_hidden", "am_hidden", "lid_hidden",
          "lambda", "lid_head"},
      ctx);
  ModelConfig cfg;
  cfg.feature_dim = jsonutil::get_u64(j, "feature_dim", ctx);
  cfg.num_languages = jsonutil::get_u64(j, "num_languages", ctx);
  cfg.states_per_language.clear();
  for (const json& s : jsonutil::require(j, "states_per_language", ctx)) {
    cfg.states_per_language.push_back(s.get<std::size_t>());
  }
  cfg.shared_layers = jsonutil::get_u64(j, "shared_layers", ctx);
  cfg.shared_hidden = jsonutil::get_u64(j, "shared_hidden", ctx);
  cfg.am_hidden = jsonutil::get_u64(j, "am_hidden", ctx);
  cfg.lid_hidden = jsonutil::get_u64(j, "lid_hidden", ctx);
  cfg.lambda = jsonutil::get_double(j, "lambda", ctx);
  cfg.lid_head = jsonutil::require(j, "lid_head", ctx).get<bool>();
  cfg.validate();
  return cfg;
}

}  // namespace

void save_checkpoint(const MultilingualModel& model,
                     const TrainHistory& history, const std::string& path,
                     const TrainConfig* train_cfg) {
  json meta;
  meta["format_version"] = kCheckpointVersion;
  meta["model"] = model_cfg_to_json(model.config);
  meta["language_names"] = model.language_names;
  meta["history"] = history_to_json(history);
  if (train_cfg) meta["train"] = train_cfg_to_json(*train_cfg);
  const std::string meta_text = meta.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  binio::put_u32(os, kCheckpointVersion);
  binio::put_u32(os, static_cast<std::uint32_t>(meta_text.size()));
  os.write(meta_text.data(), static_cast<std::streamsize>(meta_text.size()));

  visit_params(model, [&os](const std::string& name, const Tensor& t) {
    binio::put_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    binio::put_u32(os, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) {
      binio::put_u32(os, static_cast<std::uint32_t>(d));
    }
    for (std::size_t i = 0; i < t.size(); ++i) binio::put_f64(os, t[i]);
  });
  if (!os) throw FormatError("write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open checkpoint " + path);
  binio::Reader r(is, path);
  char magic[8];
  r.read_bytes(magic, 8);
  if (std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw FormatError("bad checkpoint magic in " + path);
  }
  const std::uint32_t version = r.get_u32();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " +
                      std::to_string(version) + " in " + path);
  }
  const std::uint32_t meta_len = r.get_u32();
  std::string meta_text(meta_len, '\0');
  r.read_bytes(meta_text.data(), meta_len);
  json meta = json::parse(meta_text, nullptr, false);
  if (meta.is_discarded()) {
    throw FormatError("corrupt checkpoint metadata in " + path);
  }
  const std::string ctx = path + ": metadata";
  jsonutil::check_object(meta, ctx);
  jsonutil::reject_unknown_keys(
      meta, {"format_version", "model", "language_names", "history", "train"},
      ctx);

  Checkpoint ckpt;
  ModelConfig mcfg =
      model_cfg_from_json(jsonutil::require(meta, "model", ctx), ctx);
  std::vector<std::string> names;
  for (const json& n : jsonutil::require(meta, "language_names", ctx)) {
    names.push_back(n.get<std::string>());
  }
  ckpt.history = history_from_json(jsonutil::require(meta, "history", ctx),
                                   ctx);
  if (meta.contains("train")) {
    ckpt.train_cfg = train_cfg_from_json(meta.at("train"), ctx);
  }

  // Build the skeleton with zero parameters, then fill tensors by name.
  MultilingualModel model = build_model(mcfg, 0, std::move(names));
  std::map<std::string, Tensor*> slots;
  visit_params(model,
               [&slots](const std::string& name, Tensor& t) { slots[name] = &t; });

  std::size_t filled = 0;
  while (!r.at_eof()) {
    const std::uint32_t name_len = r.get_u32();
    std::string name(name_len, '\0');
    r.read_bytes(name.data(), name_len);
    const std::uint32_t rank = r.get_u32();
    std::vector<std::size_t> dims(rank);
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      dims[i] = r.get_u32();
      count *= dims[i];
    }
    auto it = slots.find(name);
    if (it == slots.end()) {
      throw FormatError("unexpected tensor '" + name + "' in " + path);
    }
    if (it->second->shape() != dims) {
      throw FormatError("tensor '" + name + "' has shape mismatch in " + path);
    }
    for (std::size_t i = 0; i < count; ++i) (*it->second)[i] = r.get_f64();
    ++filled;
  }
  if (filled != slots.size()) {
    throw FormatError("checkpoint " + path + " is missing tensors (" +
                      std::to_string(filled) + " of " +
                      std::to_string(slots.size()) + ")");
  }
  ckpt.model = std::move(model);
  return ckpt;
}

void write_metrics_csv(const TrainHistory& history,
                       const std::vector<std::string>& language_names,
                       const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  os << "step,lang,dev_frame_acc,loss_am,loss_lid\n";
  for (const EvalRecord& rec : history.records) {
    for (std::size_t l = 0; l < rec.per_language_acc.size(); ++l) {
      os << rec.step << "," << language_names.at(l) << ","
         << format_double(rec.per_language_acc[l]) << ","
         << format_double(rec.loss_am) << ",";
      if (rec.loss_lid) os << format_double(*rec.loss_lid);
      os << "\n";
    }
  }
  if (!os) throw FormatError("write failed for " + path);
}

ProjectedCorpus project_corpus(const Corpus& corpus,
                               const MultilingualModel& model) {
  std::vector<std::size_t> source(model.language_names.size());
  for (std::size_t l = 0; l < model.language_names.size(); ++l) {
    source[l] = language_index(corpus, model.language_names[l]);
    if (corpus.manifest.languages[source[l]].num_states !=
        model.config.states_per_language[l]) {
      throw ConfigError("state count mismatch between checkpoint and corpus "
                        "for language '" + model.language_names[l] + "'");
    }
  }
  if (corpus.manifest.feature_dim != model.config.feature_dim) {
    throw ConfigError("feature dim mismatch between checkpoint (" +
                      std::to_string(model.config.feature_dim) +
                      ") and corpus (" +
                      std::to_string(corpus.manifest.feature_dim) + ")");
  }
  ProjectedCorpus out;
  auto project = [&](const std::vector<Utterance>& in,
                     std::vector<Utterance>& dst) {
    for (const Utterance& u : in) {
      for (std::size_t l = 0; l < source.size(); ++l) {
        if (u.lang == source[l]) {
          dst.push_back(u);
          dst.back().lang = static_cast<std::uint32_t>(l);
          break;
        }
      }
    }
  };
  project(corpus.train, out.train);
  project(corpus.dev, out.dev);
  project(corpus.test, out.test);
  return out;
}

}  // namespace mladv
