// include/mladv/trainer.hpp
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

#ifndef MLADV_TRAINER_HPP_
#define MLADV_TRAINER_HPP_

#include <optional>
#include <string>
#include <vector>

#include "mladv/datasynth.hpp"
#include "mladv/model.hpp"

namespace mladv {

// Deterministic single-process minibatch SGD. One epoch is one pass over a
// seeded shuffle of the pooled training utterances, so scarce languages
// appear proportionally less often, as in an unbalanced multilingual corpus.
// Model selection keeps the checkpoint with the highest uniform-average dev
// frame accuracy (earliest step on ties).

enum class TrainMode { kMono, kMulti, kAdversarial };

std::string to_string(TrainMode mode);
TrainMode train_mode_from_string(const std::string& s);

struct TrainConfig {
  TrainMode mode = TrainMode::kMulti;
  double alpha = 0.05;
  std::size_t batch_size = 8;
  std::size_t max_steps = 5000;
  std::size_t eval_every = 200;
  double lambda = 1.0;  // adversarial mode only; forced to 0 otherwise
  std::uint64_t seed = 1;
  std::string target_language;  // mono mode
  bool freeze_shared = false;   // honored by fine-tuning

  void validate() const;
};

struct EvalRecord {
  std::size_t step = 0;
  std::vector<double> per_language_acc;
  double uniform_average = 0.0;
  // Mean training losses over the steps since the previous evaluation.
  double loss_am = 0.0;
  std::optional<double> loss_lid;
};

struct TrainHistory {
  std::vector<EvalRecord> records;
  std::size_t best_step = 0;
  double best_accuracy = 0.0;
  std::string best_checkpoint_path;  // filled by callers that persist it
};

struct TrainResult {
  MultilingualModel model;  // parameters at best_step
  TrainHistory history;
};

struct Metrics {
  std::vector<double> per_language_acc;
  double uniform_average = 0.0;
};

/// Per-language frame accuracy plus the unweighted mean across languages
/// (uniform language weighting regardless of per-language dev sizes). Every
/// model language must appear in the set.
Metrics evaluate_dev(const MultilingualModel& model,
                     const std::vector<Utterance>& dev_set);

/// Trains a model built from `base` (architecture knobs) and the corpus
/// manifest (languages, state counts, feature dim). Mono mode trains on the
/// target language only; multi/adversarial train on the pooled shuffled
/// corpus. Returns the best checkpoint by dev accuracy.
TrainResult train(const ModelConfig& base, const Corpus& corpus,
                  const TrainConfig& cfg);

/// Extracts the monolingual sub-model for `lang` (shared layers + that
/// language's AM branch; the adversary is dropped) and continues training it
/// on that language's data. cfg.max_steps == 0 returns the extracted model
/// unchanged; cfg.freeze_shared leaves the shared layers bit-identical.
TrainResult fine_tune(const MultilingualModel& base_model, std::size_t lang,
                      const Corpus& corpus, const TrainConfig& cfg);

// ---- persistence -------------------------------------------------------------

/// Binary checkpoint: magic, version, JSON metadata block (model config,
/// language names, history, optional train config echo), then named f64
/// tensors. Round-trips bit-exactly.
void save_checkpoint(const MultilingualModel& model,
                     const TrainHistory& history, const std::string& path,
                     const TrainConfig* train_cfg = nullptr);

struct Checkpoint {
  MultilingualModel model;
  TrainHistory history;
  std::optional<TrainConfig> train_cfg;
};

Checkpoint load_checkpoint(const std::string& path);

/// Metrics CSV (`step,lang,dev_frame_acc,loss_am,loss_lid`), one row per
/// language per evaluation.
void write_metrics_csv(const TrainHistory& history,
                       const std::vector<std::string>& language_names,
                       const std::string& path);

/// Restricts a corpus to the languages a model knows, by manifest name, and
/// renumbers the language ids to the model's. Throws ConfigError when the
/// corpus does not cover the model's languages or state counts disagree.
struct ProjectedCorpus {
  std::vector<Utterance> train, dev, test;
};
ProjectedCorpus project_corpus(const Corpus& corpus,
                               const MultilingualModel& model);

}  // namespace mladv

#endif  // MLADV_TRAINER_HPP_
