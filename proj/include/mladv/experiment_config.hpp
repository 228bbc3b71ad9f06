// include/mladv/experiment_config.hpp
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

#ifndef MLADV_EXPERIMENT_CONFIG_HPP_
#define MLADV_EXPERIMENT_CONFIG_HPP_

#include <optional>
#include <string>

#include "mladv/datasynth.hpp"
#include "mladv/model.hpp"
#include "mladv/trainer.hpp"

namespace mladv {

// Experiment config file: a UTF-8 JSON document with a "mode" discriminator
// and optional "gen" / "model" / "train" sections. Validation is strict:
// unknown keys anywhere are rejected before any work happens. Command-line
// flags override config-file values.

struct ModelSettings {
  std::size_t shared_layers = 2;
  std::size_t shared_hidden = 32;
  std::size_t am_hidden = 32;
  std::size_t lid_hidden = 16;
  double lambda = 1.0;

  /// Architecture knobs only; languages, state counts and feature dim come
  /// from the corpus manifest at train time.
  ModelConfig to_model_config() const;
};

struct ExperimentConfig {
  std::string mode;  // gen | train | finetune | probe | eval | report
  std::optional<GenSpec> gen;
  std::optional<ModelSettings> model;
  std::optional<TrainConfig> train;
};

ExperimentConfig parse_experiment_config(const std::string& json_text,
                                         const std::string& source_name);

ExperimentConfig load_experiment_config(const std::string& path);

}  // namespace mladv

#endif  // MLADV_EXPERIMENT_CONFIG_HPP_
