// include/mladv/model.hpp
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

#ifndef MLADV_MODEL_HPP_
#define MLADV_MODEL_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mladv/datasynth.hpp"
#include "mladv/layers.hpp"

namespace mladv {

// The multilingual adversarial model: a shared bidirectional-LSTM feature
// extractor feeding per-language acoustic-model branches (BLSTM stack plus
// softmax head over that language's states) and, optionally, a
// language-identification adversary (one BLSTM layer plus softmax head over
// languages) attached behind a gradient reversal layer.
//
// Losses: loss_am is the frame-level mean cross-entropy over all frames of
// the batch, every frame scored by its own language's head, silence included.
// loss_lid is the frame-level mean over non-silence frames only. The combined
// objective is loss_am - lambda * loss_lid.

struct ModelConfig {
  std::size_t feature_dim = 16;
  std::size_t num_languages = 3;
  std::vector<std::size_t> states_per_language;  // one entry per language
  // The trunk (shared + per-language AM layers) always has kTrunkLayers
  // layers; moving the boundary trades shared against per-language depth
  // at constant capacity.
  static constexpr std::size_t kTrunkLayers = 4;
  std::size_t shared_layers = 2;  // 1..3
  std::size_t shared_hidden = 32;  // per direction
  std::size_t am_hidden = 32;
  std::size_t lid_hidden = 16;
  double lambda = 1.0;
  bool lid_head = true;

  std::size_t am_layers() const { return kTrunkLayers - shared_layers; }
  std::size_t feature_width() const { return 2 * shared_hidden; }
  void validate() const;
};

struct LanguageBranch {
  std::vector<BlstmLayerParams> layers;
  HeadParams head;
};

struct LidBranch {
  BlstmLayerParams layer;
  HeadParams head;
};

struct MultilingualModel {
  ModelConfig config;
  std::vector<std::string> language_names;
  std::vector<BlstmLayerParams> shared;  // theta_f
  std::vector<LanguageBranch> am;        // theta_y, one per language
  std::optional<LidBranch> lid;          // theta_d
  // Bumped by sgd_update; forward caches record it so a backward pass can
  // detect stale caches.
  std::uint64_t version = 0;
};

/// Deterministic initialization: shared layers first, then the per-language
/// branches in language order, then the LID branch last, all from one stream.
/// Drawing the LID branch last keeps theta_f/theta_y bit-identical between
/// models built with and without the adversary for the same seed.
MultilingualModel build_model(const ModelConfig& cfg, std::uint64_t seed,
                              std::vector<std::string> language_names = {});

// ---- forward ----------------------------------------------------------------

struct UttForward {
  std::size_t lang = 0;
  std::vector<BlstmCache> shared_caches;
  Tensor shared_out;  // [T x 2*shared_hidden]
  std::vector<BlstmCache> am_caches;
  HeadForwardResult am_head;
  bool has_lid = false;
  BlstmCache lid_cache;
  HeadForwardResult lid_head;
};

struct ForwardResult {
  double loss_am = 0.0;
  std::optional<double> loss_lid;  // absent without adversary or when the
                                   // batch has no non-silence frames
  double loss_total = 0.0;         // loss_am - lambda * loss_lid
  std::size_t am_frames = 0;
  std::size_t lid_frames = 0;
  std::vector<UttForward> utts;
  std::uint64_t model_version = 0;
};

using Batch = std::vector<const Utterance*>;

ForwardResult forward_batch(const MultilingualModel& model, const Batch& batch);

// ---- backward ---------------------------------------------------------------

struct BranchGrads {
  std::vector<BlstmGrads> layers;
  HeadGrads head;
};

struct LidGrads {
  BlstmGrads layer;
  HeadGrads head;
};

struct Gradients {
  // theta_f: combined = am - lambda * lid, plus the diagnostic split.
  std::vector<BlstmGrads> shared;
  std::vector<BlstmGrads> shared_am;
  std::vector<BlstmGrads> shared_lid;  // raw dL_LID/dtheta_f, unscaled
  std::vector<BranchGrads> am;         // per language
  std::optional<LidGrads> lid;         // dtheta_d, already scaled by lambda
};

struct BackwardOptions {
  bool include_am = true;
  bool include_lid = true;
};

/// Exact gradients of the batch objective. The shared-extractor gradient is
/// assembled as shared_am - lambda * shared_lid, which is what routing the
/// LID upstream through the reversal layer yields (backpropagation is linear
/// in the upstream). At lambda == 0 the combined gradient is a bit-exact copy
/// of the AM-only gradient.
Gradients backward_batch(const MultilingualModel& model,
                         const ForwardResult& fwd,
                         const BackwardOptions& opts = {});

/// theta -= alpha * grad for every parameter. Throws TrainError naming the
/// offending tensor if any gradient is non-finite; no parameter is touched in
/// that case. freeze_shared skips the shared extractor.
void sgd_update(MultilingualModel& model, const Gradients& grads, double alpha,
                bool freeze_shared = false);

/// Fraction of frames (silence included) whose argmax AM posterior matches
/// the label. All utterances must belong to language `lang`.
double frame_accuracy(const MultilingualModel& model,
                      const std::vector<const Utterance*>& utterances,
                      std::size_t lang);
double frame_accuracy(const MultilingualModel& model,
                      const std::vector<Utterance>& utterances,
                      std::size_t lang);

/// Output of the last shared layer (the position where the reversal layer
/// sits; identity in the forward direction). No per-language layers applied.
Tensor extract_features(const MultilingualModel& model, const Utterance& utt);

/// Visits every parameter tensor with its canonical checkpoint name
/// (f.layer{i}.{fwd|bwd}.{W|R|b}, y.lang{l}..., d.layer0..., d.head...).
void visit_params(MultilingualModel& model,
                  const std::function<void(const std::string&, Tensor&)>& fn);
void visit_params(const MultilingualModel& model,
                  const std::function<void(const std::string&, const Tensor&)>&
                      fn);

/// Visits (name, parameter, gradient) triples in the same order; used by the
/// optimizer and by tests that need parameter/gradient alignment.
void visit_params_and_grads(
    MultilingualModel& model, const Gradients& grads,
    const std::function<void(const std::string&, Tensor&, const Tensor&)>& fn);

}  // namespace mladv

#endif  // MLADV_MODEL_HPP_
