// include/mladv/datasynth.hpp
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

#ifndef MLADV_DATASYNTH_HPP_
#define MLADV_DATASYNTH_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mladv/rng.hpp"
#include "mladv/tensor.hpp"

namespace mladv {

// Synthetic multilingual frame-labeling corpora. All languages share one
// latent phone inventory; each language observes the phones through its own
// random affine channel, so language identity is linearly readable from the
// surface features while the labels depend only on the shared phones. A
// language-invariant representation exists by construction (undo the
// channel), which is what adversarial training is supposed to find.
//
// Feature values are quantized to f32 precision at generation time so the
// f32 on-disk format round-trips bit-exactly.

struct GenSpec {
  std::size_t num_languages = 3;  // 2..7
  std::size_t num_phones = 10;    // plus one shared silence state
  std::size_t feature_dim = 16;
  std::size_t train_per_language = 100;
  std::size_t dev_per_language = 20;
  std::size_t test_per_language = 20;
  // One language gets train_per_language / low_resource_factor utterances.
  std::size_t low_resource_index = 2;
  std::size_t low_resource_factor = 10;
  std::size_t min_frames = 20;
  std::size_t max_frames = 60;
  // Strength of the per-language affine channel; 0 makes all languages
  // distributionally identical on non-silence frames.
  double channel_strength = 0.5;
  double emission_noise = 0.3;
  std::vector<std::string> language_names;  // autogenerated when empty
  std::uint64_t seed = 1;

  std::size_t silence_state() const { return num_phones; }
  std::size_t num_states() const { return num_phones + 1; }
  std::size_t train_count(std::size_t lang) const;
  std::string language_name(std::size_t lang) const;
  void validate() const;

  friend bool operator==(const GenSpec&, const GenSpec&) = default;
};

struct Utterance {
  Tensor features;  // [T x D]
  std::vector<std::uint32_t> labels;  // in [0, P]; P is silence
  std::vector<std::uint8_t> silence;  // 1 exactly where label == P
  std::uint32_t lang = 0;

  std::size_t frames() const { return labels.size(); }
  friend bool operator==(const Utterance&, const Utterance&) = default;
};

struct LanguageInfo {
  std::string name;
  std::size_t num_states = 0;
  std::size_t train_count = 0;
  std::size_t dev_count = 0;
  std::size_t test_count = 0;

  friend bool operator==(const LanguageInfo&, const LanguageInfo&) = default;
};

struct Manifest {
  std::uint32_t version = 1;
  std::size_t feature_dim = 0;
  std::vector<LanguageInfo> languages;
  GenSpec gen_spec;  // echo of the generating spec
  std::uint64_t seed = 0;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

struct Corpus {
  Manifest manifest;
  std::vector<Utterance> train, dev, test;

  std::size_t num_languages() const { return manifest.languages.size(); }
  friend bool operator==(const Corpus&, const Corpus&) = default;
};

/// Per-language generation state: the affine channel, the phone-segment
/// Markov chain (zero diagonal; self-succession is expressed by the dwell
/// probability instead) and the geometric dwell parameter.
struct LanguageSynth {
  std::uint32_t lang = 0;
  Tensor channel_matrix;  // [D x D]
  Tensor channel_bias;    // [D]
  Tensor transitions;     // [P x P], rows sum to 1, zero diagonal
  double dwell_continue = 0.75;
};

/// Draws the shared phone means ([P x D]) and one LanguageSynth per language
/// from the stream, in language order.
std::vector<LanguageSynth> make_language_synths(const GenSpec& spec, Rng& rng,
                                                Tensor* phone_means);

/// One utterance: silence runs at both ends, a phone-segment chain with
/// geometric dwell in between, channel-distorted noisy emissions. Total
/// silence is 5-15% of the frames.
Utterance sample_utterance(const GenSpec& spec, const LanguageSynth& lang,
                           const Tensor& phone_means, Rng& rng);

/// Deterministic: bit-identical output for a fixed (spec, seed).
Corpus generate_corpus(const GenSpec& spec, std::uint64_t seed);

/// Directory layout: manifest.json + train.bin/dev.bin/test.bin.
void save_corpus(const Corpus& corpus, const std::string& directory);
Corpus load_corpus(const std::string& directory);

struct CorpusSplit {
  std::vector<Utterance> train, dev, test;
};

/// Per-language stratified shuffle split; fractions must be positive and sum
/// to 1. Deterministic given the seed.
CorpusSplit split_corpus(const std::vector<Utterance>& utterances,
                         const std::array<double, 3>& fractions,
                         std::uint64_t seed);

}  // namespace mladv

#endif  // MLADV_DATASYNTH_HPP_
