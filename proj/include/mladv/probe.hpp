// include/mladv/probe.hpp
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

#ifndef MLADV_PROBE_HPP_
#define MLADV_PROBE_HPP_

#include <optional>
#include <string>
#include <vector>

#include "mladv/model.hpp"
#include "mladv/trainer.hpp"

namespace mladv {

// Frame-level linear language-identification probe on frozen extractor
// activations: how much language information is still linearly readable from
// the shared representation. Strictly one affine layer plus softmax, trained
// by SGD on non-silence frames with a fixed budget so that accuracy
// differences between models reflect the features, not the probe.

struct ProbeConfig {
  std::size_t steps = 2000;
  double alpha = 0.1;
  std::size_t batch_frames = 256;
  std::uint64_t seed = 1;
};

struct ProbeParams {
  Tensor weight;  // [L x feature_width]
  Tensor bias;    // [L]
};

/// Trains the probe on the extractor outputs of the corpus train split. The
/// acoustic model is read-only throughout. Throws ConfigError for a
/// single-language corpus (nothing to discriminate).
ProbeParams train_probe(const MultilingualModel& model, const Corpus& corpus,
                        const ProbeConfig& cfg);

/// Argmax accuracy over non-silence frames with uniform language weighting
/// (every model language must contribute at least one non-silence frame).
double probe_accuracy(const ProbeParams& probe, const MultilingualModel& model,
                      const std::vector<Utterance>& utterances);

struct SplitAccuracy {
  std::string split;
  std::vector<double> per_language;
  double uniform_average = 0.0;
};

struct ProbeReport {
  std::string model_tag;
  std::vector<std::string> languages;
  std::vector<SplitAccuracy> splits;  // train, dev, test
  Tensor dev_confusion;               // [L x L] frame counts, rows = reference
  // (probe accuracy of this model - baseline) / baseline, set by compare().
  std::optional<double> relative_to_baseline;

  double dev_accuracy() const;
};

ProbeReport make_probe_report(const std::string& tag,
                              const ProbeParams& probe,
                              const MultilingualModel& model,
                              const Corpus& corpus);

/// Fills report.relative_to_baseline from the baseline's dev accuracy and
/// returns the relative difference.
double compare_probe_reports(const ProbeReport& baseline, ProbeReport& report);

/// CSV rows `model,split,lang,probe_acc` plus uniform-average rows; appends a
/// relative-difference summary line when the report carries one.
void write_probe_csv(const ProbeReport& report, const std::string& path);

}  // namespace mladv

#endif  // MLADV_PROBE_HPP_
