// src/probe.cpp
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

#include "mladv/probe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "mladv/kernels.hpp"

namespace mladv {
namespace {

// Non-silence frame features of one split, flattened: one row per frame.
struct FrameSet {
  std::vector<double> rows;   // count x width
  std::vector<std::uint32_t> langs;
  std::size_t width = 0;

  std::size_t count() const { return langs.size(); }
  const double* row(std::size_t i) const { return rows.data() + i * width; }
};

FrameSet collect_frames(const MultilingualModel& model,
                        const std::vector<Utterance>& utts) {
  FrameSet fs;
  fs.width = model.config.feature_width();
  for (const Utterance& u : utts) {
    Tensor feats = extract_features(model, u);
    for (std::size_t t = 0; t < u.frames(); ++t) {
      if (u.silence[t]) continue;
      const double* row = feats.data() + t * fs.width;
      fs.rows.insert(fs.rows.end(), row, row + fs.width);
      fs.langs.push_back(u.lang);
    }
  }
  return fs;
}

// logits = W x + b for one frame.
void frame_logits(const ProbeParams& p, const double* x, double* logits) {
  const std::size_t k = p.bias.size();
  const std::size_t w = p.weight.cols();
  for (std::size_t i = 0; i < k; ++i) {
    double v = p.bias[i];
    const double* wrow = p.weight.data() + i * w;
    for (std::size_t j = 0; j < w; ++j) v += wrow[j] * x[j];
    logits[i] = v;
  }
}

std::size_t frame_argmax(const ProbeParams& p, const double* x,
                         std::vector<double>& scratch) {
  frame_logits(p, x, scratch.data());
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.bias.size(); ++i) {
    if (scratch[i] > scratch[best]) best = i;
  }
  return best;
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

ProbeParams train_probe(const MultilingualModel& model, const Corpus& corpus,
                        const ProbeConfig& cfg) {
  const std::size_t num_languages = corpus.num_languages();
  if (num_languages < 2) {
    throw ConfigError("train_probe: degenerate probe, corpus has a single "
                      "language");
  }
  if (num_languages != model.config.num_languages) {
    throw ConfigError("train_probe: corpus has " +
                      std::to_string(num_languages) + " languages, model has " +
                      std::to_string(model.config.num_languages));
  }
  FrameSet fs = collect_frames(model, corpus.train);
  if (fs.count() == 0) {
    throw EvalError("train_probe: no non-silence frames in the train split");
  }

  const std::size_t k = num_languages;
  const std::size_t w = fs.width;
  ProbeParams p;
  p.weight = Tensor({k, w});
  p.bias = Tensor({k});

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(fs.count());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::size_t cursor = 0;

  std::vector<double> logits(k), post(k);
  Tensor d_weight({k, w});
  Tensor d_bias({k});
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    d_weight.fill(0.0);
    d_bias.fill(0.0);
    std::size_t batch = 0;
    for (; batch < cfg.batch_frames; ++batch) {
      if (cursor == order.size()) {
        rng.shuffle(order);
        cursor = 0;
      }
      const std::size_t idx = order[cursor++];
      const double* x = fs.row(idx);
      frame_logits(p, x, logits.data());
      double mx = logits[0];
      for (std::size_t i = 1; i < k; ++i) mx = std::max(mx, logits[i]);
      double sum = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        post[i] = std::exp(logits[i] - mx);
        sum += post[i];
      }
      for (std::size_t i = 0; i < k; ++i) post[i] /= sum;
      post[fs.langs[idx]] -= 1.0;
      for (std::size_t i = 0; i < k; ++i) {
        kernels::axpy(post[i], x, d_weight.data() + i * w, w);
        d_bias[i] += post[i];
      }
    }
    const double lr = cfg.alpha / static_cast<double>(batch);
    kernels::axpy(-lr, d_weight.data(), p.weight.data(), k * w);
    kernels::axpy(-lr, d_bias.data(), p.bias.data(), k);
  }
  return p;
}

double probe_accuracy(const ProbeParams& probe, const MultilingualModel& model,
                      const std::vector<Utterance>& utterances) {
  if (probe.weight.cols() != model.config.feature_width() ||
      probe.bias.size() != model.config.num_languages) {
    throw DimensionError("probe_accuracy: probe shape " +
                         probe.weight.shape_str() +
                         " does not match the model");
  }
  const std::size_t num_languages = model.config.num_languages;
  std::vector<std::size_t> correct(num_languages, 0), total(num_languages, 0);
  std::vector<double> scratch(num_languages);
  for (const Utterance& u : utterances) {
    if (u.lang >= num_languages) {
      throw RoutingError("probe_accuracy: utterance language " +
                         std::to_string(u.lang) + " unknown to the model");
    }
    Tensor feats = extract_features(model, u);
    const std::size_t w = feats.cols();
    for (std::size_t t = 0; t < u.frames(); ++t) {
      if (u.silence[t]) continue;
      const std::size_t guess = frame_argmax(probe, feats.data() + t * w,
                                             scratch);
      if (guess == u.lang) ++correct[u.lang];
      ++total[u.lang];
    }
  }
  double sum = 0.0;
  for (std::size_t l = 0; l < num_languages; ++l) {
    if (total[l] == 0) {
      throw EvalError("probe_accuracy: no non-silence frames for language " +
                      std::to_string(l));
    }
    sum += static_cast<double>(correct[l]) / static_cast<double>(total[l]);
  }
  return sum / static_cast<double>(num_languages);
}

double ProbeReport::dev_accuracy() const {
  for (const SplitAccuracy& s : splits) {
    if (s.split == "dev") return s.uniform_average;
  }
  throw EvalError("probe report has no dev split");
}

ProbeReport make_probe_report(const std::string& tag, const ProbeParams& probe,
                              const MultilingualModel& model,
                              const Corpus& corpus) {
  ProbeReport report;
  report.model_tag = tag;
  report.languages = model.language_names;
  const std::size_t num_languages = model.config.num_languages;

  const std::vector<std::pair<std::string, const std::vector<Utterance>*>>
      splits = {{"train", &corpus.train},
                {"dev", &corpus.dev},
                {"test", &corpus.test}};
  std::vector<double> scratch(num_languages);
  report.dev_confusion = Tensor({num_languages, num_languages});
  for (const auto& [name, utts] : splits) {
    SplitAccuracy sa;
    sa.split = name;
    std::vector<std::size_t> correct(num_languages, 0),
        total(num_languages, 0);
    for (const Utterance& u : *utts) {
      Tensor feats = extract_features(model, u);
      const std::size_t w = feats.cols();
      for (std::size_t t = 0; t < u.frames(); ++t) {
        if (u.silence[t]) continue;
        const std::size_t guess = frame_argmax(probe, feats.data() + t * w,
                                               scratch);
        if (guess == u.lang) ++correct[u.lang];
        ++total[u.lang];
        if (name == "dev") report.dev_confusion.at(u.lang, guess) += 1.0;
      }
    }
    double sum = 0.0;
    for (std::size_t l = 0; l < num_languages; ++l) {
      if (total[l] == 0) {
        throw EvalError("probe report: no non-silence frames for language '" +
                        report.languages[l] + "' in " + name);
      }
      sa.per_language.push_back(static_cast<double>(correct[l]) /
                                static_cast<double>(total[l]));
      sum += sa.per_language.back();
    }
    sa.uniform_average = sum / static_cast<double>(num_languages);
    report.splits.push_back(std::move(sa));
  }
  return report;
}

double compare_probe_reports(const ProbeReport& baseline,
                             ProbeReport& report) {
  const double base = baseline.dev_accuracy();
  const double ours = report.dev_accuracy();
  const double rel = (ours - base) / base;
  report.relative_to_baseline = rel;
  return rel;
}

void write_probe_csv(const ProbeReport& report, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  os << "model,split,lang,probe_acc\n";
  for (const SplitAccuracy& sa : report.splits) {
    for (std::size_t l = 0; l < sa.per_language.size(); ++l) {
      os << report.model_tag << "," << sa.split << "," << report.languages[l]
         << "," << format_double(sa.per_language[l]) << "\n";
    }
    os << report.model_tag << "," << sa.split << ",__avg__,"
       << format_double(sa.uniform_average) << "\n";
  }
  if (report.relative_to_baseline) {
    os << "# relative dev accuracy vs baseline: "
       << format_double(*report.relative_to_baseline) << "\n";
  }
  if (!os) throw FormatError("write failed for " + path);
}

}  // namespace mladv
