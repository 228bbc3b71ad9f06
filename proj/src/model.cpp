// src/model.cpp
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

#include "mladv/model.hpp"

#include <algorithm>
#include <cmath>

namespace mladv {
namespace {

std::vector<std::uint8_t> all_true_mask(std::size_t n) {
  return std::vector<std::uint8_t>(n, 1);
}

std::vector<std::uint8_t> non_silence_mask(const Utterance& utt) {
  std::vector<std::uint8_t> mask(utt.frames());
  for (std::size_t t = 0; t < mask.size(); ++t) {
    mask[t] = utt.silence[t] ? 0 : 1;
  }
  return mask;
}

std::vector<std::uint32_t> lang_labels(const Utterance& utt) {
  return std::vector<std::uint32_t>(utt.frames(), utt.lang);
}

// Shared-stack forward used by forward_batch, extract_features and
// frame_accuracy so all of them see the identical computation.
Tensor run_shared(const MultilingualModel& model, const Tensor& features,
                  std::vector<BlstmCache>* caches) {
  Tensor h = features;
  for (const BlstmLayerParams& layer : model.shared) {
    BlstmForwardResult r = blstm_forward(h, layer);
    h = std::move(r.hidden);
    if (caches) caches->push_back(std::move(r.cache));
  }
  return h;
}

Tensor run_am_branch(const MultilingualModel& model, std::size_t lang,
                     const Tensor& shared_out,
                     std::vector<BlstmCache>* caches) {
  Tensor h = shared_out;
  for (const BlstmLayerParams& layer : model.am[lang].layers) {
    BlstmForwardResult r = blstm_forward(h, layer);
    h = std::move(r.hidden);
    if (caches) caches->push_back(std::move(r.cache));
  }
  return h;
}

Gradients zero_gradients(const MultilingualModel& model,
                         const BackwardOptions& opts) {
  Gradients g;
  for (const auto& layer : model.shared) {
    g.shared_am.push_back(zero_grads(layer));
    g.shared_lid.push_back(zero_grads(layer));
  }
  if (opts.include_am) {
    for (const auto& branch : model.am) {
      BranchGrads bg;
      for (const auto& layer : branch.layers) {
        bg.layers.push_back(zero_grads(layer));
      }
      bg.head = zero_grads(branch.head);
      g.am.push_back(std::move(bg));
    }
  }
  if (model.lid && opts.include_lid) {
    g.lid = LidGrads{zero_grads(model.lid->layer), zero_grads(model.lid->head)};
  }
  return g;
}

void scale_in_place(LstmGrads& g, double a) {
  g.d_input_weights = scale(a, g.d_input_weights);
  g.d_recurrent_weights = scale(a, g.d_recurrent_weights);
  g.d_biases = scale(a, g.d_biases);
}

void visit_lstm(const std::string& prefix, LstmCellParams& p,
                const std::function<void(const std::string&, Tensor&)>& fn) {
  fn(prefix + ".W", p.input_weights);
  fn(prefix + ".R", p.recurrent_weights);
  fn(prefix + ".b", p.biases);
}

void visit_blstm(const std::string& prefix, BlstmLayerParams& p,
                 const std::function<void(const std::string&, Tensor&)>& fn) {
  visit_lstm(prefix + ".fwd", p.forward, fn);
  visit_lstm(prefix + ".bwd", p.backward, fn);
}

}  // namespace

void ModelConfig::validate() const {
  if (feature_dim == 0) throw ConfigError("model: feature_dim must be positive");
  if (num_languages == 0) {
    throw ConfigError("model: at least one language required");
  }
  if (states_per_language.size() != num_languages) {
    throw ConfigError("model: states_per_language has " +
                      std::to_string(states_per_language.size()) +
                      " entries for " + std::to_string(num_languages) +
                      " languages");
  }
  for (std::size_t s : states_per_language) {
    if (s < 2) throw ConfigError("model: every language needs >= 2 states");
  }
  if (shared_layers < 1 || shared_layers > 3) {
    throw ConfigError("model: shared_layers must be 1..3 (trunk depth is " +
                      std::to_string(kTrunkLayers) + ")");
  }
  if (shared_hidden == 0 || am_hidden == 0 || lid_hidden == 0) {
    throw ConfigError("model: hidden sizes must be positive");
  }
  if (lambda < 0.0) throw ConfigError("model: lambda must be nonnegative");
}

MultilingualModel build_model(const ModelConfig& cfg, std::uint64_t seed,
                              std::vector<std::string> language_names) {
  cfg.validate();
  if (!language_names.empty() && language_names.size() != cfg.num_languages) {
    throw ConfigError("build_model: " + std::to_string(language_names.size()) +
                      " names for " + std::to_string(cfg.num_languages) +
                      " languages");
  }
  MultilingualModel m;
  m.config = cfg;
  if (language_names.empty()) {
    for (std::size_t l = 0; l < cfg.num_languages; ++l) {
      language_names.push_back("lang" + std::to_string(l));
    }
  }
  m.language_names = std::move(language_names);

  Rng rng(seed);
  std::size_t width = cfg.feature_dim;
  for (std::size_t i = 0; i < cfg.shared_layers; ++i) {
    m.shared.push_back(make_blstm(cfg.shared_hidden, width, rng));
    width = 2 * cfg.shared_hidden;
  }
  const std::size_t shared_out = width;
  for (std::size_t l = 0; l < cfg.num_languages; ++l) {
    LanguageBranch branch;
    width = shared_out;
    for (std::size_t i = 0; i < cfg.am_layers(); ++i) {
      branch.layers.push_back(make_blstm(cfg.am_hidden, width, rng));
      width = 2 * cfg.am_hidden;
    }
    branch.head = make_head(cfg.states_per_language[l], width, rng);
    m.am.push_back(std::move(branch));
  }
  if (cfg.lid_head) {
    LidBranch lid;
    lid.layer = make_blstm(cfg.lid_hidden, shared_out, rng);
    lid.head = make_head(cfg.num_languages, 2 * cfg.lid_hidden, rng);
    m.lid = std::move(lid);
  }
  return m;
}

ForwardResult forward_batch(const MultilingualModel& model,
                            const Batch& batch) {
  ForwardResult res;
  res.model_version = model.version;
  double am_loss_sum = 0.0;
  double lid_loss_sum = 0.0;

  for (const Utterance* utt : batch) {
    if (utt->lang >= model.config.num_languages) {
      throw RoutingError("forward_batch: utterance language " +
                         std::to_string(utt->lang) + " unknown to a model of " +
                         std::to_string(model.config.num_languages) +
                         " languages");
    }
    UttForward uf;
    uf.lang = utt->lang;
    uf.shared_out = run_shared(model, utt->features, &uf.shared_caches);

    Tensor am_out = run_am_branch(model, utt->lang, uf.shared_out,
                                  &uf.am_caches);
    uf.am_head = head_forward(am_out, model.am[utt->lang].head, utt->labels,
                              all_true_mask(utt->frames()));
    am_loss_sum += uf.am_head.sum_loss;
    res.am_frames += utt->frames();

    if (model.lid) {
      // The reversal layer sits here; it is the identity on the way forward.
      Tensor lid_in = grl_forward(uf.shared_out);
      BlstmForwardResult lr = blstm_forward(lid_in, model.lid->layer);
      uf.lid_head = head_forward(lr.hidden, model.lid->head, lang_labels(*utt),
                                 non_silence_mask(*utt));
      uf.lid_cache = std::move(lr.cache);
      uf.has_lid = true;
      lid_loss_sum += uf.lid_head.sum_loss;
      res.lid_frames += uf.lid_head.masked_count();
    }
    res.utts.push_back(std::move(uf));
  }

  if (res.am_frames == 0) {
    throw EvalError("forward_batch: batch has no frames");
  }
  res.loss_am = am_loss_sum / static_cast<double>(res.am_frames);
  if (model.lid && res.lid_frames > 0) {
    res.loss_lid = lid_loss_sum / static_cast<double>(res.lid_frames);
    res.loss_total = res.loss_am - model.config.lambda * *res.loss_lid;
  } else {
    res.loss_total = res.loss_am;
  }
  return res;
}

Gradients backward_batch(const MultilingualModel& model,
                         const ForwardResult& fwd,
                         const BackwardOptions& opts) {
  if (fwd.model_version != model.version) {
    throw StateError("backward_batch: forward caches are stale (model was "
                     "updated after the forward pass)");
  }
  Gradients g = zero_gradients(model, opts);
  const double lambda = model.config.lambda;

  for (const UttForward& uf : fwd.utts) {
    if (opts.include_am) {
      const double w_am = static_cast<double>(uf.am_head.masked_count()) /
                          static_cast<double>(fwd.am_frames);
      HeadBackwardResult hb =
          head_backward(uf.am_head.cache, model.am[uf.lang].head, w_am);
      accumulate(g.am[uf.lang].head, hb.grads);
      Tensor up = std::move(hb.d_hidden);
      for (std::size_t i = uf.am_caches.size(); i-- > 0;) {
        BlstmBackwardResult bb =
            blstm_backward(up, uf.am_caches[i], model.am[uf.lang].layers[i]);
        accumulate(g.am[uf.lang].layers[i], bb.grads);
        up = std::move(bb.d_seq);
      }
      for (std::size_t i = uf.shared_caches.size(); i-- > 0;) {
        BlstmBackwardResult bb =
            blstm_backward(up, uf.shared_caches[i], model.shared[i]);
        accumulate(g.shared_am[i], bb.grads);
        up = std::move(bb.d_seq);
      }
    }

    if (opts.include_lid && uf.has_lid && model.lid &&
        uf.lid_head.masked_count() > 0) {
      const double w_lid = static_cast<double>(uf.lid_head.masked_count()) /
                           static_cast<double>(fwd.lid_frames);
      HeadBackwardResult hb =
          head_backward(uf.lid_head.cache, model.lid->head, w_lid);
      accumulate(g.lid->head, hb.grads);
      BlstmBackwardResult lb =
          blstm_backward(hb.d_hidden, uf.lid_cache, model.lid->layer);
      accumulate(g.lid->layer, lb.grads);
      Tensor up = std::move(lb.d_seq);
      for (std::size_t i = uf.shared_caches.size(); i-- > 0;) {
        BlstmBackwardResult bb =
            blstm_backward(up, uf.shared_caches[i], model.shared[i]);
        accumulate(g.shared_lid[i], bb.grads);
        up = std::move(bb.d_seq);
      }
    }
  }

  // theta_d carries the lambda factor exactly as the update rule states it.
  if (g.lid) {
    scale_in_place(g.lid->layer.fwd, lambda);
    scale_in_place(g.lid->layer.bwd, lambda);
    g.lid->head.d_weight = scale(lambda, g.lid->head.d_weight);
    g.lid->head.d_bias = scale(lambda, g.lid->head.d_bias);
  }

  // Combined extractor gradient. At lambda == 0 the adversary contributes
  // nothing and the combined gradient must be a bit-exact copy of the AM one.
  g.shared = g.shared_am;
  if (lambda != 0.0) {
    for (std::size_t i = 0; i < g.shared.size(); ++i) {
      axpy(-lambda, g.shared_lid[i].fwd.d_input_weights,
           g.shared[i].fwd.d_input_weights);
      axpy(-lambda, g.shared_lid[i].fwd.d_recurrent_weights,
           g.shared[i].fwd.d_recurrent_weights);
      axpy(-lambda, g.shared_lid[i].fwd.d_biases, g.shared[i].fwd.d_biases);
      axpy(-lambda, g.shared_lid[i].bwd.d_input_weights,
           g.shared[i].bwd.d_input_weights);
      axpy(-lambda, g.shared_lid[i].bwd.d_recurrent_weights,
           g.shared[i].bwd.d_recurrent_weights);
      axpy(-lambda, g.shared_lid[i].bwd.d_biases, g.shared[i].bwd.d_biases);
    }
  }
  return g;
}

namespace {

// Grad lookup aligned with visit_params naming.
const Tensor* find_grad(const Gradients& g, const MultilingualModel& model,
                        const std::string& name) {
  auto lstm_tensor = [](const LstmGrads& lg, char which) -> const Tensor* {
    switch (which) {
      case 'W':
        return &lg.d_input_weights;
      case 'R':
        return &lg.d_recurrent_weights;
      default:
        return &lg.d_biases;
    }
  };
  // name forms: f.layer{i}.{fwd|bwd}.{W|R|b}
  //             y.lang{l}.layer{i}.{fwd|bwd}.{W|R|b} | y.lang{l}.head.{W|b}
  //             d.layer0.{fwd|bwd}.{W|R|b} | d.head.{W|b}
  const char which = name.back();
  if (name[0] == 'f') {
    const std::size_t i = std::stoul(name.substr(7));
    const bool fwd = name.find(".fwd.") != std::string::npos;
    if (i >= g.shared.size()) return nullptr;
    return lstm_tensor(fwd ? g.shared[i].fwd : g.shared[i].bwd, which);
  }
  if (name[0] == 'y') {
    const std::size_t l = std::stoul(name.substr(6));
    if (l >= g.am.size()) return nullptr;
    if (name.find(".head.") != std::string::npos) {
      return which == 'W' ? &g.am[l].head.d_weight : &g.am[l].head.d_bias;
    }
    const auto layer_pos = name.find(".layer");
    const std::size_t i = std::stoul(name.substr(layer_pos + 6));
    const bool fwd = name.find(".fwd.") != std::string::npos;
    return lstm_tensor(fwd ? g.am[l].layers[i].fwd : g.am[l].layers[i].bwd,
                       which);
  }
  if (name[0] == 'd') {
    if (!g.lid || !model.lid) return nullptr;
    if (name.find(".head.") != std::string::npos) {
      return which == 'W' ? &g.lid->head.d_weight : &g.lid->head.d_bias;
    }
    const bool fwd = name.find(".fwd.") != std::string::npos;
    return lstm_tensor(fwd ? g.lid->layer.fwd : g.lid->layer.bwd, which);
  }
  return nullptr;
}

}  // namespace

void visit_params(MultilingualModel& model,
                  const std::function<void(const std::string&, Tensor&)>& fn) {
  for (std::size_t i = 0; i < model.shared.size(); ++i) {
    visit_blstm("f.layer" + std::to_string(i), model.shared[i], fn);
  }
  for (std::size_t l = 0; l < model.am.size(); ++l) {
    const std::string base = "y.lang" + std::to_string(l);
    for (std::size_t i = 0; i < model.am[l].layers.size(); ++i) {
      visit_blstm(base + ".layer" + std::to_string(i), model.am[l].layers[i],
                  fn);
    }
    fn(base + ".head.W", model.am[l].head.weight);
    fn(base + ".head.b", model.am[l].head.bias);
  }
  if (model.lid) {
    visit_blstm("d.layer0", model.lid->layer, fn);
    fn("d.head.W", model.lid->head.weight);
    fn("d.head.b", model.lid->head.bias);
  }
}

void visit_params(const MultilingualModel& model,
                  const std::function<void(const std::string&, const Tensor&)>&
                      fn) {
  visit_params(const_cast<MultilingualModel&>(model),
               [&fn](const std::string& name, Tensor& t) {
                 fn(name, static_cast<const Tensor&>(t));
               });
}

void visit_params_and_grads(
    MultilingualModel& model, const Gradients& grads,
    const std::function<void(const std::string&, Tensor&, const Tensor&)>& fn) {
  visit_params(model, [&](const std::string& name, Tensor& param) {
    const Tensor* grad = find_grad(grads, model, name);
    if (grad) fn(name, param, *grad);
  });
}

void sgd_update(MultilingualModel& model, const Gradients& grads, double alpha,
                bool freeze_shared) {
  if (!(alpha > 0.0)) {
    throw ConfigError("sgd_update: learning rate must be positive");
  }
  // Validate first so a bad gradient never leaves the model half-updated.
  std::string bad;
  visit_params_and_grads(model, grads,
                         [&](const std::string& name, Tensor& param,
                             const Tensor& grad) {
                           if (!grad.same_shape(param)) {
                             throw StateError("sgd_update: gradient shape " +
                                              grad.shape_str() +
                                              " does not match " + name);
                           }
                           if (bad.empty() && !grad.all_finite()) bad = name;
                         });
  if (!bad.empty()) {
    throw TrainError("sgd_update: non-finite gradient in " + bad);
  }
  visit_params_and_grads(model, grads,
                         [&](const std::string& name, Tensor& param,
                             const Tensor& grad) {
                           if (freeze_shared && name[0] == 'f') return;
                           axpy(-alpha, grad, param);
                         });
  ++model.version;
}

double frame_accuracy(const MultilingualModel& model,
                      const std::vector<const Utterance*>& utterances,
                      std::size_t lang) {
  if (lang >= model.config.num_languages) {
    throw RoutingError("frame_accuracy: language " + std::to_string(lang) +
                       " unknown to the model");
  }
  if (utterances.empty()) {
    throw EvalError("frame_accuracy: empty evaluation set");
  }
  std::size_t correct = 0, total = 0;
  for (const Utterance* utt : utterances) {
    if (utt->lang != lang) {
      throw RoutingError("frame_accuracy: utterance of language " +
                         std::to_string(utt->lang) + " in a language-" +
                         std::to_string(lang) + " evaluation");
    }
    Tensor shared_out = run_shared(model, utt->features, nullptr);
    Tensor am_out = run_am_branch(model, lang, shared_out, nullptr);
    HeadForwardResult hr = head_forward(am_out, model.am[lang].head,
                                        utt->labels,
                                        all_true_mask(utt->frames()));
    const Tensor& post = hr.posteriors();
    const std::size_t k = post.cols();
    for (std::size_t t = 0; t < utt->frames(); ++t) {
      const double* row = post.data() + t * k;
      std::size_t best = 0;
      for (std::size_t i = 1; i < k; ++i) {
        if (row[i] > row[best]) best = i;
      }
      if (best == utt->labels[t]) ++correct;
      ++total;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

double frame_accuracy(const MultilingualModel& model,
                      const std::vector<Utterance>& utterances,
                      std::size_t lang) {
  std::vector<const Utterance*> ptrs;
  ptrs.reserve(utterances.size());
  for (const Utterance& u : utterances) ptrs.push_back(&u);
  return frame_accuracy(model, ptrs, lang);
}

Tensor extract_features(const MultilingualModel& model, const Utterance& utt) {
  return run_shared(model, utt.features, nullptr);
}

}  // namespace mladv
