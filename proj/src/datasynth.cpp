// src/datasynth.cpp
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

#include "mladv/datasynth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "mladv/binio.hpp"
#include "datasynth_json.hpp"
#include "json_util.hpp"

namespace mladv {
namespace {

namespace fs = std::filesystem;
using jsonutil::json;

constexpr char kCorpusMagic[8] = {'M', 'L', 'C', 'O', 'R', 'P', '1', '\0'};
constexpr double kSilenceMinFrac = 0.05;
constexpr double kSilenceMaxFrac = 0.15;

double quantize_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

json gen_spec_to_json(const GenSpec& s) {
  json j;
  j["num_languages"] = s.num_languages;
  j["num_phones"] = s.num_phones;
  j["feature_dim"] = s.feature_dim;
  j["train_per_language"] = s.train_per_language;
  j["dev_per_language"] = s.dev_per_language;
  j["test_per_language"] = s.test_per_language;
  j["low_resource_index"] = s.low_resource_index;
  j["low_resource_factor"] = s.low_resource_factor;
  j["min_frames"] = s.min_frames;
  j["max_frames"] = s.max_frames;
  j["channel_strength"] = s.channel_strength;
  j["emission_noise"] = s.emission_noise;
  if (!s.language_names.empty()) j["language_names"] = s.language_names;
  j["seed"] = s.seed;
  return j;
}

GenSpec gen_spec_from_json(const json& j, const std::string& ctx) {
  jsonutil::check_object(j, ctx);
  jsonutil::reject_unknown_keys(
      j,
      {"num_languages", "num_phones", "feature_dim", "train_per_language",
       "dev_per_language", "test_per_language", "low_resource_index",
       "low_resource_factor", "min_frames", "max_frames", "channel_strength",
       "emission_noise", "language_names", "seed"},
      ctx);
  GenSpec s;
  s.num_languages = jsonutil::get_u64_or(j, "num_languages", s.num_languages, ctx);
  s.num_phones = jsonutil::get_u64_or(j, "num_phones", s.num_phones, ctx);
  s.feature_dim = jsonutil::get_u64_or(j, "feature_dim", s.feature_dim, ctx);
  s.train_per_language =
      jsonutil::get_u64_or(j, "train_per_language", s.train_per_language, ctx);
  s.dev_per_language =
      jsonutil::get_u64_or(j, "dev_per_language", s.dev_per_language, ctx);
  s.test_per_language =
      jsonutil::get_u64_or(j, "test_per_language", s.test_per_language, ctx);
  s.low_resource_index =
      jsonutil::get_u64_or(j, "low_resource_index", s.low_resource_index, ctx);
  s.low_resource_factor = jsonutil::get_u64_or(j, "low_resource_factor",
                                               s.low_resource_factor, ctx);
  s.min_frames = jsonutil::get_u64_or(j, "min_frames", s.min_frames, ctx);
  s.max_frames = jsonutil::get_u64_or(j, "max_frames", s.max_frames, ctx);
  s.channel_strength =
      jsonutil::get_double_or(j, "channel_strength", s.channel_strength, ctx);
  s.emission_noise =
      jsonutil::get_double_or(j, "emission_noise", s.emission_noise, ctx);
  if (j.contains("language_names")) {
    const json& names = j.at("language_names");
    if (!names.is_array()) {
      throw ConfigError(ctx + ": language_names must be an array of strings");
    }
    for (const json& n : names) {
      if (!n.is_string()) {
        throw ConfigError(ctx + ": language_names entries must be strings");
      }
      s.language_names.push_back(n.get<std::string>());
    }
  }
  s.seed = jsonutil::get_u64_or(j, "seed", s.seed, ctx);
  s.validate();
  return s;
}

std::size_t GenSpec::train_count(std::size_t lang) const {
  if (lang == low_resource_index) {
    return std::max<std::size_t>(1, train_per_language / low_resource_factor);
  }
  return train_per_language;
}

std::string GenSpec::language_name(std::size_t lang) const {
  if (lang < language_names.size()) return language_names[lang];
  return "lang" + std::to_string(lang);
}

void GenSpec::validate() const {
  if (num_languages < 2 || num_languages > 7) {
    throw ConfigError("gen: num_languages must be in [2, 7]");
  }
  if (num_phones < 2) throw ConfigError("gen: num_phones must be >= 2");
  if (feature_dim == 0) throw ConfigError("gen: feature_dim must be positive");
  if (train_per_language == 0 || dev_per_language == 0 ||
      test_per_language == 0) {
    throw ConfigError("gen: utterance counts must be positive");
  }
  if (min_frames < 2) throw ConfigError("gen: min_frames must be >= 2");
  if (min_frames > max_frames) {
    throw ConfigError("gen: min_frames exceeds max_frames");
  }
  if (channel_strength < 0.0 || emission_noise < 0.0) {
    throw ConfigError("gen: channel_strength/emission_noise must be >= 0");
  }
  if (low_resource_index >= num_languages) {
    throw ConfigError("gen: low_resource_index out of range");
  }
  if (low_resource_factor == 0) {
    throw ConfigError("gen: low_resource_factor must be >= 1");
  }
  if (!language_names.empty() && language_names.size() != num_languages) {
    throw ConfigError("gen: language_names size does not match num_languages");
  }
}

std::vector<LanguageSynth> make_language_synths(const GenSpec& spec, Rng& rng,
                                                Tensor* phone_means) {
  const std::size_t p = spec.num_phones;
  const std::size_t d = spec.feature_dim;
  Tensor means({p, d});
  for (std::size_t i = 0; i < means.size(); ++i) {
    means[i] = rng.uniform(-1.0, 1.0);
  }
  if (phone_means) *phone_means = means;

  std::vector<LanguageSynth> langs;
  for (std::size_t l = 0; l < spec.num_languages; ++l) {
    LanguageSynth ls;
    ls.lang = static_cast<std::uint32_t>(l);
    ls.channel_matrix = Tensor({d, d});
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        double m = spec.channel_strength * rng.uniform(-0.5, 0.5);
        ls.channel_matrix.at(i, j) = (i == j) ? 1.0 + m : m;
      }
    }
    ls.channel_bias = Tensor({d});
    for (std::size_t i = 0; i < d; ++i) {
      ls.channel_bias[i] = spec.channel_strength * rng.uniform(-1.0, 1.0);
    }
    // Segment chain: zero diagonal, dwell handled by the geometric stay
    // probability instead of self transitions.
    ls.transitions = Tensor({p, p});
    for (std::size_t i = 0; i < p; ++i) {
      double row_sum = 0.0;
      for (std::size_t j = 0; j < p; ++j) {
        if (i == j) continue;
        const double w = rng.uniform(0.2, 1.0);
        ls.transitions.at(i, j) = w;
        row_sum += w;
      }
      for (std::size_t j = 0; j < p; ++j) {
        if (i != j) ls.transitions.at(i, j) /= row_sum;
      }
    }
    ls.dwell_continue = rng.uniform(0.6, 0.85);
    langs.push_back(std::move(ls));
  }
  return langs;
}

Utterance sample_utterance(const GenSpec& spec, const LanguageSynth& lang,
                           const Tensor& phone_means, Rng& rng) {
  const std::size_t p = spec.num_phones;
  const std::size_t d = spec.feature_dim;
  const std::size_t t_len =
      spec.min_frames + rng.index(spec.max_frames - spec.min_frames + 1);

  const double sil_frac = rng.uniform(kSilenceMinFrac, kSilenceMaxFrac);
  std::size_t sil_total = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(sil_frac * t_len)));
  sil_total = std::min(sil_total, t_len - 1);  // keep at least one speech frame
  const std::size_t front = rng.index(sil_total + 1);
  const std::size_t back = sil_total - front;

  Utterance utt;
  utt.lang = lang.lang;
  utt.features = Tensor({t_len, d});
  utt.labels.resize(t_len);
  utt.silence.resize(t_len);

  std::size_t phone = rng.index(p);
  std::vector<double> emission(d);
  for (std::size_t t = 0; t < t_len; ++t) {
    const bool is_silence = t < front || t >= t_len - back;
    double* frow = utt.features.data() + t * d;
    if (is_silence) {
      // Silence carries no channel: identical distribution in every language.
      utt.labels[t] = static_cast<std::uint32_t>(spec.silence_state());
      utt.silence[t] = 1;
      for (std::size_t i = 0; i < d; ++i) {
        frow[i] = quantize_f32(spec.emission_noise * rng.normal());
      }
      continue;
    }
    utt.labels[t] = static_cast<std::uint32_t>(phone);
    utt.silence[t] = 0;
    for (std::size_t i = 0; i < d; ++i) {
      emission[i] = phone_means.at(phone, i) + spec.emission_noise * rng.normal();
    }
    for (std::size_t i = 0; i < d; ++i) {
      double v = lang.channel_bias[i];
      const double* arow = lang.channel_matrix.data() + i * d;
      for (std::size_t j = 0; j < d; ++j) v += arow[j] * emission[j];
      frow[i] = quantize_f32(v);
    }
    // Geometric dwell, then one step of the segment chain.
    if (rng.uniform() >= lang.dwell_continue) {
      const double r = rng.uniform();
      double cum = 0.0;
      std::size_t next = phone == p - 1 ? p - 2 : p - 1;  // fallback
      for (std::size_t j = 0; j < p; ++j) {
        if (j == phone) continue;
        cum += lang.transitions.at(phone, j);
        if (r < cum) {
          next = j;
          break;
        }
      }
      phone = next;
    }
  }
  return utt;
}

Corpus generate_corpus(const GenSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  Tensor phone_means;
  std::vector<LanguageSynth> langs = make_language_synths(spec, rng,
                                                          &phone_means);

  Corpus corpus;
  corpus.manifest.version = 1;
  corpus.manifest.feature_dim = spec.feature_dim;
  corpus.manifest.gen_spec = spec;
  corpus.manifest.seed = seed;
  for (std::size_t l = 0; l < spec.num_languages; ++l) {
    LanguageInfo info;
    info.name = spec.language_name(l);
    info.num_states = spec.num_states();
    info.train_count = spec.train_count(l);
    info.dev_count = spec.dev_per_language;
    info.test_count = spec.test_per_language;
    corpus.manifest.languages.push_back(std::move(info));
  }

  auto fill_split = [&](std::vector<Utterance>& out,
                        const std::function<std::size_t(std::size_t)>& count) {
    for (std::size_t l = 0; l < spec.num_languages; ++l) {
      for (std::size_t n = 0; n < count(l); ++n) {
        out.push_back(sample_utterance(spec, langs[l], phone_means, rng));
      }
    }
  };
  fill_split(corpus.train, [&](std::size_t l) { return spec.train_count(l); });
  fill_split(corpus.dev, [&](std::size_t) { return spec.dev_per_language; });
  fill_split(corpus.test, [&](std::size_t) { return spec.test_per_language; });
  return corpus;
}

namespace {

void write_split(const std::vector<Utterance>& utts, const fs::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  os.write(kCorpusMagic, sizeof(kCorpusMagic));
  for (const Utterance& u : utts) {
    const std::size_t t_len = u.frames();
    const std::size_t d = u.features.cols();
    binio::put_u32(os, u.lang);
    binio::put_u32(os, static_cast<std::uint32_t>(t_len));
    binio::put_u32(os, static_cast<std::uint32_t>(d));
    for (std::size_t i = 0; i < t_len * d; ++i) {
      binio::put_f32(os, static_cast<float>(u.features[i]));
    }
    for (std::uint32_t label : u.labels) binio::put_u32(os, label);
    os.write(reinterpret_cast<const char*>(u.silence.data()),
             static_cast<std::streamsize>(t_len));
  }
  if (!os) throw FormatError("write failed for " + path.string());
}

std::vector<Utterance> read_split(const fs::path& path,
                                  const Manifest& manifest) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  binio::Reader r(is, path.string());
  char magic[8];
  r.read_bytes(magic, 8);
  if (std::memcmp(magic, kCorpusMagic, 8) != 0) {
    throw FormatError("bad magic in " + path.string());
  }
  const std::size_t silence_label = manifest.gen_spec.silence_state();
  std::vector<Utterance> utts;
  while (!r.at_eof()) {
    Utterance u;
    u.lang = r.get_u32();
    if (u.lang >= manifest.languages.size()) {
      throw FormatError("utterance language " + std::to_string(u.lang) +
                        " out of range in " + path.string() + " at offset " +
                        std::to_string(r.offset()));
    }
    const std::uint32_t t_len = r.get_u32();
    const std::uint32_t d = r.get_u32();
    if (t_len == 0 || d != manifest.feature_dim) {
      throw FormatError("bad record header in " + path.string() +
                        " at offset " + std::to_string(r.offset()));
    }
    u.features = Tensor({t_len, d});
    for (std::size_t i = 0; i < static_cast<std::size_t>(t_len) * d; ++i) {
      u.features[i] = static_cast<double>(r.get_f32());
    }
    u.labels.resize(t_len);
    const std::size_t num_states = manifest.languages[u.lang].num_states;
    for (std::uint32_t& label : u.labels) {
      label = r.get_u32();
      if (label >= num_states) {
        throw FormatError("label out of range in " + path.string() +
                          " at offset " + std::to_string(r.offset()));
      }
    }
    u.silence.resize(t_len);
    r.read_bytes(u.silence.data(), t_len);
    for (std::size_t t = 0; t < t_len; ++t) {
      const bool expect = u.labels[t] == silence_label;
      if ((u.silence[t] != 0) != expect || u.silence[t] > 1) {
        throw FormatError("silence mask inconsistent with labels in " +
                          path.string() + " at offset " +
                          std::to_string(r.offset()));
      }
    }
    utts.push_back(std::move(u));
  }
  return utts;
}

void check_counts(const std::vector<Utterance>& utts, const Manifest& manifest,
                  const std::string& split,
                  std::size_t LanguageInfo::*member) {
  std::vector<std::size_t> counts(manifest.languages.size(), 0);
  for (const Utterance& u : utts) ++counts[u.lang];
  for (std::size_t l = 0; l < counts.size(); ++l) {
    if (counts[l] != manifest.languages[l].*member) {
      throw FormatError("manifest language count mismatch for '" +
                        manifest.languages[l].name + "' in " + split +
                        ": manifest says " +
                        std::to_string(manifest.languages[l].*member) +
                        ", file has " + std::to_string(counts[l]));
    }
  }
}

Manifest manifest_from_json(const json& j, const std::string& ctx) {
  jsonutil::check_object(j, ctx);
  jsonutil::reject_unknown_keys(
      j, {"version", "feature_dim", "languages", "gen_spec", "seed"}, ctx);
  Manifest m;
  m.version = static_cast<std::uint32_t>(jsonutil::get_u64(j, "version", ctx));
  if (m.version != 1) {
    throw FormatError(ctx + ": unsupported manifest version " +
                      std::to_string(m.version));
  }
  m.feature_dim = jsonutil::get_u64(j, "feature_dim", ctx);
  const json& langs = jsonutil::require(j, "languages", ctx);
  if (!langs.is_array() || langs.empty()) {
    throw FormatError(ctx + ": languages must be a non-empty array");
  }
  for (const json& lj : langs) {
    const std::string lctx = ctx + ".languages";
    jsonutil::check_object(lj, lctx);
    jsonutil::reject_unknown_keys(
        lj, {"name", "num_states", "train_count", "dev_count", "test_count"},
        lctx);
    LanguageInfo info;
    info.name = jsonutil::get_string(lj, "name", lctx);
    info.num_states = jsonutil::get_u64(lj, "num_states", lctx);
    info.train_count = jsonutil::get_u64(lj, "train_count", lctx);
    info.dev_count = jsonutil::get_u64(lj, "dev_count", lctx);
    info.test_count = jsonutil::get_u64(lj, "test_count", lctx);
    m.languages.push_back(std::move(info));
  }
  m.gen_spec = gen_spec_from_json(jsonutil::require(j, "gen_spec", ctx),
                                  ctx + ".gen_spec");
  m.seed = jsonutil::get_u64(j, "seed", ctx);
  if (m.gen_spec.num_languages != m.languages.size()) {
    throw FormatError(ctx + ": gen_spec has " +
                      std::to_string(m.gen_spec.num_languages) +
                      " languages but the manifest lists " +
                      std::to_string(m.languages.size()));
  }
  return m;
}

}  // namespace

void save_corpus(const Corpus& corpus, const std::string& directory) {
  const fs::path dir(directory);
  fs::create_directories(dir);

  json j;
  j["version"] = corpus.manifest.version;
  j["feature_dim"] = corpus.manifest.feature_dim;
  json langs = json::array();
  for (const LanguageInfo& info : corpus.manifest.languages) {
    json lj;
    lj["name"] = info.name;
    lj["num_states"] = info.num_states;
    lj["train_count"] = info.train_count;
    lj["dev_count"] = info.dev_count;
    lj["test_count"] = info.test_count;
    langs.push_back(std::move(lj));
  }
  j["languages"] = std::move(langs);
  j["gen_spec"] = gen_spec_to_json(corpus.manifest.gen_spec);
  j["seed"] = corpus.manifest.seed;

  std::ofstream os(dir / "manifest.json", std::ios::trunc);
  if (!os) throw FormatError("cannot write " + (dir / "manifest.json").string());
  os << j.dump(2) << "\n";
  os.close();

  write_split(corpus.train, dir / "train.bin");
  write_split(corpus.dev, dir / "dev.bin");
  write_split(corpus.test, dir / "test.bin");
}

Corpus load_corpus(const std::string& directory) {
  const fs::path dir(directory);
  const fs::path manifest_path = dir / "manifest.json";
  std::ifstream is(manifest_path);
  if (!is) throw FormatError("missing manifest: " + manifest_path.string());
  std::string text((std::istreambuf_iterator<char>(is)),
                   std::istreambuf_iterator<char>());
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    throw FormatError(manifest_path.string() + ": invalid JSON");
  }

  Corpus corpus;
  corpus.manifest = manifest_from_json(j, manifest_path.string());
  corpus.train = read_split(dir / "train.bin", corpus.manifest);
  corpus.dev = read_split(dir / "dev.bin", corpus.manifest);
  corpus.test = read_split(dir / "test.bin", corpus.manifest);
  check_counts(corpus.train, corpus.manifest, "train.bin",
               &LanguageInfo::train_count);
  check_counts(corpus.dev, corpus.manifest, "dev.bin",
               &LanguageInfo::dev_count);
  check_counts(corpus.test, corpus.manifest, "test.bin",
               &LanguageInfo::test_count);
  return corpus;
}

CorpusSplit split_corpus(const std::vector<Utterance>& utterances,
                         const std::array<double, 3>& fractions,
                         std::uint64_t seed) {
  double sum = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0)) throw ConfigError("split: fractions must be positive");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("split: fractions must sum to 1");
  }
  std::map<std::uint32_t, std::vector<std::size_t>> by_lang;
  for (std::size_t i = 0; i < utterances.size(); ++i) {
    by_lang[utterances[i].lang].push_back(i);
  }
  if (by_lang.empty()) throw ConfigError("split: no utterances");

  Rng rng(seed);
  CorpusSplit out;
  for (auto& [lang, idx] : by_lang) {
    rng.shuffle(idx);
    const std::size_t n = idx.size();
    const auto n_train =
        static_cast<std::size_t>(std::llround(fractions[0] * n));
    const auto n_train_dev = static_cast<std::size_t>(
        std::llround((fractions[0] + fractions[1]) * n));
    const std::size_t n_dev = n_train_dev - n_train;
    const std::size_t n_test = n - n_train_dev;
    if (n_train == 0 || n_dev == 0 || n_test == 0) {
      throw ConfigError("split: a split is empty for language " +
                        std::to_string(lang) + " (" + std::to_string(n) +
                        " utterances)");
    }
    for (std::size_t i = 0; i < n_train; ++i) {
      out.train.push_back(utterances[idx[i]]);
    }
    for (std::size_t i = n_train; i < n_train_dev; ++i) {
      out.dev.push_back(utterances[idx[i]]);
    }
    for (std::size_t i = n_train_dev; i < n; ++i) {
      out.test.push_back(utterances[idx[i]]);
    }
  }
  return out;
}

}  // namespace mladv
