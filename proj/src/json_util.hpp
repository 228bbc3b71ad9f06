// src/json_util.hpp
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

// Strict helpers over nlohmann::json: typed getters plus unknown-key
// rejection, all raising ConfigError with the offending path.

#ifndef MLADV_SRC_JSON_UTIL_HPP_
#define MLADV_SRC_JSON_UTIL_HPP_

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mladv/errors.hpp"

namespace mladv::jsonutil {

using nlohmann::json;

inline void check_object(const json& j, const std::string& ctx) {
  if (!j.is_object()) {
    throw ConfigError(ctx + ": expected a JSON object");
  }
}

inline void reject_unknown_keys(const json& obj,
                                const std::vector<std::string>& allowed,
                                const std::string& ctx) {
  for (const auto& item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) ==
        allowed.end()) {
      throw ConfigError(ctx + ": unknown key '" + item.key() + "'");
    }
  }
}

inline const json& require(const json& obj, const std::string& key,
                           const std::string& ctx) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ConfigError(ctx + ": missing required key '" + key + "'");
  }
  return *it;
}

inline std::uint64_t get_u64(const json& obj, const std::string& key,
                             const std::string& ctx) {
  const json& v = require(obj, key, ctx);
  if (!v.is_number_integer() && !v.is_number_unsigned()) {
    throw ConfigError(ctx + ": key '" + key + "' must be an integer");
  }
  if (v.is_number_integer() && v.get<std::int64_t>() < 0) {
    throw ConfigError(ctx + ": key '" + key + "' must be nonnegative");
  }
  return v.get<std::uint64_t>();
}

inline std::uint64_t get_u64_or(const json& obj, const std::string& key,
                                std::uint64_t fallback,
                                const std::string& ctx) {
  if (!obj.contains(key)) return fallback;
  return get_u64(obj, key, ctx);
}

inline double get_double(const json& obj, const std::string& key,
                         const std::string& ctx) {
  const json& v = require(obj, key, ctx);
  if (!v.is_number()) {
    throw ConfigError(ctx + ": key '" + key + "' must be a number");
  }
  return v.get<double>();
}

inline double get_double_or(const json& obj, const std::string& key,
                            double fallback, const std::string& ctx) {
  if (!obj.contains(key)) return fallback;
  return get_double(obj, key, ctx);
}

inline std::string get_string(const json& obj, const std::string& key,
                              const std::string& ctx) {
  const json& v = require(obj, key, ctx);
  if (!v.is_string()) {
    throw ConfigError(ctx + ": key '" + key + "' must be a string");
  }
  return v.get<std::string>();
}

inline json parse(const std::string& text, const std::string& source) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    throw ConfigError(source + ": invalid JSON");
  }
  return j;
}

}  // namespace mladv::jsonutil

#endif  // MLADV_SRC_JSON_UTIL_HPP_
