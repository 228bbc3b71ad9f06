// src/datasynth_json.hpp
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

#ifndef MLADV_SRC_DATASYNTH_JSON_HPP_
#define MLADV_SRC_DATASYNTH_JSON_HPP_

#include <string>

#include <json.hpp>

#include "mladv/datasynth.hpp"

namespace mladv {

// JSON form of GenSpec, shared by the corpus manifest and the experiment
// config schema. Parsing is strict: unknown keys are rejected.
nlohmann::json gen_spec_to_json(const GenSpec& spec);
GenSpec gen_spec_from_json(const nlohmann::json& j, const std::string& ctx);

}  // namespace mladv

#endif  // MLADV_SRC_DATASYNTH_JSON_HPP_
