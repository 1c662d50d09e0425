/**
 * Copyright (C) 2026 The reluwave authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <json.hpp>

#include "reluwave/statistics.hpp"

namespace reluwave {

// JSON encoding of a statistical profile. Keys are the string encodings of
// FilterKey/AggregateKey/GramKey documented in the README; nlohmann objects
// keep keys sorted, so serialization is byte-stable across runs.

inline nlohmann::json to_json(const PixelStats& s) {
  return {{"mean", s.mean},     {"variance", s.variance}, {"skewness", s.skewness},
          {"kurtosis", s.kurtosis}, {"min", s.min},       {"max", s.max}};
}

inline nlohmann::json to_json(const GramMatrix& g) {
  nlohmann::json index = nlohmann::json::array();
  for (const auto& key : g.index) index.push_back(key.str());
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index a = 0; a < g.values.rows(); ++a) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index b = 0; b < g.values.cols(); ++b) row.push_back(g.values(a, b));
    rows.push_back(std::move(row));
  }
  return {{"index", std::move(index)}, {"values", std::move(rows)}};
}

inline nlohmann::json to_json(const StatProfile& p) {
  nlohmann::json j;
  j["s0"] = to_json(p.s0);
  j["s1"] = {{"var_low", p.s1.var_low},
             {"var_high", p.s1.var_high},
             {"gram", to_json(p.s1.gram)}};
  if (p.s2) {
    nlohmann::json vl, vh, vr;
    for (const auto& [k, v] : p.s2->var_low) vl[k.str()] = v;
    for (const auto& [k, v] : p.s2->var_high) vh[k.str()] = v;
    for (const auto& [k, v] : p.s2->var_residual) vr[k.str()] = v;
    j["s2"] = {{"var_low", std::move(vl)},
               {"var_high", std::move(vh)},
               {"var_residual", std::move(vr)},
               {"gram", to_json(p.s2->gram)}};
  }
  return j;
}

}  // namespace reluwave
