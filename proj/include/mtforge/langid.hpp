/*
 * Copyright 2026 the mtforge authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtforge/common.hpp"

// Character n-gram language identification, rank-profile style: a language
// is summarized by the frequency ranks of its top-K character 1-3-grams and
// text is classified by out-of-place rank distance against each profile.
// Self-contained and deterministic; an external classifier can be slotted in
// behind the same call shape where higher accuracy is needed.

namespace mtforge {

struct LangProfile {
  std::string lang;
  uint32_t k = 0;
  std::unordered_map<std::string, uint32_t> rank;  // n-gram -> dense rank 1..k
};

namespace detail {

// Codepoint-level n-grams for n in {1,2,3}, counted over the raw text.
inline void count_ngrams(std::string_view text,
                         std::unordered_map<std::string, uint64_t>& counts) {
  std::vector<size_t> starts;
  size_t i = 0;
  while (i < text.size()) {
    starts.push_back(i);
    utf8_next(text, i);
  }
  starts.push_back(text.size());
  size_t cps = starts.size() - 1;
  for (size_t a = 0; a < cps; ++a)
    for (size_t n = 1; n <= 3 && a + n <= cps; ++n)
      counts[std::string(text.substr(starts[a], starts[a + n] - starts[a]))] += 1;
}

inline std::vector<std::pair<std::string, uint32_t>> rank_top_k(
    std::unordered_map<std::string, uint64_t>& counts, uint32_t k) {
  std::vector<std::pair<std::string, uint64_t>> items(counts.begin(), counts.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;  // ties broken lexicographically
  });
  if (items.size() > k) items.resize(k);
  std::vector<std::pair<std::string, uint32_t>> ranked;
  ranked.reserve(items.size());
  uint32_t r = 1;
  for (auto& [gram, _] : items) ranked.emplace_back(std::move(gram), r++);
  return ranked;
}

}  // namespace detail

/// Builds one profile per language from its sample texts. K is shared by
/// all profiles; ranks are dense 1..K (fewer when there are fewer distinct
/// n-grams).
inline std::vector<LangProfile> train_langid(
    const std::map<std::string, std::vector<std::string>>& samples, uint32_t k) {
  if (samples.empty()) throw ConfigError("train_langid: no sample languages");
  if (k < 50) throw ConfigError("train_langid: K must be at least 50");
  std::vector<LangProfile> profiles;
  profiles.reserve(samples.size());
  for (const auto& [lang, texts] : samples) {
    std::unordered_map<std::string, uint64_t> counts;
    bool nonempty = false;
    for (const auto& t : texts) {
      if (!trim_ws(t).empty()) nonempty = true;
      detail::count_ngrams(t, counts);
    }
    if (!nonempty)
      throw ConfigError("train_langid: language '" + lang + "' has no nonempty sample");
    LangProfile p;
    p.lang = lang;
    p.k = k;
    for (auto& [gram, rank] : detail::rank_top_k(counts, k)) p.rank.emplace(gram, rank);
    profiles.push_back(std::move(p));
  }
  return profiles;
}

/// Classifies text by out-of-place distance; returns the winning language
/// and the margin (second_best - best) / second_best. A single profile wins
/// with margin 1.
inline std::pair<std::string, double> identify_language(
    std::string_view text, const std::vector<LangProfile>& profiles) {
  if (profiles.empty()) throw ConfigError("identify_language: no profiles");
  if (trim_ws(text).empty()) throw DataError("identify_language: empty text");

  uint32_t k = profiles.front().k;
  std::unordered_map<std::string, uint64_t> counts;
  detail::count_ngrams(text, counts);
  auto text_ranks = detail::rank_top_k(counts, k);

  std::vector<std::pair<uint64_t, std::string_view>> scored;
  scored.reserve(profiles.size());
  for (const auto& p : profiles) {
    uint64_t dist = 0;
    for (const auto& [gram, text_rank] : text_ranks) {
      auto it = p.rank.find(gram);
      uint64_t prof_rank = it == p.rank.end() ? uint64_t(p.k) + 1 : it->second;
      dist += prof_rank > text_rank ? prof_rank - text_rank : text_rank - prof_rank;
    }
    scored.emplace_back(dist, p.lang);
  }
  std::sort(scored.begin(), scored.end());
  if (scored.size() == 1) return {std::string(scored[0].second), 1.0};
  uint64_t best = scored[0].first, second = scored[1].first;
  double margin = second == 0 ? 0.0 : double(second - best) / double(second);
  return {std::string(scored[0].second), margin};
}

inline nlohmann::ordered_json profiles_to_json(const std::vector<LangProfile>& profiles) {
  nlohmann::ordered_json j;
  j["k"] = profiles.empty() ? 0 : profiles.front().k;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& p : profiles) {
    std::map<std::string, uint32_t> ordered(p.rank.begin(), p.rank.end());
    arr.push_back({{"lang", p.lang}, {"ngrams", ordered}});
  }
  j["profiles"] = std::move(arr);
  return j;
}

inline std::vector<LangProfile> profiles_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("k") || !j.contains("profiles"))
    throw ConfigError("language profiles: expected {k, profiles}");
  uint32_t k = j["k"].get<uint32_t>();
  std::vector<LangProfile> out;
  for (const auto& pj : j["profiles"]) {
    LangProfile p;
    p.lang = pj.at("lang").get<std::string>();
    p.k = k;
    for (const auto& [gram, rank] : pj.at("ngrams").items())
      p.rank.emplace(gram, rank.get<uint32_t>());
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace mtforge
