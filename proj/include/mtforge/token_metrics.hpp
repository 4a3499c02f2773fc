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

#include <map>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtforge/common.hpp"
#include "mtforge/lang.hpp"
#include "mtforge/tokenizer.hpp"

// Tokenizer-efficiency measurement: how many tokens a non-English sentence
// costs relative to its aligned English counterpart. A ratio above 1 means
// the tokenizer spends more tokens on the non-English side; lower is better.

namespace mtforge {

/// tokens(y) / tokens(x) for one aligned sentence pair.
inline double length_ratio(const VocabTokenizer& tok, std::string_view english,
                           std::string_view other) {
  size_t nx = tok.count(english);
  if (nx == 0)
    throw DataError("length_ratio: English sentence tokenizes to zero tokens");
  return double(tok.count(other)) / double(nx);
}

struct LengthRatioReport {
  std::string tokenizer_name;
  double english_mean_len = 0.0;
  // Mean of per-sentence ratios, per language (the headline number).
  std::map<std::string, double> per_lang_ratio;
  // Secondary aggregation: summed tokens(y) / summed tokens(x). Reported
  // alongside so both averaging conventions are visible in machine output.
  std::map<std::string, double> per_lang_ratio_of_sums;
  double average_ratio = 0.0;  // arithmetic mean of per_lang_ratio values

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["tokenizer"] = tokenizer_name;
    j["english_mean_len"] = english_mean_len;
    j["per_lang_ratio"] = per_lang_ratio;
    j["per_lang_ratio_of_sums"] = per_lang_ratio_of_sums;
    j["average_ratio"] = average_ratio;
    return j;
  }
};

// Sentence-aligned efficiency over a corpus: list i of every language is the
// translation of English sentence i. Misaligned lengths are fatal.
inline LengthRatioReport corpus_efficiency(
    const VocabTokenizer& tok,
    const std::map<std::string, std::vector<std::string>>& aligned,
    const std::vector<std::string>& english, unsigned workers = 1) {
  if (english.empty()) throw DataError("corpus_efficiency: empty English corpus");
  for (const auto& [lang, sents] : aligned)
    if (sents.size() != english.size())
      throw DataError("corpus_efficiency: language '" + lang + "' has " +
                      std::to_string(sents.size()) + " sentences, English has " +
                      std::to_string(english.size()));

  std::vector<size_t> en_counts(english.size());
  for (size_t i = 0; i < english.size(); ++i) {
    en_counts[i] = tok.count(english[i]);
    if (en_counts[i] == 0)
      throw DataError("corpus_efficiency: English sentence " + std::to_string(i) +
                      " tokenizes to zero tokens");
  }

  LengthRatioReport report;
  report.tokenizer_name = tok.name();
  double en_total = 0.0;
  for (size_t c : en_counts) en_total += double(c);
  report.english_mean_len = en_total / double(english.size());

  std::vector<const std::pair<const std::string, std::vector<std::string>>*> items;
  items.reserve(aligned.size());
  for (const auto& kv : aligned) items.push_back(&kv);

  std::vector<std::pair<double, double>> results(items.size());  // (mean ratio, sum ratio)
  auto work = [&](size_t begin, size_t end) {
    for (size_t k = begin; k < end; ++k) {
      const auto& sents = items[k]->second;
      double ratio_sum = 0.0, tok_sum = 0.0;
      for (size_t i = 0; i < sents.size(); ++i) {
        size_t ny = tok.count(sents[i]);
        ratio_sum += double(ny) / double(en_counts[i]);
        tok_sum += double(ny);
      }
      results[k] = {ratio_sum / double(sents.size()), tok_sum / en_total};
    }
  };
  if (workers <= 1 || items.size() <= 1) {
    work(0, items.size());
  } else {
    unsigned n = std::min<size_t>(workers, items.size());
    std::vector<std::thread> pool;
    size_t chunk = (items.size() + n - 1) / n;
    for (unsigned t = 0; t < n; ++t) {
      size_t b = t * chunk, e = std::min(items.size(), b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
  }

  double total = 0.0;
  for (size_t k = 0; k < items.size(); ++k) {
    report.per_lang_ratio[items[k]->first] = results[k].first;
    report.per_lang_ratio_of_sums[items[k]->first] = results[k].second;
    total += results[k].first;
  }
  report.average_ratio = items.empty() ? 0.0 : total / double(items.size());
  return report;
}

// Renders one column per tokenizer: an English mean-length row, one row per
// language, and an Average row. Display values are rounded to 2 decimals;
// use the report JSON for full precision.
inline std::string efficiency_table(const std::vector<LengthRatioReport>& reports,
                                    const Registry& reg = Registry::instance()) {
  if (reports.empty()) throw ConfigError("efficiency_table: no reports");
  const auto& langs = reports.front().per_lang_ratio;
  for (const auto& r : reports) {
    if (r.per_lang_ratio.size() != langs.size())
      throw DataError("efficiency_table: reports cover different language sets");
    for (const auto& [code, _] : r.per_lang_ratio)
      if (!langs.contains(code))
        throw DataError("efficiency_table: language set mismatch at '" + code + "'");
  }

  auto row_label = [&](const std::string& code) {
    const LanguageInfo* info = reg.find(code);
    return info ? std::string(info->name) : code;
  };

  size_t label_w = std::string("English").size();
  for (const auto& [code, _] : langs) label_w = std::max(label_w, row_label(code).size());
  label_w = std::max(label_w, std::string("Average").size());

  std::string out;
  auto cell = [&](const std::string& s, size_t w) {
    out += s;
    out.append(w > s.size() ? w - s.size() : 1, ' ');
  };
  std::vector<size_t> col_w;
  cell("Language", label_w + 2);
  for (const auto& r : reports) {
    col_w.push_back(std::max<size_t>(r.tokenizer_name.size(), 8) + 2);
    cell(r.tokenizer_name, col_w.back());
  }
  out += '\n';
  cell("English", label_w + 2);
  for (size_t c = 0; c < reports.size(); ++c)
    cell(fmt_fixed(reports[c].english_mean_len, 2), col_w[c]);
  out += '\n';
  for (const auto& [code, _] : langs) {
    cell(row_label(code), label_w + 2);
    for (size_t c = 0; c < reports.size(); ++c)
      cell(fmt_fixed(reports[c].per_lang_ratio.at(code), 2), col_w[c]);
    out += '\n';
  }
  cell("Average", label_w + 2);
  for (size_t c = 0; c < reports.size(); ++c)
    cell(fmt_fixed(reports[c].average_ratio, 2), col_w[c]);
  out += '\n';
  return out;
}

}  // namespace mtforge
