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

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtforge/common.hpp"
#include "mtforge/tokenizer.hpp"

// Corpus-level BLEU with modified n-gram precision: matches are clipped per
// segment against that segment's reference and the clipped/total counts are
// summed over the corpus before any division, so the corpus score is not an
// average of segment scores. Single reference per segment.

namespace mtforge {

enum class Smoothing { None, Exp };

struct NgramCounts {
  uint64_t clipped = 0;
  uint64_t total = 0;
};

struct BleuScore {
  std::vector<double> precisions;   // per order, in [0, 1]
  double bp = 1.0;
  double score = 0.0;               // 0..100
  uint64_t sys_len = 0;
  uint64_t ref_len = 0;
  std::vector<NgramCounts> counts;  // per order
  std::string tokenizer_name;       // set by spbleu for provenance

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["score"] = score;
    j["bp"] = bp;
    j["precisions"] = precisions;
    j["sys_len"] = sys_len;
    j["ref_len"] = ref_len;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& c : counts)
      arr.push_back({{"clipped", c.clipped}, {"total", c.total}});
    j["counts"] = std::move(arr);
    if (!tokenizer_name.empty()) j["tokenizer"] = tokenizer_name;
    return j;
  }
};

// Exp smoothing doubles a running denominator scale for every order whose
// clipped count is zero: p_n = 1 / (s * total_n) with s = 2, 4, 8, ...
// An order with a zero *total* count (every hypothesis shorter than n) is
// excluded from the geometric mean entirely, so identity corpora score
// exactly 100 regardless of segment length. An all-empty hypothesis corpus
// scores 0 with bp = 0.
template <typename Token>
BleuScore corpus_bleu(const std::vector<std::vector<Token>>& hyps,
                      const std::vector<std::vector<Token>>& refs, int max_order = 4,
                      Smoothing smoothing = Smoothing::Exp) {
  if (hyps.empty()) throw DataError("corpus_bleu: empty hypothesis list");
  if (hyps.size() != refs.size())
    throw DataError("corpus_bleu: " + std::to_string(hyps.size()) + " hypotheses vs " +
                    std::to_string(refs.size()) + " references");
  if (max_order < 1) throw ConfigError("corpus_bleu: max_order must be positive");

  BleuScore r;
  r.counts.assign(size_t(max_order), {});
  r.precisions.assign(size_t(max_order), 0.0);

  using Gram = std::vector<Token>;
  for (size_t s = 0; s < hyps.size(); ++s) {
    const auto& hyp = hyps[s];
    const auto& ref = refs[s];
    r.sys_len += hyp.size();
    r.ref_len += ref.size();
    for (int n = 1; n <= max_order; ++n) {
      if (hyp.size() < size_t(n)) break;
      std::map<Gram, uint64_t> hyp_grams, ref_grams;
      for (size_t i = 0; i + size_t(n) <= hyp.size(); ++i)
        ++hyp_grams[Gram(hyp.begin() + ptrdiff_t(i), hyp.begin() + ptrdiff_t(i) + n)];
      for (size_t i = 0; i + size_t(n) <= ref.size(); ++i)
        ++ref_grams[Gram(ref.begin() + ptrdiff_t(i), ref.begin() + ptrdiff_t(i) + n)];
      auto& c = r.counts[size_t(n - 1)];
      c.total += hyp.size() - size_t(n) + 1;
      for (const auto& [gram, count] : hyp_grams) {
        auto it = ref_grams.find(gram);
        if (it != ref_grams.end()) c.clipped += std::min(count, it->second);
      }
    }
  }

  uint64_t smooth = 1;
  for (int n = 0; n < max_order; ++n) {
    const auto& c = r.counts[size_t(n)];
    if (c.total == 0) {
      r.precisions[size_t(n)] = 0.0;
    } else if (c.clipped == 0 && smoothing == Smoothing::Exp) {
      smooth *= 2;
      r.precisions[size_t(n)] = 1.0 / (double(smooth) * double(c.total));
    } else {
      r.precisions[size_t(n)] = double(c.clipped) / double(c.total);
    }
  }

  if (r.sys_len == 0) {
    r.bp = 0.0;
    r.score = 0.0;
    return r;
  }
  r.bp = r.sys_len >= r.ref_len
             ? 1.0
             : std::exp(1.0 - double(r.ref_len) / double(r.sys_len));

  double log_sum = 0.0;
  int effective_orders = 0;
  bool zero = false;
  for (int n = 0; n < max_order; ++n) {
    if (r.counts[size_t(n)].total == 0) continue;
    ++effective_orders;
    double p = r.precisions[size_t(n)];
    if (p <= 0.0) {
      zero = true;
      break;
    }
    log_sum += std::log(p);
  }
  r.score = zero || effective_orders == 0
                ? 0.0
                : 100.0 * r.bp * std::exp(log_sum / double(effective_orders));
  return r;
}

/// BLEU over subword-tokenized text: both sides are encoded with the same
/// vocabulary tokenizer, whose name is recorded in the result.
inline BleuScore spbleu(const std::vector<std::string>& hyp_texts,
                        const std::vector<std::string>& ref_texts,
                        const VocabTokenizer& tok, int max_order = 4,
                        Smoothing smoothing = Smoothing::Exp) {
  std::vector<std::vector<VocabTokenizer::TokenId>> hyps, refs;
  hyps.reserve(hyp_texts.size());
  refs.reserve(ref_texts.size());
  for (const auto& t : hyp_texts) hyps.push_back(tok.encode(t));
  for (const auto& t : ref_texts) refs.push_back(tok.encode(t));
  BleuScore score = corpus_bleu(hyps, refs, max_order, smoothing);
  score.tokenizer_name = tok.name();
  return score;
}

}  // namespace mtforge
