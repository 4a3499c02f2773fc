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
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtforge/common.hpp"
#include "mtforge/langid.hpp"
#include "mtforge/records.hpp"

// Bitext cleaning: heuristic filters, language identification against the
// declared tags, and semantic-similarity filtering behind a pluggable
// embedding provider. Every input record is accounted for exactly once:
// kept, dropped with a reason, or errored.

namespace mtforge {

enum class FilterReason {
  OK,
  EMPTY,
  TOO_LONG,
  LENGTH_RATIO,
  DUPLICATE,
  LANGID_SRC,
  LANGID_TGT,
  LOW_SIMILARITY,
  CONTROL_CHARS,
  DIGIT_PUNCT_RATIO,
};

inline std::string_view to_string(FilterReason r) {
  switch (r) {
    case FilterReason::OK: return "OK";
    case FilterReason::EMPTY: return "EMPTY";
    case FilterReason::TOO_LONG: return "TOO_LONG";
    case FilterReason::LENGTH_RATIO: return "LENGTH_RATIO";
    case FilterReason::DUPLICATE: return "DUPLICATE";
    case FilterReason::LANGID_SRC: return "LANGID_SRC";
    case FilterReason::LANGID_TGT: return "LANGID_TGT";
    case FilterReason::LOW_SIMILARITY: return "LOW_SIMILARITY";
    case FilterReason::CONTROL_CHARS: return "CONTROL_CHARS";
    case FilterReason::DIGIT_PUNCT_RATIO: return "DIGIT_PUNCT_RATIO";
  }
  return "?";
}

struct FilterDecision {
  bool kept = false;
  FilterReason reason = FilterReason::OK;
  std::string detail;

  static FilterDecision ok() { return {true, FilterReason::OK, {}}; }
  static FilterDecision drop(FilterReason r, std::string detail = {}) {
    return {false, r, std::move(detail)};
  }
};

struct CleanConfig {
  uint64_t max_chars = 2000;       // per side, in codepoints
  double max_len_ratio = 3.0;      // max(|src|,|tgt|) / min(...) in codepoints
  uint64_t min_chars = 1;          // per side, after trimming
  double langid_min_margin = 0.05;
  double sim_threshold = 0.75;
  bool dedup = true;

  void validate() const {
    if (max_len_ratio < 1.0)
      throw ConfigError("CleanConfig: max_len_ratio must be >= 1");
    if (sim_threshold < 0.0 || sim_threshold > 1.0)
      throw ConfigError("CleanConfig: sim_threshold must be within [0, 1]");
  }

  nlohmann::ordered_json to_json() const {
    return {{"max_chars", max_chars},       {"max_len_ratio", max_len_ratio},
            {"min_chars", min_chars},       {"langid_min_margin", langid_min_margin},
            {"sim_threshold", sim_threshold}, {"dedup", dedup}};
  }

  static CleanConfig from_json(const nlohmann::json& j) {
    CleanConfig c;
    if (j.contains("max_chars")) c.max_chars = j["max_chars"].get<uint64_t>();
    if (j.contains("max_len_ratio")) c.max_len_ratio = j["max_len_ratio"].get<double>();
    if (j.contains("min_chars")) c.min_chars = j["min_chars"].get<uint64_t>();
    if (j.contains("langid_min_margin"))
      c.langid_min_margin = j["langid_min_margin"].get<double>();
    if (j.contains("sim_threshold")) c.sim_threshold = j["sim_threshold"].get<double>();
    if (j.contains("dedup")) c.dedup = j["dedup"].get<bool>();
    c.validate();
    return c;
  }
};

/// Shared dedup state; first record in input order wins.
class DedupSet {
 public:
  bool insert_if_absent(uint64_t h) {
    std::lock_guard lock(mu_);
    return seen_.insert(h).second;
  }
  size_t size() const {
    std::lock_guard lock(mu_);
    return seen_.size();
  }

 private:
  mutable std::mutex mu_;
  std::unordered_set<uint64_t> seen_;
};

/// Dedup key: 64-bit hash of the whitespace-collapsed, case-preserved pair.
/// Case folding is deliberately avoided; casing is meaningful in many target
/// scripts. Texts are hashed as stored (no Unicode normalization).
inline uint64_t pair_dedup_hash(const SentencePair& p) {
  uint64_t h = fnv1a64(collapse_ws(p.src_text));
  h = fnv1a64("\x1f", h);
  return fnv1a64(collapse_ws(p.tgt_text), h);
}

// Rule order is fixed; the first failing rule names the drop reason. The
// dedup hash is inserted only for pairs that pass everything else, keeping
// "first in input order wins" exact.
inline FilterDecision heuristic_filter(const SentencePair& p, const CleanConfig& cfg,
                                       DedupSet& seen) {
  size_t src_trimmed = codepoint_count(trim_ws(p.src_text));
  size_t tgt_trimmed = codepoint_count(trim_ws(p.tgt_text));
  if (src_trimmed < cfg.min_chars || tgt_trimmed < cfg.min_chars)
    return FilterDecision::drop(FilterReason::EMPTY);

  for (const std::string* side : {&p.src_text, &p.tgt_text}) {
    size_t i = 0;
    while (i < side->size()) {
      char32_t cp = utf8_next(*side, i);
      if (is_c0_control_except_tab(cp)) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "U+%04X", unsigned(cp));
        return FilterDecision::drop(FilterReason::CONTROL_CHARS, buf);
      }
    }
  }

  size_t src_len = codepoint_count(p.src_text);
  size_t tgt_len = codepoint_count(p.tgt_text);
  if (src_len > cfg.max_chars || tgt_len > cfg.max_chars)
    return FilterDecision::drop(FilterReason::TOO_LONG);

  for (const std::string* side : {&p.src_text, &p.tgt_text}) {
    size_t dp = 0, total = 0, i = 0;
    while (i < side->size()) {
      char32_t cp = utf8_next(*side, i);
      ++total;
      if (is_digit_punct_cp(cp)) ++dp;
    }
    if (total > 0 && double(dp) / double(total) > 0.5)
      return FilterDecision::drop(FilterReason::DIGIT_PUNCT_RATIO);
  }

  double longer = double(std::max(src_len, tgt_len));
  double shorter = double(std::min(src_len, tgt_len));
  if (longer / shorter > cfg.max_len_ratio)
    return FilterDecision::drop(FilterReason::LENGTH_RATIO,
                                fmt_fixed(longer / shorter, 3));

  if (cfg.dedup && !seen.insert_if_absent(pair_dedup_hash(p)))
    return FilterDecision::drop(FilterReason::DUPLICATE);

  return FilterDecision::ok();
}

// ---------------------------------------------------------------------------
// Embedding providers
// ---------------------------------------------------------------------------

/// Returns a fixed-dimension vector for a text, or nullopt on provider
/// failure (the record is then routed to the error channel, neither kept
/// nor counted as filtered).
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::optional<std::vector<float>> embed(std::string_view text) = 0;
};

inline double cosine(const std::vector<float>& a, const std::vector<float>& b) {
  if (a.size() != b.size()) throw DataError("cosine: dimension mismatch");
  double dot = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += double(a[i]) * b[i];
    na += double(a[i]) * a[i];
    nb += double(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;  // zero vectors carry no signal
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

/// Similarity check for one pair; nullopt when the provider failed.
inline std::optional<FilterDecision> similarity_filter(const SentencePair& p,
                                                       EmbeddingProvider& provider,
                                                       double threshold) {
  auto es = provider.embed(p.src_text);
  if (!es) return std::nullopt;
  auto et = provider.embed(p.tgt_text);
  if (!et) return std::nullopt;
  double c = cosine(*es, *et);
  if (c < threshold)
    return FilterDecision::drop(FilterReason::LOW_SIMILARITY, fmt_fixed(c, 6));
  return FilterDecision::ok();
}

/// Precomputed vectors keyed by the 64-bit content hash of the raw text,
/// one JSONL object {"key": "<16 hex digits>", "vector": [...]} per line.
class PrecomputedEmbeddings final : public EmbeddingProvider {
 public:
  explicit PrecomputedEmbeddings(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open embedding file: " + path);
    std::string line;
    while (std::getline(in, line)) {
      if (trim_ws(line).empty()) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.contains("key") || !j.contains("vector"))
        throw ConfigError("embedding file " + path + ": bad record '" + line + "'");
      vectors_[j["key"].get<std::string>()] = j["vector"].get<std::vector<float>>();
    }
  }

  static std::string key_for(std::string_view text) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(text)));
    return buf;
  }

  std::optional<std::vector<float>> embed(std::string_view text) override {
    auto it = vectors_.find(key_for(text));
    if (it == vectors_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::unordered_map<std::string, std::vector<float>> vectors_;
};

/// Test-only fallback: hashing bag of character 1-3-grams, L2-normalized.
/// Deterministic and cheap, but NOT semantically meaningful; it exists so
/// pipelines can be exercised end to end without a real embedder.
class HashingNgramEmbeddings final : public EmbeddingProvider {
 public:
  explicit HashingNgramEmbeddings(size_t dim = 64) : dim_(dim) {
    if (dim_ == 0) throw ConfigError("HashingNgramEmbeddings: dim must be positive");
  }

  std::optional<std::vector<float>> embed(std::string_view text) override {
    std::vector<float> v(dim_, 0.0f);
    std::unordered_map<std::string, uint64_t> counts;
    detail::count_ngrams(text, counts);
    for (const auto& [gram, c] : counts) v[fnv1a64(gram) % dim_] += float(c);
    double norm = 0;
    for (float x : v) norm += double(x) * x;
    if (norm > 0) {
      float inv = float(1.0 / std::sqrt(norm));
      for (float& x : v) x *= inv;
    }
    return v;
  }

 private:
  size_t dim_;
};

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

struct CleanStats {
  uint64_t total = 0;
  uint64_t errored = 0;
  std::map<FilterReason, uint64_t> by_reason;

  uint64_t kept() const {
    auto it = by_reason.find(FilterReason::OK);
    return it == by_reason.end() ? 0 : it->second;
  }

  /// kept + per-reason drops + errored == total, for any input.
  bool consistent() const {
    uint64_t sum = errored;
    for (const auto& [_, n] : by_reason) sum += n;
    return sum == total;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["total"] = total;
    j["kept"] = kept();
    nlohmann::ordered_json dropped;
    for (const auto& [r, n] : by_reason)
      if (r != FilterReason::OK) dropped[std::string(to_string(r))] = n;
    j["dropped"] = std::move(dropped);
    j["errored"] = errored;
    return j;
  }
};

/// Push-based cleaning pipeline: heuristics, then language ID (both sides
/// must identify as their declared tags with enough margin), then
/// similarity. Pass an empty profile list to skip language ID and a null
/// provider to skip similarity. Kept order is input order.
class CleaningPipeline {
 public:
  CleaningPipeline(CleanConfig cfg, std::vector<LangProfile> profiles = {},
                   EmbeddingProvider* provider = nullptr)
      : cfg_(cfg), profiles_(std::move(profiles)), provider_(provider) {
    cfg_.validate();
  }

  /// Decision for one pair; nullopt means provider failure (errored).
  std::optional<FilterDecision> decide(const SentencePair& p) {
    FilterDecision d = heuristic_filter(p, cfg_, seen_);
    if (!d.kept) return d;
    if (!profiles_.empty()) {
      auto [src_guess, src_margin] = identify_language(p.src_text, profiles_);
      if (src_guess != p.src_lang || src_margin < cfg_.langid_min_margin)
        return FilterDecision::drop(FilterReason::LANGID_SRC,
                                    src_guess + " margin=" + fmt_fixed(src_margin, 4));
      auto [tgt_guess, tgt_margin] = identify_language(p.tgt_text, profiles_);
      if (tgt_guess != p.tgt_lang || tgt_margin < cfg_.langid_min_margin)
        return FilterDecision::drop(FilterReason::LANGID_TGT,
                                    tgt_guess + " margin=" + fmt_fixed(tgt_margin, 4));
    }
    if (provider_) {
      auto sim = similarity_filter(p, *provider_, cfg_.sim_threshold);
      if (!sim) return std::nullopt;
      if (!sim->kept) return sim;
    }
    return FilterDecision::ok();
  }

  /// Applies decide() and updates stats. Returns the decision.
  std::optional<FilterDecision> process(const SentencePair& p) {
    ++stats_.total;
    auto d = decide(p);
    if (!d) ++stats_.errored;
    else ++stats_.by_reason[d->reason];
    return d;
  }

  const CleanStats& stats() const { return stats_; }
  const CleanConfig& config() const { return cfg_; }

 private:
  CleanConfig cfg_;
  std::vector<LangProfile> profiles_;
  EmbeddingProvider* provider_;
  DedupSet seen_;
  CleanStats stats_;
};

struct CleanResult {
  std::vector<SentencePair> kept;
  CleanStats stats;
  std::vector<std::pair<SentencePair, FilterDecision>> quarantined;
  std::vector<SentencePair> errored;
};

inline CleanResult run_pipeline(const std::vector<SentencePair>& pairs,
                                const CleanConfig& cfg,
                                std::vector<LangProfile> profiles = {},
                                EmbeddingProvider* provider = nullptr) {
  CleaningPipeline pipe(cfg, std::move(profiles), provider);
  CleanResult out;
  for (const auto& p : pairs) {
    auto d = pipe.process(p);
    if (!d) out.errored.push_back(p);
    else if (d->kept) out.kept.push_back(p);
    else out.quarantined.emplace_back(p, *d);
  }
  out.stats = pipe.stats();
  return out;
}

}  // namespace mtforge
