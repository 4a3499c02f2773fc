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
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtforge/common.hpp"
#include "mtforge/lang.hpp"
#include "mtforge/random.hpp"
#include "mtforge/records.hpp"
#include "mtforge/tokenizer.hpp"

// Parallel-first monolingual-second mix planning. Each language targets a
// budget of n tokens, filled from its English-centric and Chinese-centric
// parallel pools first; monolingual text covers the shortfall and an extra
// 0.1n is always attempted on top for long-context coverage. All arithmetic
// is in integer tokens.

namespace mtforge {

/// One corpus pool: how many tokens it can supply. A pool that never
/// saturated across the observed budgets is only a lower bound
/// ("unbounded-for-tested-budgets") and planning treats it as unlimited.
struct PoolCap {
  uint64_t tokens = 0;
  bool saturated = true;  // false: lower bound only

  uint64_t effective() const { return saturated ? tokens : UINT64_MAX / 2; }
};

struct Availability {
  std::string lang;
  PoolCap mono;
  std::optional<PoolCap> en_par;  // absent for "en" (no self pool)
  std::optional<PoolCap> zh_par;  // absent for "zhs"
};

struct Allocation {
  std::string lang;
  uint64_t budget_n = 0;
  uint64_t mono_alloc = 0;
  uint64_t en_par_alloc = 0;
  uint64_t zh_par_alloc = 0;

  uint64_t total() const { return mono_alloc + en_par_alloc + zh_par_alloc; }
};

// Per-language allocation rule. Non-pivot languages target a half/half
// en/zh split: the zh pool is capped first at n/2 (remainder of an odd n
// goes to en), the en pool fills the rest, and a second pass lets zh absorb
// any en shortfall. Whatever parallel cannot cover is made up with
// monolingual tokens, plus the unconditional 0.1n long-context add-on, both
// against the single monolingual cap.
inline Allocation plan_language(uint64_t n, const Availability& a) {
  Allocation out;
  out.lang = a.lang;
  out.budget_n = n;
  if (n == 0) return out;

  if (!a.en_par.has_value() || !a.zh_par.has_value()) {
    // Pivot language: a single parallel pool exists.
    uint64_t cap = a.en_par ? a.en_par->effective() : a.zh_par->effective();
    uint64_t alloc = std::min(cap, n);
    (a.en_par ? out.en_par_alloc : out.zh_par_alloc) = alloc;
  } else {
    uint64_t zh0 = std::min(a.zh_par->effective(), n / 2);
    out.en_par_alloc = std::min(a.en_par->effective(), n - zh0);
    out.zh_par_alloc = std::min(a.zh_par->effective(), n - out.en_par_alloc);
  }
  uint64_t shortfall = n - out.en_par_alloc - out.zh_par_alloc;
  out.mono_alloc = std::min(a.mono.effective(), n / 10 + shortfall);
  return out;
}

struct MixPlan {
  uint64_t budget_n = 0;
  std::map<std::string, Allocation> allocations;
  nlohmann::ordered_json training_meta;  // opaque echo, never interpreted

  uint64_t total_tokens() const {
    uint64_t t = 0;
    for (const auto& [_, a] : allocations) t += a.total();
    return t;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["budget_tokens"] = budget_n;
    nlohmann::ordered_json rows;
    for (const auto& [lang, a] : allocations) {
      rows[lang] = {{"mono", a.mono_alloc},
                    {"en_parallel", a.en_par_alloc},
                    {"zh_parallel", a.zh_par_alloc}};
    }
    j["allocations"] = std::move(rows);
    j["total_tokens"] = total_tokens();
    if (!training_meta.is_null()) j["training_meta"] = training_meta;
    return j;
  }

  static MixPlan from_json(const nlohmann::json& j) {
    MixPlan p;
    p.budget_n = j.at("budget_tokens").get<uint64_t>();
    for (const auto& [lang, row] : j.at("allocations").items()) {
      Allocation a;
      a.lang = lang;
      a.budget_n = p.budget_n;
      a.mono_alloc = row.at("mono").get<uint64_t>();
      a.en_par_alloc = row.at("en_parallel").get<uint64_t>();
      a.zh_par_alloc = row.at("zh_parallel").get<uint64_t>();
      p.allocations.emplace(lang, std::move(a));
    }
    if (j.contains("training_meta")) p.training_meta = j["training_meta"];
    return p;
  }
};

/// Plans every registry language; a language missing from the availability
/// map is fatal.
inline MixPlan plan_mix(uint64_t n, const std::map<std::string, Availability>& avail,
                        const Registry& reg = Registry::instance()) {
  MixPlan plan;
  plan.budget_n = n;
  for (const auto& info : reg.all()) {
    auto it = avail.find(std::string(info.code));
    if (it == avail.end())
      throw ConfigError("plan_mix: no availability for language '" +
                        std::string(info.code) + "'");
    plan.allocations.emplace(std::string(info.code), plan_language(n, it->second));
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Availability inference from published allocation tables
// ---------------------------------------------------------------------------

struct PublishedRow {
  std::optional<uint64_t> mono, en_par, zh_par;
};

struct PublishedTable {
  uint64_t budget = 0;
  std::map<std::string, PublishedRow> rows;
};

/// Reads a table in the layout
///   #budget_tokens=<n>
///   lang<TAB>mono<TAB>en_parallel<TAB>zh_parallel
/// with "-" marking an absent pool.
inline PublishedTable load_published_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open allocation table: " + path);
  PublishedTable t;
  std::string line;
  uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.starts_with("#budget_tokens=")) {
      t.budget = std::stoull(line.substr(15));
      continue;
    }
    if (line.empty() || line.starts_with("lang\t") || line.starts_with("#")) continue;
    auto cols = split(line, '\t');
    if (cols.size() != 4)
      throw DataError(path + ":" + std::to_string(line_no) + ": expected 4 columns");
    auto cell = [&](std::string_view v) -> std::optional<uint64_t> {
      if (v == "-") return std::nullopt;
      return std::stoull(std::string(v));
    };
    t.rows[std::string(cols[0])] = {cell(cols[1]), cell(cols[2]), cell(cols[3])};
  }
  if (t.budget == 0) throw DataError(path + ": missing #budget_tokens header");
  return t;
}

struct AvailabilityEstimate {
  std::map<std::string, Availability> availability;
  std::vector<std::string> warnings;
};

// Brute-force availability oracle over a set of published tables: per
// language and pool, the cap is the maximum allocation observed across
// budgets. A pool whose allocation still meets its planning target at the
// largest budget never revealed its cap; it is flagged unsaturated (lower
// bound). Saturated pools whose observations decrease with the budget
// beyond jitter produce warnings.
inline AvailabilityEstimate infer_availability(std::vector<PublishedTable> tables) {
  if (tables.empty()) throw ConfigError("infer_availability: no tables");
  std::sort(tables.begin(), tables.end(),
            [](const auto& a, const auto& b) { return a.budget < b.budget; });
  const PublishedTable& largest = tables.back();

  AvailabilityEstimate out;
  for (const auto& [lang, first_row] : tables.front().rows) {
    Availability a;
    a.lang = lang;
    auto observe = [&](auto member) {
      std::optional<uint64_t> best;
      for (const auto& t : tables) {
        auto it = t.rows.find(lang);
        if (it == t.rows.end())
          throw DataError("infer_availability: language '" + lang +
                          "' missing from the " + std::to_string(t.budget) + " table");
        const std::optional<uint64_t>& v = it->second.*member;
        if (v) best = best ? std::max(*best, *v) : *v;
      }
      return best;
    };
    auto mono_max = observe(&PublishedRow::mono);
    auto en_max = observe(&PublishedRow::en_par);
    auto zh_max = observe(&PublishedRow::zh_par);
    a.mono = {mono_max.value_or(0), true};
    if (en_max) a.en_par = PoolCap{*en_max, true};
    if (zh_max) a.zh_par = PoolCap{*zh_max, true};

    // Unbounded test: does lifting this pool's cap change its allocation at
    // the largest budget? Jitter band max(0.1%, 2000 tokens).
    auto near = [](uint64_t x, uint64_t y) {
      uint64_t diff = x > y ? x - y : y - x;
      return diff <= std::max<uint64_t>(uint64_t(0.001 * double(std::max(x, y))), 2000);
    };
    auto probe = [&](PoolCap& pool) {
      Allocation capped = plan_language(largest.budget, a);
      PoolCap saved = pool;
      pool.saturated = false;
      Allocation lifted = plan_language(largest.budget, a);
      pool = saved;
      auto pick = [&](const Allocation& al) {
        if (&pool == &a.mono) return al.mono_alloc;
        if (a.en_par && &pool == &*a.en_par) return al.en_par_alloc;
        return al.zh_par_alloc;
      };
      if (near(pick(capped), pick(lifted))) pool.saturated = false;
    };
    if (a.en_par) probe(*a.en_par);
    if (a.zh_par) probe(*a.zh_par);
    probe(a.mono);  // last: its target depends on the parallel flags

    // Saturated pools should be nondecreasing in the budget.
    auto monotone_check = [&](auto member, const PoolCap* pool, const char* name) {
      if (!pool || !pool->saturated) return;
      std::optional<uint64_t> prev;
      uint64_t prev_budget = 0;
      for (const auto& t : tables) {
        const std::optional<uint64_t>& v = t.rows.at(lang).*member;
        if (!v) continue;
        if (prev && *v + std::max<uint64_t>(uint64_t(0.001 * double(*prev)), 2000) < *prev) {
          out.warnings.push_back(lang + " " + name + ": allocation decreases from " +
                                 std::to_string(*prev) + " (n=" + std::to_string(prev_budget) +
                                 ") to " + std::to_string(*v) + " (n=" +
                                 std::to_string(t.budget) + ")");
        }
        prev = *v;
        prev_budget = t.budget;
      }
    };
    monotone_check(&PublishedRow::mono, &a.mono, "mono");
    monotone_check(&PublishedRow::en_par, a.en_par ? &*a.en_par : nullptr, "en_parallel");
    monotone_check(&PublishedRow::zh_par, a.zh_par ? &*a.zh_par : nullptr, "zh_parallel");

    (void)first_row;
    out.availability.emplace(lang, std::move(a));
  }
  return out;
}

inline nlohmann::ordered_json availability_to_json(
    const std::map<std::string, Availability>& avail) {
  nlohmann::ordered_json j;
  for (const auto& [lang, a] : avail) {
    nlohmann::ordered_json row;
    auto pool = [](const PoolCap& c) {
      return nlohmann::ordered_json{{"tokens", c.tokens}, {"saturated", c.saturated}};
    };
    row["mono"] = pool(a.mono);
    if (a.en_par) row["en_parallel"] = pool(*a.en_par);
    if (a.zh_par) row["zh_parallel"] = pool(*a.zh_par);
    j[lang] = std::move(row);
  }
  return j;
}

inline std::map<std::string, Availability> availability_from_json(const nlohmann::json& j) {
  std::map<std::string, Availability> out;
  for (const auto& [lang, row] : j.items()) {
    Availability a;
    a.lang = lang;
    auto pool = [](const nlohmann::json& p) -> PoolCap {
      if (p.is_number_unsigned()) return {p.get<uint64_t>(), true};
      return {p.at("tokens").get<uint64_t>(),
              p.contains("saturated") ? p["saturated"].get<bool>() : true};
    };
    a.mono = pool(row.at("mono"));
    if (row.contains("en_parallel")) a.en_par = pool(row["en_parallel"]);
    if (row.contains("zh_parallel")) a.zh_par = pool(row["zh_parallel"]);
    out.emplace(lang, std::move(a));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Materialization
// ---------------------------------------------------------------------------

enum class Pool { Mono, EnParallel, ZhParallel };

inline std::string_view to_string(Pool p) {
  switch (p) {
    case Pool::Mono: return "mono";
    case Pool::EnParallel: return "en_parallel";
    case Pool::ZhParallel: return "zh_parallel";
  }
  return "?";
}

/// Where the cleaned records of one (language, pool) live.
struct CorpusLocator {
  std::string lang;
  Pool pool;
  std::string file;  // JSONL; monolingual or pair records
};

struct ManifestEntry {
  std::string lang;
  Pool pool;
  std::string file;
  uint64_t index = 0;   // record index within the file
  uint64_t tokens = 0;

  nlohmann::ordered_json to_json() const {
    return {{"lang", lang}, {"pool", std::string(to_string(pool))},
            {"file", file}, {"index", index},  {"tokens", tokens}};
  }
};

struct PoolOutcome {
  uint64_t target = 0;
  uint64_t achieved = 0;
  uint64_t records = 0;
  bool exhausted = false;  // pool ran out before reaching the target

  uint64_t overshoot() const { return achieved > target ? achieved - target : 0; }
};

struct MaterializeResult {
  std::vector<ManifestEntry> entries;
  std::map<std::pair<std::string, Pool>, PoolOutcome> outcomes;
  std::vector<std::string> warnings;
};

// Deterministic sampling against a plan: per pool, walk a seeded shuffle of
// the file's records and stop as soon as the cumulative token count reaches
// the allocation. Document-boundary overshoot is allowed and reported. The
// manifest references (file, index); it never copies text.
inline MaterializeResult materialize(const MixPlan& plan,
                                     const std::vector<CorpusLocator>& corpora,
                                     const VocabTokenizer& tok, uint64_t seed) {
  MaterializeResult result;
  for (const auto& loc : corpora) {
    auto it = plan.allocations.find(loc.lang);
    if (it == plan.allocations.end())
      throw ConfigError("materialize: plan has no language '" + loc.lang + "'");
    uint64_t target = loc.pool == Pool::Mono        ? it->second.mono_alloc
                      : loc.pool == Pool::EnParallel ? it->second.en_par_alloc
                                                     : it->second.zh_par_alloc;
    PoolOutcome outcome;
    outcome.target = target;
    if (target == 0) {
      result.outcomes.emplace(std::make_pair(loc.lang, loc.pool), outcome);
      continue;
    }

    // Token cost per record: the stored count when present, otherwise a
    // fresh count under the supplied tokenizer (pairs cost both sides).
    std::vector<uint64_t> costs;
    {
      std::ifstream in(loc.file, std::ios::binary);
      if (!in) throw ConfigError("materialize: cannot open " + loc.file);
      std::string line;
      while (std::getline(in, line)) {
        if (trim_ws(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded())
          throw DataError("materialize: bad JSONL in " + loc.file);
        if (j.contains("token_count") && j["token_count"].is_number_unsigned())
          costs.push_back(j["token_count"].get<uint64_t>());
        else if (j.contains("text"))
          costs.push_back(tok.count(j["text"].get<std::string>()));
        else if (j.contains("src_text") && j.contains("tgt_text"))
          costs.push_back(tok.count(j["src_text"].get<std::string>()) +
                          tok.count(j["tgt_text"].get<std::string>()));
        else
          throw DataError("materialize: record without text in " + loc.file);
      }
    }

    auto order = shuffled_indices(
        costs.size(), derive_seed(seed, loc.lang, to_string(loc.pool)));
    for (size_t idx : order) {
      if (outcome.achieved >= target) break;
      result.entries.push_back({loc.lang, loc.pool, loc.file, idx, costs[idx]});
      outcome.achieved += costs[idx];
      ++outcome.records;
    }
    if (outcome.achieved < target) {
      outcome.exhausted = true;
      result.warnings.push_back(loc.lang + "/" + std::string(to_string(loc.pool)) +
                                ": pool exhausted at " + std::to_string(outcome.achieved) +
                                " of " + std::to_string(target) + " tokens");
    }
    result.outcomes.emplace(std::make_pair(loc.lang, loc.pool), outcome);
  }
  return result;
}

}  // namespace mtforge
