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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtforge/common.hpp"
#include "mtforge/lang.hpp"
#include "mtforge/random.hpp"

// Instruction-tuning set construction: pool candidate translations per
// source segment, keep the argmax under a reference-free quality metric,
// drop anything below a score threshold, and render instruction records.
// Candidate generation happens elsewhere; candidates arrive as data, which
// keeps this module deterministic and offline-testable.

namespace mtforge {

struct Candidate {
  std::string text;
  std::string generator;
  std::map<std::string, double> scores;
};

struct CandidateSet {
  Direction direction;
  std::string src_text;
  std::vector<Candidate> candidates;

  static CandidateSet from_json(const nlohmann::json& j) {
    CandidateSet cs;
    cs.direction = Direction::parse(j.at("direction").get<std::string>());
    cs.src_text = j.at("src_text").get<std::string>();
    for (const auto& cj : j.at("candidates")) {
      Candidate c;
      c.text = cj.at("text").get<std::string>();
      if (cj.contains("generator")) c.generator = cj["generator"].get<std::string>();
      for (const auto& [k, v] : cj.at("scores").items()) c.scores[k] = v.get<double>();
      cs.candidates.push_back(std::move(c));
    }
    return cs;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["direction"] = direction.str();
    j["src_text"] = src_text;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& c : candidates)
      arr.push_back({{"text", c.text}, {"generator", c.generator}, {"scores", c.scores}});
    j["candidates"] = std::move(arr);
    return j;
  }
};

/// Which metric picks the winner and where the keep threshold sits.
/// metric is a single score name or "mean(a,b)" for the arithmetic mean of
/// two named scores. Ties go to the lowest candidate index.
struct SelectionPolicy {
  std::string metric = "mean(xcomet,cometkiwi)";
  double tau = 0.85;

  /// Resolves the policy metric on one candidate; names the candidate and
  /// the missing score on failure.
  double resolve(const Candidate& c, size_t index) const {
    auto lookup = [&](std::string_view name) {
      auto it = c.scores.find(std::string(name));
      if (it == c.scores.end())
        throw DataError("candidate " + std::to_string(index) + " has no score '" +
                        std::string(name) + "' required by metric '" + metric + "'");
      return it->second;
    };
    std::string_view m = metric;
    if (m.starts_with("mean(") && m.ends_with(")")) {
      auto inner = m.substr(5, m.size() - 6);
      auto comma = inner.find(',');
      if (comma == std::string_view::npos)
        throw ConfigError("selection metric '" + metric + "': expected mean(a,b)");
      return 0.5 * (lookup(trim_ws(inner.substr(0, comma))) +
                    lookup(trim_ws(inner.substr(comma + 1))));
    }
    return lookup(m);
  }

  nlohmann::ordered_json to_json() const {
    return {{"metric", metric}, {"tau", tau}};
  }
};

/// Argmax of the policy metric; ties resolved to the lowest index.
inline std::pair<size_t, double> select_best(const CandidateSet& cs,
                                             const SelectionPolicy& policy) {
  if (cs.candidates.empty())
    throw DataError("select_best: no candidates for '" + cs.direction.str() + "'");
  size_t best = 0;
  double best_score = policy.resolve(cs.candidates[0], 0);
  for (size_t i = 1; i < cs.candidates.size(); ++i) {
    double s = policy.resolve(cs.candidates[i], i);
    if (s > best_score) {
      best = i;
      best_score = s;
    }
  }
  return {best, best_score};
}

/// Boundary-inclusive: a score exactly at the threshold is kept.
inline bool threshold_filter(double score, double tau) { return score >= tau; }

// The instruction template, byte-exact:
//   Translate this from {S} to {T}:\n{S}: {src}\n{T}:
// The target sentence, when supplied, is appended directly after the final
// colon with no separator (training form); without it this is the inference
// form the model completes.
inline std::string format_instruction(const Direction& d, std::string_view src,
                                      std::optional<std::string_view> tgt = {},
                                      const Registry& reg = Registry::instance()) {
  std::string s(reg.display_name(d.src));
  std::string t(reg.display_name(d.tgt));
  std::string out = "Translate this from " + s + " to " + t + ":\n" + s + ": ";
  out += src;
  out += "\n" + t + ":";
  if (tgt) out += *tgt;
  return out;
}

/// Splits a training-form instruction back into (inference form, completion).
/// The completion is everything after the final "\n{T}:" line start.
inline std::pair<std::string, std::string> split_instruction(std::string_view rendered,
                                                             const Direction& d,
                                                             const Registry& reg = Registry::instance()) {
  std::string marker = "\n" + std::string(reg.display_name(d.tgt)) + ":";
  size_t pos = rendered.rfind(marker);
  if (pos == std::string_view::npos)
    throw DataError("split_instruction: no target line for direction " + d.str());
  size_t cut = pos + marker.size();
  return {std::string(rendered.substr(0, cut)), std::string(rendered.substr(cut))};
}

struct SftRecord {
  Direction direction;
  std::string prompt;      // inference form
  std::string completion;  // target sentence
  double score = 0.0;
  std::string generator;

  nlohmann::ordered_json to_json() const {
    return {{"prompt", prompt},
            {"completion", completion},
            {"direction", direction.str()},
            {"score", score},
            {"generator", generator}};
  }

  static SftRecord from_json(const nlohmann::json& j) {
    SftRecord r;
    r.prompt = j.at("prompt").get<std::string>();
    r.completion = j.at("completion").get<std::string>();
    r.direction = Direction::parse(j.at("direction").get<std::string>());
    r.score = j.at("score").get<double>();
    if (j.contains("generator")) r.generator = j["generator"].get<std::string>();
    return r;
  }
};

/// Per-direction counts plus the English-centric / Chinese-centric shares.
/// The two shares overlap exactly by the en<->zhs directions.
struct DistributionReport {
  std::map<std::string, uint64_t> per_direction;  // "src->tgt" -> count
  uint64_t total = 0;

  void add(const Direction& d, uint64_t k = 1) {
    per_direction[d.str()] += k;
    total += k;
  }

  void merge(const DistributionReport& other) {
    for (const auto& [dir, n] : other.per_direction) per_direction[dir] += n;
    total += other.total;
  }

  size_t direction_count() const { return per_direction.size(); }

  uint64_t count_matching(std::string_view lang) const {
    uint64_t n = 0;
    for (const auto& [dir, c] : per_direction) {
      Direction d = Direction::parse(dir);
      if (d.src == lang || d.tgt == lang) n += c;
    }
    return n;
  }

  double share_of(std::string_view lang) const {
    return total == 0 ? 0.0 : 100.0 * double(count_matching(lang)) / double(total);
  }

  double english_centric_share() const { return share_of("en"); }
  double zhs_centric_share() const { return share_of("zhs"); }

  /// Records counted by both shares: en->zhs plus zhs->en.
  uint64_t en_zhs_overlap() const {
    uint64_t n = 0;
    if (auto it = per_direction.find("en->zhs"); it != per_direction.end()) n += it->second;
    if (auto it = per_direction.find("zhs->en"); it != per_direction.end()) n += it->second;
    return n;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["total"] = total;
    j["direction_count"] = direction_count();
    j["english_centric_share"] = english_centric_share();
    j["zhs_centric_share"] = zhs_centric_share();
    j["en_zhs_overlap"] = en_zhs_overlap();
    j["per_direction"] = per_direction;
    return j;
  }

  /// Three column-pairs of "direction  count", descending by count, the
  /// usual compact layout for long direction lists.
  std::string render_table() const {
    std::vector<std::pair<std::string, uint64_t>> rows(per_direction.begin(),
                                                       per_direction.end());
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    const size_t cols = 3;
    size_t height = (rows.size() + cols - 1) / cols;
    std::string out = "Direction  Count";
    for (size_t c = 1; c < cols; ++c) out += "    |  Direction  Count";
    out += '\n';
    for (size_t r = 0; r < height; ++r) {
      for (size_t c = 0; c < cols; ++c) {
        size_t i = c * height + r;
        if (i >= rows.size()) continue;
        char buf[64];
        std::snprintf(buf, sizeof buf, "%s%-10s %6llu", c == 0 ? "" : "    |  ",
                      rows[i].first.c_str(),
                      static_cast<unsigned long long>(rows[i].second));
        out += buf;
      }
      out += '\n';
    }
    return out;
  }
};

/// One candidate set in, one of three outcomes out.
struct SftOutcome {
  std::optional<SftRecord> record;  // emitted
  bool below_threshold = false;     // selected but dropped by tau
  std::optional<std::string> error; // malformed set / missing score
};

class SftBuilder {
 public:
  explicit SftBuilder(SelectionPolicy policy, const Registry& reg = Registry::instance())
      : policy_(std::move(policy)), reg_(reg) {}

  SftOutcome process(const CandidateSet& cs) {
    ++seen_;
    SftOutcome out;
    try {
      auto [idx, score] = select_best(cs, policy_);
      if (!threshold_filter(score, policy_.tau)) {
        out.below_threshold = true;
        ++thresholded_;
        return out;
      }
      const Candidate& c = cs.candidates[idx];
      if (trim_ws(c.text).empty()) throw DataError("selected candidate has empty text");
      SftRecord r;
      r.direction = cs.direction;
      r.prompt = format_instruction(cs.direction, cs.src_text, std::nullopt, reg_);
      r.completion = c.text;
      r.score = score;
      r.generator = c.generator;
      report_.add(cs.direction);
      out.record = std::move(r);
    } catch (const DataError& e) {
      out.error = e.what();
      ++errored_;
    }
    return out;
  }

  const DistributionReport& report() const { return report_; }
  uint64_t seen() const { return seen_; }
  uint64_t thresholded() const { return thresholded_; }
  uint64_t errored() const { return errored_; }

  /// emitted + below-threshold + errored == seen
  bool consistent() const {
    return report_.total + thresholded_ + errored_ == seen_;
  }

 private:
  SelectionPolicy policy_;
  const Registry& reg_;
  DistributionReport report_;
  uint64_t seen_ = 0, thresholded_ = 0, errored_ = 0;
};

struct BuildSftResult {
  std::vector<SftRecord> records;
  DistributionReport report;
  uint64_t below_threshold = 0;
  uint64_t errored = 0;
};

inline BuildSftResult build_sft(const std::vector<CandidateSet>& sets,
                                const SelectionPolicy& policy,
                                const Registry& reg = Registry::instance()) {
  SftBuilder builder(policy, reg);
  BuildSftResult out;
  for (const auto& cs : sets) {
    auto o = builder.process(cs);
    if (o.record) out.records.push_back(std::move(*o.record));
  }
  out.report = builder.report();
  out.below_threshold = builder.thresholded();
  out.errored = builder.errored();
  return out;
}

/// Seeded uniform sampling without replacement for several sizes at once:
/// one shuffled order, prefix-taken, so smaller samples nest inside larger
/// ones and scaling runs stay monotone.
inline std::vector<std::vector<size_t>> sample_nested(size_t total,
                                                      const std::vector<size_t>& sizes,
                                                      uint64_t seed) {
  for (size_t s : sizes)
    if (s > total)
      throw DataError("sample size " + std::to_string(s) + " exceeds population " +
                      std::to_string(total));
  auto order = shuffled_indices(total, seed);
  std::vector<std::vector<size_t>> out;
  out.reserve(sizes.size());
  for (size_t s : sizes)
    out.emplace_back(order.begin(), order.begin() + ptrdiff_t(s));
  return out;
}

}  // namespace mtforge
