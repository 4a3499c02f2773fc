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
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtforge/common.hpp"
#include "mtforge/lang.hpp"
#include "mtforge/random.hpp"

// Evaluation protocol pieces: few-shot prompt construction, ingestion of
// externally computed metric scores, quality-flag filtering, and
// direction-group averaging into leaderboard-style tables. Neural metrics
// are never computed in-process; their values arrive as data.

namespace mtforge {

// ---------------------------------------------------------------------------
// In-context prompts
// ---------------------------------------------------------------------------

// The exemplar format is one "source=target" line per pair followed by a
// final "query=" line left open for the model. A literal "=" or newline
// inside a side would break the line grammar, so they are replaced by the
// fullwidth equals sign U+FF1D and the line separator U+2028; unescape_icl
// reverses the mapping.
inline std::string escape_icl(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '=') out += "\xEF\xBC\x9D";       // U+FF1D
    else if (c == '\n') out += "\xE2\x80\xA8"; // U+2028
    else out.push_back(c);
  }
  return out;
}

inline std::string unescape_icl(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  size_t i = 0;
  while (i < s.size()) {
    if (s.compare(i, 3, "\xEF\xBC\x9D") == 0) {
      out.push_back('=');
      i += 3;
    } else if (s.compare(i, 3, "\xE2\x80\xA8") == 0) {
      out.push_back('\n');
      i += 3;
    } else {
      out.push_back(s[i]);
      ++i;
    }
  }
  return out;
}

struct IclPrompt {
  std::vector<std::pair<std::string, std::string>> exemplars;
  std::string query_src;
  std::string rendered;  // k "x=y" lines then "query=", newline-separated
};

inline IclPrompt build_icl_prompt(
    std::vector<std::pair<std::string, std::string>> exemplars,
    std::string query_src, size_t k = 8) {
  if (exemplars.size() != k)
    throw ConfigError("build_icl_prompt: expected " + std::to_string(k) +
                      " exemplars, got " + std::to_string(exemplars.size()));
  IclPrompt p;
  p.exemplars = std::move(exemplars);
  p.query_src = std::move(query_src);
  for (const auto& [x, y] : p.exemplars) {
    p.rendered += escape_icl(x);
    p.rendered += '=';
    p.rendered += escape_icl(y);
    p.rendered += '\n';
  }
  p.rendered += escape_icl(p.query_src);
  p.rendered += '=';
  return p;
}

/// Splits one rendered exemplar line back into (x, y).
inline std::pair<std::string, std::string> parse_icl_line(std::string_view line) {
  size_t eq = line.find('=');
  if (eq == std::string_view::npos)
    throw DataError("exemplar line without '=': " + std::string(line));
  return {unescape_icl(line.substr(0, eq)), unescape_icl(line.substr(eq + 1))};
}

/// Seeded choice of k exemplar indices from a development set. The seed is
/// derived per direction, so every query of a direction sees the same k
/// pairs while directions stay independent.
inline std::vector<size_t> pick_exemplars(size_t dev_size, size_t k, uint64_t seed,
                                          const Direction& dir) {
  if (k > dev_size)
    throw ConfigError("pick_exemplars: k=" + std::to_string(k) +
                      " exceeds dev set of " + std::to_string(dev_size));
  auto order = shuffled_indices(dev_size, derive_seed(seed, dir.str()));
  return {order.begin(), order.begin() + ptrdiff_t(k)};
}

// ---------------------------------------------------------------------------
// Score ingestion
// ---------------------------------------------------------------------------

/// (system, direction, metric) -> value, with duplicate-conflict detection.
class ScoreMatrix {
 public:
  using Key = std::tuple<std::string, std::string, std::string>;

  void insert(const std::string& system, const Direction& dir, const std::string& metric,
              double value) {
    Key key{system, dir.str(), metric};
    auto [it, inserted] = entries_.emplace(key, value);
    if (!inserted && it->second != value)
      throw DataError("conflicting scores for (" + system + ", " + dir.str() + ", " +
                      metric + "): " + std::to_string(it->second) + " vs " +
                      std::to_string(value));
  }

  std::optional<double> get(const std::string& system, const Direction& dir,
                            const std::string& metric) const {
    auto it = entries_.find(Key{system, dir.str(), metric});
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  size_t size() const { return entries_.size(); }

  std::set<std::string> systems() const {
    std::set<std::string> out;
    for (const auto& [k, _] : entries_) out.insert(std::get<0>(k));
    return out;
  }

  std::set<std::string> metrics() const {
    std::set<std::string> out;
    for (const auto& [k, _] : entries_) out.insert(std::get<2>(k));
    return out;
  }

 private:
  std::map<Key, double> entries_;
};

namespace detail {

inline void ingest_jsonl_scores(const std::string& path, ScoreMatrix& m) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open score file: " + path);
  std::string line;
  uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_ws(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("system") || !j.contains("direction") ||
        !j.contains("metric") || !j.contains("value"))
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected {system, direction, metric, value}");
    m.insert(j["system"].get<std::string>(),
             Direction::parse(j["direction"].get<std::string>()),
             j["metric"].get<std::string>(), j["value"].get<double>());
  }
}

// Table-transcription CSV: "#metrics=a,b" header, then a header row naming
// the system columns, then one row per direction with "a-value / b-value"
// cells, mirroring the two-metric leaderboard layout.
inline void ingest_csv_scores(const std::string& path, ScoreMatrix& m) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open score file: " + path);
  std::string line;
  std::vector<std::string> metrics, systems;
  uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim_ws(line).empty()) continue;
    if (line.starts_with("#metrics=")) {
      for (auto v : split(std::string_view(line).substr(9), ','))
        metrics.emplace_back(trim_ws(v));
      continue;
    }
    auto cols = split(line, ',');
    if (systems.empty()) {
      if (cols.empty() || trim_ws(cols[0]) != "direction")
        throw DataError(path + ":" + std::to_string(line_no) +
                        ": expected header row starting with 'direction'");
      for (size_t i = 1; i < cols.size(); ++i) systems.emplace_back(trim_ws(cols[i]));
      continue;
    }
    if (metrics.empty())
      throw DataError(path + ": missing #metrics= header");
    if (cols.size() != systems.size() + 1)
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(systems.size() + 1) + " columns");
    Direction dir = Direction::parse(trim_ws(cols[0]));
    for (size_t i = 0; i < systems.size(); ++i) {
      auto cell = split(cols[i + 1], '/');
      if (cell.size() != metrics.size())
        throw DataError(path + ":" + std::to_string(line_no) + ": cell '" +
                        std::string(cols[i + 1]) + "' does not carry " +
                        std::to_string(metrics.size()) + " values");
      for (size_t k = 0; k < metrics.size(); ++k)
        m.insert(systems[i], dir, metrics[k], std::stod(std::string(trim_ws(cell[k]))));
    }
  }
}

}  // namespace detail

/// Merges score files into one matrix. ".csv" files use the
/// table-transcription layout; everything else is JSONL records.
inline ScoreMatrix ingest_scores(const std::vector<std::string>& files) {
  ScoreMatrix m;
  for (const auto& f : files) {
    if (f.ends_with(".csv")) detail::ingest_csv_scores(f, m);
    else detail::ingest_jsonl_scores(f, m);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Quality-flag filtering
// ---------------------------------------------------------------------------

enum class MissingFlagPolicy { Keep, Error };

struct WmtIngestResult {
  std::vector<json> kept;
  uint64_t dropped = 0;
  uint64_t missing_flag = 0;
};

/// Drops records flagged low quality. The flag key is "low_quality"; a
/// record without it is kept (default) or fatal, per policy.
inline WmtIngestResult wmt_ingest(const std::vector<json>& records,
                                  MissingFlagPolicy policy = MissingFlagPolicy::Keep) {
  WmtIngestResult out;
  for (const auto& r : records) {
    if (!r.contains("low_quality")) {
      if (policy == MissingFlagPolicy::Error)
        throw DataError("record without low_quality flag: " + r.dump());
      ++out.missing_flag;
      out.kept.push_back(r);
      continue;
    }
    if (r["low_quality"].get<bool>()) ++out.dropped;
    else out.kept.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Direction groups and aggregation
// ---------------------------------------------------------------------------

enum class GroupName { EN2XX, XX2EN, ZH2XX, XX2ZH };

inline std::string_view to_string(GroupName g) {
  switch (g) {
    case GroupName::EN2XX: return "en->xx";
    case GroupName::XX2EN: return "xx->en";
    case GroupName::ZH2XX: return "zh->xx";
    case GroupName::XX2ZH: return "xx->zh";
  }
  return "?";
}

struct DirectionGroup {
  GroupName name;
  std::vector<Direction> members;
};

/// The four headline groups over the full registry: every non-pivot side
/// paired with en (45 members each) or zhs (45 members each, en/zht/yue
/// included among the targets).
inline std::vector<DirectionGroup> default_groups(const Registry& reg = Registry::instance()) {
  std::vector<DirectionGroup> groups{{GroupName::EN2XX, {}},
                                     {GroupName::XX2EN, {}},
                                     {GroupName::ZH2XX, {}},
                                     {GroupName::XX2ZH, {}}};
  for (const auto& info : reg.all()) {
    std::string code(info.code);
    if (code != "en") {
      groups[0].members.push_back({"en", code});
      groups[1].members.push_back({code, "en"});
    }
    if (code != "zhs") {
      groups[2].members.push_back({"zhs", code});
      groups[3].members.push_back({code, "zhs"});
    }
  }
  return groups;
}

struct AggregateTable {
  std::vector<std::string> systems;
  std::vector<std::string> metrics;
  std::vector<DirectionGroup> groups;
  // cells[group index][system][metric] = unweighted mean over members
  std::map<size_t, std::map<std::string, std::map<std::string, double>>> cells;

  std::optional<double> cell(GroupName g, const std::string& system,
                             const std::string& metric) const {
    for (size_t i = 0; i < groups.size(); ++i) {
      if (groups[i].name != g) continue;
      auto s = cells.find(i);
      if (s == cells.end()) return std::nullopt;
      auto m = s->second.find(system);
      if (m == s->second.end()) return std::nullopt;
      auto v = m->second.find(metric);
      if (v == m->second.end()) return std::nullopt;
      return v->second;
    }
    return std::nullopt;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    for (size_t i = 0; i < groups.size(); ++i) {
      nlohmann::ordered_json gj;
      auto members = nlohmann::ordered_json::array();
      for (const auto& d : groups[i].members) members.push_back(d.str());
      gj["members"] = std::move(members);
      auto it = cells.find(i);
      if (it != cells.end()) gj["cells"] = it->second;
      j[std::string(to_string(groups[i].name))] = std::move(gj);
    }
    return j;
  }

  /// Leaderboard text: one row per system, one column per group, cells in
  /// "metric1 / metric2" form at 2 decimals.
  std::string render() const {
    size_t name_w = std::string("Model").size();
    for (const auto& s : systems) name_w = std::max(name_w, s.size());
    std::string out;
    auto pad = [&](std::string_view s, size_t w) {
      out += s;
      out.append(w > s.size() ? w - s.size() : 1, ' ');
    };
    const size_t col_w = metrics.size() * 8 + 4;
    pad("Model", name_w + 2);
    for (const auto& g : groups) pad(std::string(to_string(g.name)), col_w);
    out += '\n';
    for (const auto& sys : systems) {
      pad(sys, name_w + 2);
      for (size_t i = 0; i < groups.size(); ++i) {
        std::string cell;
        for (size_t k = 0; k < metrics.size(); ++k) {
          if (k) cell += " / ";
          cell += fmt_fixed(cells.at(i).at(sys).at(metrics[k]), 2);
        }
        pad(cell, col_w);
      }
      out += '\n';
    }
    return out;
  }
};

/// Unweighted arithmetic mean of each metric over every group member, per
/// system. Any missing (system, member, metric) cell is an error listing all
/// missing entries; nothing is silently skipped.
inline AggregateTable aggregate(const ScoreMatrix& matrix,
                                const std::vector<DirectionGroup>& groups,
                                const std::vector<std::string>& systems,
                                const std::vector<std::string>& metrics) {
  if (systems.empty()) throw ConfigError("aggregate: no systems requested");
  if (metrics.empty()) throw ConfigError("aggregate: no metrics requested");
  AggregateTable table;
  table.systems = systems;
  table.metrics = metrics;
  table.groups = groups;

  std::vector<std::string> missing;
  for (size_t i = 0; i < groups.size(); ++i) {
    if (groups[i].members.empty())
      throw ConfigError("aggregate: group '" + std::string(to_string(groups[i].name)) +
                        "' is empty");
    for (const auto& sys : systems) {
      for (const auto& metric : metrics) {
        double sum = 0.0;
        bool complete = true;
        for (const auto& d : groups[i].members) {
          auto v = matrix.get(sys, d, metric);
          if (!v) {
            missing.push_back(sys + "/" + d.str() + "/" + metric);
            complete = false;
            continue;
          }
          sum += *v;
        }
        if (complete)
          table.cells[i][sys][metric] = sum / double(groups[i].members.size());
      }
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (size_t i = 0; i < missing.size() && i < 12; ++i)
      list += (i ? ", " : "") + missing[i];
    if (missing.size() > 12) list += ", ... (" + std::to_string(missing.size()) + " total)";
    throw DataError("aggregate: missing score cells: " + list);
  }
  return table;
}

}  // namespace mtforge
