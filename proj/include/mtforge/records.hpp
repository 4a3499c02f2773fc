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

#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtforge/common.hpp"
#include "mtforge/lang.hpp"

// Corpus record types and line-oriented ingestion. Texts are stored verbatim:
// no Unicode normalization is ever applied implicitly, since downstream
// token measurements must see the raw bytes.

namespace mtforge {

/// A directed bitext record.
struct SentencePair {
  std::string src_lang;
  std::string tgt_lang;
  std::string src_text;
  std::string tgt_text;
  std::map<std::string, double> scores;  // metric name -> value; empty = none
  std::optional<std::string> provenance;

  bool operator==(const SentencePair&) const = default;

  Direction direction() const { return {src_lang, tgt_lang}; }

  ojson to_json() const {
    ojson j;
    j["src_lang"] = src_lang;
    j["tgt_lang"] = tgt_lang;
    j["src_text"] = src_text;
    j["tgt_text"] = tgt_text;
    if (!scores.empty()) j["scores"] = scores;
    if (provenance) j["provenance"] = *provenance;
    return j;
  }

  std::string to_jsonl() const { return to_json().dump(); }
};

struct MonolingualRecord {
  std::string lang;
  std::string text;
  std::optional<uint64_t> token_count;  // under a named tokenizer, if known

  bool operator==(const MonolingualRecord&) const = default;

  ojson to_json() const {
    ojson j;
    j["lang"] = lang;
    j["text"] = text;
    if (token_count) j["token_count"] = *token_count;
    return j;
  }
};

/// Side-channel entry for a record that could not be ingested.
struct RecordError {
  uint64_t line = 0;  // 1-based input line
  std::string reason;
  std::string detail;
};

struct IngestStats {
  uint64_t lines = 0;       // input lines seen (blank lines skipped, not counted)
  uint64_t yielded = 0;     // valid records emitted, in input order
  uint64_t errored = 0;     // side-channel records
  uint64_t empty_noted = 0; // pairs that parsed but have an empty-after-trim side
};

enum class ParallelFormat { Jsonl, Tsv };

using PairSink = std::function<void(SentencePair&&)>;
using MonoSink = std::function<void(MonolingualRecord&&)>;
using ErrorSink = std::function<void(RecordError&&)>;

namespace detail {

inline std::optional<std::string> lang_error(const Registry& reg, std::string& code) {
  const LanguageInfo* info = reg.find(code);
  if (!info) return "unknown language '" + code + "'";
  code = std::string(info->code);  // normalize aliases onto registry codes
  return std::nullopt;
}

}  // namespace detail

// Single-pass, order-preserving ingestion of bitext records. Malformed
// records go to `on_error` with their line number; valid records are never
// reordered. An unreadable stream is the only fatal condition.
inline IngestStats parse_parallel_stream(std::istream& in, ParallelFormat format,
                                         const PairSink& on_pair,
                                         const ErrorSink& on_error,
                                         const Registry& reg = Registry::instance()) {
  if (!in) throw DataError("parallel input stream is not readable");
  IngestStats stats;
  std::string line;
  uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim_ws(line).empty()) continue;
    ++stats.lines;
    auto fail = [&](std::string reason, std::string detail = {}) {
      ++stats.errored;
      on_error({line_no, std::move(reason), std::move(detail)});
    };

    SentencePair p;
    if (format == ParallelFormat::Jsonl) {
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object()) {
        fail("json", "not a JSON object");
        continue;
      }
      bool ok = true;
      for (const char* key : {"src_lang", "tgt_lang", "src_text", "tgt_text"}) {
        if (!j.contains(key) || !j[key].is_string()) {
          fail("missing-field", key);
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      p.src_lang = j["src_lang"].get<std::string>();
      p.tgt_lang = j["tgt_lang"].get<std::string>();
      p.src_text = j["src_text"].get<std::string>();
      p.tgt_text = j["tgt_text"].get<std::string>();
      if (j.contains("scores") && j["scores"].is_object())
        for (auto& [k, v] : j["scores"].items())
          if (v.is_number()) p.scores[k] = v.get<double>();
      if (j.contains("provenance") && j["provenance"].is_string())
        p.provenance = j["provenance"].get<std::string>();
    } else {
      auto cols = split(line, '\t');
      if (cols.size() != 4) {
        fail("arity", "expected 4 tab-separated columns, got " + std::to_string(cols.size()));
        continue;
      }
      p.src_lang = std::string(cols[0]);
      p.tgt_lang = std::string(cols[1]);
      p.src_text = std::string(cols[2]);
      p.tgt_text = std::string(cols[3]);
    }

    if (auto err = detail::lang_error(reg, p.src_lang)) {
      fail("unknown language", *err);
      continue;
    }
    if (auto err = detail::lang_error(reg, p.tgt_lang)) {
      fail("unknown language", *err);
      continue;
    }
    if (p.src_lang == p.tgt_lang) {
      fail("self-direction", p.src_lang);
      continue;
    }
    if (trim_ws(p.src_text).empty() || trim_ws(p.tgt_text).empty())
      ++stats.empty_noted;  // recorded here, enforced by the cleaning stage
    ++stats.yielded;
    on_pair(std::move(p));
  }
  if (in.bad()) throw DataError("parallel input stream failed mid-read");
  return stats;
}

// Monolingual ingestion. Two layouts:
//   - JSONL objects {"lang": ..., "text": ..., ["token_count": ...]}
//   - a "#lang=<code>" header line followed by plain text, one record per line
// Empty-after-trim texts go to the side channel.
inline IngestStats parse_monolingual_stream(std::istream& in, const MonoSink& on_record,
                                            const ErrorSink& on_error,
                                            const Registry& reg = Registry::instance()) {
  if (!in) throw DataError("monolingual input stream is not readable");
  IngestStats stats;
  std::string line;
  uint64_t line_no = 0;
  std::optional<std::string> file_lang;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.starts_with("#lang=")) {
      file_lang = std::string(trim_ws(std::string_view(line).substr(6)));
      if (auto err = detail::lang_error(reg, *file_lang))
        throw ConfigError("monolingual header: " + *err);
      continue;
    }
    if (trim_ws(line).empty() && !file_lang) continue;
    ++stats.lines;
    auto fail = [&](std::string reason, std::string detail = {}) {
      ++stats.errored;
      on_error({line_no, std::move(reason), std::move(detail)});
    };

    MonolingualRecord r;
    if (file_lang) {
      r.lang = *file_lang;
      r.text = line;
    } else {
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object()) {
        fail("json", "not a JSON object");
        continue;
      }
      if (!j.contains("lang") || !j["lang"].is_string() || !j.contains("text") ||
          !j["text"].is_string()) {
        fail("missing-field", "lang/text");
        continue;
      }
      r.lang = j["lang"].get<std::string>();
      r.text = j["text"].get<std::string>();
      if (j.contains("token_count") && j["token_count"].is_number_unsigned())
        r.token_count = j["token_count"].get<uint64_t>();
      if (auto err = detail::lang_error(reg, r.lang)) {
        fail("unknown language", *err);
        continue;
      }
    }
    if (trim_ws(r.text).empty()) {
      fail("empty");
      continue;
    }
    ++stats.yielded;
    on_record(std::move(r));
  }
  if (in.bad()) throw DataError("monolingual input stream failed mid-read");
  return stats;
}

/// Parses a single JSONL bitext line (throws DataError instead of using the
/// side channel); convenience for tests and tools.
inline SentencePair parse_pair_line(std::string_view line,
                                    const Registry& reg = Registry::instance()) {
  std::optional<SentencePair> out;
  std::optional<RecordError> err;
  std::istringstream ss{std::string(line)};
  parse_parallel_stream(
      ss, ParallelFormat::Jsonl, [&](SentencePair&& p) { out = std::move(p); },
      [&](RecordError&& e) { err = std::move(e); }, reg);
  if (!out)
    throw DataError("bad record: " + (err ? err->reason + " (" + err->detail + ")"
                                          : std::string("empty input")));
  return *out;
}

}  // namespace mtforge
