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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mtforge/common.hpp"

namespace mtforge {

// Vocabulary-driven tokenizer: greedy longest match over a fixed piece
// inventory, scanning left to right at byte level. This treats a real
// SPM/BPE vocabulary as an opaque piece list, so counts approximate (not
// reproduce) the original model's segmentation; the piece inventory of such
// assets can be exported to the file format below.
//
// Asset file format: one piece per line, UTF-8. Optional leading header
// lines:
//   #name=<tokenizer name>
//   #byte_fallback=true|false
//   #space_marker=<string>      (conventionally "▁")
//
// When a space marker is declared, ASCII spaces are rewritten to the marker
// before matching and back after decoding, following the dominant subword
// convention. Inputs containing the literal marker therefore do not
// round-trip; without a marker, decode(encode(x)) == x byte-for-byte
// whenever byte fallback is on.

class VocabTokenizer {
 public:
  using TokenId = uint32_t;

  VocabTokenizer(std::string name, std::vector<std::string> pieces,
                 bool byte_fallback, std::optional<std::string> space_marker = {})
      : name_(std::move(name)),
        pieces_(std::move(pieces)),
        byte_fallback_(byte_fallback),
        space_marker_(std::move(space_marker)) {
    if (space_marker_ && space_marker_->empty())
      throw ConfigError("tokenizer '" + name_ + "': empty space marker");
    for (TokenId id = 0; id < pieces_.size(); ++id) {
      const std::string& p = pieces_[id];
      if (p.empty()) throw ConfigError("tokenizer '" + name_ + "': empty piece");
      if (!piece_ids_.emplace(p, id).second)
        throw ConfigError("tokenizer '" + name_ + "': duplicate piece '" + p + "'");
      max_piece_len_ = std::max(max_piece_len_, p.size());
    }
  }

  static VocabTokenizer from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open vocab asset: " + path);
    std::string name = path;
    if (auto slash = name.find_last_of('/'); slash != std::string::npos)
      name = name.substr(slash + 1);
    if (auto dot = name.find_last_of('.'); dot != std::string::npos)
      name = name.substr(0, dot);
    bool byte_fallback = false;
    std::optional<std::string> marker;
    std::vector<std::string> pieces;
    std::string line;
    bool in_header = true;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (in_header && line.starts_with("#")) {
        std::string_view v(line);
        if (v.starts_with("#name=")) name = std::string(v.substr(6));
        else if (v == "#byte_fallback=true") byte_fallback = true;
        else if (v == "#byte_fallback=false") byte_fallback = false;
        else if (v.starts_with("#space_marker=")) marker = std::string(v.substr(14));
        else throw ConfigError("vocab asset " + path + ": unknown header '" + line + "'");
        continue;
      }
      in_header = false;
      if (line.empty()) continue;
      pieces.push_back(line);
    }
    if (in.bad()) throw ConfigError("vocab asset " + path + ": read failed");
    return VocabTokenizer(std::move(name), std::move(pieces), byte_fallback,
                          std::move(marker));
  }

  const std::string& name() const { return name_; }
  size_t piece_count() const { return pieces_.size(); }
  bool byte_fallback() const { return byte_fallback_; }
  const std::optional<std::string>& space_marker() const { return space_marker_; }

  bool is_byte_token(TokenId id) const { return id >= pieces_.size(); }

  std::string_view piece(TokenId id) const {
    if (id >= pieces_.size())
      throw DataError("tokenizer '" + name_ + "': no piece for id " + std::to_string(id));
    return pieces_[id];
  }

  /// Deterministic tokenization; total iff byte_fallback is on. Without
  /// fallback an unmatched position raises a DataError naming the byte offset.
  std::vector<TokenId> encode(std::string_view text) const {
    std::string transformed;
    if (space_marker_) {
      transformed = apply_marker(text);
      text = transformed;
    }
    std::vector<TokenId> out;
    out.reserve(text.size() / 3 + 1);
    size_t i = 0;
    while (i < text.size()) {
      size_t cap = std::min(max_piece_len_, text.size() - i);
      bool matched = false;
      for (size_t len = cap; len >= 1; --len) {
        auto it = piece_ids_.find(text.substr(i, len));
        if (it != piece_ids_.end()) {
          out.push_back(it->second);
          i += len;
          matched = true;
          break;
        }
      }
      if (matched) continue;
      if (!byte_fallback_)
        throw DataError("tokenizer '" + name_ + "': no piece matches input at byte offset " +
                        std::to_string(i));
      out.push_back(TokenId(pieces_.size()) + static_cast<unsigned char>(text[i]));
      ++i;
    }
    return out;
  }

  size_t count(std::string_view text) const { return encode(text).size(); }

  std::string decode(std::span<const TokenId> ids) const {
    std::string out;
    for (TokenId id : ids) {
      if (id < pieces_.size()) {
        out += pieces_[id];
      } else if (id < pieces_.size() + 256) {
        out.push_back(char(id - pieces_.size()));
      } else {
        throw DataError("tokenizer '" + name_ + "': invalid token id " + std::to_string(id));
      }
    }
    if (space_marker_) out = strip_marker(out);
    return out;
  }

 private:
  struct SvHash {
    using is_transparent = void;
    size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
    size_t operator()(const std::string& s) const { return std::hash<std::string_view>{}(s); }
  };

  std::string apply_marker(std::string_view text) const {
    std::string out;
    out.reserve(text.size() + 8);
    for (char c : text) {
      if (c == ' ') out += *space_marker_;
      else out.push_back(c);
    }
    return out;
  }

  std::string strip_marker(std::string_view text) const {
    std::string out;
    out.reserve(text.size());
    const std::string& m = *space_marker_;
    size_t i = 0;
    while (i < text.size()) {
      if (text.compare(i, m.size(), m) == 0) {
        out.push_back(' ');
        i += m.size();
      } else {
        out.push_back(text[i]);
        ++i;
      }
    }
    return out;
  }

  std::string name_;
  std::vector<std::string> pieces_;
  bool byte_fallback_ = false;
  std::optional<std::string> space_marker_;
  std::unordered_map<std::string, TokenId, SvHash, std::equal_to<>> piece_ids_;
  size_t max_piece_len_ = 0;
};

}  // namespace mtforge
