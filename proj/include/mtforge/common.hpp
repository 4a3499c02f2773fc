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

#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace mtforge {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

/// Bad configuration, asset, or request. CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent data. CLI maps this to exit code 1.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// UTF-8
// ---------------------------------------------------------------------------

// Decodes the codepoint starting at s[i] and advances i.
// An invalid or truncated sequence yields its first byte as the codepoint
// and advances one byte, so iteration is total over arbitrary input.
inline char32_t utf8_next(std::string_view s, size_t& i) {
  const auto b = [&](size_t k) { return static_cast<unsigned char>(s[k]); };
  unsigned char b0 = b(i);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  auto cont = [&](size_t k) {
    return k < s.size() && (b(k) & 0xC0) == 0x80;
  };
  if (b0 >= 0xC2 && b0 <= 0xDF && cont(i + 1)) {
    char32_t cp = (char32_t(b0 & 0x1F) << 6) | (b(i + 1) & 0x3F);
    i += 2;
    return cp;
  }
  if (b0 >= 0xE0 && b0 <= 0xEF && cont(i + 1) && cont(i + 2)) {
    char32_t cp = (char32_t(b0 & 0x0F) << 12) | (char32_t(b(i + 1) & 0x3F) << 6) |
                  (b(i + 2) & 0x3F);
    i += 3;
    return cp;
  }
  if (b0 >= 0xF0 && b0 <= 0xF4 && cont(i + 1) && cont(i + 2) && cont(i + 3)) {
    char32_t cp = (char32_t(b0 & 0x07) << 18) | (char32_t(b(i + 1) & 0x3F) << 12) |
                  (char32_t(b(i + 2) & 0x3F) << 6) | (b(i + 3) & 0x3F);
    i += 4;
    return cp;
  }
  ++i;
  return b0;
}

inline void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(char(cp));
  } else if (cp < 0x800) {
    out.push_back(char(0xC0 | (cp >> 6)));
    out.push_back(char(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(char(0xE0 | (cp >> 12)));
    out.push_back(char(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(char(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(char(0xF0 | (cp >> 18)));
    out.push_back(char(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(char(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(char(0x80 | (cp & 0x3F)));
  }
}

inline size_t codepoint_count(std::string_view s) {
  size_t i = 0, n = 0;
  while (i < s.size()) {
    utf8_next(s, i);
    ++n;
  }
  return n;
}

inline bool is_space_cp(char32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

inline bool is_c0_control_except_tab(char32_t cp) {
  return cp < 0x20 && cp != 0x09;
}

// Digits and punctuation for the digit/punct-ratio filter: ASCII classes
// plus the general/CJK/fullwidth punctuation blocks.
inline bool is_digit_punct_cp(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= '0' && cp <= '9') || (cp >= '!' && cp <= '/') ||
           (cp >= ':' && cp <= '@') || (cp >= '[' && cp <= '`') ||
           (cp >= '{' && cp <= '~');
  }
  return (cp >= 0x2000 && cp <= 0x206F) || (cp >= 0x3000 && cp <= 0x303F) ||
         (cp >= 0xFF01 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) ||
         (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65);
}

/// Trims Unicode whitespace from both ends (view into the input).
inline std::string_view trim_ws(std::string_view s) {
  size_t begin = 0, end = 0;  // byte range [begin, end) of content
  size_t i = 0;
  bool seen = false;
  while (i < s.size()) {
    size_t start = i;
    char32_t cp = utf8_next(s, i);
    if (!is_space_cp(cp)) {
      if (!seen) begin = start;
      seen = true;
      end = i;
    }
  }
  return seen ? s.substr(begin, end - begin) : std::string_view{};
}

/// Collapses each run of Unicode whitespace to a single ASCII space and trims.
inline std::string collapse_ws(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  size_t i = 0;
  bool pending_space = false;
  while (i < s.size()) {
    size_t start = i;
    char32_t cp = utf8_next(s, i);
    if (is_space_cp(cp)) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.append(s.substr(start, i - start));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hashing
// ---------------------------------------------------------------------------

inline uint64_t fnv1a64(std::string_view s, uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// splitmix64 finalizer; used to derive well-mixed seeds.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// ---------------------------------------------------------------------------
// Formatting / parsing
// ---------------------------------------------------------------------------

inline std::string fmt_fixed(double v, int prec) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  size_t pos = 0;
  while (true) {
    size_t next = s.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(s.substr(pos));
      break;
    }
    out.push_back(s.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

// Parses a decimal budget expressed in billions ("0.1", "2", "1.75") into an
// exact token count at 1e9 tokens per unit. String math, no floating point,
// so 0.1 comes out as exactly 100000000.
inline uint64_t parse_billions(std::string_view s) {
  s = trim_ws(s);
  auto bad = [&] { throw ConfigError("invalid budget value: '" + std::string(s) + "'"); };
  if (s.empty()) bad();
  std::string_view whole = s, frac;
  if (auto dot = s.find('.'); dot != std::string_view::npos) {
    whole = s.substr(0, dot);
    frac = s.substr(dot + 1);
    if (frac.size() > 9) frac = frac.substr(0, 9);  // sub-token precision is meaningless
  }
  uint64_t tokens = 0;
  for (char c : whole) {
    if (c < '0' || c > '9') bad();
    tokens = tokens * 10 + uint64_t(c - '0');
  }
  tokens *= 1000000000ULL;
  uint64_t scale = 100000000ULL;
  for (char c : frac) {
    if (c < '0' || c > '9') bad();
    tokens += uint64_t(c - '0') * scale;
    scale /= 10;
  }
  return tokens;
}

}  // namespace mtforge
