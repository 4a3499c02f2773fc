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

#include <array>
#include <compare>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>

#include "mtforge/common.hpp"

namespace mtforge {

enum class ResourceClass { High, Mid, Low };

inline std::string_view to_string(ResourceClass r) {
  switch (r) {
    case ResourceClass::High: return "High";
    case ResourceClass::Mid: return "Mid";
    case ResourceClass::Low: return "Low";
  }
  return "?";
}

struct LanguageInfo {
  std::string_view code;     // registry code, e.g. "ar", "zhs", "yue"
  std::string_view name;     // display name used in instruction prompts
  std::string_view script;
  std::string_view family;
  std::string_view subgroup;
  ResourceClass resource;
};

namespace detail {

// The 46 supported languages. Codes are the model's own, including the
// nonstandard zhs/zht pair; see kCodeAliases for the normalization of
// common variants.
inline constexpr std::array<LanguageInfo, 46> kLanguages = {{
    {"ar", "Arabic", "Arabic", "Afro-Asiatic", "Semitic", ResourceClass::High},
    {"az", "Azerbaijani", "Latin", "Turkic", "Common Turkic", ResourceClass::Low},
    {"bg", "Bulgarian", "Cyrillic", "Indo-European", "Balto-Slavic", ResourceClass::Mid},
    {"bn", "Bengali", "Bengali", "Indo-European", "Indo-Aryan", ResourceClass::Mid},
    {"ca", "Catalan", "Latin", "Indo-European", "Italic", ResourceClass::High},
    {"cs", "Czech", "Latin", "Indo-European", "Balto-Slavic", ResourceClass::High},
    {"da", "Danish", "Latin", "Indo-European", "Germanic", ResourceClass::Mid},
    {"de", "German", "Latin", "Indo-European", "Germanic", ResourceClass::High},
    {"el", "Greek", "Greek", "Indo-European", "Graeco-Phrygian", ResourceClass::Mid},
    {"en", "English", "Latin", "Indo-European", "Germanic", ResourceClass::High},
    {"es", "Spanish", "Latin", "Indo-European", "Italic", ResourceClass::High},
    {"fa", "Persian", "Arabic", "Indo-European", "Iranian", ResourceClass::High},
    {"fi", "Finnish", "Latin", "Uralic", "Finnic", ResourceClass::High},
    {"fr", "French", "Latin", "Indo-European", "Italic", ResourceClass::High},
    {"he", "Hebrew", "Hebrew", "Afro-Asiatic", "Semitic", ResourceClass::Mid},
    {"hi", "Hindi", "Devanagari", "Indo-European", "Indo-Aryan", ResourceClass::High},
    {"hr", "Croatian", "Latin", "Indo-European", "Balto-Slavic", ResourceClass::High},
    {"hu", "Hungarian", "Latin", "Uralic", "-", ResourceClass::High},
    {"id", "Indonesian", "Latin", "Austronesian", "Malayo-Polynesian", ResourceClass::Mid},
    {"it", "Italian", "Latin", "Indo-European", "Italic", ResourceClass::High},
    {"ja", "Japanese", "Japanese", "Japonic", "Japanesic", ResourceClass::High},
    {"kk", "Kazakh", "Cyrillic", "Turkic", "Common Turkic", ResourceClass::Mid},
    {"km", "Khmer", "Khmer", "Austroasiatic", "Khmeric", ResourceClass::Low},
    {"ko", "Korean", "Hangul", "Koreanic", "Korean", ResourceClass::High},
    {"lo", "Lao", "Lao", "Tai-Kadai", "Kam-Tai", ResourceClass::Low},
    {"ms", "Malay", "Latin", "Austronesian", "Malayo-Polynesian", ResourceClass::Mid},
    {"my", "Burmese", "Myanmar", "Sino-Tibetan", "Burmo-Qiangic", ResourceClass::Low},
    {"nb", "Norwegian", "Latin", "Indo-European", "Germanic", ResourceClass::Low},
    {"nl", "Dutch", "Latin", "Indo-European", "Germanic", ResourceClass::High},
    {"pl", "Polish", "Latin", "Indo-European", "Balto-Slavic", ResourceClass::High},
    {"pt", "Portuguese", "Latin", "Indo-European", "Italic", ResourceClass::High},
    {"ro", "Romanian", "Latin", "Indo-European", "Italic", ResourceClass::Mid},
    {"ru", "Russian", "Cyrillic", "Indo-European", "Balto-Slavic", ResourceClass::High},
    {"sk", "Slovak", "Latin", "Indo-European", "Balto-Slavic", ResourceClass::Mid},
    {"sl", "Slovenian", "Latin", "Indo-European", "Balto-Slavic", ResourceClass::Mid},
    {"sv", "Swedish", "Latin", "Indo-European", "Germanic", ResourceClass::High},
    {"ta", "Tamil", "Tamil", "Dravidian", "South Dravidian", ResourceClass::Mid},
    {"th", "Thai", "Thai", "Tai-Kadai", "Kam-Tai", ResourceClass::Mid},
    {"tl", "Tagalog", "Latin", "Austronesian", "Malayo-Polynesian", ResourceClass::Mid},
    {"tr", "Turkish", "Latin", "Turkic", "Common Turkic", ResourceClass::High},
    {"ur", "Urdu", "Arabic", "Indo-European", "Indo-Aryan", ResourceClass::Mid},
    {"uz", "Uzbek", "Latin", "Turkic", "Common Turkic", ResourceClass::Mid},
    {"vi", "Vietnamese", "Latin", "Austroasiatic", "Vietic", ResourceClass::High},
    {"yue", "Cantonese", "Han", "Sino-Tibetan", "Sinitic", ResourceClass::Low},
    {"zhs", "Chinese (Simplified)", "Han", "Sino-Tibetan", "Sinitic", ResourceClass::High},
    {"zht", "Chinese (Traditional)", "Han", "Sino-Tibetan", "Sinitic", ResourceClass::Low},
}};

// Normalization of common external codes onto registry codes.
inline constexpr std::array<std::pair<std::string_view, std::string_view>, 2>
    kCodeAliases = {{{"zh", "zhs"}, {"no", "nb"}}};

}  // namespace detail

/// The immutable 46-language registry, validated once at first use.
class Registry {
 public:
  static const Registry& instance() {
    static Registry r;
    return r;
  }

  std::span<const LanguageInfo> all() const { return detail::kLanguages; }
  size_t size() const { return detail::kLanguages.size(); }

  /// Resolves a code (after alias normalization); nullptr when unknown.
  const LanguageInfo* find(std::string_view code) const {
    auto it = by_code_.find(normalize(code));
    return it == by_code_.end() ? nullptr : it->second;
  }

  bool contains(std::string_view code) const { return find(code) != nullptr; }

  /// Canonical registry code, applying the alias table. Returns the input
  /// unchanged when it is not an alias.
  static std::string_view normalize(std::string_view code) {
    for (auto [alias, canonical] : detail::kCodeAliases)
      if (code == alias) return canonical;
    return code;
  }

  /// Display name for prompts; throws when the code is unknown.
  std::string_view display_name(std::string_view code) const {
    const LanguageInfo* info = find(code);
    if (!info)
      throw ConfigError("no display name for unknown language code '" +
                        std::string(code) + "'");
    return info->name;
  }

 private:
  Registry() {
    for (const auto& info : detail::kLanguages) {
      if (!by_code_.emplace(info.code, &info).second)
        throw ConfigError("language registry corrupt: duplicate code '" +
                          std::string(info.code) + "'");
    }
    if (by_code_.size() != 46)
      throw ConfigError("language registry corrupt: expected 46 entries");
  }

  std::unordered_map<std::string_view, const LanguageInfo*> by_code_;
};

/// A directed translation pair, formatted "src->tgt".
struct Direction {
  std::string src;
  std::string tgt;

  auto operator<=>(const Direction&) const = default;

  std::string str() const { return src + "->" + tgt; }

  static Direction parse(std::string_view s) {
    size_t pos = s.find("->");
    if (pos == std::string_view::npos)
      throw DataError("invalid direction '" + std::string(s) + "': expected 'src->tgt'");
    Direction d{std::string(s.substr(0, pos)), std::string(s.substr(pos + 2))};
    if (d.src.empty() || d.tgt.empty() || d.src == d.tgt)
      throw DataError("invalid direction '" + std::string(s) + "'");
    return d;
  }
};

}  // namespace mtforge
