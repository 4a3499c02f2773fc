#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

// Shared helpers for the test suites.

namespace testutil {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

/// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir() {
    auto base = std::filesystem::temp_directory_path();
    std::random_device rd;
    path_ = base / ("mtforge_test_" + std::to_string(rd()) + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(std::string_view name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Random UTF-8 string of valid scalar values (surrogates excluded).
inline std::string random_utf8(std::mt19937_64& rng, size_t max_cps = 40) {
  auto pick = [&](uint64_t n) { return rng() % n; };
  size_t n = pick(max_cps) + 1;
  std::string out;
  for (size_t i = 0; i < n; ++i) {
    char32_t cp;
    switch (pick(4)) {
      case 0: cp = char32_t(0x20 + pick(0x5F)); break;             // ASCII
      case 1: cp = char32_t(0xA0 + pick(0x700)); break;            // Latin ext / misc
      case 2: cp = char32_t(0x4E00 + pick(0x5000)); break;         // CJK
      default: cp = char32_t(0x1F300 + pick(0x200)); break;        // astral
    }
    if (cp >= 0xD800 && cp <= 0xDFFF) cp = 0x20;
    // encode
    if (cp < 0x80) out.push_back(char(cp));
    else if (cp < 0x800) {
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
  return out;
}

}  // namespace testutil
