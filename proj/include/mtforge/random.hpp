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
#include <numeric>
#include <random>
#include <string_view>
#include <vector>

#include "mtforge/common.hpp"

// Reproducibility is a product requirement, so every sampling decision goes
// through these helpers instead of std::shuffle / std::uniform_int_distribution,
// whose outputs are implementation-defined.

namespace mtforge {

class SeededRng {
 public:
  explicit SeededRng(uint64_t seed) : eng_(seed) {}

  uint64_t next() { return eng_(); }

  // Unbiased draw in [0, n) via rejection; mt19937_64 output is portable.
  uint64_t bounded(uint64_t n) {
    if (n == 0) return 0;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % n;
  }

  double unit() {  // [0, 1)
    return double(eng_() >> 11) * 0x1.0p-53;
  }

 private:
  std::mt19937_64 eng_;
};

/// Derives an independent stream seed from a base seed and a label
/// (e.g. a language code, a pool name, a direction string).
inline uint64_t derive_seed(uint64_t seed, std::string_view label) {
  return mix64(seed ^ fnv1a64(label));
}

inline uint64_t derive_seed(uint64_t seed, std::string_view a, std::string_view b) {
  return mix64(derive_seed(seed, a) ^ fnv1a64(b));
}

template <typename T>
void deterministic_shuffle(std::vector<T>& v, SeededRng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = size_t(rng.bounded(i));
    std::swap(v[i - 1], v[j]);
  }
}

/// One seeded permutation of [0, n). Prefixes of this order are the
/// canonical nested samples used throughout.
inline std::vector<size_t> shuffled_indices(size_t n, uint64_t seed) {
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), size_t{0});
  SeededRng rng(seed);
  deterministic_shuffle(idx, rng);
  return idx;
}

}  // namespace mtforge
