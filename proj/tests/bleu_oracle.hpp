#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

// Brute-force BLEU oracle, written before and independently of the library
// scorer. N-grams are joined into comma-separated strings and clipped per
// segment by decrementing a copy of the reference counts; clipped/total are
// summed over the corpus, then exp smoothing, effective order and the
// brevity penalty are applied from their definitions.

namespace bleu_oracle {

inline std::vector<std::string> grams(const std::vector<int>& toks, int n) {
  std::vector<std::string> out;
  if (toks.size() < size_t(n)) return out;
  for (size_t i = 0; i + size_t(n) <= toks.size(); ++i) {
    std::string g;
    for (int k = 0; k < n; ++k) g += std::to_string(toks[i + size_t(k)]) + ",";
    out.push_back(g);
  }
  return out;
}

inline double score(const std::vector<std::vector<int>>& hyps,
                    const std::vector<std::vector<int>>& refs, bool smooth = true) {
  long clipped[4] = {0, 0, 0, 0}, total[4] = {0, 0, 0, 0};
  long sys_len = 0, ref_len = 0;
  for (size_t s = 0; s < hyps.size(); ++s) {
    sys_len += long(hyps[s].size());
    ref_len += long(refs[s].size());
    for (int n = 1; n <= 4; ++n) {
      auto hyp_grams = grams(hyps[s], n);
      std::map<std::string, long> budget;
      for (auto& g : grams(refs[s], n)) ++budget[g];
      total[n - 1] += long(hyp_grams.size());
      for (auto& g : hyp_grams) {
        auto it = budget.find(g);
        if (it != budget.end() && it->second > 0) {
          ++clipped[n - 1];
          --it->second;
        }
      }
    }
  }
  if (sys_len == 0) return 0.0;
  double scale = 1.0;
  double log_sum = 0.0;
  int orders = 0;
  for (int n = 0; n < 4; ++n) {
    if (total[n] == 0) continue;
    ++orders;
    double p;
    if (clipped[n] == 0) {
      if (!smooth) return 0.0;
      scale *= 2.0;
      p = 1.0 / (scale * double(total[n]));
    } else {
      p = double(clipped[n]) / double(total[n]);
    }
    log_sum += std::log(p);
  }
  if (orders == 0) return 0.0;
  double bp =
      sys_len >= ref_len ? 1.0 : std::exp(1.0 - double(ref_len) / double(sys_len));
  return 100.0 * bp * std::exp(log_sum / double(orders));
}

}  // namespace bleu_oracle
