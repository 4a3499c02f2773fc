#include <catch_amalgamated.hpp>

#include <random>

#include "mtforge/cleaning.hpp"
#include "mtforge/embed_subprocess.hpp"
#include "test_util.hpp"

using namespace mtforge;

static SentencePair mk(std::string src, std::string tgt, std::string sl = "en",
                       std::string tl = "de") {
  SentencePair p;
  p.src_lang = std::move(sl);
  p.tgt_lang = std::move(tl);
  p.src_text = std::move(src);
  p.tgt_text = std::move(tgt);
  return p;
}

TEST_CASE("empty target is dropped as EMPTY") {
  DedupSet seen;
  auto d = heuristic_filter(mk("hello", ""), {}, seen);
  CHECK_FALSE(d.kept);
  CHECK(d.reason == FilterReason::EMPTY);
}

TEST_CASE("whitespace-only side is EMPTY after trimming") {
  DedupSet seen;
  auto d = heuristic_filter(mk(" \t \xC2\xA0 ", "x"), {}, seen);
  CHECK(d.reason == FilterReason::EMPTY);
}

TEST_CASE("C0 control characters other than tab are rejected") {
  DedupSet seen;
  CHECK(heuristic_filter(mk("be\x07p", "x"), {}, seen).reason ==
        FilterReason::CONTROL_CHARS);
  CHECK(heuristic_filter(mk("a\tb", "x"), {}, seen).reason == FilterReason::OK);
}

TEST_CASE("overly long sides are TOO_LONG") {
  DedupSet seen;
  CleanConfig cfg;
  cfg.max_chars = 10;
  auto d = heuristic_filter(mk("0123456789a", "ok"), cfg, seen);
  CHECK(d.reason == FilterReason::TOO_LONG);
}

TEST_CASE("mostly digits or punctuation is dropped") {
  DedupSet seen;
  CHECK(heuristic_filter(mk("123456 a", "ok"), {}, seen).reason ==
        FilterReason::DIGIT_PUNCT_RATIO);
  CHECK(heuristic_filter(mk("abc 12", "ok ok"), {}, seen).reason == FilterReason::OK);
}

TEST_CASE("character length ratio above the cap is LENGTH_RATIO") {
  DedupSet seen;
  CleanConfig cfg;  // max_len_ratio 3.0
  auto d = heuristic_filter(mk("aaaaaaaaaa", std::string(40, 'b')), cfg, seen);
  CHECK(d.reason == FilterReason::LENGTH_RATIO);
  // exactly 3.0 passes (rule is strict-greater)
  CHECK(heuristic_filter(mk("aaaaaaaaaa", std::string(30, 'b')), cfg, seen).reason ==
        FilterReason::OK);
}

TEST_CASE("second submission of an identical pair is DUPLICATE") {
  DedupSet seen;
  auto p = mk("guten tag", "good day");
  CHECK(heuristic_filter(p, {}, seen).reason == FilterReason::OK);
  CHECK(heuristic_filter(p, {}, seen).reason == FilterReason::DUPLICATE);
}

TEST_CASE("dedup key collapses runs of whitespace but preserves case") {
  DedupSet seen;
  CHECK(heuristic_filter(mk("a  b", "c d"), {}, seen).reason == FilterReason::OK);
  CHECK(heuristic_filter(mk("a b", "c  d "), {}, seen).reason == FilterReason::DUPLICATE);
  CHECK(heuristic_filter(mk("A b", "c d"), {}, seen).reason == FilterReason::OK);
}

TEST_CASE("dropped pairs do not consume the dedup slot") {
  DedupSet seen;
  CleanConfig cfg;
  cfg.max_chars = 4;
  auto big = mk("aaaaaaaa", "bbbbbbbb");
  CHECK(heuristic_filter(big, cfg, seen).reason == FilterReason::TOO_LONG);
  cfg.max_chars = 2000;
  CHECK(heuristic_filter(big, cfg, seen).reason == FilterReason::OK);
}

// --- language identification ------------------------------------------------

TEST_CASE("langid self-consistency on the training text") {
  std::map<std::string, std::vector<std::string>> samples{
      {"de", {"der die das und ist nicht mit von"}}};
  auto profiles = train_langid(samples, 64);
  auto [lang, margin] = identify_language("der die das und ist nicht mit von", profiles);
  CHECK(lang == "de");
  CHECK(margin == 1.0);  // single profile
}

TEST_CASE("disjoint alphabets separate with a wide margin") {
  std::map<std::string, std::vector<std::string>> samples{
      {"en", {"the quick brown fox jumps over the lazy dog and runs away home"}},
      {"zhs", {"\xE4\xB8\xAD\xE6\x96\x87\xE5\x8F\xA5\xE5\xAD\x90"
               "\xE6\xB5\x8B\xE8\xAF\x95\xE6\x96\x87\xE6\x9C\xAC"}}};
  auto profiles = train_langid(samples, 64);
  auto [en_guess, en_margin] = identify_language("the brown dog runs home", profiles);
  CHECK(en_guess == "en");
  CHECK(en_margin > 0.05);
  auto [zh_guess, zh_margin] =
      identify_language("\xE4\xB8\xAD\xE6\x96\x87\xE6\xB5\x8B\xE8\xAF\x95", profiles);
  CHECK(zh_guess == "zhs");
  CHECK(zh_margin > 0.05);
}

TEST_CASE("profile holds every n-gram when K exceeds the distinct count") {
  std::map<std::string, std::vector<std::string>> samples{{"en", {"ab"}}};
  // distinct n-grams of "ab": a, b, ab -> 3 entries, ranks dense 1..3
  auto profiles = train_langid(samples, 50);
  REQUIRE(profiles.size() == 1);
  CHECK(profiles[0].rank.size() == 3);
  std::set<uint32_t> ranks;
  for (auto& [_, r] : profiles[0].rank) ranks.insert(r);
  CHECK(ranks == std::set<uint32_t>{1, 2, 3});
}

TEST_CASE("langid input validation") {
  REQUIRE_THROWS_AS(train_langid({}, 64), ConfigError);
  REQUIRE_THROWS_AS(train_langid({{"en", {"x"}}}, 10), ConfigError);
  REQUIRE_THROWS_AS(train_langid({{"en", {"  "}}}, 64), ConfigError);
  auto profiles = train_langid({{"en", {"hello"}}}, 64);
  REQUIRE_THROWS_AS(identify_language("", profiles), DataError);
  REQUIRE_THROWS_AS(identify_language("x", {}), ConfigError);
}

TEST_CASE("profiles round-trip through json") {
  auto profiles = train_langid({{"en", {"hello world"}}, {"de", {"hallo welt"}}}, 64);
  auto back = profiles_from_json(json::parse(profiles_to_json(profiles).dump()));
  REQUIRE(back.size() == 2);
  auto [lang, _] = identify_language("hello world", back);
  CHECK(lang == "en");
}

// --- similarity --------------------------------------------------------------

namespace {
class FixedEmbeddings final : public EmbeddingProvider {
 public:
  std::map<std::string, std::vector<float>, std::less<>> table;
  std::optional<std::vector<float>> embed(std::string_view text) override {
    auto it = table.find(std::string(text));
    if (it == table.end()) return std::nullopt;
    return it->second;
  }
};
}  // namespace

TEST_CASE("similarity keeps identical embeddings and drops orthogonal ones") {
  FixedEmbeddings e;
  e.table["a"] = {1, 0};
  e.table["b"] = {1, 0};
  e.table["c"] = {0, 1};
  e.table["d"] = {-1, 0};
  auto ok = similarity_filter(mk("a", "b"), e, 0.75);
  REQUIRE(ok.has_value());
  CHECK(ok->kept);
  auto low = similarity_filter(mk("a", "c"), e, 0.75);
  REQUIRE(low.has_value());
  CHECK(low->reason == FilterReason::LOW_SIMILARITY);
  CHECK(low->detail.substr(0, 8) == "0.000000");
  auto anti = similarity_filter(mk("a", "d"), e, 0.75);
  CHECK(anti->reason == FilterReason::LOW_SIMILARITY);
}

TEST_CASE("zero embedding vectors behave as cosine zero") {
  CHECK(cosine({0, 0}, {1, 0}) == 0.0);
  CHECK(cosine({1, 0}, {1, 0}) == Catch::Approx(1.0));
}

TEST_CASE("provider failure routes the pair to the error channel") {
  FixedEmbeddings e;  // empty table: every lookup fails
  auto r = similarity_filter(mk("a", "b"), e, 0.5);
  CHECK_FALSE(r.has_value());
}

TEST_CASE("precomputed embedding file serves vectors by content hash") {
  testutil::TempDir tmp;
  auto key_a = PrecomputedEmbeddings::key_for("hello");
  auto key_b = PrecomputedEmbeddings::key_for("hallo");
  testutil::write_file(tmp / "vec.jsonl",
                       "{\"key\":\"" + key_a + "\",\"vector\":[1.0,0.0]}\n" +
                           "{\"key\":\"" + key_b + "\",\"vector\":[1.0,0.0]}\n");
  PrecomputedEmbeddings p((tmp / "vec.jsonl").string());
  REQUIRE(p.embed("hello").has_value());
  CHECK_FALSE(p.embed("missing").has_value());
  auto d = similarity_filter(mk("hello", "hallo"), p, 0.75);
  CHECK(d->kept);
}

TEST_CASE("subprocess provider speaks the line-json protocol") {
  SubprocessEmbeddings sub(MTFORGE_EMBED_STUB);
  auto v1 = sub.embed("Xabc");
  REQUIRE(v1.has_value());
  CHECK((*v1)[0] == Catch::Approx(1.0f));
  auto v2 = sub.embed("other");
  REQUIRE(v2.has_value());
  CHECK((*v2)[1] == Catch::Approx(1.0f));
  CHECK_FALSE(sub.embed("FAIL").has_value());  // stub replies with garbage
  // the stream recovers on the next well-formed exchange
  auto v3 = sub.embed("Xagain");
  REQUIRE(v3.has_value());
}

TEST_CASE("hashing n-gram fallback is deterministic and unit-norm") {
  HashingNgramEmbeddings h(32);
  auto a = h.embed("hello world");
  auto b = h.embed("hello world");
  REQUIRE(a == b);
  double norm = 0;
  for (float x : *a) norm += double(x) * x;
  CHECK(norm == Catch::Approx(1.0));
  CHECK(cosine(*h.embed("abcabc"), *h.embed("abcabc")) == Catch::Approx(1.0));
}

// --- pipeline ----------------------------------------------------------------

static std::vector<SentencePair> valid_fixture(int n) {
  std::vector<SentencePair> pairs;
  for (int i = 0; i < n; ++i)
    pairs.push_back(mk("good evening number " + std::to_string(i),
                       "guten abend nummer " + std::to_string(i)));
  return pairs;
}

TEST_CASE("all-valid fixture keeps everything") {
  auto res = run_pipeline(valid_fixture(10), {});
  CHECK(res.kept.size() == 10);
  CHECK(res.stats.by_reason.at(FilterReason::OK) == 10);
  CHECK(res.stats.by_reason.size() == 1);
  CHECK(res.stats.consistent());
}

TEST_CASE("one empty and one duplicate among ten drop to eight") {
  auto pairs = valid_fixture(8);
  pairs.push_back(mk("", "x"));
  pairs.push_back(pairs[0]);
  auto res = run_pipeline(pairs, {});
  CHECK(res.kept.size() == 8);
  CHECK(res.stats.by_reason.at(FilterReason::EMPTY) == 1);
  CHECK(res.stats.by_reason.at(FilterReason::DUPLICATE) == 1);
  CHECK(res.stats.consistent());
}

TEST_CASE("language-id stage enforces declared tags on both sides") {
  const std::string zh_sample =
      "\xE4\xB8\xAD\xE6\x96\x87\xE5\x8F\xA5\xE5\xAD\x90"
      "\xE6\xB5\x8B\xE8\xAF\x95\xE6\x96\x87\xE6\x9C\xAC"
      "\xE8\xAF\xAD\xE8\xA8\x80\xE8\xAF\x86\xE5\x88\xAB";
  const std::string zh_text = "\xE4\xB8\xAD\xE6\x96\x87\xE6\xB5\x8B\xE8\xAF\x95";
  auto profiles = train_langid(
      {{"en", {"the quick brown fox jumps over the lazy dog and runs away home"}},
       {"zhs", {zh_sample}}},
      64);
  std::vector<SentencePair> pairs{
      mk("the brown fox runs home", zh_text, "en", "zhs"),
      mk(zh_text, "the brown fox runs", "en", "zhs"),  // sides swapped
  };
  CleanConfig cfg;
  cfg.max_len_ratio = 6.0;  // codepoint counts across scripts diverge
  auto res = run_pipeline(pairs, cfg, profiles);
  REQUIRE(res.kept.size() == 1);
  CHECK(res.stats.by_reason.at(FilterReason::LANGID_SRC) == 1);
}

static std::vector<SentencePair> random_fixture(uint64_t seed, int n) {
  std::mt19937_64 rng(seed);
  std::vector<SentencePair> pairs;
  for (int i = 0; i < n; ++i) {
    auto word = [&](int len) {
      std::string w;
      for (int k = 0; k < len; ++k) w.push_back(char('a' + rng() % 26));
      return w;
    };
    std::string src, tgt;
    switch (rng() % 6) {
      case 0: src = ""; tgt = word(4); break;
      case 1: src = word(3); tgt = word(int(3 + rng() % 30)); break;
      case 2: src = "123456!!"; tgt = word(6); break;
      case 3: src = std::string(int(rng() % 40), 'q'); tgt = word(5); break;
      default: src = word(int(4 + rng() % 8)) + " " + word(3); tgt = word(int(4 + rng() % 8));
    }
    if (rng() % 5 == 0 && !pairs.empty()) {
      pairs.push_back(pairs[rng() % pairs.size()]);  // duplicate
    } else {
      pairs.push_back(mk(src, tgt));
    }
  }
  return pairs;
}

TEST_CASE("accounting identity holds on randomized fixtures") {
  for (uint64_t seed = 1; seed <= 30; ++seed) {
    auto pairs = random_fixture(seed, 60);
    auto res = run_pipeline(pairs, {});
    uint64_t sum = res.stats.errored;
    for (auto& [_, n] : res.stats.by_reason) sum += n;
    REQUIRE(sum == pairs.size());
    REQUIRE(res.stats.total == pairs.size());
  }
}

TEST_CASE("pipeline is idempotent on its own kept output") {
  for (uint64_t seed = 100; seed < 110; ++seed) {
    auto res = run_pipeline(random_fixture(seed, 80), {});
    auto again = run_pipeline(res.kept, {});
    REQUIRE(again.kept.size() == res.kept.size());
    REQUIRE(again.stats.by_reason.size() == (res.kept.empty() ? 0 : 1));
  }
}

TEST_CASE("raising the length-ratio cap never shrinks the kept set") {
  for (uint64_t seed = 200; seed < 210; ++seed) {
    auto pairs = random_fixture(seed, 80);
    CleanConfig strict;
    strict.max_len_ratio = 1.5;
    CleanConfig loose;
    loose.max_len_ratio = 6.0;
    auto a = run_pipeline(pairs, strict);
    auto b = run_pipeline(pairs, loose);
    REQUIRE(b.kept.size() >= a.kept.size());
  }
}

TEST_CASE("raising the similarity threshold never grows the kept set") {
  HashingNgramEmbeddings h(16);
  for (uint64_t seed = 300; seed < 306; ++seed) {
    auto pairs = random_fixture(seed, 50);
    CleanConfig lo;
    lo.sim_threshold = 0.1;
    CleanConfig hi;
    hi.sim_threshold = 0.9;
    auto a = run_pipeline(pairs, lo, {}, &h);
    auto b = run_pipeline(pairs, hi, {}, &h);
    REQUIRE(b.kept.size() <= a.kept.size());
  }
}

TEST_CASE("kept output is a subsequence of the input") {
  auto pairs = random_fixture(7, 100);
  auto res = run_pipeline(pairs, {});
  size_t cursor = 0;
  for (const auto& k : res.kept) {
    while (cursor < pairs.size() && !(pairs[cursor] == k)) ++cursor;
    REQUIRE(cursor < pairs.size());
    ++cursor;
  }
}

TEST_CASE("identical inputs and config give identical outputs and stats") {
  auto pairs = random_fixture(9, 100);
  auto a = run_pipeline(pairs, {});
  auto b = run_pipeline(pairs, {});
  REQUIRE(a.kept == b.kept);
  REQUIRE(a.stats.by_reason == b.stats.by_reason);
}

TEST_CASE("config validation rejects out-of-range values") {
  CleanConfig bad;
  bad.max_len_ratio = 0.5;
  REQUIRE_THROWS_AS(bad.validate(), ConfigError);
  CleanConfig bad2;
  bad2.sim_threshold = 1.5;
  REQUIRE_THROWS_AS(bad2.validate(), ConfigError);
}
