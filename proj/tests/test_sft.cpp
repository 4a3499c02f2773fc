#include <catch_amalgamated.hpp>

#include <random>

#include "mtforge/sft.hpp"
#include "test_util.hpp"

using namespace mtforge;

static CandidateSet set_of(std::vector<std::map<std::string, double>> scores,
                           std::string dir = "en->de") {
  CandidateSet cs;
  cs.direction = Direction::parse(dir);
  cs.src_text = "hello";
  for (size_t i = 0; i < scores.size(); ++i) {
    Candidate c;
    c.text = "cand" + std::to_string(i);
    c.generator = "gen" + std::to_string(i);
    c.scores = std::move(scores[i]);
    cs.candidates.push_back(std::move(c));
  }
  return cs;
}

TEST_CASE("select_best returns the argmax") {
  SelectionPolicy p;
  p.metric = "xcomet";
  auto cs = set_of({{{"xcomet", 0.80}}, {{"xcomet", 0.90}}, {{"xcomet", 0.70}}});
  auto [idx, score] = select_best(cs, p);
  CHECK(idx == 1);
  CHECK(score == 0.90);
}

TEST_CASE("ties break to the lowest index") {
  SelectionPolicy p;
  p.metric = "xcomet";
  auto [idx, score] = select_best(set_of({{{"xcomet", 0.9}}, {{"xcomet", 0.9}}}), p);
  CHECK(idx == 0);
}

TEST_CASE("mean metric averages the two named scores") {
  SelectionPolicy p;  // mean(xcomet,cometkiwi)
  auto cs = set_of({{{"xcomet", 0.8}, {"cometkiwi", 0.6}},
                    {{"xcomet", 0.7}, {"cometkiwi", 0.9}}});
  auto [idx, score] = select_best(cs, p);
  CHECK(idx == 1);
  CHECK(score == Catch::Approx(0.80));
}

TEST_CASE("a missing score names the candidate and the metric") {
  SelectionPolicy p;
  p.metric = "xcomet";
  auto cs = set_of({{{"xcomet", 0.8}}, {{"cometkiwi", 0.9}}});
  REQUIRE_THROWS_WITH(select_best(cs, p),
                      Catch::Matchers::ContainsSubstring("candidate 1") &&
                          Catch::Matchers::ContainsSubstring("xcomet"));
}

TEST_CASE("selection is invariant under positive scaling of all scores") {
  std::mt19937_64 rng(12);
  SelectionPolicy p;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::map<std::string, double>> scores;
    size_t n = 1 + rng() % 6;
    for (size_t i = 0; i < n; ++i)
      scores.push_back({{"xcomet", std::generate_canonical<double, 53>(rng)},
                        {"cometkiwi", std::generate_canonical<double, 53>(rng)}});
    auto cs = set_of(scores);
    auto [idx, _] = select_best(cs, p);
    double factor = 0.1 + 5.0 * std::generate_canonical<double, 53>(rng);
    for (auto& c : cs.candidates)
      for (auto& [k, v] : c.scores) v *= factor;
    auto [idx2, _2] = select_best(cs, p);
    REQUIRE(idx == idx2);
  }
}

TEST_CASE("threshold is boundary-inclusive") {
  CHECK(threshold_filter(0.90, 0.85));
  CHECK(threshold_filter(0.85, 0.85));
  CHECK_FALSE(threshold_filter(0.80, 0.85));
}

TEST_CASE("threshold keeps are monotone in tau") {
  std::mt19937_64 rng(13);
  std::vector<double> scores;
  for (int i = 0; i < 200; ++i) scores.push_back(std::generate_canonical<double, 53>(rng));
  auto kept_at = [&](double tau) {
    std::set<int> s;
    for (int i = 0; i < 200; ++i)
      if (threshold_filter(scores[size_t(i)], tau)) s.insert(i);
    return s;
  };
  auto lo = kept_at(0.3), hi = kept_at(0.7);
  for (int i : hi) REQUIRE(lo.count(i) == 1);
}

TEST_CASE("instruction prompts match the golden bytes") {
  std::string base(MTFORGE_TESTS_DATA);
  Direction d{"en", "de"};
  CHECK(format_instruction(d, "hello") ==
        testutil::read_file(base + "/golden_instruction_inference.txt"));
  CHECK(format_instruction(d, "hello", std::optional<std::string_view>("hallo")) ==
        testutil::read_file(base + "/golden_instruction_training.txt"));
  CHECK(format_instruction({"zhs", "en"}, "\xE4\xBD\xA0\xE5\xA5\xBD") ==
        testutil::read_file(base + "/golden_instruction_zhs.txt"));
}

TEST_CASE("unknown display name is an error") {
  REQUIRE_THROWS_AS(format_instruction({"en", "qq"}, "x"), ConfigError);
}

TEST_CASE("stripping the completion reproduces the inference form") {
  Direction d{"en", "de"};
  std::string training =
      format_instruction(d, "hello", std::optional<std::string_view>("hallo"));
  auto [prompt, completion] = split_instruction(training, d);
  CHECK(prompt == format_instruction(d, "hello"));
  CHECK(completion == "hallo");
}

TEST_CASE("inference form is injective over source text and directions") {
  std::set<std::string> rendered;
  for (const char* dir : {"en->de", "de->en", "en->zhs", "zhs->en"})
    for (const char* src : {"a", "b", "a b", ""})
      rendered.insert(format_instruction(Direction::parse(dir), src));
  CHECK(rendered.size() == 16);
}

TEST_CASE("build_sft selects, thresholds and accounts for every set") {
  SelectionPolicy p;
  p.metric = "xcomet";
  p.tau = 0.85;
  std::vector<CandidateSet> sets;
  sets.push_back(set_of({{{"xcomet", 0.9}}, {{"xcomet", 0.95}}}));       // kept
  sets.push_back(set_of({{{"xcomet", 0.5}}}, "en->fr"));                 // below tau
  sets.push_back(set_of({{{"cometkiwi", 0.9}}}, "en->it"));              // missing metric
  auto res = build_sft(sets, p);
  REQUIRE(res.records.size() == 1);
  CHECK(res.records[0].completion == "cand1");
  CHECK(res.records[0].score == 0.95);
  CHECK(res.records[0].generator == "gen1");
  CHECK(res.below_threshold == 1);
  CHECK(res.errored == 1);
  CHECK(res.report.total == 1);
  CHECK(res.records[0].prompt ==
        format_instruction(Direction::parse("en->de"), "hello"));
}

TEST_CASE("sft records round-trip through jsonl") {
  SelectionPolicy p;
  p.metric = "xcomet";
  auto res = build_sft({set_of({{{"xcomet", 0.99}}})}, p);
  auto back = SftRecord::from_json(json::parse(res.records[0].to_json().dump()));
  CHECK(back.prompt == res.records[0].prompt);
  CHECK(back.completion == res.records[0].completion);
  CHECK(back.direction == res.records[0].direction);
  CHECK(back.score == res.records[0].score);
}

TEST_CASE("distribution report tracks shares and the en<->zhs overlap") {
  DistributionReport r;
  r.add(Direction{"en", "de"}, 50);
  r.add(Direction{"de", "en"}, 30);
  r.add(Direction{"en", "zhs"}, 10);
  r.add(Direction{"zhs", "fr"}, 10);
  CHECK(r.total == 100);
  CHECK(r.direction_count() == 4);
  CHECK(r.english_centric_share() == Catch::Approx(90.0));
  CHECK(r.zhs_centric_share() == Catch::Approx(20.0));
  CHECK(r.en_zhs_overlap() == 10);
  CHECK(r.render_table().find("en->de") != std::string::npos);
}

TEST_CASE("empty input yields an empty report") {
  SelectionPolicy p;
  auto res = build_sft({}, p);
  CHECK(res.records.empty());
  CHECK(res.report.total == 0);
  CHECK(res.report.direction_count() == 0);
}

TEST_CASE("report merge is associative-commutative on counts") {
  DistributionReport a, b;
  a.add({"en", "de"}, 5);
  a.add({"en", "fr"}, 2);
  b.add({"en", "de"}, 3);
  b.add({"zhs", "en"}, 1);
  DistributionReport ab = a;
  ab.merge(b);
  DistributionReport ba = b;
  ba.merge(a);
  CHECK(ab.per_direction == ba.per_direction);
  CHECK(ab.total == ba.total);
  CHECK(ab.per_direction.at("en->de") == 8);
}

TEST_CASE("nested samples are prefixes of one shuffled order") {
  auto subsets = sample_nested(10, {2, 4, 7}, 77);
  REQUIRE(subsets.size() == 3);
  CHECK(std::equal(subsets[0].begin(), subsets[0].end(), subsets[1].begin()));
  CHECK(std::equal(subsets[1].begin(), subsets[1].end(), subsets[2].begin()));
  auto again = sample_nested(10, {2, 4, 7}, 77);
  CHECK(subsets == again);
  REQUIRE_THROWS_AS(sample_nested(10, {11}, 77), DataError);
}

TEST_CASE("sampling a distribution like the direction table is reported in expectation") {
  // Build a synthetic population mirroring heavy en-centric skew, sample
  // 100 of 264, and report (not assert) the rare-pair draw count.
  DistributionReport pop;
  pop.add({"en", "de"}, 200);
  pop.add({"zhs", "de"}, 4);
  pop.add({"en", "zhs"}, 60);
  std::vector<Direction> records;
  for (const auto& [dir, n] : pop.per_direction)
    for (uint64_t i = 0; i < n; ++i) records.push_back(Direction::parse(dir));
  auto sample = sample_nested(records.size(), {100}, 5)[0];
  uint64_t rare = 0;
  for (size_t idx : sample) {
    const auto& d = records[idx];
    bool zhs = d.src == "zhs" || d.tgt == "zhs";
    bool en = d.src == "en" || d.tgt == "en";
    if (zhs && !en) ++rare;
  }
  INFO("rare zhs<->xx draws at 100/264: " << rare << " (expectation ~1.5)");
  CHECK(rare <= 10);  // sanity bound only; the count is reported, not pinned
}
