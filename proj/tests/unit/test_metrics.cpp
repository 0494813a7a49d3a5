#include <doctest.h>

#include <random>

#include "factrank/errors.hpp"
#include "factrank/metrics.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace factrank;

namespace {

std::vector<SentenceCredit> credits(std::initializer_list<std::pair<bool, bool>> items) {
  std::vector<SentenceCredit> out;
  for (auto [rel, hit] : items) out.push_back({rel, hit});
  return out;
}

std::vector<oracle::Item> as_items(const std::vector<SentenceCredit>& c) {
  std::vector<oracle::Item> out;
  for (const auto& x : c) out.push_back({x.relevant, x.evidence_hit});
  return out;
}

// Random credits with at least one relevant sentence; hits only on relevant.
std::vector<SentenceCredit> random_credits(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> len(1, 30);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double p_rel = u(rng), p_hit = u(rng);
  std::vector<SentenceCredit> out(len(rng));
  for (auto& c : out) {
    c.relevant = u(rng) < p_rel;
    c.evidence_hit = c.relevant && u(rng) < p_hit;
  }
  out[std::uniform_int_distribution<std::size_t>(0, out.size() - 1)(rng)].relevant = true;
  return out;
}

}  // namespace

TEST_CASE("average precision worked examples") {
  CHECK(*average_precision(credits({{true, false}, {true, false}})) == doctest::Approx(1.0));
  CHECK(*average_precision(credits({{true, false}, {false, false}, {true, false}})) ==
        doctest::Approx(5.0 / 6.0));
  CHECK(*average_precision(credits({{false, false}, {false, false}, {true, false}})) ==
        doctest::Approx(1.0 / 3.0));
  CHECK_FALSE(average_precision(credits({{false, false}})).has_value());
  CHECK_FALSE(average_precision({}).has_value());
}

TEST_CASE("graded and hit-only worked examples") {
  const auto c = credits({{true, true}, {true, false}, {false, false}});
  CHECK(*ap_graded(c, 0.0) == 0.75);
  CHECK(*ap_graded(c, 0.5) == 0.875);
  CHECK(*ap_hit_only(c) == 0.5);

  CHECK(*ap_hit_only(credits({{true, false}, {false, false}})) == 0.0);
  const auto all_hit = credits({{false, false}, {true, true}, {true, true}});
  CHECK(*ap_hit_only(all_hit) == *average_precision(all_hit));
  CHECK(*ap_graded(all_hit, 0.0) == *average_precision(all_hit));
}

TEST_CASE("ap_evidence dispatches on mode and checks its config") {
  const auto c = credits({{true, true}, {true, false}, {false, false}});
  CHECK(*ap_evidence(c, {1, 0.5, CreditMode::kGraded}) == 0.875);
  CHECK(*ap_evidence(c, {1, 0.0, CreditMode::kHitOnly}) == 0.5);
  CHECK_THROWS_AS(ap_evidence(c, {0, 0.0, CreditMode::kGraded}), ValidationError);
  CHECK_THROWS_AS(ap_evidence(c, {1, 1.5, CreditMode::kGraded}), ValidationError);
}

TEST_CASE("AP variants match the brute-force oracle") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto c = random_credits(rng);
    const auto items = as_items(c);
    CHECK(std::abs(*average_precision(c) - oracle::ap(items)) < 1e-12);
    CHECK(std::abs(*ap_graded(c, 0.0) - oracle::ap_m(items, 0.0)) < 1e-12);
    CHECK(std::abs(*ap_graded(c, 0.5) - oracle::ap_m(items, 0.5)) < 1e-12);
    CHECK(std::abs(*ap_hit_only(c) - oracle::ap_h(items)) < 1e-12);
    CHECK(std::abs(*ap_graded(c, 1.0) - *average_precision(c)) < 1e-12);
  }
}

TEST_CASE("ordering law holds on random runs") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto c = random_credits(rng);
    const double h = *ap_hit_only(c), zero = *ap_graded(c, 0.0), half = *ap_graded(c, 0.5),
                 ap = *average_precision(c);
    CHECK(h <= zero + 1e-15);
    CHECK(zero <= half + 1e-15);
    CHECK(half <= ap + 1e-15);
  }
}

TEST_CASE("evidence-aware AP is non-decreasing in r") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> pos(0, 6);
  for (int trial = 0; trial < 300; ++trial) {
    RankingRun run{"t", {}};
    std::vector<GoldPair> gold;
    for (int i = 0; i < 12; ++i) {
      const std::string sid = "s" + std::to_string(i);
      std::vector<std::string> evidence = {"a", "b", "c", "d", "e"};
      if (pos(rng) < 3) {
        const int where = pos(rng);
        if (where < 5) evidence[static_cast<std::size_t>(where)] = "g" + sid;
        gold.push_back({sid, "g" + sid, Stance::kAgree, Verdict::kTrue});
      }
      run.entries.push_back({sid, 0.0, evidence});
    }
    if (gold.empty()) continue;
    const VerdictIndex v(gold);
    for (auto [lo, hi] : {std::pair<std::size_t, std::size_t>{1, 3}, {3, 5}}) {
      const auto cl = credits_for(run, v, lo), ch = credits_for(run, v, hi);
      CHECK(*ap_hit_only(cl) <= *ap_hit_only(ch));
      CHECK(*ap_graded(cl, 0.0) <= *ap_graded(ch, 0.0));
      CHECK(*ap_graded(cl, 0.5) <= *ap_graded(ch, 0.5));
    }
  }
}

TEST_CASE("permutation sanity") {
  // Hits first with every relevant sentence hit gives a perfect AP_H.
  CHECK(*ap_hit_only(credits({{true, true}, {true, true}, {false, false}})) == 1.0);
  // Moving a relevant sentence below a non-relevant one never raises AP.
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    auto c = random_credits(rng);
    for (std::size_t k = 0; k + 1 < c.size(); ++k) {
      if (c[k].relevant && !c[k + 1].relevant) {
        auto swapped = c;
        std::swap(swapped[k], swapped[k + 1]);
        CHECK(*average_precision(swapped) <= *average_precision(c));
      }
    }
  }
}

TEST_CASE("evidence_hit respects the cutoff") {
  const std::unordered_set<std::string> gold = {"g"};
  const std::vector<std::string> first = {"g", "x", "y"};
  const std::vector<std::string> fourth = {"a", "b", "c", "g"};
  CHECK(evidence_hit(first, gold, 1));
  CHECK_FALSE(evidence_hit(fourth, gold, 3));
  CHECK(evidence_hit(fourth, gold, 4));
  CHECK_FALSE(evidence_hit(first, {}, 3));
}

TEST_CASE("ap_inner examples and oracle") {
  std::vector<std::string> list;
  for (int i = 0; i < 15; ++i) list.push_back("c" + std::to_string(i));
  CHECK(*ap_inner(list, {"c0"}) == 1.0);
  CHECK(*ap_inner(list, {"c0", "c2"}) == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0));
  CHECK(*ap_inner(list, {"zz"}) == 0.0);
  CHECK_FALSE(ap_inner(list, {}).has_value());

  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> pick(0, 24);
  for (int trial = 0; trial < 1000; ++trial) {
    std::unordered_set<std::string> gold;
    std::set<std::string> gold_sorted;
    const int n_gold = 1 + pick(rng) % 4;
    for (int i = 0; i < n_gold; ++i) {
      const auto id = "c" + std::to_string(pick(rng));
      gold.insert(id);
      gold_sorted.insert(id);
    }
    CHECK(std::abs(*ap_inner(list, gold) - oracle::ap_inner(list, gold_sorted)) < 1e-12);
  }
}

TEST_CASE("map_over and aggregation") {
  const std::vector<double> two = {1.0, 0.5};
  CHECK(map_over(two) == 0.75);
  const std::vector<double> one = {0.4};
  CHECK(map_over(one) == 0.4);
  CHECK_THROWS_AS(map_over(std::vector<double>{}), ValidationError);

  CHECK(column_names() == std::vector<std::string>{"MAP", "MAP_0^1", "MAP_0^3", "MAP_0.5^1", "MAP_0.5^3",
                                                   "MAP_H^1", "MAP_H^3"});
  const std::vector<std::size_t> r5 = {5};
  CHECK(column_names(r5) == std::vector<std::string>{"MAP", "MAP_0^5", "MAP_0.5^5", "MAP_H^5"});
}

TEST_CASE("evaluate_runs excludes transcripts without relevant sentences") {
  const std::vector<GoldPair> gold = {{"a1", "c1", Stance::kAgree, Verdict::kFalse},
                                      {"b1", "c2", Stance::kUnrelated, Verdict::kUnknown}};
  const VerdictIndex v(gold);
  const std::vector<RankingRun> runs = {
      {"A", {{"a0", 2.0, {"c9"}}, {"a1", 1.0, {"c1", "c9"}}}},
      {"B", {{"b0", 1.0, {}}, {"b1", 0.5, {"c2"}}}},
  };
  const MetricRow row = evaluate_runs(runs, v);
  CHECK(row.evaluated == 1);
  CHECK(row.excluded == 1);
  CHECK(row.values[0] == 0.5);           // MAP
  CHECK(row.values[1] == 0.5);           // MAP_0^1: hit at r=1
  CHECK(row.values[5] == 0.5);           // MAP_H^1
  REQUIRE(row.map_inner.has_value());
  CHECK(*row.map_inner == 1.0);

  const std::vector<RankingRun> none = {runs[1]};
  CHECK_THROWS_AS(evaluate_runs(none, v), ValidationError);
}

TEST_CASE("validate_run requires each sentence exactly once") {
  TranscriptDoc doc{"T", std::nullopt, {{"s0", "T", 0, std::nullopt, "a"}, {"s1", "T", 1, std::nullopt, "b"}}};
  CHECK_NOTHROW(validate_run({"T", {{"s1", 1, {}}, {"s0", 0, {}}}}, doc));
  CHECK_THROWS_AS(validate_run({"T", {{"s1", 1, {}}}}, doc), ValidationError);
  CHECK_THROWS_AS(validate_run({"T", {{"s1", 1, {}}, {"s1", 0, {}}}}, doc), ValidationError);
  CHECK_THROWS_AS(validate_run({"T", {{"s1", 1, {}}, {"zz", 0, {}}}}, doc), ValidationError);
}

TEST_CASE("run files round-trip and reject rank gaps") {
  testing::TempDir dir("runs");
  const std::vector<RankingRun> runs = {{"A", {{"a1", 0.25, {"c1", "c2"}}, {"a0", -1.5, {}}}},
                                        {"B", {{"b0", 3.0, {"c3"}}}}};
  save_runs(dir / "run.jsonl", runs);
  CHECK(load_runs(dir / "run.jsonl") == runs);

  testing::write_file(dir / "gap.jsonl",
                      "{\"transcript_id\":\"A\",\"rank\":1,\"sentence_id\":\"a1\",\"score\":1,\"evidence\":[]}\n"
                      "{\"transcript_id\":\"A\",\"rank\":3,\"sentence_id\":\"a0\",\"score\":0,\"evidence\":[]}\n");
  CHECK_THROWS_AS(load_runs(dir / "gap.jsonl"), ValidationError);
}
