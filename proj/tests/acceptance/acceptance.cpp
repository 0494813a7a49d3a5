// Acceptance checks for the ranking engine. Prints one PASS/FAIL line per
// criterion and exits nonzero when any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "factrank/bm25.hpp"
#include "factrank/features.hpp"
#include "factrank/metrics.hpp"
#include "factrank/pipeline.hpp"
#include "factrank/ranker.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace factrank;
namespace fs = std::filesystem;

namespace {

// Collects failures for one criterion.
struct Check {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok && failures.size() < 5) failures.push_back(what);
  }
};

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

// ---- random runs with gold verdicts ----

struct RandomRun {
  RankingRun run;
  std::vector<GoldPair> gold;
  std::map<std::string, std::set<std::string>> decisive;
};

RandomRun random_run(std::mt19937_64& rng, int id) {
  std::uniform_int_distribution<std::size_t> len(1, 30);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::vector<std::string> claims = {"k0", "k1", "k2", "k3", "k4", "k5", "k6", "k7"};
  const double p_rel = u(rng), p_hit = u(rng);
  RandomRun out;
  out.run.transcript_id = "T" + std::to_string(id);
  const std::size_t n = len(rng);
  const std::size_t forced = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  for (std::size_t i = 0; i < n; ++i) {
    RankedSentence s{out.run.transcript_id + "-" + std::to_string(i), u(rng), {}};
    std::vector<std::string> pool = claims;
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(std::uniform_int_distribution<std::size_t>(0, 5)(rng));
    s.evidence = pool;
    if (i == forced || u(rng) < p_rel) {
      // Gold claims: some from the evidence list when a hit is wanted.
      std::set<std::string> gold;
      if (!pool.empty() && u(rng) < p_hit) gold.insert(pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)]);
      gold.insert(claims[std::uniform_int_distribution<std::size_t>(0, claims.size() - 1)(rng)]);
      for (const auto& c : gold) out.gold.push_back({s.sentence_id, c, Stance::kAgree, u(rng) < 0.5 ? Verdict::kTrue : Verdict::kFalse});
      out.decisive[s.sentence_id] = gold;
    } else if (!pool.empty() && u(rng) < 0.3) {
      out.gold.push_back({s.sentence_id, pool[0], Stance::kUnrelated, Verdict::kUnknown});
    }
    out.run.entries.push_back(std::move(s));
  }
  return out;
}

std::vector<oracle::Item> items_at(const RandomRun& rr, std::size_t r) {
  std::vector<oracle::Item> items;
  for (const auto& e : rr.run.entries) {
    auto it = rr.decisive.find(e.sentence_id);
    const bool rel = it != rr.decisive.end();
    items.push_back({rel, rel && oracle::hit_at(e.evidence, it->second, r)});
  }
  return items;
}

// MAP, MAP_0^1, MAP_0^3, MAP_0.5^1, MAP_0.5^3, MAP_H^1, MAP_H^3 by brute force.
std::vector<double> oracle_columns(const RandomRun& rr) {
  const auto i1 = items_at(rr, 1), i3 = items_at(rr, 3);
  return {oracle::ap(i1),         oracle::ap_m(i1, 0.0), oracle::ap_m(i3, 0.0), oracle::ap_m(i1, 0.5),
          oracle::ap_m(i3, 0.5),  oracle::ap_h(i1),      oracle::ap_h(i3)};
}

std::vector<RandomRun> random_runs(std::size_t count) {
  std::mt19937_64 rng(90210);
  std::vector<RandomRun> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(random_run(rng, static_cast<int>(i)));
  return out;
}

// ---- criteria ----

void metric_oracle(Check& c) {
  const auto start = std::chrono::steady_clock::now();
  for (const auto& rr : random_runs(1000)) {
    const auto lib = evaluate_run(rr.run, VerdictIndex(rr.gold));
    if (!lib) {
      c.expect(false, rr.run.transcript_id + ": no metrics");
      continue;
    }
    const auto want = oracle_columns(rr);
    for (std::size_t k = 0; k < want.size(); ++k)
      c.expect(std::abs(lib->ap[k] - want[k]) <= 1e-12,
               rr.run.transcript_id + " column " + std::to_string(k) + ": " + fmt(lib->ap[k]) + " vs " + fmt(want[k]));
    std::vector<double> inner;
    for (const auto& e : rr.run.entries) {
      auto it = rr.decisive.find(e.sentence_id);
      if (it != rr.decisive.end()) inner.push_back(oracle::ap_inner(e.evidence, it->second));
    }
    c.expect(lib->inner.size() == inner.size(), rr.run.transcript_id + ": inner count");
    for (std::size_t k = 0; k < inner.size() && k < lib->inner.size(); ++k)
      c.expect(std::abs(lib->inner[k] - inner[k]) <= 1e-12, rr.run.transcript_id + ": AP_inner");
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  c.expect(secs < 10.0, "took " + fmt(secs) + " s");
}

void ordering_law(Check& c) {
  for (const auto& rr : random_runs(1000)) {
    const VerdictIndex verdicts(rr.gold);
    for (std::size_t r : {1u, 3u}) {
      const auto cr = credits_for(rr.run, verdicts, r);
      const double h = *ap_hit_only(cr), z = *ap_graded(cr, 0.0), half = *ap_graded(cr, 0.5),
                   ap = *average_precision(cr);
      c.expect(h <= z + 1e-15 && z <= half + 1e-15 && half <= ap + 1e-15, rr.run.transcript_id + ": order");
      bool all_hit = true;
      for (const auto& x : cr) all_hit = all_hit && (!x.relevant || x.evidence_hit);
      if (all_hit) c.expect(h == ap && z == ap && half == ap, rr.run.transcript_id + ": all-hit equality");
    }
  }
  const std::vector<SentenceCredit> ex = {{true, true}, {true, false}, {false, false}};
  c.expect(*ap_graded(ex, 0.0) == 0.75, "worked AP_0");
  c.expect(*ap_graded(ex, 0.5) == 0.875, "worked AP_0.5");
  c.expect(*ap_hit_only(ex) == 0.5, "worked AP_H");
  c.expect(*average_precision(ex) == 1.0, "worked AP");
}

VerifiedClaim doc(std::string id, std::string body) {
  VerifiedClaim v;
  v.claim_id = std::move(id);
  v.statement = "s";
  v.title = "t";
  v.body = std::move(body);
  return v;
}

void bm25_checks(Check& c) {
  const auto tax = Bm25Index::build({doc("d1", "tax cut tax"), doc("d2", "jobs plan")});
  const double s = tax.score({"tax"}, Field::kBody, "d1");
  c.expect(std::abs(s - 0.9023) < 1e-4, "tax fixture " + fmt(s));
  const double exact = std::log(2.0) * 2 * 2.2 / (2 + 1.2 * (0.25 + 0.75 * 3 / 2.5));
  c.expect(std::abs(s - exact) < 1e-6, "tax fixture closed form");

  std::mt19937_64 rng(31337);
  const std::vector<std::string> vocab = {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"};
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n_docs = 1 + rng() % 200;
    std::vector<VerifiedClaim> claims;
    std::vector<std::vector<std::string>> bodies;
    for (std::size_t d = 0; d < n_docs; ++d) {
      std::vector<std::string> words;
      std::string text;
      for (std::size_t w = 0, len = rng() % 20; w < len; ++w) {
        words.push_back(vocab[rng() % vocab.size()]);
        text += words.back() + " ";
      }
      bodies.push_back(words);
      claims.push_back(doc("c" + std::to_string(d), text));
    }
    const auto idx = Bm25Index::build(claims);
    std::vector<std::string> query;
    for (std::size_t q = 0, nq = 1 + rng() % 6; q < nq; ++q) query.push_back(vocab[rng() % vocab.size()]);
    for (std::size_t d = 0; d < n_docs; ++d)
      c.expect(std::abs(idx.score_doc(query, Field::kBody, d) - oracle::bm25(bodies, d, query)) <= 1e-9,
               "random corpus " + std::to_string(trial));
  }
}

PairFeatures random_pair(std::mt19937_64& rng, const std::string& id) {
  std::uniform_real_distribution<double> u(-1.0, 3.0);
  PairFeatures p{"s", id, {}};
  for (auto& v : p.values) v = u(rng);
  return p;
}

void feature_contracts(Check& c, const Corpus& separable) {
  std::mt19937_64 rng(5);
  for (std::size_t n : {1u, 3u, 5u, 10u, 20u, 30u}) {
    std::vector<PairFeatures> pairs;
    for (std::size_t i = 0; i < n; ++i) pairs.push_back(random_pair(rng, "c" + std::to_string(i)));
    c.expect(pool_concat(pairs, n).values.size() == 19 * n, "concat dim at N=" + std::to_string(n));
  }
  std::vector<PairFeatures> three = {random_pair(rng, "a")};
  c.expect(pool_concat(three, 3).values.size() == 57, "dim(concat, 3) = 57");

  for (int trial = 0; trial < 500; ++trial) {
    std::vector<PairFeatures> pairs;
    std::map<std::string, TruthValue> truth;
    for (std::size_t i = 0, count = 1 + rng() % 30; i < count; ++i) {
      pairs.push_back(random_pair(rng, "c" + std::to_string(i)));
      truth[pairs.back().claim_id] = static_cast<TruthValue>(rng() % 6);
    }
    const std::size_t n = 1 + rng() % 30;
    const std::vector<PairFeatures> top(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(std::min(n, pairs.size())));
    const auto pooled = pool_max(top, n);
    for (std::size_t s = 0; s < kNumSlots; ++s) {
      bool attained = false;
      for (const auto& p : top) {
        c.expect(pooled.values[s] >= p.values[s], "max dominance");
        attained = attained || pooled.values[s] == p.values[s];
      }
      c.expect(attained, "max attained");
    }
    const auto filtered = filter_half_true(top, [&](const std::string& id) { return truth.at(id); });
    for (const auto& p : filtered) c.expect(truth.at(p.claim_id) != TruthValue::kHalfTrue, "half-true kept");
    const auto after = pool_max(filtered, n);
    if (!after.empty)
      for (std::size_t s = 0; s < kNumSlots; ++s) c.expect(after.values[s] <= pooled.values[s], "filter increased a slot");
  }

  // Slot sources on real candidate pairs.
  const auto index = Bm25Index::build(separable.claims());
  const auto& table = separable.scores();
  std::size_t checked = 0;
  for (const auto& s : separable.transcripts()[0].sentences) {
    const auto tokens = tokenize(s.text);
    for (const auto& cand : candidates(tokens, index, 5)) {
      const auto p = assemble_pair(s, tokens, cand.claim_id, index, {table, ScoreMode::kStrict, nullptr});
      c.expect(p.values[slot::kBm25Statement] == index.score(tokens, Field::kStatement, cand.claim_id), "bm25 statement slot");
      c.expect(p.values[slot::kBm25Title] == index.score(tokens, Field::kTitle, cand.claim_id), "bm25 title slot");
      c.expect(p.values[slot::kBm25Body] == cand.score, "bm25 body slot");
      auto single = [&](DenseMetric m) { return table.find(s.sentence_id, cand.claim_id, m)->front(); };
      c.expect(p.values[slot::kNliEntail] == single(DenseMetric::kNliEntail), "nli entail slot");
      c.expect(p.values[slot::kNliNeutral] == single(DenseMetric::kNliNeutral), "nli neutral slot");
      c.expect(p.values[slot::kNliContradict] == single(DenseMetric::kNliContradict), "nli contradict slot");
      c.expect(p.values[slot::kBertscoreF1] == single(DenseMetric::kBertscoreF1), "bertscore slot");
      c.expect(p.values[slot::kSbertStatement] == single(DenseMetric::kSbertStatement), "sbert statement slot");
      c.expect(p.values[slot::kSimcseTitle] == single(DenseMetric::kSimcseTitle), "simcse title slot");
      const auto& top = *table.find(s.sentence_id, cand.claim_id, DenseMetric::kSbertBodyTop);
      for (std::size_t k = 0; k < 4; ++k) {
        const double want = top.empty() ? 0.0 : top[std::min(k, top.size() - 1)];
        c.expect(p.values[slot::kSbertBody + k] == want, "sbert body slot");
      }
      ++checked;
    }
  }
  c.expect(checked > 0, "no candidate pairs checked");
}

std::string bytes_of_runs(const std::vector<RankingRun>& runs, const fs::path& tmp) {
  save_runs(tmp, runs);
  return testing::read_file(tmp);
}

void ranksvm_sanity(Check& c) {
  const auto start = std::chrono::steady_clock::now();
  testing::TempDir dir("accept-svm");
  std::string first_runs, first_models;
  for (int round = 0; round < 2; ++round) {
    const Corpus corpus = testing::load_fixture("separable");
    c.expect(corpus.transcripts().size() == 5 && corpus.transcripts()[0].size() == 40, "fixture shape");
    ExperimentConfig cfg;
    cfg.n_grid.clear();
    const Experiment exp(corpus, cfg);
    const CvResult res = exp.run_cv();
    c.expect(res.aggregate.values[0] == 1.0, "MAP " + fmt(res.aggregate.values[0]));
    c.expect(res.aggregate.values[5] == 1.0, "MAP_H^1 " + fmt(res.aggregate.values[5]));

    std::vector<RankingRun> runs;
    std::string models;
    for (const auto& f : res.folds) {
      runs.push_back(f.run);
      save_model(dir / "m.json", f.model);
      models += testing::read_file(dir / "m.json");
    }
    const RankModel all = exp.train_model(PoolStrategy::kMax, 5, full_mask());
    const auto w = raw_weights(all);
    for (std::size_t s : {slot::kNliEntail, slot::kSbertStatement, slot::kSimcseStatement})
      c.expect(w[s] > 0.0, "planted slot " + std::string(slot_name(s)) + " weight " + fmt(w[s]));
    save_model(dir / "all.json", all);
    models += testing::read_file(dir / "all.json");

    const std::string run_bytes = bytes_of_runs(runs, dir / "r.jsonl");
    if (round == 0) {
      first_runs = run_bytes;
      first_models = models;
    } else {
      c.expect(run_bytes == first_runs, "runs differ between identical seeds");
      c.expect(models == first_models, "models differ between identical seeds");
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  c.expect(secs < 60.0, "took " + fmt(secs) + " s");
}

void protocol_parity(Check& c) {
  const Corpus corpus = testing::load_fixture("protocol");
  c.expect(corpus.transcripts().size() == 7, "seven transcripts");
  const ExperimentConfig cfg;
  const std::vector<std::size_t> grid = {1, 3, 5, 10, 20, 30};
  c.expect(cfg.n_grid == grid, "default N grid");
  const Experiment exp(corpus, cfg);
  const std::vector<std::string> columns = {"MAP", "MAP_0^1", "MAP_0^3", "MAP_0.5^1", "MAP_0.5^3", "MAP_H^1", "MAP_H^3"};

  const Report g = exp.grid_report();
  c.expect(g.columns == columns, "grid columns");
  c.expect(g.blocks.size() == 4, "four strategy blocks");
  if (g.blocks.size() == 4) {
    c.expect(g.blocks[0].rows.size() == baseline_slots().size(), "baseline rows");
    for (std::size_t b = 1; b < 4; ++b) {
      c.expect(g.blocks[b].rows.size() == grid.size(), "grid rows in block " + std::to_string(b));
      for (std::size_t i = 0; i < g.blocks[b].rows.size() && i < grid.size(); ++i)
        c.expect(g.blocks[b].rows[i].label == "Top-" + std::to_string(grid[i]), "row label " + g.blocks[b].rows[i].label);
    }
  }
  for (const auto& b : g.blocks)
    for (const auto& r : b.rows) {
      c.expect(r.values.size() == columns.size(), "row width");
      c.expect(r.evaluated == 7, r.label + ": evaluated " + std::to_string(r.evaluated));
      for (double v : r.values) c.expect(v >= 0.0 && v <= 1.0, r.label + ": value out of range");
    }

  const Report a = exp.ablation_report();
  c.expect(a.columns == columns, "ablation columns");
  c.expect(a.blocks.size() == 1 && a.blocks[0].rows.size() == 9, "ablation rows");
  if (a.blocks.size() == 1 && a.blocks[0].rows.size() == 9) {
    const auto& ab = standard_ablations();
    for (std::size_t i = 0; i < 8; ++i) c.expect(a.blocks[0].rows[i + 1].label == ab[i].label, "ablation " + ab[i].label);
  }
}

void candidate_count(Check& c) {
  const Corpus corpus = testing::load_fixture("overlap700");
  const auto index = Bm25Index::build(corpus.claims());
  const auto cands = generate_candidates(corpus, index, 15);
  std::size_t pairs = 0;
  for (const auto& s : cands) pairs += s.claims.size();
  c.expect(cands.size() == 700, "sentences " + std::to_string(cands.size()));
  c.expect(pairs == 10500, "pairs " + std::to_string(pairs));
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + FACTRANK_BIN + "\" " + args + " >\"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = testing::read_file(e.path());
  return out;
}

void end_to_end(Check& c) {
  testing::TempDir dir("accept-e2e");
  const std::string data = testing::fixture("separable").string();
  std::map<std::string, std::string> first;
  for (const char* name : {"a", "b"}) {
    const fs::path root = dir / name;
    fs::create_directories(root / "out");
    const fs::path out = root / "out";
    const fs::path log = root / "log.txt";
    c.expect(run_cli("ingest --data-dir \"" + data + "\" --out \"" + (out / "data").string() + "\"", log) == 0, "ingest");
    c.expect(run_cli("cv --data-dir \"" + (out / "data").string() + "\" --out \"" + (out / "cv").string() + "\"", log) == 0, "cv");
    c.expect(run_cli("report \"" + (out / "cv" / "report.json").string() + "\" --out \"" + (out / "report").string() + "\"", log) == 0,
             "report");
    const auto files = tree(out);
    c.expect(files.count("cv/run.jsonl") && files.count("report/report.txt"), "outputs present");
    if (first.empty()) first = files;
    else c.expect(files == first, "outputs differ between identical runs");
  }

  // Strict mode: one deleted score record aborts with exit 1 and no run file.
  const fs::path holed = dir / "holed";
  fs::copy(data, holed, fs::copy_options::recursive);
  std::string scores = testing::read_file(holed / "scores.jsonl");
  scores.erase(0, scores.find('\n') + 1);
  testing::write_file(holed / "scores.jsonl", scores);
  const int rc = run_cli("cv --data-dir \"" + holed.string() + "\" --out \"" + (dir / "strict").string() + "\"", dir / "strict.log");
  c.expect(rc == 1, "strict abort exit " + std::to_string(rc));
  c.expect(!fs::exists(dir / "strict" / "run.jsonl"), "strict abort wrote a run");
  c.expect(testing::read_file(dir / "strict.log").find("missing") != std::string::npos, "strict abort message");
}

}  // namespace

int main() {
  const Corpus separable = testing::load_fixture("separable");
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria = {
      {"metric oracle equivalence on 1000 random runs", metric_oracle},
      {"AP_H <= AP_0 <= AP_0.5 <= AP ordering and worked example", ordering_law},
      {"BM25 fixture value and brute-force equivalence", bm25_checks},
      {"feature dimensions, pooling and slot sources", [&](Check& c) { feature_contracts(c, separable); }},
      {"RankSVM recovers a separable corpus deterministically", ranksvm_sanity},
      {"evaluation protocol columns, blocks and ablations", protocol_parity},
      {"700-sentence full-overlap fixture gives 10500 pairs", candidate_count},
      {"end-to-end determinism and strict-mode abort", end_to_end},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].second(c);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool ok = c.failures.empty();
    failed += ok ? 0 : 1;
    std::printf("%s [%zu] %s (%.2fs)\n", ok ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), secs);
    for (const auto& f : c.failures) std::printf("       %s\n", f.c_str());
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
