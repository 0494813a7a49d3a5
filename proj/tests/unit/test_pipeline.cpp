#include <doctest.h>

#include "factrank/errors.hpp"
#include "factrank/pipeline.hpp"
#include "factrank/synth.hpp"
#include "helpers.hpp"

using namespace factrank;

namespace {

synth::Options small(std::size_t transcripts = 3) {
  synth::Options o;
  o.transcripts = transcripts;
  o.sentences = 16;
  o.relevant = 3;
  o.claims = 24;
  return o;
}

ExperimentConfig quick() {
  ExperimentConfig c;
  c.n_grid = {1, 3, 5};
  c.epochs = 60;
  return c;
}

Corpus without_scores(const Corpus& c) { return Corpus(c.claims(), c.transcripts(), c.gold(), ScoreTable{}); }

}  // namespace

TEST_CASE("config files: defaults, overrides and unknown keys") {
  const auto cfg = config_from_json({{"strategy", "max"}, {"n", 3}, {"ablate", {"nli"}}, {"bm25", {{"k1", 0.9}}}});
  CHECK(cfg.strategy == Strategy::kMax);
  CHECK(cfg.n == 3);
  CHECK(cfg.pool_size == 15);
  CHECK(cfg.bm25.k1 == 0.9);
  CHECK(cfg.bm25.b == 0.75);
  CHECK(cfg.mask().count() == 16);
  CHECK_THROWS_AS(config_from_json({{"colour", 1}}), ValidationError);
  CHECK_THROWS_AS(config_from_json({{"n", "five"}}), ValidationError);
  CHECK_THROWS_AS(config_from_json({{"score_mode", "loose"}}), ValidationError);

  ExperimentConfig bad;
  bad.n = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = {};
  bad.ablate = {"bm25", "nli", "bertscore", "sbert", "simcse"};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = {};
  bad.strategy = Strategy::kBaseline;
  bad.baseline = "nope";
  CHECK_THROWS_AS(bad.validate(), ValidationError);

  const auto round = config_from_json(config_to_json(cfg));
  CHECK(config_to_json(round) == config_to_json(cfg));

  testing::TempDir dir("cfg");
  testing::write_file(dir / "exp.json", R"({"data_dir": "data", "strategy": "concat"})");
  const auto loaded = load_config(dir / "exp.json");
  CHECK(loaded.data_dir == dir.path() / "data");
  CHECK(loaded.strategy == Strategy::kConcat);
  testing::write_file(dir / "broken.json", "{");
  CHECK_THROWS_AS(load_config(dir / "broken.json"), ValidationError);
}

TEST_CASE("strict mode aborts before training when one record is missing") {
  const Corpus full = synth::generate(small());
  const ExperimentConfig cfg = quick();
  CHECK_NOTHROW(Experiment(full, cfg));

  // Remove one record of a top candidate pair.
  const Bm25Index index = Bm25Index::build(full.claims());
  const auto& s = full.transcripts()[1].sentences[4];
  const auto top = candidates(tokenize(s.text), index, 1);
  REQUIRE(top.size() == 1);
  ScoreTable scores;
  for (const auto& r : full.scores().records())
    if (!(r.sentence_id == s.sentence_id && r.claim_id == top[0].claim_id && r.metric == DenseMetric::kBertscoreF1))
      scores.insert(r);
  const Corpus holed(full.claims(), full.transcripts(), full.gold(), scores);
  const auto report = check_coverage(holed, index, 5);
  REQUIRE(report.missing.size() == 1);
  CHECK(report.missing[0].sentence_id == s.sentence_id);
  CHECK(report.summary().find("bertscore_f1") != std::string::npos);
  CHECK_THROWS_AS(Experiment(holed, cfg), MissingScoreError);

  ExperimentConfig lenient = cfg;
  lenient.score_mode = ScoreMode::kLenient;
  const Experiment exp(holed, lenient);
  CHECK(exp.missing_scores() == 1);
}

TEST_CASE("cross-validation on a planted corpus") {
  const Corpus corpus = synth::generate(small(4));
  const Experiment exp(corpus, quick());
  const CvResult res = exp.run_cv(PoolStrategy::kMaxSkip, 3, full_mask(), "max-skip");
  REQUIRE(res.folds.size() == 4);
  CHECK(res.aggregate.values[0] == 1.0);
  CHECK(res.aggregate.values[5] == 1.0);  // MAP_H^1
  CHECK(res.aggregate.evaluated == 4);

  for (const auto& fold : res.folds) {
    CHECK(fold.training_transcripts.size() == 3);
    CHECK(std::find(fold.training_transcripts.begin(), fold.training_transcripts.end(), fold.test_transcript) ==
          fold.training_transcripts.end());
    // Normalization comes from the training transcripts alone.
    std::vector<std::vector<double>> rows;
    for (const auto& id : fold.training_transcripts)
      for (const auto& v : exp.vectors(*corpus.find_transcript(id), PoolStrategy::kMaxSkip, 3)) rows.push_back(v.values);
    std::vector<std::span<const double>> spans(rows.begin(), rows.end());
    CHECK(compute_normalization(spans) == fold.model.normalization);
    CHECK(fold.model.strategy == "max-skip");
    CHECK(fold.model.n_candidates == 3);
  }

  // Same inputs, same outputs.
  const CvResult again = exp.run_cv(PoolStrategy::kMaxSkip, 3, full_mask(), "max-skip");
  for (std::size_t f = 0; f < res.folds.size(); ++f) {
    CHECK(res.folds[f].run == again.folds[f].run);
    CHECK(res.folds[f].model == again.folds[f].model);
  }
}

TEST_CASE("cv needs two transcripts; two give two folds") {
  const Corpus one = synth::generate(small(1));
  CHECK_THROWS_AS(Experiment(one, quick()).run_cv(PoolStrategy::kMax, 1, full_mask(), "x"), ValidationError);
  const Corpus two = synth::generate(small(2));
  CHECK(Experiment(two, quick()).run_cv(PoolStrategy::kMax, 1, full_mask(), "x").folds.size() == 2);
}

TEST_CASE("C selection stays inside the grid and is deterministic") {
  const Corpus corpus = synth::generate(small(3));
  ExperimentConfig cfg = quick();
  cfg.select_c = true;
  cfg.c_grid = {0.1, 10.0};
  const Experiment exp(corpus, cfg);
  const auto a = exp.run_cv(PoolStrategy::kMax, 3, full_mask(), "x");
  const auto b = exp.run_cv(PoolStrategy::kMax, 3, full_mask(), "x");
  for (std::size_t f = 0; f < a.folds.size(); ++f) {
    CHECK((a.folds[f].model.c == 0.1 || a.folds[f].model.c == 10.0));
    CHECK(a.folds[f].model == b.folds[f].model);
  }
}

TEST_CASE("emitted run files evaluate to the in-process metrics") {
  const Corpus corpus = synth::generate(small(3));
  const Experiment exp(corpus, quick());
  const CvResult res = exp.run_cv(PoolStrategy::kConcat, 3, full_mask(), "concat");
  testing::TempDir dir("cvout");
  Report r{"t", column_names(), {{"b", {make_row(res.label, res.aggregate)}}}};
  write_cv_outputs(dir.path(), res, r);
  for (const char* f : {"folds.json", "run.jsonl", "report.json", "report.txt"})
    CHECK(std::filesystem::exists(dir / f));
  const auto runs = load_runs(dir / "run.jsonl");
  const MetricRow row = evaluate_runs(runs, VerdictIndex(corpus.gold()));
  CHECK(row.values == res.aggregate.values);
  CHECK(row.map_inner == res.aggregate.map_inner);
}

TEST_CASE("baselines") {
  const Corpus corpus = synth::generate(small(3));
  const Experiment exp(corpus, quick());
  // Planted slots separate relevant sentences perfectly.
  CHECK(exp.run_baseline(find_baseline("sbert_statement")).aggregate.values[0] == 1.0);
  const auto bm25 = exp.run_baseline(find_baseline("bm25_body"));
  REQUIRE(bm25.aggregate.map_inner.has_value());
  CHECK(*bm25.aggregate.map_inner == 1.0);

  // No scores at all: every dense baseline scores 0 and keeps document order.
  const Corpus bare = without_scores(corpus);
  ExperimentConfig lenient = quick();
  lenient.score_mode = ScoreMode::kLenient;
  const Experiment empty(bare, lenient);
  for (const auto& run : empty.baseline_runs(find_baseline("sbert_statement"), false)) {
    const auto& doc = *bare.find_transcript(run.transcript_id);
    for (std::size_t i = 0; i < run.entries.size(); ++i) {
      CHECK(run.entries[i].sentence_id == doc.sentences[i].sentence_id);
      CHECK(run.entries[i].score == 0.0);
    }
  }
}

TEST_CASE("report shapes") {
  const Corpus corpus = synth::generate(small(3));
  const Experiment exp(corpus, quick());
  const Report grid = exp.grid_report();
  CHECK(grid.columns == column_names());
  REQUIRE(grid.blocks.size() == 4);
  CHECK(grid.blocks[0].rows.size() == 14);
  for (std::size_t b = 1; b < 4; ++b) {
    REQUIRE(grid.blocks[b].rows.size() == 3);
    CHECK(grid.blocks[b].rows[0].label == "Top-1");
    CHECK(grid.blocks[b].rows[2].label == "Top-5");
  }
  const Report abl = exp.ablation_report();
  REQUIRE(abl.blocks.size() == 1);
  CHECK(abl.blocks[0].rows.size() == 9);
  CHECK(abl.blocks[0].rows[7].label == "w/o scores on VerifiedStatement");
}

TEST_CASE("candidate files and manifest") {
  const Corpus corpus = synth::generate(small(2));
  const Bm25Index index = Bm25Index::build(corpus.claims());
  const auto c15 = generate_candidates(corpus, index, 15);
  const auto c2 = generate_candidates(corpus, index, 2);
  CHECK(c15.size() == 32);
  for (std::size_t i = 0; i < c15.size(); ++i) {
    CHECK(c2[i].claims.size() == std::min<std::size_t>(2, c15[i].claims.size()));
    CHECK(c15[i].claims.size() <= 15);
  }
  testing::TempDir dir("cands");
  save_candidates(dir / "c.jsonl", c15);
  const auto back = load_candidates(dir / "c.jsonl");
  REQUIRE(back.size() == c15.size());
  CHECK(back[3].claims == c15[3].claims);
  save_manifest(dir / "m.jsonl", c15);
  std::size_t lines = 0, pairs = 0;
  for (const auto& s : c15) pairs += s.claims.size();
  std::ifstream in(dir / "m.jsonl");
  for (std::string l; std::getline(in, l);) ++lines;
  CHECK(lines == pairs);
}

TEST_CASE("content hash") {
  testing::TempDir dir("hash");
  testing::write_file(dir / "a.txt", "hello");
  const std::vector<std::filesystem::path> files = {dir / "a.txt"};
  const auto h = content_hash(files, "k");
  CHECK(h.size() == 16);
  CHECK(content_hash(files, "k") == h);
  CHECK(content_hash(files, "k2") != h);
  testing::write_file(dir / "a.txt", "hellp");
  CHECK(content_hash(files, "k") != h);
  const std::vector<std::filesystem::path> missing = {dir / "zz"};
  CHECK_THROWS_AS(content_hash(missing, ""), ValidationError);
}
