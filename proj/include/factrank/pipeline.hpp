#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "factrank/bm25.hpp"
#include "factrank/corpus.hpp"
#include "factrank/features.hpp"
#include "factrank/metrics.hpp"
#include "factrank/ranker.hpp"
#include "factrank/report.hpp"

namespace factrank {

enum class Strategy { kBaseline, kConcat, kMax, kMaxSkip };
Strategy parse_strategy(std::string_view text);
std::string_view to_string(Strategy strategy);

struct ExperimentConfig {
  std::filesystem::path data_dir;
  std::filesystem::path output_dir = "out";
  Strategy strategy = Strategy::kMaxSkip;
  std::string baseline = "sbert_statement";
  std::size_t n = 5;
  std::vector<std::size_t> n_grid = {1, 3, 5, 10, 20, 30};
  std::size_t pool_size = 15;
  std::vector<std::size_t> r_values = {1, 3};
  double c = 1.0;
  std::vector<double> c_grid = {0.1, 1.0, 10.0};
  bool select_c = false;
  std::size_t epochs = 200;
  std::uint64_t seed = 13;
  std::vector<std::string> ablate;  // feature families or fields to drop
  Field evidence_field = Field::kBody;
  bool filter_evidence_half_true = false;
  ScoreMode score_mode = ScoreMode::kStrict;
  Bm25Params bm25;

  SlotMask mask() const;
  // Throws ValidationError on inconsistent settings.
  void validate() const;
};

// Missing keys keep their defaults; unknown keys are errors.
ExperimentConfig config_from_json(const nlohmann::json& obj, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});
nlohmann::json config_to_json(const ExperimentConfig& config);

// ---- candidate generation ----

struct SentenceCandidates {
  std::string sentence_id;
  std::vector<ScoredClaim> claims;  // BM25 on body, best first
};

std::vector<SentenceCandidates> generate_candidates(const Corpus& corpus, const Bm25Index& index,
                                                    std::size_t pool_size);

// candidates.jsonl: {sentence_id, candidates: [{claim_id, score}...]}
// manifest.jsonl:   {sentence_id, claim_id}, the pairs dense scoring must cover.
void save_candidates(const std::filesystem::path& path, std::span<const SentenceCandidates> cands);
std::vector<SentenceCandidates> load_candidates(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, std::span<const SentenceCandidates> cands);

struct MissingScore {
  std::string sentence_id;
  std::string claim_id;
  DenseMetric metric;
};

struct CoverageReport {
  std::size_t pairs_checked = 0;
  std::vector<MissingScore> missing;

  bool complete() const { return missing.empty(); }
  std::string summary(std::size_t max_lines = 10) const;
};

// Checks every (sentence, top-depth body candidate) pair for all ten metrics.
CoverageReport check_coverage(const Corpus& corpus, const Bm25Index& index, std::size_t depth);

// ---- experiments ----

struct FoldReport {
  std::string test_transcript;
  std::vector<std::string> training_transcripts;
  std::optional<TranscriptMetrics> metrics;  // nullopt: no relevant sentence
  RankingRun run;
  RankModel model;
};

struct CvResult {
  std::string label;
  std::vector<FoldReport> folds;
  MetricRow aggregate;
  std::size_t missing_scores = 0;  // lenient mode only
};

// Everything derived from one corpus that is shared across experiments:
// the index, each sentence's candidate pairs, and relevance labels.
class Experiment {
 public:
  // Candidates are prepared to depth max(n, n_grid). In strict mode throws
  // MissingScoreError, with a coverage summary, when any of them lacks a score.
  Experiment(const Corpus& corpus, ExperimentConfig config);

  const Corpus& corpus() const { return corpus_; }
  const Bm25Index& index() const { return index_; }
  const ExperimentConfig& config() const { return config_; }
  std::size_t missing_scores() const { return missing_; }

  // Per-sentence vectors of one transcript, document order.
  std::vector<SentenceVector> vectors(const TranscriptDoc& doc, PoolStrategy strategy, std::size_t n) const;

  // Leave-one-transcript-out evaluation of one RankSVM variant.
  CvResult run_cv(PoolStrategy strategy, std::size_t n, const SlotMask& keep, std::string label) const;
  CvResult run_cv() const;

  // Trains on the given transcripts (all when empty).
  RankModel train_model(PoolStrategy strategy, std::size_t n, const SlotMask& keep,
                        const std::vector<std::string>& transcript_ids = {}) const;

  // One single-score baseline over every transcript; no training.
  CvResult run_baseline(const BaselineSlot& baseline) const;

  // Ranks produced by a single-score baseline: evidence for the columns and
  // per-sentence claim rankings by the same score for MAP_inner.
  std::vector<RankingRun> baseline_runs(const BaselineSlot& baseline, bool inner_evidence) const;

  ReportBlock baselines_block() const;
  ReportBlock strategy_block(PoolStrategy strategy) const;
  // Full model row followed by the eight leave-one-group-out rows.
  ReportBlock ablation_block(PoolStrategy strategy, std::size_t n) const;

  // Baselines plus the three RankSVM blocks over the N grid.
  Report grid_report() const;
  Report ablation_report() const;

 private:
  struct Prepared {
    std::vector<PairFeatures> pairs;     // top-depth body candidates
    std::vector<std::string> evidence;   // top-pool evidence claims
    TokenStream tokens;
  };

  const Prepared& prepared(const std::string& sentence_id) const;
  std::vector<LabeledTranscript> labeled(std::span<const std::string> transcript_ids, PoolStrategy strategy,
                                         std::size_t n, const SlotMask& keep) const;
  double select_c(std::span<const std::string> training, PoolStrategy strategy, std::size_t n,
                  const SlotMask& keep) const;
  RankModel fit_on(std::span<const std::string> training, PoolStrategy strategy, std::size_t n,
                   const SlotMask& keep, double c) const;

  const Corpus& corpus_;
  ExperimentConfig config_;
  Bm25Index index_;
  std::size_t depth_ = 0;
  std::size_t missing_ = 0;
  std::unordered_map<std::string, Prepared> prepared_;
};

// Files written by `cv`: folds.json, run.jsonl, report.json, report.txt.
void write_cv_outputs(const std::filesystem::path& dir, const CvResult& result, const Report& report);

// Content hash (FNV-1a, 64 bit) of files and extra key material.
std::string content_hash(std::span<const std::filesystem::path> files, std::string_view extra);

}  // namespace factrank
