#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "factrank/corpus.hpp"

namespace factrank {

struct RankedSentence {
  std::string sentence_id;
  double score = 0.0;
  std::vector<std::string> evidence;  // best claim first

  bool operator==(const RankedSentence&) const = default;
};

// One transcript's sentences in rank order (rank = position + 1).
struct RankingRun {
  std::string transcript_id;
  std::vector<RankedSentence> entries;

  bool operator==(const RankingRun&) const = default;
};

// Throws ValidationError unless every transcript sentence appears exactly once.
void validate_run(const RankingRun& run, const TranscriptDoc& transcript);

enum class CreditMode { kGraded, kHitOnly };

struct EvalConfig {
  std::size_t r = 1;
  double m = 0.0;  // credit for a relevant sentence whose evidence misses
  CreditMode mode = CreditMode::kGraded;
};

struct SentenceCredit {
  bool relevant = false;
  bool evidence_hit = false;  // implies relevant
};

// For each sentence, the claims that give it a true/false verdict.
class VerdictIndex {
 public:
  VerdictIndex() = default;
  explicit VerdictIndex(std::span<const GoldPair> gold);

  const std::unordered_set<std::string>& decisive(std::string_view sentence_id) const;
  bool relevant(std::string_view sentence_id) const { return !decisive(sentence_id).empty(); }

 private:
  std::unordered_map<std::string, std::unordered_set<std::string>> decisive_;
};

// True iff one of the first r evidence claims has a true/false verdict pair
// with the sentence.
bool evidence_hit(std::span<const std::string> evidence,
                  const std::unordered_set<std::string>& decisive_claims, std::size_t r);

std::vector<SentenceCredit> credits_for(const RankingRun& run, const VerdictIndex& verdicts,
                                        std::size_t r);

// All AP variants return nullopt when the list holds no relevant sentence.

// Sum of precision@k at relevant ranks over the number of relevant sentences.
std::optional<double> average_precision(std::span<const SentenceCredit> ranked);

// Precision counts 1 per relevant sentence with a hit and m per relevant
// sentence without one; summed at every relevant rank. m = 1 gives plain AP.
std::optional<double> ap_graded(std::span<const SentenceCredit> ranked, double m);

// Only relevant sentences with a hit count, both in precision and as rank
// indicators. The denominator is still every relevant sentence.
std::optional<double> ap_hit_only(std::span<const SentenceCredit> ranked);

std::optional<double> ap_evidence(std::span<const SentenceCredit> ranked, const EvalConfig& config);

// AP of one sentence's evidence list against its true/false-verdict claims.
// nullopt when the sentence has no such claim.
std::optional<double> ap_inner(std::span<const std::string> evidence,
                               const std::unordered_set<std::string>& decisive_claims);

// Unweighted mean. Throws ValidationError on an empty input.
double map_over(std::span<const double> values);

// Column set for the given evidence cutoffs: MAP, then MAP_0^r, MAP_0.5^r
// and MAP_H^r for each r. r = {1, 3} gives
// MAP, MAP_0^1, MAP_0^3, MAP_0.5^1, MAP_0.5^3, MAP_H^1, MAP_H^3.
inline constexpr std::array<std::size_t, 2> kDefaultCutoffs = {1, 3};
std::vector<std::string> column_names(std::span<const std::size_t> cutoffs = kDefaultCutoffs);

// AP-level values for one transcript, in column_names() order.
struct TranscriptMetrics {
  std::string transcript_id;
  std::vector<double> ap;
  std::vector<double> inner;  // AP_inner of each relevant sentence, rank order
};

std::optional<TranscriptMetrics> evaluate_run(const RankingRun& run, const VerdictIndex& verdicts,
                                              std::span<const std::size_t> cutoffs = kDefaultCutoffs);

struct MetricRow {
  std::vector<std::string> columns;
  std::vector<double> values;
  std::optional<double> map_inner;
  std::size_t evaluated = 0;  // transcripts with at least one relevant sentence
  std::size_t excluded = 0;   // transcripts without any, left out of the means
};

// Means over evaluable transcripts; MAP_inner pools relevant sentences.
// Throws ValidationError when no transcript is evaluable.
MetricRow evaluate_runs(std::span<const RankingRun> runs, const VerdictIndex& verdicts,
                        std::span<const std::size_t> cutoffs = kDefaultCutoffs);

// Means of per-transcript metrics already computed.
MetricRow aggregate(std::span<const TranscriptMetrics> per_transcript, std::size_t excluded,
                    std::span<const std::size_t> cutoffs = kDefaultCutoffs);

// ---- run files ----
// JSON lines: {transcript_id, rank, sentence_id, score, evidence: [claim_id...]}.
void save_runs(const std::filesystem::path& path, std::span<const RankingRun> runs);
std::vector<RankingRun> load_runs(const std::filesystem::path& path);

}  // namespace factrank
