#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace factrank {

enum class TruthValue { kPantsOnFire, kFalse, kMostlyFalse, kHalfTrue, kMostlyTrue, kTrue };
enum class Stance { kAgree, kDisagree, kUnrelated, kNotClaim };
enum class Verdict { kTrue, kFalse, kUnknown, kNotClaim };

// Dense similarity metrics produced outside this library. The *_body_top
// metrics carry up to four non-increasing values, all others exactly one.
enum class DenseMetric {
  kNliEntail,
  kNliNeutral,
  kNliContradict,
  kBertscoreF1,
  kSbertStatement,
  kSbertTitle,
  kSbertBodyTop,
  kSimcseStatement,
  kSimcseTitle,
  kSimcseBodyTop,
};
inline constexpr std::size_t kNumDenseMetrics = 10;

// Maps PolitiFact surface forms ("Pants on Fire!", "Mostly False", "TRUE",
// "half-true", ...) onto the enum. Case-insensitive; every run of
// non-alphanumeric characters is treated as a single separator.
// Throws ValidationError for anything that does not map.
TruthValue parse_truth_value(std::string_view text);
std::string_view to_string(TruthValue value);

Stance parse_stance(std::string_view text);
std::string_view to_string(Stance value);

Verdict parse_verdict(std::string_view text);
std::string_view to_string(Verdict value);

DenseMetric parse_dense_metric(std::string_view text);
std::string_view to_string(DenseMetric value);
bool is_body_top(DenseMetric metric);

struct VerifiedClaim {
  std::string claim_id;
  std::string statement;
  TruthValue truth_value = TruthValue::kFalse;
  std::string title;
  std::string body;
  std::optional<std::string> speaker;
  std::optional<std::string> date;

  bool operator==(const VerifiedClaim&) const = default;
};

struct SentenceRec {
  std::string sentence_id;
  std::string transcript_id;
  std::size_t index = 0;
  std::optional<std::string> speaker;
  std::string text;

  bool operator==(const SentenceRec&) const = default;
};

struct TranscriptDoc {
  std::string transcript_id;
  std::optional<std::string> event_date;
  std::vector<SentenceRec> sentences;

  std::size_t size() const { return sentences.size(); }
  bool operator==(const TranscriptDoc&) const = default;
};

struct GoldPair {
  std::string sentence_id;
  std::string claim_id;
  Stance stance = Stance::kUnrelated;
  Verdict verdict = Verdict::kUnknown;

  // True/false verdicts are the only ones that verify a sentence.
  bool decisive() const { return verdict == Verdict::kTrue || verdict == Verdict::kFalse; }
  bool operator==(const GoldPair&) const = default;
};

struct DenseScoreRecord {
  std::string sentence_id;
  std::string claim_id;
  DenseMetric metric = DenseMetric::kNliEntail;
  std::vector<double> values;

  bool operator==(const DenseScoreRecord&) const = default;
};

// All dense scores for one (sentence, claim) pair. A body_top record may
// hold zero values (the claim has no body text).
struct PairScores {
  std::array<std::optional<std::vector<double>>, kNumDenseMetrics> values;

  bool has(DenseMetric metric) const { return values[static_cast<std::size_t>(metric)].has_value(); }
  const std::vector<double>& get(DenseMetric metric) const {
    return *values[static_cast<std::size_t>(metric)];
  }
};

class ScoreTable {
 public:
  // Inserts after checking per-record invariants. Throws ValidationError on
  // a duplicate (sentence, claim, metric) or a malformed value list.
  void insert(const DenseScoreRecord& record);

  // Checks the NLI simplex across the three NLI records of each pair.
  void validate_simplex() const;

  const PairScores* find(std::string_view sentence_id, std::string_view claim_id) const;
  const std::vector<double>* find(std::string_view sentence_id, std::string_view claim_id,
                                  DenseMetric metric) const;

  // Claims with at least one record for the sentence, ascending claim_id.
  std::vector<std::string> claims_for(std::string_view sentence_id) const;

  // Removes one record; returns false if it was absent.
  bool erase(std::string_view sentence_id, std::string_view claim_id, DenseMetric metric);

  std::size_t record_count() const { return record_count_; }
  std::size_t pair_count() const { return pairs_.size(); }

  // Records in a canonical order (sentence_id, claim_id, metric).
  std::vector<DenseScoreRecord> records() const;

 private:
  static std::string key(std::string_view sentence_id, std::string_view claim_id);

  std::unordered_map<std::string, PairScores> pairs_;
  std::unordered_map<std::string, std::vector<std::string>> claims_by_sentence_;
  std::size_t record_count_ = 0;
};

enum class Relevance { kNotRelevant, kRelevant };

// A sentence is relevant iff it has at least one gold pair with a true or
// false verdict.
std::unordered_map<std::string, Relevance> sentence_relevance(const TranscriptDoc& transcript,
                                                              const std::vector<GoldPair>& gold);

// ---- JSON-lines persistence ----

std::vector<VerifiedClaim> load_claims(const std::filesystem::path& path);
void save_claims(const std::filesystem::path& path, const std::vector<VerifiedClaim>& claims);

// A transcript file holds an optional header line
// {"transcript_id": ..., "event_date": ...} followed by one sentence per line.
TranscriptDoc load_transcript(const std::filesystem::path& path);
void save_transcript(const std::filesystem::path& path, const TranscriptDoc& doc);

// Parses gold pairs without cross-referencing ids.
std::vector<GoldPair> load_gold(const std::filesystem::path& path);
void save_gold(const std::filesystem::path& path, const std::vector<GoldPair>& gold);

ScoreTable load_scores(const std::filesystem::path& path);
void save_scores(const std::filesystem::path& path, const ScoreTable& table);

// Checks per-transcript invariants (non-empty, contiguous indices, trimmed
// text non-empty, sentence transcript ids).
void validate_transcript(const TranscriptDoc& doc);

// The whole validated corpus. Immutable once loaded.
class Corpus {
 public:
  Corpus(std::vector<VerifiedClaim> claims, std::vector<TranscriptDoc> transcripts,
         std::vector<GoldPair> gold, ScoreTable scores);

  const std::vector<VerifiedClaim>& claims() const { return claims_; }
  const std::vector<TranscriptDoc>& transcripts() const { return transcripts_; }
  const std::vector<GoldPair>& gold() const { return gold_; }
  const ScoreTable& scores() const { return scores_; }

  const VerifiedClaim* find_claim(std::string_view claim_id) const;
  const SentenceRec* find_sentence(std::string_view sentence_id) const;
  const TranscriptDoc* find_transcript(std::string_view transcript_id) const;

  // Gold pairs of one sentence, in file order.
  std::vector<const GoldPair*> gold_for(std::string_view sentence_id) const;

  // Claims forming a true/false-verdict pair with the sentence.
  const std::unordered_set<std::string>& decisive_claims(std::string_view sentence_id) const;

  bool is_relevant(std::string_view sentence_id) const {
    return !decisive_claims(sentence_id).empty();
  }

  // Re-checks referential integrity of gold pairs and score records.
  void validate_references() const;

 private:
  std::vector<VerifiedClaim> claims_;
  std::vector<TranscriptDoc> transcripts_;
  std::vector<GoldPair> gold_;
  ScoreTable scores_;

  std::unordered_map<std::string, std::size_t> claim_pos_;
  std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> sentence_pos_;
  std::unordered_map<std::string, std::size_t> transcript_pos_;
  std::unordered_map<std::string, std::vector<std::size_t>> gold_by_sentence_;
  std::unordered_map<std::string, std::unordered_set<std::string>> decisive_;
};

// Standard layout of a data directory:
//   claims.jsonl, transcripts/*.jsonl (sorted by file name), gold.jsonl,
//   scores.jsonl. gold.jsonl and scores.jsonl are optional.
struct CorpusPaths {
  std::filesystem::path claims;
  std::filesystem::path transcripts_dir;
  std::filesystem::path gold;
  std::filesystem::path scores;

  static CorpusPaths under(const std::filesystem::path& data_dir);
};

Corpus load_corpus(const CorpusPaths& paths);
void save_corpus(const std::filesystem::path& data_dir, const Corpus& corpus);

}  // namespace factrank
