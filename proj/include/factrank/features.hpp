#pragma once

#include <array>
#include <atomic>
#include <bitset>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "factrank/bm25.hpp"
#include "factrank/corpus.hpp"

namespace factrank {

// Canonical per-pair feature layout.
namespace slot {
inline constexpr std::size_t kBm25Statement = 0;
inline constexpr std::size_t kBm25Title = 1;
inline constexpr std::size_t kBm25Body = 2;
inline constexpr std::size_t kNliEntail = 3;
inline constexpr std::size_t kNliNeutral = 4;
inline constexpr std::size_t kNliContradict = 5;
inline constexpr std::size_t kBertscoreF1 = 6;
inline constexpr std::size_t kSbertStatement = 7;
inline constexpr std::size_t kSbertTitle = 8;
inline constexpr std::size_t kSbertBody = 9;  // 9..12, best first
inline constexpr std::size_t kSimcseStatement = 13;
inline constexpr std::size_t kSimcseTitle = 14;
inline constexpr std::size_t kSimcseBody = 15;  // 15..18, best first
}  // namespace slot

inline constexpr std::size_t kNumSlots = 19;
inline constexpr std::size_t kBodyTop = 4;

using SlotValues = std::array<double, kNumSlots>;

std::string_view slot_name(std::size_t slot);
std::size_t parse_slot(std::string_view name);

struct PairFeatures {
  std::string sentence_id;
  std::string claim_id;
  SlotValues values{};
};

enum class PoolStrategy { kConcat, kMax, kMaxSkip };
PoolStrategy parse_pool_strategy(std::string_view text);
std::string_view to_string(PoolStrategy strategy);

struct SentenceVector {
  std::string sentence_id;
  PoolStrategy strategy = PoolStrategy::kMax;
  std::size_t n_candidates = 1;
  std::vector<double> values;
  // Candidate claims in BM25-on-body order, used as evidence at evaluation.
  std::vector<std::string> evidence;
  // Set when no candidate contributed to the pooled values.
  bool empty = false;

  bool operator==(const SentenceVector&) const = default;
};

enum class ScoreMode { kStrict, kLenient };

// Source of the dense slots. In lenient mode absent scores become 0.0 and
// are counted in `missing`.
struct DenseSource {
  const ScoreTable& table;
  ScoreMode mode = ScoreMode::kStrict;
  std::atomic<std::size_t>* missing = nullptr;
};

// BM25 slots come from the index, dense slots from the score table. Body
// top-4 blocks shorter than 4 repeat their last value (0.0 when empty).
// Strict mode throws MissingScoreError naming the pair and metric.
PairFeatures assemble_pair(const SentenceRec& sentence, const TokenStream& sentence_tokens,
                           std::string_view claim_id, const Bm25Index& index,
                           const DenseSource& dense);
PairFeatures assemble_pair(const SentenceRec& sentence, std::string_view claim_id,
                           const Bm25Index& index, const DenseSource& dense);

// Top-n claims for the sentence by BM25 on the claim body.
std::vector<ScoredClaim> candidates(const TokenStream& sentence_tokens, const Bm25Index& index,
                                    std::size_t n);

// Blocks in candidate order, zero-padded to 19 * n. Throws if pairs.size() > n.
SentenceVector pool_concat(std::span<const PairFeatures> pairs, std::size_t n);

// Elementwise maximum over the first min(n, pairs.size()) candidates.
SentenceVector pool_max(std::span<const PairFeatures> pairs, std::size_t n);

using TruthLookup = std::function<TruthValue(const std::string& claim_id)>;

// Drops pairs whose claim is half-true, preserving order.
std::vector<PairFeatures> filter_half_true(std::span<const PairFeatures> pairs,
                                           const TruthLookup& truth);

// A single-score baseline: one slot, or the NLI entail + contradict sum.
struct BaselineSlot {
  std::string name;     // machine name, e.g. "sbert_statement"
  std::string display;  // report label
  std::optional<std::size_t> slot;  // nullopt = entail + contradict

  double value(const SlotValues& v) const;
};

// The fourteen single-score baselines in report order.
const std::vector<BaselineSlot>& baseline_slots();
const BaselineSlot& find_baseline(std::string_view name);

// Maximum of the baseline's value over the given pairs; 0.0 when empty.
double baseline_score(std::span<const PairFeatures> pairs, const BaselineSlot& baseline);

// Slots kept by an ablation. Families: bm25, nli, bertscore, sbert, simcse.
// Fields: statement, title, body.
using SlotMask = std::bitset<kNumSlots>;
SlotMask full_mask();
SlotMask without(std::string_view family_or_field);

struct Ablation {
  std::string name;   // machine name, e.g. "no-nli"
  std::string label;  // report label
  SlotMask keep;
};

// The eight leave-one-group-out variants, families first then fields.
const std::vector<Ablation>& standard_ablations();

// Keeps only the masked slots of every 19-wide block.
std::vector<double> apply_mask(std::span<const double> values, const SlotMask& keep);

// ---- features.jsonl ----
void save_features(const std::filesystem::path& path, std::span<const SentenceVector> vectors);
std::vector<SentenceVector> load_features(const std::filesystem::path& path);

}  // namespace factrank
