#include "factrank/features.hpp"

#include <algorithm>

#include "factrank/errors.hpp"
#include "jsonl.hpp"

namespace factrank {

using detail::json;

namespace {

constexpr std::array<std::string_view, kNumSlots> kSlotNames = {
    "bm25_statement",  "bm25_title",      "bm25_body",       "nli_entail",
    "nli_neutral",     "nli_contradict",  "bertscore_f1",    "sbert_statement",
    "sbert_title",     "sbert_body_1",    "sbert_body_2",    "sbert_body_3",
    "sbert_body_4",    "simcse_statement", "simcse_title",   "simcse_body_1",
    "simcse_body_2",   "simcse_body_3",   "simcse_body_4"};

struct DenseSlot {
  DenseMetric metric;
  std::size_t first;
};

constexpr std::array<DenseSlot, kNumDenseMetrics> kDenseSlots = {{
    {DenseMetric::kNliEntail, slot::kNliEntail},
    {DenseMetric::kNliNeutral, slot::kNliNeutral},
    {DenseMetric::kNliContradict, slot::kNliContradict},
    {DenseMetric::kBertscoreF1, slot::kBertscoreF1},
    {DenseMetric::kSbertStatement, slot::kSbertStatement},
    {DenseMetric::kSbertTitle, slot::kSbertTitle},
    {DenseMetric::kSbertBodyTop, slot::kSbertBody},
    {DenseMetric::kSimcseStatement, slot::kSimcseStatement},
    {DenseMetric::kSimcseTitle, slot::kSimcseTitle},
    {DenseMetric::kSimcseBodyTop, slot::kSimcseBody},
}};

SlotMask mask_of(std::initializer_list<std::size_t> slots) {
  SlotMask m;
  for (auto s : slots) m.set(s);
  return m;
}

SlotMask range_mask(std::size_t first, std::size_t count) {
  SlotMask m;
  for (std::size_t i = 0; i < count; ++i) m.set(first + i);
  return m;
}

SlotMask group_mask(std::string_view name) {
  using namespace slot;
  if (name == "bm25") return range_mask(kBm25Statement, 3);
  if (name == "nli") return range_mask(kNliEntail, 3);
  if (name == "bertscore") return mask_of({kBertscoreF1});
  if (name == "sbert") return range_mask(kSbertStatement, 6);
  if (name == "simcse") return range_mask(kSimcseStatement, 6);
  if (name == "statement")
    return mask_of({kBm25Statement, kNliEntail, kNliNeutral, kNliContradict, kBertscoreF1,
                    kSbertStatement, kSimcseStatement});
  if (name == "title") return mask_of({kBm25Title, kSbertTitle, kSimcseTitle});
  if (name == "body") return mask_of({kBm25Body}) | range_mask(kSbertBody, 4) | range_mask(kSimcseBody, 4);
  throw ValidationError("unknown feature family or field '" + std::string(name) + "'");
}

}  // namespace

std::string_view slot_name(std::size_t s) {
  if (s >= kNumSlots) throw ValidationError("slot index out of range");
  return kSlotNames[s];
}

std::size_t parse_slot(std::string_view name) {
  for (std::size_t i = 0; i < kNumSlots; ++i)
    if (kSlotNames[i] == name) return i;
  throw ValidationError("unknown slot '" + std::string(name) + "'");
}

PoolStrategy parse_pool_strategy(std::string_view text) {
  if (text == "concat") return PoolStrategy::kConcat;
  if (text == "max") return PoolStrategy::kMax;
  if (text == "max-skip") return PoolStrategy::kMaxSkip;
  throw ValidationError("unknown pooling strategy '" + std::string(text) + "'");
}

std::string_view to_string(PoolStrategy strategy) {
  switch (strategy) {
    case PoolStrategy::kConcat: return "concat";
    case PoolStrategy::kMax: return "max";
    case PoolStrategy::kMaxSkip: break;
  }
  return "max-skip";
}

PairFeatures assemble_pair(const SentenceRec& sentence, const TokenStream& tokens,
                           std::string_view claim_id, const Bm25Index& index,
                           const DenseSource& dense) {
  PairFeatures f;
  f.sentence_id = sentence.sentence_id;
  f.claim_id = std::string(claim_id);
  const std::size_t doc = index.doc_of(claim_id);
  f.values[slot::kBm25Statement] = index.score_doc(tokens, Field::kStatement, doc);
  f.values[slot::kBm25Title] = index.score_doc(tokens, Field::kTitle, doc);
  f.values[slot::kBm25Body] = index.score_doc(tokens, Field::kBody, doc);

  const PairScores* scores = dense.table.find(sentence.sentence_id, claim_id);
  for (const DenseSlot& ds : kDenseSlots) {
    const std::size_t width = is_body_top(ds.metric) ? kBodyTop : 1;
    if (scores == nullptr || !scores->has(ds.metric)) {
      if (dense.mode == ScoreMode::kStrict)
        throw MissingScoreError("missing score " + std::string(to_string(ds.metric)) + " for (" +
                                sentence.sentence_id + ", " + std::string(claim_id) + ")");
      if (dense.missing != nullptr) dense.missing->fetch_add(1, std::memory_order_relaxed);
      for (std::size_t i = 0; i < width; ++i) f.values[ds.first + i] = 0.0;
      continue;
    }
    const auto& v = scores->get(ds.metric);
    double last = 0.0;
    for (std::size_t i = 0; i < width; ++i) {
      if (i < v.size()) last = v[i];
      f.values[ds.first + i] = last;
    }
  }
  return f;
}

PairFeatures assemble_pair(const SentenceRec& sentence, std::string_view claim_id,
                           const Bm25Index& index, const DenseSource& dense) {
  return assemble_pair(sentence, tokenize(sentence.text), claim_id, index, dense);
}

std::vector<ScoredClaim> candidates(const TokenStream& tokens, const Bm25Index& index, std::size_t n) {
  return index.retrieve_topk(tokens, Field::kBody, n);
}

SentenceVector pool_concat(std::span<const PairFeatures> pairs, std::size_t n) {
  if (n == 0) throw ValidationError("pool size must be >= 1");
  if (pairs.size() > n) throw ValidationError("more candidates than concat blocks");
  SentenceVector out;
  out.strategy = PoolStrategy::kConcat;
  out.n_candidates = n;
  out.values.assign(kNumSlots * n, 0.0);
  out.empty = pairs.empty();
  for (std::size_t c = 0; c < pairs.size(); ++c)
    std::copy(pairs[c].values.begin(), pairs[c].values.end(),
              out.values.begin() + static_cast<std::ptrdiff_t>(c * kNumSlots));
  if (!pairs.empty()) out.sentence_id = pairs.front().sentence_id;
  return out;
}

SentenceVector pool_max(std::span<const PairFeatures> pairs, std::size_t n) {
  if (n == 0) throw ValidationError("pool size must be >= 1");
  SentenceVector out;
  out.strategy = PoolStrategy::kMax;
  out.n_candidates = n;
  out.values.assign(kNumSlots, 0.0);
  const std::size_t used = std::min(n, pairs.size());
  out.empty = used == 0;
  if (used == 0) return out;
  out.sentence_id = pairs.front().sentence_id;
  std::copy(pairs[0].values.begin(), pairs[0].values.end(), out.values.begin());
  for (std::size_t c = 1; c < used; ++c)
    for (std::size_t s = 0; s < kNumSlots; ++s) out.values[s] = std::max(out.values[s], pairs[c].values[s]);
  return out;
}

std::vector<PairFeatures> filter_half_true(std::span<const PairFeatures> pairs, const TruthLookup& truth) {
  std::vector<PairFeatures> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs)
    if (truth(p.claim_id) != TruthValue::kHalfTrue) out.push_back(p);
  return out;
}

double BaselineSlot::value(const SlotValues& v) const {
  return slot ? v[*slot] : v[slot::kNliEntail] + v[slot::kNliContradict];
}

const std::vector<BaselineSlot>& baseline_slots() {
  static const std::vector<BaselineSlot> kBaselines = {
      {"bertscore_f1", "BERTScore (F1) on VerifiedStatement", slot::kBertscoreF1},
      {"nli_entail", "NLI (Entl) on VerifiedStatement", slot::kNliEntail},
      {"nli_neutral", "NLI (Neut) on VerifiedStatement", slot::kNliNeutral},
      {"nli_contradict", "NLI (Contr) on VerifiedStatement", slot::kNliContradict},
      {"nli_entail_contradict", "NLI (Entl+Contr) on VerifiedStatement", std::nullopt},
      {"simcse_statement", "SimCSE on VerifiedStatement", slot::kSimcseStatement},
      {"simcse_title", "SimCSE on Title", slot::kSimcseTitle},
      {"simcse_body", "SimCSE on Body", slot::kSimcseBody},
      {"sbert_statement", "SBERT on VerifiedStatement", slot::kSbertStatement},
      {"sbert_title", "SBERT on Title", slot::kSbertTitle},
      {"sbert_body", "SBERT on Body", slot::kSbertBody},
      {"bm25_statement", "BM25 on VerifiedStatement", slot::kBm25Statement},
      {"bm25_title", "BM25 on Title", slot::kBm25Title},
      {"bm25_body", "BM25 on Body", slot::kBm25Body},
  };
  return kBaselines;
}

const BaselineSlot& find_baseline(std::string_view name) {
  for (const auto& b : baseline_slots())
    if (b.name == name) return b;
  throw ValidationError("unknown baseline '" + std::string(name) + "'");
}

double baseline_score(std::span<const PairFeatures> pairs, const BaselineSlot& baseline) {
  if (pairs.empty()) return 0.0;
  double best = baseline.value(pairs[0].values);
  for (const auto& p : pairs.subspan(1)) best = std::max(best, baseline.value(p.values));
  return best;
}

SlotMask full_mask() { return SlotMask().set(); }

SlotMask without(std::string_view family_or_field) { return full_mask() & ~group_mask(family_or_field); }

const std::vector<Ablation>& standard_ablations() {
  static const std::vector<Ablation> kAblations = {
      {"no-bertscore", "w/o BERTScore (F1)", without("bertscore")},
      {"no-nli", "w/o NLI Score (E, N, C)", without("nli")},
      {"no-simcse", "w/o SimCSE", without("simcse")},
      {"no-sbert", "w/o SBERT", without("sbert")},
      {"no-bm25", "w/o BM25", without("bm25")},
      {"no-title", "w/o scores on Title", without("title")},
      {"no-statement", "w/o scores on VerifiedStatement", without("statement")},
      {"no-body", "w/o scores on Body", without("body")},
  };
  return kAblations;
}

std::vector<double> apply_mask(std::span<const double> values, const SlotMask& keep) {
  if (values.size() % kNumSlots != 0) throw ValidationError("vector is not a whole number of 19-slot blocks");
  std::vector<double> out;
  out.reserve(values.size() / kNumSlots * keep.count());
  for (std::size_t i = 0; i < values.size(); ++i)
    if (keep.test(i % kNumSlots)) out.push_back(values[i]);
  return out;
}

void save_features(const std::filesystem::path& path, std::span<const SentenceVector> vectors) {
  detail::AtomicWriter w(path);
  for (const auto& v : vectors)
    w.write_line({{"sentence_id", v.sentence_id},
                  {"strategy", to_string(v.strategy)},
                  {"n", v.n_candidates},
                  {"values", v.values},
                  {"evidence", v.evidence},
                  {"empty", v.empty}});
  w.commit();
}

std::vector<SentenceVector> load_features(const std::filesystem::path& path) {
  std::vector<SentenceVector> out;
  detail::for_each_json_line(path, [&](const json& obj, std::size_t) {
    SentenceVector v;
    v.sentence_id = detail::require_string(obj, "sentence_id");
    v.strategy = parse_pool_strategy(detail::require_string(obj, "strategy"));
    v.n_candidates = obj.at("n").get<std::size_t>();
    v.values = obj.at("values").get<std::vector<double>>();
    v.evidence = obj.at("evidence").get<std::vector<std::string>>();
    v.empty = obj.value("empty", false);
    out.push_back(std::move(v));
  });
  return out;
}

}  // namespace factrank
