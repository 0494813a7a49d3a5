#include "factrank/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "factrank/errors.hpp"

namespace factrank {

void validate_run(const RankingRun& run, const TranscriptDoc& transcript) {
  if (run.entries.size() != transcript.sentences.size())
    throw ValidationError("run for " + run.transcript_id + " has " + std::to_string(run.entries.size()) +
                          " entries, transcript has " + std::to_string(transcript.sentences.size()));
  std::unordered_set<std::string> expected;
  for (const auto& s : transcript.sentences) expected.insert(s.sentence_id);
  for (const auto& e : run.entries)
    if (expected.erase(e.sentence_id) == 0)
      throw ValidationError("run for " + run.transcript_id + " repeats or invents sentence " + e.sentence_id);
}

VerdictIndex::VerdictIndex(std::span<const GoldPair> gold) {
  for (const auto& g : gold)
    if (g.decisive()) decisive_[g.sentence_id].insert(g.claim_id);
}

const std::unordered_set<std::string>& VerdictIndex::decisive(std::string_view sentence_id) const {
  static const std::unordered_set<std::string> kNone;
  auto it = decisive_.find(std::string(sentence_id));
  return it == decisive_.end() ? kNone : it->second;
}

bool evidence_hit(std::span<const std::string> evidence,
                  const std::unordered_set<std::string>& decisive_claims, std::size_t r) {
  const std::size_t depth = std::min(r, evidence.size());
  for (std::size_t i = 0; i < depth; ++i)
    if (decisive_claims.count(evidence[i])) return true;
  return false;
}

std::vector<SentenceCredit> credits_for(const RankingRun& run, const VerdictIndex& verdicts, std::size_t r) {
  std::vector<SentenceCredit> out;
  out.reserve(run.entries.size());
  for (const auto& e : run.entries) {
    const auto& claims = verdicts.decisive(e.sentence_id);
    out.push_back({!claims.empty(), evidence_hit(e.evidence, claims, r)});
  }
  return out;
}

namespace {

std::size_t count_relevant(std::span<const SentenceCredit> ranked) {
  return static_cast<std::size_t>(
      std::count_if(ranked.begin(), ranked.end(), [](const SentenceCredit& c) { return c.relevant; }));
}

}  // namespace

std::optional<double> average_precision(std::span<const SentenceCredit> ranked) {
  const std::size_t total = count_relevant(ranked);
  if (total == 0) return std::nullopt;
  double seen = 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    if (!ranked[k].relevant) continue;
    seen += 1.0;
    sum += seen / static_cast<double>(k + 1);
  }
  return sum / static_cast<double>(total);
}

std::optional<double> ap_graded(std::span<const SentenceCredit> ranked, double m) {
  const std::size_t total = count_relevant(ranked);
  if (total == 0) return std::nullopt;
  double credit = 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    if (!ranked[k].relevant) continue;
    credit += ranked[k].evidence_hit ? 1.0 : m;
    sum += credit / static_cast<double>(k + 1);
  }
  return sum / static_cast<double>(total);
}

std::optional<double> ap_hit_only(std::span<const SentenceCredit> ranked) {
  const std::size_t total = count_relevant(ranked);
  if (total == 0) return std::nullopt;
  double hits = 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    if (!(ranked[k].relevant && ranked[k].evidence_hit)) continue;
    hits += 1.0;
    sum += hits / static_cast<double>(k + 1);
  }
  return sum / static_cast<double>(total);
}

std::optional<double> ap_evidence(std::span<const SentenceCredit> ranked, const EvalConfig& config) {
  if (config.r == 0) throw ValidationError("evidence cutoff r must be >= 1");
  if (config.mode == CreditMode::kHitOnly) return ap_hit_only(ranked);
  if (config.m < 0.0 || config.m > 1.0) throw ValidationError("miss credit m must lie in [0, 1]");
  return ap_graded(ranked, config.m);
}

std::optional<double> ap_inner(std::span<const std::string> evidence,
                               const std::unordered_set<std::string>& decisive_claims) {
  if (decisive_claims.empty()) return std::nullopt;
  double found = 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < evidence.size(); ++k) {
    if (!decisive_claims.count(evidence[k])) continue;
    found += 1.0;
    sum += found / static_cast<double>(k + 1);
  }
  return sum / static_cast<double>(decisive_claims.size());
}

double map_over(std::span<const double> values) {
  if (values.empty()) throw ValidationError("no evaluable units to average");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

std::vector<std::string> column_names(std::span<const std::size_t> cutoffs) {
  std::vector<std::string> names = {"MAP"};
  for (const char* family : {"0", "0.5", "H"})
    for (std::size_t r : cutoffs) names.push_back(std::string("MAP_") + family + "^" + std::to_string(r));
  return names;
}

std::optional<TranscriptMetrics> evaluate_run(const RankingRun& run, const VerdictIndex& verdicts,
                                              std::span<const std::size_t> cutoffs) {
  std::vector<std::vector<SentenceCredit>> credits;
  for (std::size_t r : cutoffs) {
    if (r == 0) throw ValidationError("evidence cutoff r must be >= 1");
    credits.push_back(credits_for(run, verdicts, r));
  }
  std::vector<SentenceCredit> plain;
  for (const auto& e : run.entries) plain.push_back({verdicts.relevant(e.sentence_id), false});
  const auto ap = average_precision(plain);
  if (!ap) return std::nullopt;
  TranscriptMetrics out;
  out.transcript_id = run.transcript_id;
  out.ap.push_back(*ap);
  for (const auto& c : credits) out.ap.push_back(*ap_graded(c, 0.0));
  for (const auto& c : credits) out.ap.push_back(*ap_graded(c, 0.5));
  for (const auto& c : credits) out.ap.push_back(*ap_hit_only(c));
  for (const auto& e : run.entries)
    if (auto inner = ap_inner(e.evidence, verdicts.decisive(e.sentence_id))) out.inner.push_back(*inner);
  return out;
}

MetricRow aggregate(std::span<const TranscriptMetrics> per_transcript, std::size_t excluded,
                    std::span<const std::size_t> cutoffs) {
  MetricRow row;
  row.columns = column_names(cutoffs);
  row.evaluated = per_transcript.size();
  row.excluded = excluded;
  if (per_transcript.empty()) throw ValidationError("no transcript has a relevant sentence");
  std::vector<double> inner;
  for (std::size_t c = 0; c < row.columns.size(); ++c) {
    std::vector<double> column;
    for (const auto& tm : per_transcript) {
      if (tm.ap.size() != row.columns.size()) throw ValidationError("metric column count mismatch");
      column.push_back(tm.ap[c]);
    }
    row.values.push_back(map_over(column));
  }
  for (const auto& tm : per_transcript) inner.insert(inner.end(), tm.inner.begin(), tm.inner.end());
  if (!inner.empty()) row.map_inner = map_over(inner);
  return row;
}

MetricRow evaluate_runs(std::span<const RankingRun> runs, const VerdictIndex& verdicts,
                        std::span<const std::size_t> cutoffs) {
  std::vector<TranscriptMetrics> per;
  std::size_t excluded = 0;
  for (const auto& run : runs) {
    if (auto tm = evaluate_run(run, verdicts, cutoffs))
      per.push_back(std::move(*tm));
    else
      ++excluded;
  }
  return aggregate(per, excluded, cutoffs);
}

}  // namespace factrank
