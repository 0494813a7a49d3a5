#include "factrank/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include "factrank/bm25.hpp"
#include "factrank/errors.hpp"

namespace factrank::synth {

namespace {

constexpr const char* kClaimWords[] = {"report", "analysis", "records", "budget", "official", "agency",
                                       "survey", "figures", "review",  "filing", "census",   "audit"};
constexpr const char* kSpeechWords[] = {"well",    "folks",  "tonight", "we",     "believe", "look",
                                        "frankly", "really", "going",   "people", "know",    "country"};
constexpr const char* kSpeakers[] = {"MODERATOR", "CANDIDATE A", "CANDIDATE B"};
constexpr const char* kCommon = "policy";

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [lo, hi), independent of the standard library's distributions.
  double uniform(double lo, double hi) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

 private:
  std::mt19937_64 engine_;
};

double round6(double v) { return std::round(v * 1e6) / 1e6; }

std::string topic(std::size_t claim, char which) { return "kw" + std::to_string(claim) + which; }

std::string numbered(const char* prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, i);
  return buf;
}

template <std::size_t N>
std::string words(Rng& rng, const char* const (&pool)[N], std::size_t count) {
  std::string out;
  for (std::size_t i = 0; i < count; ++i) {
    if (!out.empty()) out += ' ';
    out += pool[rng.below(N)];
  }
  return out;
}

std::vector<double> body_top(Rng& rng, bool empty_body, double lo, double hi) {
  if (empty_body) return {};
  const std::size_t count = rng.below(5) == 0 ? 1 + rng.below(3) : 4;
  std::vector<double> v;
  for (std::size_t i = 0; i < count; ++i) v.push_back(round6(rng.uniform(lo, hi)));
  std::sort(v.rbegin(), v.rend());
  return v;
}

}  // namespace

Corpus generate(const Options& o) {
  if (o.claims < 2 || o.transcripts == 0 || o.sentences == 0) throw ValidationError("synthetic corpus too small");
  if (o.relevant > o.sentences) throw ValidationError("more relevant sentences than sentences");
  Rng rng(o.seed);

  // Claims. Gold claims are drawn from the first half and are never half-true.
  const std::size_t gold_pool = std::max<std::size_t>(1, o.claims / 2);
  std::vector<VerifiedClaim> claims;
  for (std::size_t i = 0; i < o.claims; ++i) {
    VerifiedClaim c;
    c.claim_id = numbered("c", i + 1, 3);
    const std::string a = topic(i + 1, 'a'), b = topic(i + 1, 'b');
    c.statement = "Says " + a + " " + b + " " + words(rng, kClaimWords, 2);
    c.title = a + " " + words(rng, kClaimWords, 3);
    const bool empty = o.empty_bodies && i >= gold_pool && i % 10 == 9;
    if (!empty) {
      c.body = words(rng, kClaimWords, 4) + " " + a + " " + b + ". " + words(rng, kClaimWords, 5) + ".";
      if (o.common_token) c.body += std::string(" ") + kCommon + ".";
    }
    if (i < gold_pool)
      c.truth_value = rng.below(2) == 0 ? TruthValue::kFalse : TruthValue::kMostlyTrue;
    else
      c.truth_value = static_cast<TruthValue>(rng.below(6));
    c.speaker = kSpeakers[1 + rng.below(2)];
    c.date = numbered("2016-0", 1 + rng.below(9), 1) + "-" + numbered("", 10 + rng.below(18), 2);
    claims.push_back(std::move(c));
  }

  std::vector<TranscriptDoc> docs;
  std::vector<GoldPair> gold;
  for (std::size_t t = 0; t < o.transcripts; ++t) {
    TranscriptDoc doc;
    doc.transcript_id = numbered("t", t + 1, 2);
    doc.event_date = "2016-10-" + numbered("", 10 + t, 2);
    std::set<std::size_t> relevant;
    while (relevant.size() < o.relevant) relevant.insert(rng.below(o.sentences));
    for (std::size_t i = 0; i < o.sentences; ++i) {
      SentenceRec s;
      s.transcript_id = doc.transcript_id;
      s.sentence_id = doc.transcript_id + "-" + numbered("s", i, 3);
      s.index = i;
      s.speaker = kSpeakers[rng.below(3)];
      std::string text = words(rng, kSpeechWords, 3);
      // Distractor topics are distinct and never the gold topic, so the gold
      // claim stays the top body candidate.
      std::set<std::size_t> used;
      if (relevant.count(i)) {
        const std::size_t g = rng.below(gold_pool);
        used.insert(g);
        text += " " + topic(g + 1, 'a') + " " + topic(g + 1, 'b');
        const Verdict v = rng.below(2) == 0 ? Verdict::kTrue : Verdict::kFalse;
        gold.push_back({s.sentence_id, claims[g].claim_id, rng.below(2) == 0 ? Stance::kAgree : Stance::kDisagree, v});
      } else if (rng.below(8) == 0) {
        // Related but not decisive: an unknown-verdict pair.
        const std::size_t j = rng.below(o.claims);
        text += " " + topic(j + 1, 'a');
        gold.push_back({s.sentence_id, claims[j].claim_id, Stance::kUnrelated, Verdict::kUnknown});
      }
      for (std::size_t d = 0; d < o.distractors && used.size() < o.claims; ++d) {
        std::size_t j = rng.below(o.claims);
        while (used.count(j)) j = rng.below(o.claims);
        used.insert(j);
        text += " " + topic(j + 1, 'a');
      }
      text += " " + words(rng, kSpeechWords, 2);
      if (o.common_token) text += std::string(" ") + kCommon;
      s.text = text + ".";
      doc.sentences.push_back(std::move(s));
    }
    docs.push_back(std::move(doc));
  }

  ScoreTable scores;
  if (o.write_scores) {
    const Bm25Index index = Bm25Index::build(claims);
    std::set<std::pair<std::string, std::string>> decisive;
    std::unordered_map<std::string, std::set<std::string>> extra;
    for (const auto& g : gold) {
      if (g.decisive()) decisive.emplace(g.sentence_id, g.claim_id);
      extra[g.sentence_id].insert(g.claim_id);
    }
    std::unordered_map<std::string, bool> empty_body;
    for (const auto& c : claims) empty_body[c.claim_id] = c.body.empty();

    for (const auto& doc : docs)
      for (const auto& s : doc.sentences) {
        std::set<std::string> targets = extra[s.sentence_id];
        for (const auto& c : candidates(tokenize(s.text), index, o.score_depth)) targets.insert(c.claim_id);
        for (const auto& cid : targets) {
          const bool hit = decisive.count({s.sentence_id, cid}) > 0;
          const double lo = hit ? 0.75 : 0.0, hi = hit ? 0.99 : 0.5;
          auto put = [&](DenseMetric m, std::vector<double> v) { scores.insert({s.sentence_id, cid, m, std::move(v)}); };
          const double entail = round6(rng.uniform(lo, hi));
          const double contradict = round6(rng.uniform(0.0, 1.0 - entail));
          put(DenseMetric::kNliEntail, {entail});
          put(DenseMetric::kNliNeutral, {round6(1.0 - entail - contradict)});
          put(DenseMetric::kNliContradict, {contradict});
          put(DenseMetric::kBertscoreF1, {round6(rng.uniform(0.0, 1.0))});
          put(DenseMetric::kSbertStatement, {round6(rng.uniform(lo, hi))});
          put(DenseMetric::kSbertTitle, {round6(rng.uniform(0.0, 1.0))});
          put(DenseMetric::kSbertBodyTop, body_top(rng, empty_body[cid], 0.0, 1.0));
          put(DenseMetric::kSimcseStatement, {round6(rng.uniform(lo, hi))});
          put(DenseMetric::kSimcseTitle, {round6(rng.uniform(0.0, 1.0))});
          put(DenseMetric::kSimcseBodyTop, body_top(rng, empty_body[cid], 0.0, 1.0));
        }
      }
  }
  return Corpus(std::move(claims), std::move(docs), std::move(gold), std::move(scores));
}

}  // namespace factrank::synth
