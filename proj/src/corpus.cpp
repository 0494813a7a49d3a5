#include "factrank/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "factrank/errors.hpp"
#include "jsonl.hpp"

namespace factrank {

using detail::json;

namespace {

// Lowercases and collapses every run of non-alphanumeric bytes into '-'.
std::string fold_label(std::string_view text) {
  std::string out;
  bool pending_sep = false;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      if (pending_sep && !out.empty()) out.push_back('-');
      pending_sep = false;
      out.push_back(static_cast<char>(std::tolower(c)));
    } else {
      pending_sep = true;
    }
  }
  return out;
}

constexpr std::array<std::string_view, 6> kTruthNames = {
    "pants-on-fire", "false", "mostly-false", "half-true", "mostly-true", "true"};
constexpr std::array<std::string_view, 4> kStanceNames = {"agree", "disagree", "unrelated",
                                                          "not-claim"};
constexpr std::array<std::string_view, 4> kVerdictNames = {"true", "false", "unknown",
                                                           "not-claim"};
constexpr std::array<std::string_view, kNumDenseMetrics> kMetricNames = {
    "nli_entail",      "nli_neutral",      "nli_contradict", "bertscore_f1",
    "sbert_statement", "sbert_title",      "sbert_body_top", "simcse_statement",
    "simcse_title",    "simcse_body_top"};

template <typename Enum, std::size_t N>
Enum lookup(const std::array<std::string_view, N>& names, std::string_view folded,
            std::string_view original, const char* kind) {
  for (std::size_t i = 0; i < N; ++i)
    if (names[i] == folded) return static_cast<Enum>(i);
  throw ValidationError(std::string("unknown ") + kind + " '" + std::string(original) + "'");
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

json claim_to_json(const VerifiedClaim& c) {
  json obj = {{"claim_id", c.claim_id},
              {"statement", c.statement},
              {"truth_value", to_string(c.truth_value)},
              {"title", c.title},
              {"body", c.body}};
  if (c.speaker) obj["speaker"] = *c.speaker;
  if (c.date) obj["date"] = *c.date;
  return obj;
}

json sentence_to_json(const SentenceRec& s) {
  json obj = {{"sentence_id", s.sentence_id},
              {"transcript_id", s.transcript_id},
              {"index", s.index},
              {"text", s.text}};
  if (s.speaker) obj["speaker"] = *s.speaker;
  return obj;
}

}  // namespace

TruthValue parse_truth_value(std::string_view text) {
  return lookup<TruthValue>(kTruthNames, fold_label(text), text, "truth_value");
}
std::string_view to_string(TruthValue value) { return kTruthNames[static_cast<std::size_t>(value)]; }

Stance parse_stance(std::string_view text) {
  return lookup<Stance>(kStanceNames, fold_label(text), text, "stance");
}
std::string_view to_string(Stance value) { return kStanceNames[static_cast<std::size_t>(value)]; }

Verdict parse_verdict(std::string_view text) {
  return lookup<Verdict>(kVerdictNames, fold_label(text), text, "verdict");
}
std::string_view to_string(Verdict value) { return kVerdictNames[static_cast<std::size_t>(value)]; }

DenseMetric parse_dense_metric(std::string_view text) {
  for (std::size_t i = 0; i < kMetricNames.size(); ++i)
    if (kMetricNames[i] == text) return static_cast<DenseMetric>(i);
  throw ValidationError("unknown metric '" + std::string(text) + "'");
}
std::string_view to_string(DenseMetric value) { return kMetricNames[static_cast<std::size_t>(value)]; }

bool is_body_top(DenseMetric metric) {
  return metric == DenseMetric::kSbertBodyTop || metric == DenseMetric::kSimcseBodyTop;
}

// ---- ScoreTable ----

std::string ScoreTable::key(std::string_view sentence_id, std::string_view claim_id) {
  std::string k;
  k.reserve(sentence_id.size() + claim_id.size() + 1);
  k.append(sentence_id);
  k.push_back('\x1f');
  k.append(claim_id);
  return k;
}

void ScoreTable::insert(const DenseScoreRecord& record) {
  const auto& v = record.values;
  for (double x : v)
    if (!std::isfinite(x)) throw ValidationError("non-finite score value");
  if (is_body_top(record.metric)) {
    if (v.size() > 4) throw ValidationError("body_top carries at most 4 values");
    for (std::size_t i = 1; i < v.size(); ++i)
      if (v[i] > v[i - 1])
        throw ValidationError(std::string(to_string(record.metric)) + " values not non-increasing");
  } else if (v.size() != 1) {
    throw ValidationError(std::string(to_string(record.metric)) + " expects exactly one value");
  }
  const bool nli = record.metric == DenseMetric::kNliEntail ||
                   record.metric == DenseMetric::kNliNeutral ||
                   record.metric == DenseMetric::kNliContradict;
  if (nli && (v[0] < 0.0 || v[0] > 1.0))
    throw ValidationError("NLI probability outside [0,1]");

  auto [it, fresh] = pairs_.try_emplace(key(record.sentence_id, record.claim_id));
  auto& slot = it->second.values[static_cast<std::size_t>(record.metric)];
  if (slot.has_value())
    throw ValidationError("duplicate score record (" + record.sentence_id + ", " + record.claim_id +
                          ", " + std::string(to_string(record.metric)) + ")");
  slot = v;
  if (fresh) {
    auto& claims = claims_by_sentence_[record.sentence_id];
    claims.insert(std::lower_bound(claims.begin(), claims.end(), record.claim_id), record.claim_id);
  }
  ++record_count_;
}

void ScoreTable::validate_simplex() const {
  for (const auto& [k, scores] : pairs_) {
    const bool e = scores.has(DenseMetric::kNliEntail);
    const bool n = scores.has(DenseMetric::kNliNeutral);
    const bool c = scores.has(DenseMetric::kNliContradict);
    if (!(e && n && c)) continue;
    const double sum = scores.get(DenseMetric::kNliEntail)[0] +
                       scores.get(DenseMetric::kNliNeutral)[0] +
                       scores.get(DenseMetric::kNliContradict)[0];
    if (std::abs(sum - 1.0) > 1e-4) {
      auto sep = k.find('\x1f');
      throw ValidationError("NLI triplet for (" + k.substr(0, sep) + ", " + k.substr(sep + 1) +
                            ") sums to " + std::to_string(sum));
    }
  }
}

const PairScores* ScoreTable::find(std::string_view sentence_id, std::string_view claim_id) const {
  auto it = pairs_.find(key(sentence_id, claim_id));
  return it == pairs_.end() ? nullptr : &it->second;
}

const std::vector<double>* ScoreTable::find(std::string_view sentence_id,
                                            std::string_view claim_id, DenseMetric metric) const {
  const PairScores* p = find(sentence_id, claim_id);
  if (p == nullptr || !p->has(metric)) return nullptr;
  return &p->get(metric);
}

std::vector<std::string> ScoreTable::claims_for(std::string_view sentence_id) const {
  auto it = claims_by_sentence_.find(std::string(sentence_id));
  return it == claims_by_sentence_.end() ? std::vector<std::string>{} : it->second;
}

bool ScoreTable::erase(std::string_view sentence_id, std::string_view claim_id, DenseMetric metric) {
  auto it = pairs_.find(key(sentence_id, claim_id));
  if (it == pairs_.end()) return false;
  auto& slot = it->second.values[static_cast<std::size_t>(metric)];
  if (!slot.has_value()) return false;
  slot.reset();
  --record_count_;
  const auto& all = it->second.values;
  if (std::none_of(all.begin(), all.end(), [](const auto& v) { return v.has_value(); })) {
    pairs_.erase(it);
    auto& claims = claims_by_sentence_[std::string(sentence_id)];
    claims.erase(std::remove(claims.begin(), claims.end(), claim_id), claims.end());
  }
  return true;
}

std::vector<DenseScoreRecord> ScoreTable::records() const {
  std::vector<std::string> sentences;
  sentences.reserve(claims_by_sentence_.size());
  for (const auto& [sid, claims] : claims_by_sentence_)
    if (!claims.empty()) sentences.push_back(sid);
  std::sort(sentences.begin(), sentences.end());
  std::vector<DenseScoreRecord> out;
  out.reserve(record_count_);
  for (const auto& sid : sentences) {
    for (const auto& cid : claims_by_sentence_.at(sid)) {
      const PairScores& p = pairs_.at(key(sid, cid));
      for (std::size_t m = 0; m < kNumDenseMetrics; ++m)
        if (p.values[m].has_value())
          out.push_back({sid, cid, static_cast<DenseMetric>(m), *p.values[m]});
    }
  }
  return out;
}

// ---- relevance ----

std::unordered_map<std::string, Relevance> sentence_relevance(const TranscriptDoc& transcript,
                                                              const std::vector<GoldPair>& gold) {
  std::unordered_set<std::string> verified;
  for (const auto& g : gold)
    if (g.decisive()) verified.insert(g.sentence_id);
  std::unordered_map<std::string, Relevance> out;
  for (const auto& s : transcript.sentences)
    out[s.sentence_id] = verified.count(s.sentence_id) ? Relevance::kRelevant : Relevance::kNotRelevant;
  return out;
}

// ---- loaders ----

std::vector<VerifiedClaim> load_claims(const std::filesystem::path& path) {
  std::vector<VerifiedClaim> claims;
  std::unordered_set<std::string> seen;
  detail::for_each_json_line(path, [&](const json& obj, std::size_t) {
    VerifiedClaim c;
    c.claim_id = detail::require_string(obj, "claim_id");
    c.statement = detail::require_string(obj, "statement");
    if (blank(c.statement)) throw ValidationError("empty statement for claim " + c.claim_id);
    c.truth_value = parse_truth_value(detail::require_string(obj, "truth_value"));
    c.title = detail::optional_string(obj, "title").value_or("");
    c.body = detail::optional_string(obj, "body").value_or("");
    c.speaker = detail::optional_string(obj, "speaker");
    c.date = detail::optional_string(obj, "date");
    if (!seen.insert(c.claim_id).second) throw ValidationError("duplicate claim_id '" + c.claim_id + "'");
    claims.push_back(std::move(c));
  });
  return claims;
}

void save_claims(const std::filesystem::path& path, const std::vector<VerifiedClaim>& claims) {
  detail::AtomicWriter w(path);
  for (const auto& c : claims) w.write_line(claim_to_json(c));
  w.commit();
}

void validate_transcript(const TranscriptDoc& doc) {
  if (doc.sentences.empty()) throw ValidationError("empty document '" + doc.transcript_id + "'");
  for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
    const auto& s = doc.sentences[i];
    if (s.index != i) throw ValidationError("index gap at " + std::to_string(i));
    if (s.transcript_id != doc.transcript_id)
      throw ValidationError("sentence " + s.sentence_id + " belongs to transcript '" +
                            s.transcript_id + "', expected '" + doc.transcript_id + "'");
    if (blank(s.text)) throw ValidationError("empty sentence " + s.sentence_id);
  }
}

TranscriptDoc load_transcript(const std::filesystem::path& path) {
  TranscriptDoc doc;
  bool have_id = false;
  std::unordered_set<std::string> seen;
  detail::for_each_json_line(path, [&](const json& obj, std::size_t) {
    if (!obj.contains("sentence_id")) {
      if (have_id || !doc.sentences.empty())
        throw ValidationError("transcript header must be the first line");
      doc.transcript_id = detail::require_string(obj, "transcript_id");
      doc.event_date = detail::optional_string(obj, "event_date");
      have_id = true;
      return;
    }
    SentenceRec s;
    s.sentence_id = detail::require_string(obj, "sentence_id");
    s.transcript_id = detail::require_string(obj, "transcript_id");
    auto idx = obj.find("index");
    if (idx == obj.end() || !idx->is_number_integer() || idx->get<long long>() < 0)
      throw ValidationError("index must be a non-negative integer");
    s.index = idx->get<std::size_t>();
    s.speaker = detail::optional_string(obj, "speaker");
    s.text = detail::require_string(obj, "text");
    if (!have_id) {
      doc.transcript_id = s.transcript_id;
      have_id = true;
    }
    if (!seen.insert(s.sentence_id).second)
      throw ValidationError("duplicate sentence_id '" + s.sentence_id + "'");
    doc.sentences.push_back(std::move(s));
  });
  std::stable_sort(doc.sentences.begin(), doc.sentences.end(),
                   [](const SentenceRec& a, const SentenceRec& b) { return a.index < b.index; });
  try {
    validate_transcript(doc);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return doc;
}

void save_transcript(const std::filesystem::path& path, const TranscriptDoc& doc) {
  detail::AtomicWriter w(path);
  json header = {{"transcript_id", doc.transcript_id}};
  if (doc.event_date) header["event_date"] = *doc.event_date;
  w.write_line(header);
  for (const auto& s : doc.sentences) w.write_line(sentence_to_json(s));
  w.commit();
}

std::vector<GoldPair> load_gold(const std::filesystem::path& path) {
  std::vector<GoldPair> gold;
  std::set<std::pair<std::string, std::string>> seen;
  detail::for_each_json_line(path, [&](const json& obj, std::size_t) {
    GoldPair g;
    g.sentence_id = detail::require_string(obj, "sentence_id");
    g.claim_id = detail::require_string(obj, "claim_id");
    g.stance = parse_stance(detail::require_string(obj, "stance"));
    g.verdict = parse_verdict(detail::require_string(obj, "verdict"));
    if (!seen.emplace(g.sentence_id, g.claim_id).second)
      throw ValidationError("duplicate gold pair (" + g.sentence_id + ", " + g.claim_id + ")");
    gold.push_back(std::move(g));
  });
  return gold;
}

void save_gold(const std::filesystem::path& path, const std::vector<GoldPair>& gold) {
  detail::AtomicWriter w(path);
  for (const auto& g : gold)
    w.write_line({{"sentence_id", g.sentence_id},
                  {"claim_id", g.claim_id},
                  {"stance", to_string(g.stance)},
                  {"verdict", to_string(g.verdict)}});
  w.commit();
}

ScoreTable load_scores(const std::filesystem::path& path) {
  ScoreTable table;
  detail::for_each_json_line(path, [&](const json& obj, std::size_t) {
    DenseScoreRecord r;
    r.sentence_id = detail::require_string(obj, "sentence_id");
    r.claim_id = detail::require_string(obj, "claim_id");
    r.metric = parse_dense_metric(detail::require_string(obj, "metric"));
    auto vals = obj.find("values");
    if (vals == obj.end() || !vals->is_array()) throw ValidationError("missing 'values' array");
    for (const auto& v : *vals) {
      if (!v.is_number()) throw ValidationError("non-numeric score value");
      r.values.push_back(v.get<double>());
    }
    table.insert(r);
  });
  try {
    table.validate_simplex();
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return table;
}

void save_scores(const std::filesystem::path& path, const ScoreTable& table) {
  detail::AtomicWriter w(path);
  for (const auto& r : table.records())
    w.write_line({{"sentence_id", r.sentence_id},
                  {"claim_id", r.claim_id},
                  {"metric", to_string(r.metric)},
                  {"values", r.values}});
  w.commit();
}

// ---- Corpus ----

Corpus::Corpus(std::vector<VerifiedClaim> claims, std::vector<TranscriptDoc> transcripts,
               std::vector<GoldPair> gold, ScoreTable scores)
    : claims_(std::move(claims)),
      transcripts_(std::move(transcripts)),
      gold_(std::move(gold)),
      scores_(std::move(scores)) {
  for (std::size_t i = 0; i < claims_.size(); ++i) {
    if (blank(claims_[i].statement))
      throw ValidationError("empty statement for claim " + claims_[i].claim_id);
    if (!claim_pos_.emplace(claims_[i].claim_id, i).second)
      throw ValidationError("duplicate claim_id '" + claims_[i].claim_id + "'");
  }
  for (std::size_t t = 0; t < transcripts_.size(); ++t) {
    const auto& doc = transcripts_[t];
    validate_transcript(doc);
    if (!transcript_pos_.emplace(doc.transcript_id, t).second)
      throw ValidationError("duplicate transcript_id '" + doc.transcript_id + "'");
    for (std::size_t s = 0; s < doc.sentences.size(); ++s)
      if (!sentence_pos_.emplace(doc.sentences[s].sentence_id, std::make_pair(t, s)).second)
        throw ValidationError("duplicate sentence_id '" + doc.sentences[s].sentence_id + "'");
  }
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t i = 0; i < gold_.size(); ++i) {
    const auto& g = gold_[i];
    if (!seen.emplace(g.sentence_id, g.claim_id).second)
      throw ValidationError("duplicate gold pair (" + g.sentence_id + ", " + g.claim_id + ")");
    gold_by_sentence_[g.sentence_id].push_back(i);
    if (g.decisive()) decisive_[g.sentence_id].insert(g.claim_id);
  }
  validate_references();
  scores_.validate_simplex();
}

const VerifiedClaim* Corpus::find_claim(std::string_view claim_id) const {
  auto it = claim_pos_.find(std::string(claim_id));
  return it == claim_pos_.end() ? nullptr : &claims_[it->second];
}

const SentenceRec* Corpus::find_sentence(std::string_view sentence_id) const {
  auto it = sentence_pos_.find(std::string(sentence_id));
  if (it == sentence_pos_.end()) return nullptr;
  return &transcripts_[it->second.first].sentences[it->second.second];
}

const TranscriptDoc* Corpus::find_transcript(std::string_view transcript_id) const {
  auto it = transcript_pos_.find(std::string(transcript_id));
  return it == transcript_pos_.end() ? nullptr : &transcripts_[it->second];
}

std::vector<const GoldPair*> Corpus::gold_for(std::string_view sentence_id) const {
  std::vector<const GoldPair*> out;
  auto it = gold_by_sentence_.find(std::string(sentence_id));
  if (it != gold_by_sentence_.end())
    for (std::size_t i : it->second) out.push_back(&gold_[i]);
  return out;
}

const std::unordered_set<std::string>& Corpus::decisive_claims(std::string_view sentence_id) const {
  static const std::unordered_set<std::string> kNone;
  auto it = decisive_.find(std::string(sentence_id));
  return it == decisive_.end() ? kNone : it->second;
}

void Corpus::validate_references() const {
  for (const auto& g : gold_) {
    if (!sentence_pos_.count(g.sentence_id))
      throw ValidationError("gold pair references unknown sentence '" + g.sentence_id + "'");
    if (!claim_pos_.count(g.claim_id))
      throw ValidationError("gold pair references unknown claim '" + g.claim_id + "'");
  }
  for (const auto& [sid, _] : sentence_pos_) {
    for (const auto& cid : scores_.claims_for(sid))
      if (!claim_pos_.count(cid))
        throw ValidationError("score record references unknown claim '" + cid + "'");
  }
  // Score records whose sentence is unknown never show up in the loop above.
  for (const auto& r : scores_.records()) {
    if (!sentence_pos_.count(r.sentence_id))
      throw ValidationError("score record references unknown sentence '" + r.sentence_id + "'");
  }
}

CorpusPaths CorpusPaths::under(const std::filesystem::path& data_dir) {
  return {data_dir / "claims.jsonl", data_dir / "transcripts", data_dir / "gold.jsonl",
          data_dir / "scores.jsonl"};
}

Corpus load_corpus(const CorpusPaths& paths) {
  auto claims = load_claims(paths.claims);
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(paths.transcripts_dir)) {
    for (const auto& e : std::filesystem::directory_iterator(paths.transcripts_dir))
      if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
  } else if (!paths.transcripts_dir.empty()) {
    throw ValidationError("transcripts directory not found: " + paths.transcripts_dir.string());
  }
  std::sort(files.begin(), files.end());
  std::vector<TranscriptDoc> transcripts;
  for (const auto& f : files) transcripts.push_back(load_transcript(f));
  std::vector<GoldPair> gold;
  if (!paths.gold.empty() && std::filesystem::exists(paths.gold)) gold = load_gold(paths.gold);
  ScoreTable scores;
  if (!paths.scores.empty() && std::filesystem::exists(paths.scores)) scores = load_scores(paths.scores);
  return Corpus(std::move(claims), std::move(transcripts), std::move(gold), std::move(scores));
}

void save_corpus(const std::filesystem::path& data_dir, const Corpus& corpus) {
  auto paths = CorpusPaths::under(data_dir);
  save_claims(paths.claims, corpus.claims());
  std::filesystem::create_directories(paths.transcripts_dir);
  for (const auto& doc : corpus.transcripts())
    save_transcript(paths.transcripts_dir / (doc.transcript_id + ".jsonl"), doc);
  save_gold(paths.gold, corpus.gold());
  save_scores(paths.scores, corpus.scores());
}

}  // namespace factrank
