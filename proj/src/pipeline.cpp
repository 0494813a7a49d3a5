#include "factrank/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "factrank/errors.hpp"
#include "jsonl.hpp"

namespace factrank {

using detail::json;

namespace {

PoolStrategy to_pool(Strategy s) {
  switch (s) {
    case Strategy::kConcat: return PoolStrategy::kConcat;
    case Strategy::kMax: return PoolStrategy::kMax;
    case Strategy::kMaxSkip: return PoolStrategy::kMaxSkip;
    case Strategy::kBaseline: break;
  }
  throw ValidationError("baseline strategy has no pooling");
}

std::string block_title(PoolStrategy s) {
  switch (s) {
    case PoolStrategy::kConcat: return "RankSVM for Retrieved Verified Claims (using BM25 on Body)";
    case PoolStrategy::kMax: return "RankSVM--Max";
    case PoolStrategy::kMaxSkip: break;
  }
  return "RankSVM--Max with Skipping Half-True Verified claims";
}

std::string model_label(PoolStrategy s, std::size_t n) {
  switch (s) {
    case PoolStrategy::kConcat: return "RankSVM on Top-" + std::to_string(n);
    case PoolStrategy::kMax: return "RankSVM--Max on Top-" + std::to_string(n);
    case PoolStrategy::kMaxSkip: break;
  }
  return "RankSVM--Max on Top-" + std::to_string(n) + " with Skipping";
}

std::string evidence_source_name(Field f) { return "bm25-" + std::string(to_string(f)); }

Field parse_evidence_source(std::string_view s) {
  if (s.substr(0, 5) != "bm25-") throw ValidationError("unknown evidence source '" + std::string(s) + "'");
  return parse_field(s.substr(5));
}

json metrics_json(const std::vector<std::string>& columns, const std::vector<double>& values) {
  json obj = json::object();
  for (std::size_t c = 0; c < columns.size() && c < values.size(); ++c) obj[columns[c]] = values[c];
  return obj;
}

}  // namespace

Strategy parse_strategy(std::string_view text) {
  if (text == "baseline") return Strategy::kBaseline;
  if (text == "concat") return Strategy::kConcat;
  if (text == "max") return Strategy::kMax;
  if (text == "max-skip") return Strategy::kMaxSkip;
  throw ValidationError("unknown strategy '" + std::string(text) + "'");
}

std::string_view to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::kBaseline: return "baseline";
    case Strategy::kConcat: return "concat";
    case Strategy::kMax: return "max";
    case Strategy::kMaxSkip: break;
  }
  return "max-skip";
}

// ---- config ----

SlotMask ExperimentConfig::mask() const {
  SlotMask keep = full_mask();
  for (const auto& group : ablate) keep &= without(group);
  return keep;
}

void ExperimentConfig::validate() const {
  if (n == 0) throw ValidationError("n must be >= 1");
  if (pool_size == 0) throw ValidationError("pool_size must be >= 1");
  for (auto v : n_grid)
    if (v == 0) throw ValidationError("n_grid entries must be >= 1");
  if (r_values.empty()) throw ValidationError("r_values must not be empty");
  for (auto r : r_values)
    if (r == 0) throw ValidationError("r values must be >= 1");
  if (!(c > 0.0)) throw ValidationError("C must be positive");
  for (double g : c_grid)
    if (!(g > 0.0)) throw ValidationError("C grid entries must be positive");
  if (select_c && c_grid.empty()) throw ValidationError("select_c needs a C grid");
  if (epochs == 0) throw ValidationError("epochs must be >= 1");
  if (mask().none()) throw ValidationError("ablation removes every feature");
  if (strategy == Strategy::kBaseline) find_baseline(baseline);
  if (bm25.k1 < 0.0 || bm25.b < 0.0 || bm25.b > 1.0) throw ValidationError("invalid BM25 parameters");
}

ExperimentConfig config_from_json(const json& obj, ExperimentConfig cfg) {
  static const std::set<std::string> kKeys = {
      "data_dir", "output_dir", "strategy", "baseline", "n",     "n_grid",          "pool_size",
      "r_values", "c",          "c_grid",   "select_c", "epochs", "seed",           "ablate",
      "evidence_source", "filter_evidence_half_true", "score_mode", "bm25"};
  if (!obj.is_object()) throw ValidationError("config must be a JSON object");
  for (const auto& [key, _] : obj.items())
    if (!kKeys.count(key)) throw ValidationError("unknown config key '" + key + "'");
  try {
    if (obj.contains("data_dir")) cfg.data_dir = obj["data_dir"].get<std::string>();
    if (obj.contains("output_dir")) cfg.output_dir = obj["output_dir"].get<std::string>();
    if (obj.contains("strategy")) cfg.strategy = parse_strategy(obj["strategy"].get<std::string>());
    if (obj.contains("baseline")) cfg.baseline = obj["baseline"].get<std::string>();
    if (obj.contains("n")) cfg.n = obj["n"].get<std::size_t>();
    if (obj.contains("n_grid")) cfg.n_grid = obj["n_grid"].get<std::vector<std::size_t>>();
    if (obj.contains("pool_size")) cfg.pool_size = obj["pool_size"].get<std::size_t>();
    if (obj.contains("r_values")) cfg.r_values = obj["r_values"].get<std::vector<std::size_t>>();
    if (obj.contains("c")) cfg.c = obj["c"].get<double>();
    if (obj.contains("c_grid")) cfg.c_grid = obj["c_grid"].get<std::vector<double>>();
    if (obj.contains("select_c")) cfg.select_c = obj["select_c"].get<bool>();
    if (obj.contains("epochs")) cfg.epochs = obj["epochs"].get<std::size_t>();
    if (obj.contains("seed")) cfg.seed = obj["seed"].get<std::uint64_t>();
    if (obj.contains("ablate")) cfg.ablate = obj["ablate"].get<std::vector<std::string>>();
    if (obj.contains("evidence_source"))
      cfg.evidence_field = parse_evidence_source(obj["evidence_source"].get<std::string>());
    if (obj.contains("filter_evidence_half_true"))
      cfg.filter_evidence_half_true = obj["filter_evidence_half_true"].get<bool>();
    if (obj.contains("score_mode")) {
      const auto mode = obj["score_mode"].get<std::string>();
      if (mode == "strict")
        cfg.score_mode = ScoreMode::kStrict;
      else if (mode == "lenient")
        cfg.score_mode = ScoreMode::kLenient;
      else
        throw ValidationError("score_mode must be strict or lenient");
    }
    if (obj.contains("bm25")) {
      const auto& b = obj["bm25"];
      cfg.bm25.k1 = b.value("k1", cfg.bm25.k1);
      cfg.bm25.b = b.value("b", cfg.bm25.b);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad config value: ") + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  json obj;
  try {
    obj = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  auto cfg = config_from_json(obj, std::move(base));
  if (!cfg.data_dir.empty() && cfg.data_dir.is_relative()) cfg.data_dir = path.parent_path() / cfg.data_dir;
  return cfg;
}

json config_to_json(const ExperimentConfig& c) {
  return {{"data_dir", c.data_dir.string()},
          {"output_dir", c.output_dir.string()},
          {"strategy", to_string(c.strategy)},
          {"baseline", c.baseline},
          {"n", c.n},
          {"n_grid", c.n_grid},
          {"pool_size", c.pool_size},
          {"r_values", c.r_values},
          {"c", c.c},
          {"c_grid", c.c_grid},
          {"select_c", c.select_c},
          {"epochs", c.epochs},
          {"seed", c.seed},
          {"ablate", c.ablate},
          {"evidence_source", evidence_source_name(c.evidence_field)},
          {"filter_evidence_half_true", c.filter_evidence_half_true},
          {"score_mode", c.score_mode == ScoreMode::kStrict ? "strict" : "lenient"},
          {"bm25", {{"k1", c.bm25.k1}, {"b", c.bm25.b}}}};
}

// ---- candidates ----

std::vector<SentenceCandidates> generate_candidates(const Corpus& corpus, const Bm25Index& index,
                                                    std::size_t pool_size) {
  std::vector<SentenceCandidates> out;
  for (const auto& doc : corpus.transcripts())
    for (const auto& s : doc.sentences)
      out.push_back({s.sentence_id, candidates(tokenize(s.text), index, pool_size)});
  return out;
}

void save_candidates(const std::filesystem::path& path, std::span<const SentenceCandidates> cands) {
  detail::AtomicWriter w(path);
  for (const auto& sc : cands) {
    json list = json::array();
    for (const auto& c : sc.claims) list.push_back({{"claim_id", c.claim_id}, {"score", c.score}});
    w.write_line({{"sentence_id", sc.sentence_id}, {"candidates", list}});
  }
  w.commit();
}

std::vector<SentenceCandidates> load_candidates(const std::filesystem::path& path) {
  std::vector<SentenceCandidates> out;
  detail::for_each_json_line(path, [&](const json& obj, std::size_t) {
    SentenceCandidates sc;
    sc.sentence_id = detail::require_string(obj, "sentence_id");
    for (const auto& c : obj.at("candidates"))
      sc.claims.push_back({c.at("claim_id").get<std::string>(), c.at("score").get<double>()});
    out.push_back(std::move(sc));
  });
  return out;
}

void save_manifest(const std::filesystem::path& path, std::span<const SentenceCandidates> cands) {
  detail::AtomicWriter w(path);
  for (const auto& sc : cands)
    for (const auto& c : sc.claims) w.write_line({{"sentence_id", sc.sentence_id}, {"claim_id", c.claim_id}});
  w.commit();
}

std::string CoverageReport::summary(std::size_t max_lines) const {
  std::ostringstream out;
  out << missing.size() << " missing score record(s) across " << pairs_checked << " candidate pair(s)";
  for (std::size_t i = 0; i < missing.size() && i < max_lines; ++i)
    out << "\n  (" << missing[i].sentence_id << ", " << missing[i].claim_id << ", "
        << to_string(missing[i].metric) << ")";
  if (missing.size() > max_lines) out << "\n  ...";
  return out.str();
}

CoverageReport check_coverage(const Corpus& corpus, const Bm25Index& index, std::size_t depth) {
  CoverageReport report;
  for (const auto& doc : corpus.transcripts())
    for (const auto& s : doc.sentences)
      for (const auto& c : candidates(tokenize(s.text), index, depth)) {
        ++report.pairs_checked;
        const PairScores* p = corpus.scores().find(s.sentence_id, c.claim_id);
        for (std::size_t m = 0; m < kNumDenseMetrics; ++m) {
          const auto metric = static_cast<DenseMetric>(m);
          if (p == nullptr || !p->has(metric)) report.missing.push_back({s.sentence_id, c.claim_id, metric});
        }
      }
  return report;
}

// ---- Experiment ----

Experiment::Experiment(const Corpus& corpus, ExperimentConfig config)
    : corpus_(corpus), config_(std::move(config)) {
  config_.validate();
  if (corpus_.claims().empty()) throw ValidationError("claim database is empty");
  index_ = Bm25Index::build(corpus_.claims(), config_.bm25);
  depth_ = config_.n;
  for (auto v : config_.n_grid) depth_ = std::max(depth_, v);

  if (config_.score_mode == ScoreMode::kStrict) {
    const auto coverage = check_coverage(corpus_, index_, depth_);
    if (!coverage.complete()) throw MissingScoreError("dense scores incomplete: " + coverage.summary());
  }

  std::atomic<std::size_t> missing{0};
  const DenseSource dense{corpus_.scores(), config_.score_mode, &missing};
  for (const auto& doc : corpus_.transcripts()) {
    for (const auto& s : doc.sentences) {
      Prepared p;
      p.tokens = tokenize(s.text);
      for (const auto& c : candidates(p.tokens, index_, depth_))
        p.pairs.push_back(assemble_pair(s, p.tokens, c.claim_id, index_, dense));
      // Evidence is ranked deeper than the pool so half-true filtering can refill it.
      const std::size_t evidence_depth = config_.filter_evidence_half_true ? corpus_.claims().size() : config_.pool_size;
      for (const auto& c : index_.retrieve_topk(p.tokens, config_.evidence_field, evidence_depth)) {
        if (p.evidence.size() == config_.pool_size) break;
        if (config_.filter_evidence_half_true && corpus_.find_claim(c.claim_id)->truth_value == TruthValue::kHalfTrue)
          continue;
        p.evidence.push_back(c.claim_id);
      }
      prepared_.emplace(s.sentence_id, std::move(p));
    }
  }
  missing_ = missing.load();
}

const Experiment::Prepared& Experiment::prepared(const std::string& sentence_id) const {
  auto it = prepared_.find(sentence_id);
  if (it == prepared_.end()) throw ValidationError("unknown sentence '" + sentence_id + "'");
  return it->second;
}

std::vector<SentenceVector> Experiment::vectors(const TranscriptDoc& doc, PoolStrategy strategy,
                                                std::size_t n) const {
  if (n > depth_)
    throw ValidationError("N=" + std::to_string(n) + " exceeds the prepared candidate depth " + std::to_string(depth_));
  const TruthLookup truth = [this](const std::string& id) { return corpus_.find_claim(id)->truth_value; };
  std::vector<SentenceVector> out;
  out.reserve(doc.sentences.size());
  for (const auto& s : doc.sentences) {
    const Prepared& p = prepared(s.sentence_id);
    std::span<const PairFeatures> top(p.pairs.data(), std::min(n, p.pairs.size()));
    SentenceVector v;
    switch (strategy) {
      case PoolStrategy::kConcat: v = pool_concat(top, n); break;
      case PoolStrategy::kMax: v = pool_max(top, n); break;
      case PoolStrategy::kMaxSkip: {
        const auto kept = filter_half_true(top, truth);
        v = pool_max(kept, n);
        break;
      }
    }
    v.strategy = strategy;
    v.sentence_id = s.sentence_id;
    v.evidence = p.evidence;
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<LabeledTranscript> Experiment::labeled(std::span<const std::string> transcript_ids,
                                                   PoolStrategy strategy, std::size_t n,
                                                   const SlotMask& keep) const {
  std::vector<LabeledTranscript> out;
  for (const auto& id : transcript_ids) {
    const TranscriptDoc* doc = corpus_.find_transcript(id);
    if (doc == nullptr) throw ValidationError("unknown transcript '" + id + "'");
    LabeledTranscript lt;
    lt.transcript_id = id;
    for (const auto& v : vectors(*doc, strategy, n)) {
      lt.vectors.push_back(apply_mask(v.values, keep));
      lt.relevant.push_back(corpus_.is_relevant(v.sentence_id));
    }
    out.push_back(std::move(lt));
  }
  return out;
}

RankModel Experiment::fit_on(std::span<const std::string> training, PoolStrategy strategy, std::size_t n,
                             const SlotMask& keep, double c) const {
  const auto data = labeled(training, strategy, n, keep);
  const FitOptions options{c, config_.seed, config_.epochs};
  RankModel model;
  if (make_pairs(data).empty()) {
    // No relevant/non-relevant contrast: a zero model ranks in document order.
    std::vector<std::span<const double>> all;
    for (const auto& t : data)
      for (const auto& v : t.vectors) all.emplace_back(v);
    model.normalization = compute_normalization(all);
    model.weights.assign(model.normalization.means.size(), 0.0);
    model.c = c;
    model.seed = config_.seed;
  } else {
    model = train(data, options).model;
  }
  model.strategy = std::string(to_string(strategy));
  model.n_candidates = n;
  return model;
}

double Experiment::select_c(std::span<const std::string> training, PoolStrategy strategy, std::size_t n,
                            const SlotMask& keep) const {
  if (!config_.select_c || training.size() < 2) return config_.c;
  if (config_.c_grid.size() == 1) return config_.c_grid.front();
  const VerdictIndex verdicts(corpus_.gold());
  double best_c = config_.c_grid.front();
  double best_map = -1.0;
  for (double c : config_.c_grid) {
    std::vector<double> aps;
    for (std::size_t h = 0; h < training.size(); ++h) {
      std::vector<std::string> inner;
      for (std::size_t i = 0; i < training.size(); ++i)
        if (i != h) inner.push_back(training[i]);
      const RankModel model = fit_on(inner, strategy, n, keep, c);
      const TranscriptDoc* doc = corpus_.find_transcript(training[h]);
      auto vecs = vectors(*doc, strategy, n);
      for (auto& v : vecs) v.values = apply_mask(v.values, keep);
      const auto run = rank(model, doc->transcript_id, vecs);
      std::vector<SentenceCredit> credits;
      for (const auto& e : run.entries) credits.push_back({verdicts.relevant(e.sentence_id), false});
      if (auto ap = average_precision(credits)) aps.push_back(*ap);
    }
    const double map = aps.empty() ? -1.0 : map_over(aps);
    if (map > best_map) {
      best_map = map;
      best_c = c;
    }
  }
  return best_c;
}

CvResult Experiment::run_cv(PoolStrategy strategy, std::size_t n, const SlotMask& keep, std::string label) const {
  if (corpus_.transcripts().size() < 2) throw ValidationError("cross-validation needs at least two transcripts");
  const VerdictIndex verdicts(corpus_.gold());
  CvResult result;
  result.label = std::move(label);
  result.missing_scores = missing_;
  std::vector<TranscriptMetrics> per;
  std::size_t excluded = 0;
  for (const auto& test : corpus_.transcripts()) {
    FoldReport fold;
    fold.test_transcript = test.transcript_id;
    for (const auto& other : corpus_.transcripts())
      if (other.transcript_id != test.transcript_id) fold.training_transcripts.push_back(other.transcript_id);
    const double c = select_c(fold.training_transcripts, strategy, n, keep);
    fold.model = fit_on(fold.training_transcripts, strategy, n, keep, c);
    auto vecs = vectors(test, strategy, n);
    for (auto& v : vecs) v.values = apply_mask(v.values, keep);
    fold.run = rank(fold.model, test.transcript_id, vecs);
    fold.metrics = evaluate_run(fold.run, verdicts, config_.r_values);
    if (fold.metrics)
      per.push_back(*fold.metrics);
    else
      ++excluded;
    result.folds.push_back(std::move(fold));
  }
  result.aggregate = aggregate(per, excluded, config_.r_values);
  return result;
}

CvResult Experiment::run_cv() const {
  if (config_.strategy == Strategy::kBaseline) return run_baseline(find_baseline(config_.baseline));
  const auto pool = to_pool(config_.strategy);
  return run_cv(pool, config_.n, config_.mask(), model_label(pool, config_.n));
}

RankModel Experiment::train_model(PoolStrategy strategy, std::size_t n, const SlotMask& keep,
                                  const std::vector<std::string>& transcript_ids) const {
  std::vector<std::string> ids = transcript_ids;
  if (ids.empty())
    for (const auto& doc : corpus_.transcripts()) ids.push_back(doc.transcript_id);
  return fit_on(ids, strategy, n, keep, select_c(ids, strategy, n, keep));
}

std::vector<RankingRun> Experiment::baseline_runs(const BaselineSlot& baseline, bool inner_evidence) const {
  const DenseSource dense{corpus_.scores(), config_.score_mode, nullptr};
  const bool lexical = baseline.slot && *baseline.slot <= slot::kBm25Body;
  const Field lexical_field = lexical ? static_cast<Field>(*baseline.slot) : Field::kBody;
  std::vector<RankingRun> runs;
  for (const auto& doc : corpus_.transcripts()) {
    std::vector<SentenceVector> rows;
    std::vector<double> scores;
    for (const auto& s : doc.sentences) {
      const Prepared& p = prepared(s.sentence_id);
      SentenceVector row;
      row.sentence_id = s.sentence_id;
      double value = 0.0;
      std::vector<std::string> inner;
      if (lexical) {
        const auto hits = index_.retrieve_topk(p.tokens, lexical_field, config_.pool_size);
        if (!hits.empty()) value = hits.front().score;
        for (const auto& h : hits) inner.push_back(h.claim_id);
      } else {
        std::vector<PairFeatures> pairs;
        for (const auto& cid : corpus_.scores().claims_for(s.sentence_id))
          pairs.push_back(assemble_pair(s, p.tokens, cid, index_, dense));
        value = baseline_score(pairs, baseline);
        // Unscored claims count as 0.0 in lenient mode.
        if (config_.score_mode == ScoreMode::kLenient && pairs.size() < corpus_.claims().size())
          value = std::max(value, 0.0);
        std::stable_sort(pairs.begin(), pairs.end(), [&](const PairFeatures& a, const PairFeatures& b) {
          return baseline.value(a.values) > baseline.value(b.values);
        });
        for (std::size_t i = 0; i < pairs.size() && i < config_.pool_size; ++i) inner.push_back(pairs[i].claim_id);
      }
      row.evidence = inner_evidence ? inner : p.evidence;
      rows.push_back(std::move(row));
      scores.push_back(value);
    }
    runs.push_back(order_run(doc.transcript_id, rows, scores));
  }
  return runs;
}

CvResult Experiment::run_baseline(const BaselineSlot& baseline) const {
  const VerdictIndex verdicts(corpus_.gold());
  CvResult result;
  result.label = baseline.display;
  result.missing_scores = missing_;
  const auto runs = baseline_runs(baseline, false);
  std::vector<TranscriptMetrics> per;
  std::size_t excluded = 0;
  for (const auto& run : runs) {
    FoldReport fold;
    fold.test_transcript = run.transcript_id;
    fold.run = run;
    fold.metrics = evaluate_run(run, verdicts, config_.r_values);
    if (fold.metrics)
      per.push_back(*fold.metrics);
    else
      ++excluded;
    result.folds.push_back(std::move(fold));
  }
  result.aggregate = aggregate(per, excluded, config_.r_values);
  // MAP_inner scores the claim ranking induced by the baseline's own score.
  std::vector<double> inner;
  for (const auto& run : baseline_runs(baseline, true))
    for (const auto& e : run.entries)
      if (auto ap = ap_inner(e.evidence, verdicts.decisive(e.sentence_id))) inner.push_back(*ap);
  result.aggregate.map_inner = inner.empty() ? std::nullopt : std::optional<double>(map_over(inner));
  return result;
}

ReportBlock Experiment::baselines_block() const {
  ReportBlock block{"Baselines: Single Scores", {}};
  for (const auto& b : baseline_slots()) block.rows.push_back(make_row(b.display, run_baseline(b).aggregate));
  return block;
}

ReportBlock Experiment::strategy_block(PoolStrategy strategy) const {
  ReportBlock block{block_title(strategy), {}};
  for (std::size_t n : config_.n_grid)
    block.rows.push_back(
        make_row("Top-" + std::to_string(n), run_cv(strategy, n, config_.mask(), model_label(strategy, n)).aggregate));
  return block;
}

ReportBlock Experiment::ablation_block(PoolStrategy strategy, std::size_t n) const {
  ReportBlock block{"Ablations", {}};
  const SlotMask base = config_.mask();
  const std::string label = model_label(strategy, n);
  block.rows.push_back(make_row(label, run_cv(strategy, n, base, label).aggregate));
  for (const auto& a : standard_ablations())
    block.rows.push_back(make_row(a.label, run_cv(strategy, n, base & a.keep, a.label).aggregate));
  return block;
}

Report Experiment::grid_report() const {
  Report report{"Verdict experiments", column_names(config_.r_values), {}};
  report.blocks.push_back(baselines_block());
  for (auto s : {PoolStrategy::kConcat, PoolStrategy::kMax, PoolStrategy::kMaxSkip})
    report.blocks.push_back(strategy_block(s));
  return report;
}

Report Experiment::ablation_report() const {
  const PoolStrategy s = config_.strategy == Strategy::kBaseline ? PoolStrategy::kMaxSkip : to_pool(config_.strategy);
  return {"Ablation experiments", column_names(config_.r_values), {ablation_block(s, config_.n)}};
}

// ---- outputs ----

void write_cv_outputs(const std::filesystem::path& dir, const CvResult& result, const Report& report) {
  const auto columns = report.columns;
  json folds = json::array();
  std::vector<RankingRun> runs;
  for (const auto& f : result.folds) {
    json fold = {{"test_transcript", f.test_transcript}, {"training_transcripts", f.training_transcripts}};
    fold["metrics"] = f.metrics ? metrics_json(columns, f.metrics->ap) : json(nullptr);
    fold["ap_inner"] = f.metrics ? json(f.metrics->inner) : json::array();
    if (!f.model.weights.empty())
      fold["model"] = {{"strategy", f.model.strategy},
                       {"n", f.model.n_candidates},
                       {"dims", f.model.dims()},
                       {"weights", f.model.weights},
                       {"means", f.model.normalization.means},
                       {"stds", f.model.normalization.stds},
                       {"C", f.model.c},
                       {"seed", f.model.seed}};
    folds.push_back(std::move(fold));
    runs.push_back(f.run);
  }
  json summary = {{"label", result.label},
                  {"folds", folds},
                  {"aggregate", metrics_json(columns, result.aggregate.values)},
                  {"missing_scores", result.missing_scores}};
  {
    detail::AtomicWriter w(dir / "folds.json");
    w.stream() << summary.dump(2) << '\n';
    w.commit();
  }
  save_runs(dir / "run.jsonl", runs);
  emit_report(dir, "report", report);
}

std::string content_hash(std::span<const std::filesystem::path> files, std::string_view extra) {
  std::uint64_t h = 1469598103934665603ULL;
  auto feed = [&h](std::string_view bytes) {
    for (unsigned char c : bytes) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  };
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + f.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    feed(f.filename().string());
    feed(bytes);
  }
  feed(extra);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace factrank
