// factrank: command-line driver for the sentence-ranking pipeline.
//
// Exit codes: 0 ok, 1 validation error (bad input, bad flags, missing
// scores in strict mode), 2 runtime error.

#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <json.hpp>

#include "factrank/api.hpp"
#include "factrank/bm25.hpp"
#include "factrank/corpus.hpp"
#include "factrank/errors.hpp"
#include "factrank/features.hpp"
#include "factrank/metrics.hpp"
#include "factrank/pipeline.hpp"
#include "factrank/ranker.hpp"
#include "factrank/report.hpp"
#include "factrank/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace factrank;

namespace {

constexpr const char* kDataEnv = "FACTRANK_DATA";

// Flags shared by the experiment subcommands. Each one overrides the config
// file only when given on the command line.
struct ExperimentFlags {
  std::string config;
  std::string data_dir;
  std::string strategy;
  std::string baseline;
  std::size_t n = 0;
  std::vector<std::size_t> n_grid;
  std::size_t pool_size = 0;
  std::vector<std::size_t> r_values;
  double c = 0.0;
  std::vector<double> c_grid;
  bool select_c = false;
  std::size_t epochs = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> ablate;
  std::string evidence_source;
  bool filter_evidence = false;
  std::string score_mode;

  std::map<std::string, CLI::Option*> given;
};

void add_experiment_flags(CLI::App* app, ExperimentFlags& f) {
  auto& g = f.given;
  g["config"] = app->add_option("--config", f.config, "JSON experiment config");
  g["data_dir"] = app->add_option("--data-dir", f.data_dir, std::string("data directory (default $") + kDataEnv + ")");
  g["strategy"] = app->add_option("--strategy", f.strategy, "baseline, concat, max or max-skip");
  g["baseline"] = app->add_option("--baseline", f.baseline, "baseline name for --strategy baseline");
  g["n"] = app->add_option("--n", f.n, "top-N candidates pooled per sentence");
  g["n_grid"] = app->add_option("--n-grid", f.n_grid, "N values for grid runs")->delimiter(',');
  g["pool_size"] = app->add_option("--pool-size", f.pool_size, "evidence / candidate pool size");
  g["r_values"] = app->add_option("--r", f.r_values, "evidence cutoffs")->delimiter(',');
  g["c"] = app->add_option("--c", f.c, "RankSVM regularization constant");
  g["c_grid"] = app->add_option("--c-grid", f.c_grid, "C values tried by --select-c")->delimiter(',');
  g["select_c"] = app->add_flag("--select-c", f.select_c, "pick C per fold by inner leave-one-out");
  g["epochs"] = app->add_option("--epochs", f.epochs, "training epochs");
  g["seed"] = app->add_option("--seed", f.seed, "seed recorded with every model");
  g["ablate"] = app->add_option("--ablate", f.ablate, "feature family or field to drop")->delimiter(',');
  g["evidence_source"] = app->add_option("--evidence-source", f.evidence_source, "bm25-body, bm25-title or bm25-statement");
  g["filter_evidence"] = app->add_flag("--filter-evidence-half-true", f.filter_evidence, "drop half-true claims from evidence");
  g["score_mode"] = app->add_option("--score-mode", f.score_mode, "strict or lenient");
}

bool given(const ExperimentFlags& f, const std::string& key) { return f.given.at(key)->count() > 0; }

ExperimentConfig resolve(const ExperimentFlags& f) {
  ExperimentConfig cfg;
  if (given(f, "config")) cfg = load_config(f.config);
  json overrides = json::object();
  if (given(f, "strategy")) overrides["strategy"] = f.strategy;
  if (given(f, "baseline")) overrides["baseline"] = f.baseline;
  if (given(f, "n")) overrides["n"] = f.n;
  if (given(f, "n_grid")) overrides["n_grid"] = f.n_grid;
  if (given(f, "pool_size")) overrides["pool_size"] = f.pool_size;
  if (given(f, "r_values")) overrides["r_values"] = f.r_values;
  if (given(f, "c")) overrides["c"] = f.c;
  if (given(f, "c_grid")) overrides["c_grid"] = f.c_grid;
  if (given(f, "select_c")) overrides["select_c"] = f.select_c;
  if (given(f, "epochs")) overrides["epochs"] = f.epochs;
  if (given(f, "seed")) overrides["seed"] = f.seed;
  if (given(f, "ablate")) overrides["ablate"] = f.ablate;
  if (given(f, "evidence_source")) overrides["evidence_source"] = f.evidence_source;
  if (given(f, "filter_evidence")) overrides["filter_evidence_half_true"] = f.filter_evidence;
  if (given(f, "score_mode")) overrides["score_mode"] = f.score_mode;
  cfg = config_from_json(overrides, cfg);
  if (given(f, "data_dir")) {
    cfg.data_dir = f.data_dir;
  } else if (cfg.data_dir.empty()) {
    if (const char* env = std::getenv(kDataEnv)) cfg.data_dir = env;
  }
  if (cfg.data_dir.empty()) throw ValidationError(std::string("no data directory: pass --data-dir or set ") + kDataEnv);
  cfg.validate();
  return cfg;
}

Corpus load(const ExperimentConfig& cfg) { return load_corpus(CorpusPaths::under(cfg.data_dir)); }

void write_json(const fs::path& path, const json& obj) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << obj.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write " + path.string());
  }
  fs::rename(tmp, path);
}

// Config as recorded next to outputs; paths are left out so that reruns into
// another directory produce the same bytes.
json recorded_config(const ExperimentConfig& cfg) {
  json obj = config_to_json(cfg);
  obj.erase("data_dir");
  obj.erase("output_dir");
  return obj;
}

json dataset_stats(const Corpus& corpus) {
  std::size_t sentences = 0, relevant = 0;
  for (const auto& doc : corpus.transcripts())
    for (const auto& s : doc.sentences) {
      ++sentences;
      if (corpus.is_relevant(s.sentence_id)) ++relevant;
    }
  std::map<std::string, std::size_t> stance, verdict, truth;
  for (const auto& g : corpus.gold()) {
    ++stance[std::string(to_string(g.stance))];
    ++verdict[std::string(to_string(g.verdict))];
  }
  for (const auto& c : corpus.claims()) ++truth[std::string(to_string(c.truth_value))];
  return {{"claims", corpus.claims().size()},
          {"transcripts", corpus.transcripts().size()},
          {"sentences", sentences},
          {"relevant_sentences", relevant},
          {"gold_pairs", corpus.gold().size()},
          {"stance", stance},
          {"verdict", verdict},
          {"truth_value", truth},
          {"score_records", corpus.scores().record_count()},
          {"scored_pairs", corpus.scores().pair_count()}};
}

Report single_report(const CvResult& result, const ExperimentConfig& cfg, const std::string& block) {
  Report r{"Cross-validation", column_names(cfg.r_values), {}};
  r.blocks.push_back({block, {make_row(result.label, result.aggregate)}});
  return r;
}

PoolStrategy pool_of(const ExperimentConfig& cfg) {
  if (cfg.strategy == Strategy::kBaseline) throw ValidationError("this command needs a RankSVM strategy");
  return parse_pool_strategy(to_string(cfg.strategy));
}

void warn_excluded(std::size_t excluded) {
  if (excluded > 0)
    std::cerr << "warning: " << excluded << " transcript(s) without relevant sentences left out of MAP\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rank transcript sentences by how likely they verify against fact-checked claims"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // One flag set per subcommand; only the parsed one is read.
  std::deque<ExperimentFlags> flag_sets;
  std::map<const CLI::App*, ExperimentFlags*> flags_of;
  auto add_flags = [&](CLI::App* sub) {
    add_experiment_flags(sub, flag_sets.emplace_back());
    flags_of[sub] = &flag_sets.back();
  };
  std::string out;

  auto* ingest = app.add_subcommand("ingest", "validate a data directory and print dataset statistics");
  add_flags(ingest);
  ingest->add_option("--out", out, "write a normalized copy of the corpus here");

  auto* index_cmd = app.add_subcommand("index", "build the BM25 index snapshot");
  add_flags(index_cmd);
  double k1 = 1.2, b = 0.75;
  index_cmd->add_option("--out", out, "snapshot file")->required();
  index_cmd->add_option("--k1", k1);
  index_cmd->add_option("--b", b);

  auto* cand = app.add_subcommand("candidates", "top-k body candidates and the dense-scoring manifest");
  add_flags(cand);
  cand->add_option("--out", out, "output directory")->required();

  auto* feat = app.add_subcommand("features", "pooled sentence vectors");
  add_flags(feat);
  feat->add_option("--out", out, "output directory")->required();

  auto* base = app.add_subcommand("baselines", "all single-score baselines");
  add_flags(base);
  base->add_option("--out", out, "output directory")->required();

  auto* train_cmd = app.add_subcommand("train", "train one RankSVM model");
  add_flags(train_cmd);
  std::vector<std::string> train_on;
  train_cmd->add_option("--out", out, "model file")->required();
  train_cmd->add_option("--transcripts", train_on, "training transcripts (default all)")->delimiter(',');

  auto* cv = app.add_subcommand("cv", "leave-one-transcript-out cross-validation");
  add_flags(cv);
  bool grid = false, ablations = false;
  cv->add_option("--out", out, "output directory")->required();
  cv->add_flag("--grid", grid, "baselines plus every strategy over the N grid");
  cv->add_flag("--ablations", ablations, "full model plus the eight ablations");

  auto* eval = app.add_subcommand("eval", "evaluate a run file against gold pairs");
  add_flags(eval);
  std::string run_file;
  eval->add_option("--run", run_file, "run.jsonl")->required();
  eval->add_option("--out", out, "metrics JSON file");

  auto* report = app.add_subcommand("report", "merge report JSON files and render tables");
  std::vector<std::string> inputs;
  std::string title = "Results";
  report->add_option("inputs", inputs, "report JSON files")->required();
  report->add_option("--out", out, "output directory")->required();
  report->add_option("--title", title);

  auto* serve_cmd = app.add_subcommand("serve", "read-only HTTP API");
  add_flags(serve_cmd);
  std::string runs_dir, host = "127.0.0.1";
  int port = 8080;
  serve_cmd->add_option("--runs-dir", runs_dir, "directory of run files");
  serve_cmd->add_option("--port", port);
  serve_cmd->add_option("--host", host);

  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus with scores");
  synth::Options so;
  synth_cmd->add_option("--out", out, "data directory to create")->required();
  synth_cmd->add_option("--transcripts", so.transcripts);
  synth_cmd->add_option("--sentences", so.sentences);
  synth_cmd->add_option("--claims", so.claims);
  synth_cmd->add_option("--relevant", so.relevant);
  synth_cmd->add_option("--distractors", so.distractors);
  synth_cmd->add_option("--score-depth", so.score_depth);
  synth_cmd->add_flag("--common-token", so.common_token);
  synth_cmd->add_flag("!--no-empty-bodies", so.empty_bodies);
  synth_cmd->add_flag("!--no-scores", so.write_scores);
  synth_cmd->add_option("--seed", so.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (ingest->parsed()) {
      const auto cfg = resolve(*flags_of[ingest]);
      const Corpus corpus = load(cfg);
      std::cout << dataset_stats(corpus).dump(2) << '\n';
      if (!out.empty()) save_corpus(out, corpus);
    } else if (index_cmd->parsed()) {
      auto cfg = resolve(*flags_of[index_cmd]);
      if (index_cmd->count("--k1")) cfg.bm25.k1 = k1;
      if (index_cmd->count("--b")) cfg.bm25.b = b;
      cfg.validate();
      const Corpus corpus = load(cfg);
      const auto idx = Bm25Index::build(corpus.claims(), cfg.bm25);
      if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
      idx.save(out);
      std::cout << "indexed " << idx.doc_count() << " claims -> " << out << '\n';
    } else if (cand->parsed()) {
      const auto cfg = resolve(*flags_of[cand]);
      const Corpus corpus = load(cfg);
      const auto idx = Bm25Index::build(corpus.claims(), cfg.bm25);
      const auto cands = generate_candidates(corpus, idx, cfg.pool_size);
      fs::create_directories(out);
      save_candidates(fs::path(out) / "candidates.jsonl", cands);
      save_manifest(fs::path(out) / "manifest.jsonl", cands);
      std::size_t pairs = 0;
      for (const auto& c : cands) pairs += c.claims.size();
      std::cout << cands.size() << " sentences, " << pairs << " candidate pairs\n";
    } else if (feat->parsed()) {
      const auto cfg = resolve(*flags_of[feat]);
      const auto pool = pool_of(cfg);
      const auto paths = CorpusPaths::under(cfg.data_dir);
      std::vector<fs::path> inputs_hashed = {paths.claims};
      if (fs::exists(paths.scores)) inputs_hashed.push_back(paths.scores);
      if (fs::is_directory(paths.transcripts_dir)) {
        std::vector<fs::path> docs;
        for (const auto& e : fs::directory_iterator(paths.transcripts_dir))
          if (e.path().extension() == ".jsonl") docs.push_back(e.path());
        std::sort(docs.begin(), docs.end());
        inputs_hashed.insert(inputs_hashed.end(), docs.begin(), docs.end());
      }
      const std::string key = content_hash(inputs_hashed, recorded_config(cfg).dump());
      const fs::path dir(out);
      const fs::path file = dir / ("features-" + std::string(to_string(pool)) + "-n" + std::to_string(cfg.n) + ".jsonl");
      const fs::path meta = fs::path(file.string() + ".key");
      if (fs::exists(file) && fs::exists(meta)) {
        std::ifstream in(meta);
        std::string cached;
        std::getline(in, cached);
        if (cached == key) {
          std::cout << "cached " << file.string() << '\n';
          return 0;
        }
      }
      auto local = cfg;
      local.n_grid.clear();
      const Corpus corpus = load(local);
      const Experiment exp(corpus, local);
      std::vector<SentenceVector> all;
      for (const auto& doc : corpus.transcripts()) {
        auto v = exp.vectors(doc, pool, local.n);
        for (auto& sv : v) sv.values = apply_mask(sv.values, local.mask());
        all.insert(all.end(), v.begin(), v.end());
      }
      fs::create_directories(dir);
      save_features(file, all);
      std::ofstream(meta) << key << '\n';
      std::cout << all.size() << " vectors -> " << file.string() << '\n';
      if (exp.missing_scores() > 0) std::cerr << "warning: " << exp.missing_scores() << " missing scores read as 0\n";
    } else if (base->parsed()) {
      auto cfg = resolve(*flags_of[base]);
      cfg.n_grid.clear();
      const Corpus corpus = load(cfg);
      const Experiment exp(corpus, cfg);
      Report r{"Baselines", column_names(cfg.r_values), {exp.baselines_block()}};
      fs::create_directories(out);
      emit_report(out, "baselines", r);
      std::cout << render_table(r);
      warn_excluded(r.blocks.front().rows.front().excluded);
    } else if (train_cmd->parsed()) {
      auto cfg = resolve(*flags_of[train_cmd]);
      const auto pool = pool_of(cfg);
      cfg.n_grid.clear();
      const Corpus corpus = load(cfg);
      const Experiment exp(corpus, cfg);
      const RankModel model = exp.train_model(pool, cfg.n, cfg.mask(), train_on);
      if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
      save_model(out, model);
      std::cout << "model with " << model.dims() << " weights -> " << out << '\n';
    } else if (cv->parsed()) {
      auto cfg = resolve(*flags_of[cv]);
      if (!grid) cfg.n_grid.clear();
      const Corpus corpus = load(cfg);
      const Experiment exp(corpus, cfg);
      fs::create_directories(out);
      write_json(fs::path(out) / "config.json", recorded_config(cfg));
      if (grid || ablations) {
        std::vector<Report> parts;
        if (grid) parts.push_back(exp.grid_report());
        if (ablations) parts.push_back(exp.ablation_report());
        const Report merged = merge_reports("Cross-validation", parts);
        emit_report(out, "report", merged);
        std::cout << render_table(merged);
      } else {
        const CvResult result = exp.run_cv();
        const Report r = single_report(result, cfg, cfg.strategy == Strategy::kBaseline ? "Baseline" : "RankSVM");
        write_cv_outputs(out, result, r);
        std::cout << render_table(r);
        warn_excluded(result.aggregate.excluded);
      }
      if (exp.missing_scores() > 0) std::cerr << "warning: " << exp.missing_scores() << " missing scores read as 0\n";
    } else if (eval->parsed()) {
      const auto cfg = resolve(*flags_of[eval]);
      const Corpus corpus = load(cfg);
      const auto runs = load_runs(run_file);
      for (const auto& run : runs) {
        const TranscriptDoc* doc = corpus.find_transcript(run.transcript_id);
        if (doc == nullptr) throw ValidationError("run names unknown transcript '" + run.transcript_id + "'");
        validate_run(run, *doc);
      }
      const VerdictIndex verdicts(corpus.gold());
      const MetricRow row = evaluate_runs(runs, verdicts, cfg.r_values);
      json metrics = json::object();
      for (std::size_t c = 0; c < row.columns.size(); ++c) metrics[row.columns[c]] = row.values[c];
      json result = {{"metrics", metrics},
                     {"evaluated_transcripts", row.evaluated},
                     {"excluded_transcripts", row.excluded}};
      result["MAP_inner"] = row.map_inner ? json(*row.map_inner) : json(nullptr);
      if (!out.empty()) write_json(out, result);
      std::cout << result.dump(2) << '\n';
      warn_excluded(row.excluded);
    } else if (report->parsed()) {
      std::vector<Report> parts;
      for (const auto& in : inputs) {
        std::ifstream f(in);
        if (!f) throw ValidationError("cannot open " + in);
        const json obj = json::parse(f, nullptr, false);
        if (obj.is_discarded()) throw ValidationError(in + ": not valid JSON");
        parts.push_back(report_from_json(obj));
      }
      const Report merged = merge_reports(title, parts);
      fs::create_directories(out);
      emit_report(out, "report", merged);
      std::cout << render_table(merged);
    } else if (serve_cmd->parsed()) {
      const auto cfg = resolve(*flags_of[serve_cmd]);
      ApiService::Options opts;
      opts.pool_size = cfg.pool_size;
      const ApiService service = ApiService::load(cfg.data_dir, runs_dir, opts);
      ApiServer server(service);
      const int bound = server.bind(host, port);
      std::cout << "listening on http://" << host << ':' << bound << std::endl;
      server.run();
    } else if (synth_cmd->parsed()) {
      const Corpus corpus = synth::generate(so);
      save_corpus(out, corpus);
      std::cout << dataset_stats(corpus).dump(2) << '\n';
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "fatal: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
