#include "factrank/api.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>

#include <httplib.h>

#include "factrank/errors.hpp"
#include "factrank/features.hpp"
#include "jsonl.hpp"

namespace factrank {

using detail::json;
using Params = std::multimap<std::string, std::string>;

namespace {

struct HttpError {
  int status;
  std::string code;
  std::string message;
};

ApiResponse error(int status, std::string code, std::string message) {
  return {status, {{"code", std::move(code)}, {"message", std::move(message)}}};
}

std::optional<std::string> param(const Params& params, const std::string& key) {
  auto it = params.find(key);
  if (it == params.end()) return std::nullopt;
  return it->second;
}

std::size_t size_param(const Params& params, const std::string& key, std::size_t fallback) {
  const auto raw = param(params, key);
  if (!raw) return fallback;
  std::size_t value = 0;
  const auto* end = raw->data() + raw->size();
  auto [ptr, ec] = std::from_chars(raw->data(), end, value);
  if (ec != std::errc() || ptr != end || raw->empty())
    throw HttpError{400, "bad_request", key + " must be a non-negative integer"};
  return value;
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= path.size()) {
    const auto slash = path.find('/', start);
    const auto stop = slash == std::string::npos ? path.size() : slash;
    if (stop > start) parts.push_back(path.substr(start, stop - start));
    if (slash == std::string::npos) break;
    start = slash + 1;
  }
  return parts;
}

json page(const json& items, std::size_t total, std::size_t offset, std::size_t limit) {
  return {{"items", items}, {"total", total}, {"offset", offset}, {"limit", limit}};
}

json optional_json(const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::vector<RunManifest> discover_runs(const std::filesystem::path& runs_dir) {
  namespace fs = std::filesystem;
  std::vector<RunManifest> out;
  if (runs_dir.empty()) return out;
  if (!fs::is_directory(runs_dir)) throw ValidationError("runs directory " + runs_dir.string() + " does not exist");
  for (const auto& entry : fs::directory_iterator(runs_dir)) {
    RunManifest m;
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
      m.run_id = entry.path().stem().string();
      m.path = entry.path();
    } else if (entry.is_directory() && fs::is_regular_file(entry.path() / "run.jsonl")) {
      m.run_id = entry.path().filename().string();
      m.path = entry.path() / "run.jsonl";
      const auto folds = entry.path() / "folds.json";
      if (fs::is_regular_file(folds)) {
        std::ifstream in(folds);
        const json obj = json::parse(in, nullptr, false);
        if (obj.is_object() && obj.contains("label") && obj["label"].is_string()) m.label = obj["label"];
      }
    } else {
      continue;
    }
    m.runs = load_runs(m.path);
    out.push_back(std::move(m));
  }
  std::sort(out.begin(), out.end(), [](const RunManifest& a, const RunManifest& b) { return a.run_id < b.run_id; });
  return out;
}

ApiService::ApiService(std::shared_ptr<const Corpus> corpus, std::vector<RunManifest> runs, Options options)
    : corpus_(std::move(corpus)), runs_(std::move(runs)), options_(options) {
  if (!corpus_) throw ValidationError("no corpus");
  if (options_.default_limit == 0 || options_.max_limit < options_.default_limit)
    throw ValidationError("invalid page limits");
  if (!corpus_->claims().empty()) index_ = Bm25Index::build(corpus_->claims());

  const auto& docs = corpus_->transcripts();
  transcript_order_.resize(docs.size());
  std::iota(transcript_order_.begin(), transcript_order_.end(), std::size_t{0});
  // Undated transcripts sort after dated ones.
  std::sort(transcript_order_.begin(), transcript_order_.end(), [&](std::size_t a, std::size_t b) {
    const auto& da = docs[a];
    const auto& db = docs[b];
    const auto key_a = std::make_tuple(!da.event_date.has_value(), da.event_date.value_or(""), da.transcript_id);
    const auto key_b = std::make_tuple(!db.event_date.has_value(), db.event_date.value_or(""), db.transcript_id);
    return key_a < key_b;
  });

  for (std::size_t m = 0; m < runs_.size(); ++m) {
    if (m > 0 && runs_[m].run_id == runs_[m - 1].run_id)
      throw ValidationError("duplicate run id '" + runs_[m].run_id + "'");
    for (std::size_t r = 0; r < runs_[m].runs.size(); ++r) {
      const auto& run = runs_[m].runs[r];
      const TranscriptDoc* doc = corpus_->find_transcript(run.transcript_id);
      if (doc == nullptr)
        throw ValidationError("run " + runs_[m].run_id + " names unknown transcript '" + run.transcript_id + "'");
      validate_run(run, *doc);
      for (const auto& e : run.entries)
        for (const auto& cid : e.evidence)
          if (corpus_->find_claim(cid) == nullptr)
            throw ValidationError("run " + runs_[m].run_id + " names unknown claim '" + cid + "'");
      run_lookup_[{runs_[m].run_id, run.transcript_id}] = {m, r};
    }
  }
}

ApiService ApiService::load(const std::filesystem::path& data_dir, const std::filesystem::path& runs_dir,
                            Options options) {
  auto corpus = std::make_shared<const Corpus>(load_corpus(CorpusPaths::under(data_dir)));
  return ApiService(std::move(corpus), discover_runs(runs_dir), options);
}

ApiResponse ApiService::handle(const std::string& method, const std::string& path, const Params& params) const {
  if (method != "GET" && method != "HEAD") return error(405, "method_not_allowed", "the API is read-only");
  try {
    const auto parts = split_path(path);
    if (parts.size() == 1 && parts[0] == "transcripts") return list_transcripts(params);
    if (parts.size() == 3 && parts[0] == "transcripts" && parts[2] == "ranking") return ranking(parts[1], params);
    if (parts.size() == 3 && parts[0] == "sentences" && parts[2] == "evidence") return evidence(parts[1], params);
    if (parts.size() == 1 && parts[0] == "runs") return list_runs();
    return error(404, "not_found", "no route for " + path);
  } catch (const HttpError& e) {
    return error(e.status, e.code, e.message);
  }
}

ApiResponse ApiService::list_transcripts(const Params& params) const {
  const std::size_t offset = size_param(params, "offset", 0);
  const std::size_t limit = std::min(size_param(params, "limit", options_.default_limit), options_.max_limit);
  json items = json::array();
  for (std::size_t i = offset; i < transcript_order_.size() && i < offset + limit; ++i) {
    const auto& doc = corpus_->transcripts()[transcript_order_[i]];
    items.push_back({{"transcript_id", doc.transcript_id},
                     {"event_date", optional_json(doc.event_date)},
                     {"n_sentences", doc.sentences.size()}});
  }
  return {200, page(items, transcript_order_.size(), offset, limit)};
}

const RunManifest* ApiService::find_run(const std::string& run_id) const {
  for (const auto& m : runs_)
    if (m.run_id == run_id) return &m;
  return nullptr;
}

json ApiService::claim_view(const SentenceRec& sentence, const TokenStream& tokens, const std::string& claim_id) const {
  const VerifiedClaim* claim = corpus_->find_claim(claim_id);
  json scores = json::object();
  scores[std::string(slot_name(slot::kBm25Statement))] = index_.score(tokens, Field::kStatement, claim_id);
  scores[std::string(slot_name(slot::kBm25Title))] = index_.score(tokens, Field::kTitle, claim_id);
  scores[std::string(slot_name(slot::kBm25Body))] = index_.score(tokens, Field::kBody, claim_id);
  const PairScores* pair = corpus_->scores().find(sentence.sentence_id, claim_id);
  auto put = [&](std::size_t s, DenseMetric m) {
    const bool present = pair != nullptr && pair->has(m);
    scores[std::string(slot_name(s))] = present ? json(pair->get(m).front()) : json(nullptr);
  };
  auto put_top = [&](std::size_t first, DenseMetric m) {
    const bool present = pair != nullptr && pair->has(m);
    for (std::size_t k = 0; k < kBodyTop; ++k) {
      json v = nullptr;
      if (present) {
        const auto& vals = pair->get(m);
        v = vals.empty() ? 0.0 : vals[std::min(k, vals.size() - 1)];
      }
      scores[std::string(slot_name(first + k))] = v;
    }
  };
  put(slot::kNliEntail, DenseMetric::kNliEntail);
  put(slot::kNliNeutral, DenseMetric::kNliNeutral);
  put(slot::kNliContradict, DenseMetric::kNliContradict);
  put(slot::kBertscoreF1, DenseMetric::kBertscoreF1);
  put(slot::kSbertStatement, DenseMetric::kSbertStatement);
  put(slot::kSbertTitle, DenseMetric::kSbertTitle);
  put_top(slot::kSbertBody, DenseMetric::kSbertBodyTop);
  put(slot::kSimcseStatement, DenseMetric::kSimcseStatement);
  put(slot::kSimcseTitle, DenseMetric::kSimcseTitle);
  put_top(slot::kSimcseBody, DenseMetric::kSimcseBodyTop);

  json view = {{"claim_id", claim_id},
               {"statement", claim->statement},
               {"truth_value", to_string(claim->truth_value)},
               {"title", claim->title},
               {"speaker", optional_json(claim->speaker)},
               {"date", optional_json(claim->date)},
               {"scores", scores}};
  view["gold_verdict"] = nullptr;
  for (const GoldPair* g : corpus_->gold_for(sentence.sentence_id))
    if (g->claim_id == claim_id) view["gold_verdict"] = to_string(g->verdict);
  return view;
}

ApiResponse ApiService::ranking(const std::string& transcript_id, const Params& params) const {
  const TranscriptDoc* doc = corpus_->find_transcript(transcript_id);
  if (doc == nullptr) return error(404, "not_found", "unknown transcript '" + transcript_id + "'");
  const auto run_id = param(params, "run");
  if (!run_id) return error(400, "bad_request", "run parameter is required");
  if (find_run(*run_id) == nullptr) return error(404, "not_found", "unknown run '" + *run_id + "'");
  auto it = run_lookup_.find({*run_id, transcript_id});
  if (it == run_lookup_.end())
    return error(404, "not_found", "run '" + *run_id + "' has no ranking for '" + transcript_id + "'");
  const RankingRun& run = runs_[it->second.first].runs[it->second.second];

  const std::size_t offset = size_param(params, "offset", 0);
  const std::size_t limit = std::min(size_param(params, "limit", options_.default_limit), options_.max_limit);
  const std::size_t r = size_param(params, "r", options_.default_r);
  const bool has_gold = !corpus_->gold().empty();
  json items = json::array();
  for (std::size_t i = offset; i < run.entries.size() && i < offset + limit; ++i) {
    const auto& e = run.entries[i];
    const SentenceRec* s = corpus_->find_sentence(e.sentence_id);
    const TokenStream tokens = tokenize(s->text);
    json evidence = json::array();
    for (std::size_t k = 0; k < e.evidence.size() && k < r; ++k) evidence.push_back(claim_view(*s, tokens, e.evidence[k]));
    json item = {{"rank", i + 1},
                 {"sentence_id", e.sentence_id},
                 {"text", s->text},
                 {"speaker", optional_json(s->speaker)},
                 {"score", e.score},
                 {"evidence", evidence}};
    item["relevant"] = has_gold ? json(corpus_->is_relevant(e.sentence_id)) : json(nullptr);
    items.push_back(std::move(item));
  }
  json body = page(items, run.entries.size(), offset, limit);
  body["transcript_id"] = transcript_id;
  body["run"] = *run_id;
  return {200, body};
}

ApiResponse ApiService::evidence(const std::string& sentence_id, const Params& params) const {
  const SentenceRec* s = corpus_->find_sentence(sentence_id);
  if (s == nullptr) return error(404, "not_found", "unknown sentence '" + sentence_id + "'");
  const std::size_t r = size_param(params, "r", options_.default_r);
  const TokenStream tokens = tokenize(s->text);

  std::vector<std::string> claim_ids;
  std::string source = "bm25-body";
  if (const auto run_id = param(params, "run")) {
    if (find_run(*run_id) == nullptr) return error(404, "not_found", "unknown run '" + *run_id + "'");
    auto it = run_lookup_.find({*run_id, s->transcript_id});
    if (it == run_lookup_.end())
      return error(404, "not_found", "run '" + *run_id + "' has no ranking for '" + s->transcript_id + "'");
    for (const auto& e : runs_[it->second.first].runs[it->second.second].entries)
      if (e.sentence_id == sentence_id) claim_ids = e.evidence;
    source = *run_id;
  } else if (!corpus_->claims().empty()) {
    for (const auto& c : candidates(tokens, index_, options_.pool_size)) claim_ids.push_back(c.claim_id);
  }

  json list = json::array();
  for (std::size_t k = 0; k < claim_ids.size() && k < r; ++k) {
    json view = claim_view(*s, tokens, claim_ids[k]);
    view["rank"] = k + 1;
    list.push_back(std::move(view));
  }
  return {200,
          {{"sentence_id", sentence_id},
           {"transcript_id", s->transcript_id},
           {"text", s->text},
           {"source", source},
           {"r", r},
           {"evidence", list}}};
}

ApiResponse ApiService::list_runs() const {
  json items = json::array();
  for (const auto& m : runs_) {
    json transcripts = json::array();
    std::size_t sentences = 0;
    for (const auto& run : m.runs) {
      transcripts.push_back(run.transcript_id);
      sentences += run.entries.size();
    }
    items.push_back({{"run_id", m.run_id},
                     {"label", m.label},
                     {"file", m.path.filename().string()},
                     {"transcripts", transcripts},
                     {"n_sentences", sentences}});
  }
  return {200, page(items, runs_.size(), 0, runs_.size())};
}

struct ApiServer::Impl {
  httplib::Server server;
};

ApiServer::ApiServer(const ApiService& service) : impl_(std::make_unique<Impl>()) {
  auto route = [&service](const httplib::Request& req, httplib::Response& res) {
    Params params(req.params.begin(), req.params.end());
    const ApiResponse out = service.handle(req.method, req.path, params);
    res.status = out.status;
    res.set_header(kSchemaHeader, std::to_string(kSchemaVersion));
    if (out.status == 405) res.set_header("Allow", "GET, HEAD");
    res.set_content(out.body.dump(), "application/json");
  };
  auto& server = impl_->server;
  server.Get(".*", route);
  server.Post(".*", route);
  server.Put(".*", route);
  server.Patch(".*", route);
  server.Delete(".*", route);
}

ApiServer::~ApiServer() = default;

int ApiServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
  return bound;
}

void ApiServer::run() { impl_->server.listen_after_bind(); }

void ApiServer::stop() { impl_->server.stop(); }

void serve(const ApiService& service, const std::string& host, int port) {
  ApiServer server(service);
  server.bind(host, port);
  server.run();
}

}  // namespace factrank
