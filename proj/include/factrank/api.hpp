#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "factrank/bm25.hpp"
#include "factrank/corpus.hpp"
#include "factrank/metrics.hpp"

namespace factrank {

inline constexpr const char* kSchemaHeader = "X-Schema-Version";
inline constexpr int kSchemaVersion = 1;

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

struct RunManifest {
  std::string run_id;
  std::filesystem::path path;
  std::string label;  // from a sibling folds.json, when present
  std::vector<RankingRun> runs;
};

// Run files under a directory: <id>.jsonl, or <id>/run.jsonl for cv output
// directories. Sorted by run id.
std::vector<RunManifest> discover_runs(const std::filesystem::path& runs_dir);

// Read-only view over one corpus and a set of ranking runs. State is fixed at
// construction, so concurrent handle() calls need no locking.
class ApiService {
 public:
  struct Options {
    std::size_t default_limit = 500;
    std::size_t max_limit = 2000;
    std::size_t default_r = 5;
    std::size_t pool_size = 15;  // evidence depth when no run is named
  };

  ApiService(std::shared_ptr<const Corpus> corpus, std::vector<RunManifest> runs, Options options);
  ApiService(std::shared_ptr<const Corpus> corpus, std::vector<RunManifest> runs)
      : ApiService(std::move(corpus), std::move(runs), Options{}) {}

  // Loads and validates everything up front; throws on a malformed corpus or run.
  static ApiService load(const std::filesystem::path& data_dir, const std::filesystem::path& runs_dir,
                         Options options);

  ApiResponse handle(const std::string& method, const std::string& path,
                     const std::multimap<std::string, std::string>& params) const;

 private:
  ApiResponse list_transcripts(const std::multimap<std::string, std::string>& params) const;
  ApiResponse ranking(const std::string& transcript_id, const std::multimap<std::string, std::string>& params) const;
  ApiResponse evidence(const std::string& sentence_id, const std::multimap<std::string, std::string>& params) const;
  ApiResponse list_runs() const;

  nlohmann::json claim_view(const SentenceRec& sentence, const TokenStream& tokens, const std::string& claim_id) const;
  const RunManifest* find_run(const std::string& run_id) const;

  std::shared_ptr<const Corpus> corpus_;
  std::vector<RunManifest> runs_;
  Options options_;
  Bm25Index index_;
  std::vector<std::size_t> transcript_order_;
  // (run id, transcript id) -> (manifest index, run index)
  std::map<std::pair<std::string, std::string>, std::pair<std::size_t, std::size_t>> run_lookup_;
};

// HTTP front end. bind() with port 0 picks a free port and returns it;
// run() blocks until stop() is called from another thread.
class ApiServer {
 public:
  explicit ApiServer(const ApiService& service);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  int bind(const std::string& host, int port);
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Blocks serving on host:port until the process is stopped.
void serve(const ApiService& service, const std::string& host, int port);

}  // namespace factrank
