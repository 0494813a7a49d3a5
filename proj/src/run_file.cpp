#include <unordered_map>

#include "factrank/errors.hpp"
#include "factrank/metrics.hpp"
#include "jsonl.hpp"

namespace factrank {

using detail::json;

void save_runs(const std::filesystem::path& path, std::span<const RankingRun> runs) {
  detail::AtomicWriter w(path);
  for (const auto& run : runs)
    for (std::size_t i = 0; i < run.entries.size(); ++i) {
      const auto& e = run.entries[i];
      w.write_line({{"transcript_id", run.transcript_id},
                    {"rank", i + 1},
                    {"sentence_id", e.sentence_id},
                    {"score", e.score},
                    {"evidence", e.evidence}});
    }
  w.commit();
}

std::vector<RankingRun> load_runs(const std::filesystem::path& path) {
  std::vector<RankingRun> runs;
  std::unordered_map<std::string, std::size_t> by_id;
  detail::for_each_json_line(path, [&](const json& obj, std::size_t) {
    const std::string tid = detail::require_string(obj, "transcript_id");
    auto [it, fresh] = by_id.try_emplace(tid, runs.size());
    if (fresh) runs.push_back({tid, {}});
    RankingRun& run = runs[it->second];
    const auto rank = obj.at("rank").get<std::size_t>();
    if (rank != run.entries.size() + 1)
      throw ValidationError("rank " + std::to_string(rank) + " out of sequence for " + tid);
    RankedSentence e;
    e.sentence_id = detail::require_string(obj, "sentence_id");
    e.score = obj.at("score").get<double>();
    e.evidence = obj.at("evidence").get<std::vector<std::string>>();
    run.entries.push_back(std::move(e));
  });
  return runs;
}

}  // namespace factrank
