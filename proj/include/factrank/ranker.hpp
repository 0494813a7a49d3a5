#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "factrank/features.hpp"
#include "factrank/metrics.hpp"

namespace factrank {

inline constexpr int kModelVersion = 1;

// Per-dimension z-scoring statistics. Dimensions without variance get std 1.
struct Normalization {
  std::vector<double> means;
  std::vector<double> stds;

  bool operator==(const Normalization&) const = default;
};

Normalization compute_normalization(std::span<const std::span<const double>> vectors);

// Linear RankSVM model. Scores are w . ((x - mean) / std); no bias term.
struct RankModel {
  std::string strategy;  // provenance tag, e.g. "max-skip"
  std::size_t n_candidates = 1;
  std::vector<double> weights;
  Normalization normalization;
  double c = 1.0;
  std::uint64_t seed = 0;

  std::size_t dims() const { return weights.size(); }
  bool operator==(const RankModel&) const = default;
};

// Sentence vectors of one transcript in document order, with relevance.
struct LabeledTranscript {
  std::string transcript_id;
  std::vector<std::vector<double>> vectors;
  std::vector<bool> relevant;
};

// A (relevant, non-relevant) pair from the same transcript. The spans point
// into the LabeledTranscript the pair was made from.
struct TrainPair {
  std::span<const double> positive;
  std::span<const double> negative;
  std::string group;
};

// One pair per (relevant, non-relevant) sentence combination within each
// transcript; transcript order, then positive index, then negative index.
std::vector<TrainPair> make_pairs(std::span<const LabeledTranscript> transcripts);

struct FitOptions {
  double c = 1.0;
  std::uint64_t seed = 0;
  std::size_t epochs = 200;
};

struct FitResult {
  RankModel model;
  std::vector<double> losses;  // objective after each epoch
};

// Minimizes 1/2 |w|^2 + C * sum max(0, 1 - w . (z(x+) - z(x-))) with
// full-batch subgradient steps of size 1/(C t), halved until the objective
// does not increase. Deterministic; the seed is recorded for provenance.
FitResult fit(std::span<const TrainPair> pairs, const Normalization& norm, const FitOptions& options);

// Normalization is estimated from the distinct vectors referenced by pairs.
FitResult fit(std::span<const TrainPair> pairs, const FitOptions& options);

// Normalization from every training vector, including transcripts that
// contribute no pairs.
FitResult train(std::span<const LabeledTranscript> transcripts, const FitOptions& options);

double ranking_loss(std::span<const TrainPair> pairs, const RankModel& model);

double score(const RankModel& model, std::span<const double> vector);

// Weights mapped back to raw feature space: score(a) - score(b) = w' . (a - b).
std::vector<double> raw_weights(const RankModel& model);

// Sorts by descending score, ties by document order. Evidence lists are
// carried over unchanged.
RankingRun order_run(const std::string& transcript_id, std::span<const SentenceVector> doc_order,
                     std::span<const double> scores);

RankingRun rank(const RankModel& model, const std::string& transcript_id,
                std::span<const SentenceVector> doc_order);

void save_model(const std::filesystem::path& path, const RankModel& model);
RankModel load_model(const std::filesystem::path& path);

}  // namespace factrank
