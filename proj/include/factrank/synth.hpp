#pragma once

#include <array>
#include <cstdint>

#include "factrank/corpus.hpp"
#include "factrank/features.hpp"

namespace factrank::synth {

// Generated corpora for tests and demos. Every claim owns two topic tokens.
// A relevant sentence carries both tokens of its gold claim, so that claim is
// the top body candidate; other sentences carry single topic tokens only.
struct Options {
  std::size_t transcripts = 5;
  std::size_t sentences = 40;  // per transcript
  std::size_t claims = 60;
  std::size_t relevant = 6;    // relevant sentences per transcript
  std::size_t distractors = 2; // extra single topic tokens per sentence
  std::size_t score_depth = 30;  // body candidates that receive dense scores
  // Puts one shared token in every claim body and every sentence, so each
  // sentence retrieves every claim.
  bool common_token = false;
  bool empty_bodies = true;  // every tenth claim that is never gold has no body
  bool write_scores = true;
  std::uint64_t seed = 7;
};

// Dense slots whose value separates decisive pairs (>= 0.75) from the rest
// (<= 0.5). All other dense slots are noise.
inline constexpr std::array<std::size_t, 3> kPlantedSlots = {slot::kNliEntail, slot::kSbertStatement,
                                                             slot::kSimcseStatement};

Corpus generate(const Options& options);

}  // namespace factrank::synth
