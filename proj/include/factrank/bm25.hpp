#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "factrank/corpus.hpp"
#include "factrank/tokenize.hpp"

namespace factrank {

enum class Field { kStatement = 0, kTitle = 1, kBody = 2 };
inline constexpr std::array<Field, 3> kAllFields = {Field::kStatement, Field::kTitle, Field::kBody};

Field parse_field(std::string_view text);
std::string_view to_string(Field field);

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;

  bool operator==(const Bm25Params&) const = default;
};

struct ScoredClaim {
  std::string claim_id;
  double score = 0.0;

  bool operator==(const ScoredClaim&) const = default;
};

// Okapi BM25 over the three claim fields, each indexed independently.
//
//   idf(t)   = ln(1 + (N - df + 0.5) / (df + 0.5))
//   score    = sum over query tokens t (repeats count again) of
//              idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len / avg_len))
//
// Written once by build() or load(), read-only afterwards.
class Bm25Index {
 public:
  struct Posting {
    std::uint32_t doc = 0;
    std::uint32_t tf = 0;

    bool operator==(const Posting&) const = default;
  };

  static Bm25Index build(const std::vector<VerifiedClaim>& claims, Bm25Params params = {});

  std::size_t doc_count() const { return claim_ids_.size(); }
  const Bm25Params& params() const { return params_; }
  const std::string& claim_id(std::size_t doc) const { return claim_ids_[doc]; }
  const std::vector<std::string>& claim_ids() const { return claim_ids_; }

  // Throws ValidationError for an unknown claim id.
  std::size_t doc_of(std::string_view claim_id) const;

  std::uint32_t length(Field field, std::size_t doc) const { return fields_[idx(field)].lengths[doc]; }
  double average_length(Field field) const { return fields_[idx(field)].avg_length; }
  std::size_t document_frequency(Field field, std::string_view term) const;
  double idf(std::size_t df) const;
  const std::vector<Posting>* postings(Field field, std::string_view term) const;

  double score(const TokenStream& query, Field field, std::string_view claim_id) const;
  double score_doc(const TokenStream& query, Field field, std::size_t doc) const;

  // Descending score, ties by ascending claim_id; claims scoring 0 are left out.
  std::vector<ScoredClaim> retrieve_topk(const TokenStream& query, Field field, std::size_t k) const;

  // Versioned little-endian binary snapshot.
  std::string serialize() const;
  static Bm25Index deserialize(std::string_view bytes);
  void save(const std::filesystem::path& path) const;
  static Bm25Index load(const std::filesystem::path& path);

  bool operator==(const Bm25Index& other) const;

 private:
  struct FieldIndex {
    std::unordered_map<std::string, std::vector<Posting>> postings;
    std::vector<std::uint32_t> lengths;
    double avg_length = 0.0;
  };

  static std::size_t idx(Field f) { return static_cast<std::size_t>(f); }
  double term_weight(double idf, std::uint32_t tf, std::uint32_t len, double avg_len) const;

  Bm25Params params_;
  std::vector<std::string> claim_ids_;
  std::unordered_map<std::string, std::size_t> doc_by_id_;
  std::array<FieldIndex, 3> fields_;
};

inline Bm25Index build_index(const std::vector<VerifiedClaim>& claims, Bm25Params params = {}) {
  return Bm25Index::build(claims, params);
}

}  // namespace factrank
