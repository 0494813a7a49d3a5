#include "factrank/bm25.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "factrank/errors.hpp"

namespace factrank {

namespace {

constexpr char kMagic[8] = {'F', 'R', 'B', 'M', '2', '5', '\n', '\0'};
constexpr std::uint32_t kSnapshotVersion = 1;

const std::string& field_text(const VerifiedClaim& c, Field f) {
  switch (f) {
    case Field::kStatement: return c.statement;
    case Field::kTitle: return c.title;
    case Field::kBody: break;
  }
  return c.body;
}

class ByteWriter {
 public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    out_.append(reinterpret_cast<const char*>(raw), sizeof(T));
  }
  void put_string(std::string_view s) {
    put(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  void put_raw(const char* p, std::size_t n) { out_.append(p, n); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view in) : in_(in) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, in_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, raw, sizeof(T));
    return v;
  }
  std::string get_string() {
    auto n = get<std::uint32_t>();
    need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::string_view get_raw(std::size_t n) {
    need(n);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw ValidationError("truncated BM25 snapshot");
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace

Field parse_field(std::string_view text) {
  if (text == "statement") return Field::kStatement;
  if (text == "title") return Field::kTitle;
  if (text == "body") return Field::kBody;
  throw ValidationError("unknown field '" + std::string(text) + "'");
}

std::string_view to_string(Field field) {
  switch (field) {
    case Field::kStatement: return "statement";
    case Field::kTitle: return "title";
    case Field::kBody: break;
  }
  return "body";
}

Bm25Index Bm25Index::build(const std::vector<VerifiedClaim>& claims, Bm25Params params) {
  if (claims.empty()) throw ValidationError("cannot index an empty claim list");
  Bm25Index index;
  index.params_ = params;
  index.claim_ids_.reserve(claims.size());
  for (std::size_t d = 0; d < claims.size(); ++d) {
    index.claim_ids_.push_back(claims[d].claim_id);
    if (!index.doc_by_id_.emplace(claims[d].claim_id, d).second)
      throw ValidationError("duplicate claim_id '" + claims[d].claim_id + "'");
  }
  for (Field f : kAllFields) {
    FieldIndex& fi = index.fields_[idx(f)];
    fi.lengths.resize(claims.size());
    std::uint64_t total = 0;
    for (std::size_t d = 0; d < claims.size(); ++d) {
      auto tokens = tokenize(field_text(claims[d], f));
      fi.lengths[d] = static_cast<std::uint32_t>(tokens.size());
      total += tokens.size();
      std::unordered_map<std::string, std::uint32_t> tf;
      for (auto& t : tokens) ++tf[std::move(t)];
      for (auto& [term, count] : tf)
        fi.postings[term].push_back({static_cast<std::uint32_t>(d), count});
    }
    fi.avg_length = static_cast<double>(total) / static_cast<double>(claims.size());
  }
  return index;
}

std::size_t Bm25Index::doc_of(std::string_view claim_id) const {
  auto it = doc_by_id_.find(std::string(claim_id));
  if (it == doc_by_id_.end()) throw ValidationError("claim '" + std::string(claim_id) + "' is not indexed");
  return it->second;
}

const std::vector<Bm25Index::Posting>* Bm25Index::postings(Field field, std::string_view term) const {
  const auto& p = fields_[idx(field)].postings;
  auto it = p.find(std::string(term));
  return it == p.end() ? nullptr : &it->second;
}

std::size_t Bm25Index::document_frequency(Field field, std::string_view term) const {
  const auto* p = postings(field, term);
  return p == nullptr ? 0 : p->size();
}

double Bm25Index::idf(std::size_t df) const {
  const double n = static_cast<double>(doc_count());
  const double d = static_cast<double>(df);
  return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

double Bm25Index::term_weight(double idf_value, std::uint32_t tf, std::uint32_t len,
                              double avg_len) const {
  const double ratio = avg_len > 0.0 ? static_cast<double>(len) / avg_len : 0.0;
  const double t = static_cast<double>(tf);
  return idf_value * t * (params_.k1 + 1.0) / (t + params_.k1 * (1.0 - params_.b + params_.b * ratio));
}

double Bm25Index::score(const TokenStream& query, Field field, std::string_view claim_id) const {
  return score_doc(query, field, doc_of(claim_id));
}

double Bm25Index::score_doc(const TokenStream& query, Field field, std::size_t doc) const {
  const FieldIndex& fi = fields_[idx(field)];
  double total = 0.0;
  for (const auto& term : query) {
    auto it = fi.postings.find(term);
    if (it == fi.postings.end()) continue;
    const auto& plist = it->second;
    auto pos = std::lower_bound(plist.begin(), plist.end(), doc,
                                [](const Posting& p, std::size_t d) { return p.doc < d; });
    if (pos == plist.end() || pos->doc != doc) continue;
    total += term_weight(idf(plist.size()), pos->tf, fi.lengths[doc], fi.avg_length);
  }
  return total;
}

std::vector<ScoredClaim> Bm25Index::retrieve_topk(const TokenStream& query, Field field,
                                                  std::size_t k) const {
  if (k == 0) throw ValidationError("retrieve_topk needs k >= 1");
  const FieldIndex& fi = fields_[idx(field)];
  // Accumulates in query-token order so totals match score_doc bit for bit.
  std::unordered_map<std::uint32_t, double> acc;
  for (const auto& term : query) {
    auto it = fi.postings.find(term);
    if (it == fi.postings.end()) continue;
    const double w_idf = idf(it->second.size());
    for (const Posting& p : it->second)
      acc[p.doc] += term_weight(w_idf, p.tf, fi.lengths[p.doc], fi.avg_length);
  }
  std::vector<ScoredClaim> hits;
  hits.reserve(acc.size());
  for (const auto& [doc, s] : acc)
    if (s > 0.0) hits.push_back({claim_ids_[doc], s});
  auto better = [](const ScoredClaim& a, const ScoredClaim& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.claim_id < b.claim_id;
  };
  const std::size_t keep = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(), better);
  hits.resize(keep);
  return hits;
}

std::string Bm25Index::serialize() const {
  ByteWriter w;
  w.put_raw(kMagic, sizeof(kMagic));
  w.put(kSnapshotVersion);
  w.put(params_.k1);
  w.put(params_.b);
  w.put(static_cast<std::uint64_t>(claim_ids_.size()));
  for (const auto& id : claim_ids_) w.put_string(id);
  for (const FieldIndex& fi : fields_) {
    w.put(fi.avg_length);
    for (auto len : fi.lengths) w.put(len);
    std::vector<const std::string*> terms;
    terms.reserve(fi.postings.size());
    for (const auto& [term, _] : fi.postings) terms.push_back(&term);
    std::sort(terms.begin(), terms.end(), [](auto* a, auto* b) { return *a < *b; });
    w.put(static_cast<std::uint64_t>(terms.size()));
    for (const auto* term : terms) {
      const auto& plist = fi.postings.at(*term);
      w.put_string(*term);
      w.put(static_cast<std::uint64_t>(plist.size()));
      for (const Posting& p : plist) {
        w.put(p.doc);
        w.put(p.tf);
      }
    }
  }
  return w.take();
}

Bm25Index Bm25Index::deserialize(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.get_raw(sizeof(kMagic)) != std::string_view(kMagic, sizeof(kMagic)))
    throw ValidationError("not a BM25 snapshot");
  const auto version = r.get<std::uint32_t>();
  if (version != kSnapshotVersion)
    throw ValidationError("unsupported BM25 snapshot version " + std::to_string(version));
  Bm25Index index;
  index.params_.k1 = r.get<double>();
  index.params_.b = r.get<double>();
  const auto n = r.get<std::uint64_t>();
  if (n == 0) throw ValidationError("BM25 snapshot has no documents");
  for (std::uint64_t d = 0; d < n; ++d) {
    index.claim_ids_.push_back(r.get_string());
    if (!index.doc_by_id_.emplace(index.claim_ids_.back(), d).second)
      throw ValidationError("duplicate claim id in BM25 snapshot");
  }
  for (FieldIndex& fi : index.fields_) {
    fi.avg_length = r.get<double>();
    fi.lengths.resize(n);
    std::uint64_t total = 0;
    for (auto& len : fi.lengths) {
      len = r.get<std::uint32_t>();
      total += len;
    }
    if (fi.avg_length != static_cast<double>(total) / static_cast<double>(n))
      throw ValidationError("BM25 snapshot average length does not match stored lengths");
    const auto terms = r.get<std::uint64_t>();
    for (std::uint64_t t = 0; t < terms; ++t) {
      std::string term = r.get_string();
      const auto count = r.get<std::uint64_t>();
      std::vector<Posting> plist;
      plist.reserve(count);
      for (std::uint64_t i = 0; i < count; ++i) {
        Posting p;
        p.doc = r.get<std::uint32_t>();
        p.tf = r.get<std::uint32_t>();
        if (p.doc >= n || (!plist.empty() && p.doc <= plist.back().doc))
          throw ValidationError("BM25 snapshot postings out of order");
        plist.push_back(p);
      }
      fi.postings.emplace(std::move(term), std::move(plist));
    }
  }
  if (!r.done()) throw ValidationError("trailing bytes in BM25 snapshot");
  return index;
}

void Bm25Index::save(const std::filesystem::path& path) const {
  const std::string bytes = serialize();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

Bm25Index Bm25Index::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

bool Bm25Index::operator==(const Bm25Index& other) const {
  if (!(params_ == other.params_) || claim_ids_ != other.claim_ids_) return false;
  for (std::size_t f = 0; f < fields_.size(); ++f) {
    const auto& a = fields_[f];
    const auto& b = other.fields_[f];
    if (a.avg_length != b.avg_length || a.lengths != b.lengths || a.postings != b.postings) return false;
  }
  return true;
}

}  // namespace factrank
