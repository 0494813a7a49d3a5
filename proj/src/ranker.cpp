#include "factrank/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <set>

#include "factrank/errors.hpp"
#include "jsonl.hpp"

namespace factrank {

using detail::json;

namespace {

constexpr int kMaxHalvings = 60;

void require_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) throw ValidationError("non-finite feature value");
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Row-major matrix of normalized pair differences.
struct PairDiffs {
  std::size_t dims = 0;
  std::vector<double> data;

  std::size_t rows() const { return dims == 0 ? 0 : data.size() / dims; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * dims, dims}; }
};

PairDiffs normalized_diffs(std::span<const TrainPair> pairs, const Normalization& norm) {
  PairDiffs d;
  d.dims = norm.stds.size();
  d.data.resize(pairs.size() * d.dims);
  for (std::size_t i = 0; i < pairs.size(); ++i)
    for (std::size_t j = 0; j < d.dims; ++j)
      d.data[i * d.dims + j] = (pairs[i].positive[j] - pairs[i].negative[j]) / norm.stds[j];
  return d;
}

double objective(const PairDiffs& diffs, std::span<const double> w, double c) {
  double hinge = 0.0;
  for (std::size_t i = 0; i < diffs.rows(); ++i) hinge += std::max(0.0, 1.0 - dot(w, diffs.row(i)));
  return 0.5 * dot(w, w) + c * hinge;
}

}  // namespace

Normalization compute_normalization(std::span<const std::span<const double>> vectors) {
  if (vectors.empty()) throw ValidationError("no training vectors");
  const std::size_t dims = vectors.front().size();
  Normalization n;
  n.means.assign(dims, 0.0);
  n.stds.assign(dims, 0.0);
  for (const auto& v : vectors) {
    if (v.size() != dims) throw ValidationError("training vectors differ in dimension");
    require_finite(v);
    for (std::size_t j = 0; j < dims; ++j) n.means[j] += v[j];
  }
  const double count = static_cast<double>(vectors.size());
  for (auto& m : n.means) m /= count;
  for (const auto& v : vectors)
    for (std::size_t j = 0; j < dims; ++j) n.stds[j] += (v[j] - n.means[j]) * (v[j] - n.means[j]);
  for (auto& s : n.stds) {
    s = std::sqrt(s / count);
    if (!(s > 1e-12)) s = 1.0;
  }
  return n;
}

std::vector<TrainPair> make_pairs(std::span<const LabeledTranscript> transcripts) {
  std::vector<TrainPair> pairs;
  for (const auto& t : transcripts) {
    if (t.vectors.size() != t.relevant.size())
      throw ValidationError("relevance labels do not match vectors for " + t.transcript_id);
    for (std::size_t p = 0; p < t.vectors.size(); ++p) {
      if (!t.relevant[p]) continue;
      for (std::size_t q = 0; q < t.vectors.size(); ++q)
        if (!t.relevant[q]) pairs.push_back({t.vectors[p], t.vectors[q], t.transcript_id});
    }
  }
  return pairs;
}

FitResult fit(std::span<const TrainPair> pairs, const Normalization& norm, const FitOptions& options) {
  if (pairs.empty()) throw ValidationError("no training pairs");
  if (!(options.c > 0.0)) throw ValidationError("C must be positive");
  const std::size_t dims = norm.stds.size();
  for (const auto& p : pairs) {
    if (p.positive.size() != dims || p.negative.size() != dims)
      throw ValidationError("training pair dimension mismatch: expected " + std::to_string(dims));
    require_finite(p.positive);
    require_finite(p.negative);
  }
  const PairDiffs diffs = normalized_diffs(pairs, norm);

  // margins[i] = w . d_i and slopes[i] = g . d_i let each trial step be
  // evaluated in O(pairs) without touching the difference matrix.
  const std::size_t rows = diffs.rows();
  std::vector<double> w(dims, 0.0);
  std::vector<double> grad(dims);
  std::vector<double> margins(rows, 0.0);
  std::vector<double> slopes(rows);
  double current = objective(diffs, w, options.c);
  FitResult result;
  result.losses.reserve(options.epochs);
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    for (std::size_t i = 0; i < rows; ++i) margins[i] = dot(w, diffs.row(i));
    std::copy(w.begin(), w.end(), grad.begin());
    for (std::size_t i = 0; i < rows; ++i) {
      if (margins[i] >= 1.0) continue;
      auto row = diffs.row(i);
      for (std::size_t j = 0; j < dims; ++j) grad[j] -= options.c * row[j];
    }
    for (std::size_t i = 0; i < rows; ++i) slopes[i] = dot(grad, diffs.row(i));
    const double ww = dot(w, w);
    const double wg = dot(w, grad);
    const double gg = dot(grad, grad);

    double step = 1.0 / (options.c * static_cast<double>(epoch));
    for (int h = 0; h <= kMaxHalvings; ++h, step *= 0.5) {
      double hinge = 0.0;
      for (std::size_t i = 0; i < rows; ++i) hinge += std::max(0.0, 1.0 - (margins[i] - step * slopes[i]));
      const double candidate = 0.5 * (ww - 2.0 * step * wg + step * step * gg) + options.c * hinge;
      if (candidate <= current) {
        for (std::size_t j = 0; j < dims; ++j) w[j] -= step * grad[j];
        current = candidate;
        break;
      }
    }
    result.losses.push_back(current);
  }

  RankModel& m = result.model;
  m.weights = std::move(w);
  m.normalization = norm;
  m.c = options.c;
  m.seed = options.seed;
  return result;
}

FitResult fit(std::span<const TrainPair> pairs, const FitOptions& options) {
  if (pairs.empty()) throw ValidationError("no training pairs");
  std::set<const double*> seen;
  std::vector<std::span<const double>> vectors;
  for (const auto& p : pairs)
    for (auto v : {p.positive, p.negative})
      if (seen.insert(v.data()).second) vectors.push_back(v);
  return fit(pairs, compute_normalization(vectors), options);
}

FitResult train(std::span<const LabeledTranscript> transcripts, const FitOptions& options) {
  std::vector<std::span<const double>> vectors;
  for (const auto& t : transcripts)
    for (const auto& v : t.vectors) vectors.emplace_back(v);
  const Normalization norm = compute_normalization(vectors);
  const auto pairs = make_pairs(transcripts);
  return fit(pairs, norm, options);
}

double ranking_loss(std::span<const TrainPair> pairs, const RankModel& model) {
  return objective(normalized_diffs(pairs, model.normalization), model.weights, model.c);
}

double score(const RankModel& model, std::span<const double> vector) {
  if (vector.size() != model.dims())
    throw ValidationError("vector has dimension " + std::to_string(vector.size()) + ", model expects " +
                          std::to_string(model.dims()));
  double s = 0.0;
  for (std::size_t j = 0; j < vector.size(); ++j)
    s += model.weights[j] * ((vector[j] - model.normalization.means[j]) / model.normalization.stds[j]);
  return s;
}

std::vector<double> raw_weights(const RankModel& model) {
  std::vector<double> out(model.dims());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = model.weights[j] / model.normalization.stds[j];
  return out;
}

RankingRun order_run(const std::string& transcript_id, std::span<const SentenceVector> doc_order,
                     std::span<const double> scores) {
  if (scores.size() != doc_order.size()) throw ValidationError("one score per sentence required");
  std::vector<std::size_t> order(doc_order.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  RankingRun run;
  run.transcript_id = transcript_id;
  run.entries.reserve(order.size());
  for (std::size_t i : order) run.entries.push_back({doc_order[i].sentence_id, scores[i], doc_order[i].evidence});
  return run;
}

RankingRun rank(const RankModel& model, const std::string& transcript_id,
                std::span<const SentenceVector> doc_order) {
  std::vector<double> scores;
  scores.reserve(doc_order.size());
  for (const auto& v : doc_order) scores.push_back(score(model, v.values));
  return order_run(transcript_id, doc_order, scores);
}

void save_model(const std::filesystem::path& path, const RankModel& model) {
  json obj = {{"version", kModelVersion},
              {"strategy", model.strategy},
              {"n", model.n_candidates},
              {"dims", model.dims()},
              {"weights", model.weights},
              {"means", model.normalization.means},
              {"stds", model.normalization.stds},
              {"C", model.c},
              {"seed", model.seed}};
  detail::AtomicWriter w(path);
  w.stream() << obj.dump(2) << '\n';
  w.commit();
}

RankModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  json obj;
  try {
    obj = json::parse(in);
    if (!obj.is_object()) throw ValidationError("model file is not a JSON object");
    const int version = obj.at("version").get<int>();
    if (version != kModelVersion)
      throw ValidationError("model version " + std::to_string(version) + " is not supported (expected " +
                            std::to_string(kModelVersion) + ")");
    RankModel m;
    m.strategy = obj.at("strategy").get<std::string>();
    m.n_candidates = obj.at("n").get<std::size_t>();
    m.weights = obj.at("weights").get<std::vector<double>>();
    m.normalization.means = obj.at("means").get<std::vector<double>>();
    m.normalization.stds = obj.at("stds").get<std::vector<double>>();
    m.c = obj.at("C").get<double>();
    m.seed = obj.at("seed").get<std::uint64_t>();
    const auto dims = obj.at("dims").get<std::size_t>();
    if (m.weights.size() != dims || m.normalization.means.size() != dims || m.normalization.stds.size() != dims)
      throw ValidationError("model arrays disagree with dims");
    require_finite(m.weights);
    for (double s : m.normalization.stds)
      if (!(s > 0.0)) throw ValidationError("model std must be positive");
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": invalid model file: " + e.what());
  }
}

}  // namespace factrank
