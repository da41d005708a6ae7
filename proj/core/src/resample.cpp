#include "driftqa/resample.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "driftqa/error.hpp"
#include "driftqa/random.hpp"

namespace driftqa {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

Matrix concat_vectors(const Matrix& features, const ScoredDataset& scored) {
  if (features.rows() != scored.size()) {
    throw Error(ErrorKind::Shape, "feature rows and scored rows differ");
  }
  const std::size_t d = features.cols();
  const std::size_t c = scored.class_probs.cols();
  Matrix out(features.rows(), d + c);
  for (std::size_t r = 0; r < features.rows(); ++r) {
    auto dst = out.row(r);
    auto f = features.row(r);
    auto p = scored.class_probs.row(r);
    std::copy(f.begin(), f.end(), dst.begin());
    std::copy(p.begin(), p.end(), dst.begin() + static_cast<std::ptrdiff_t>(d));
  }
  return out;
}

Codebook::Codebook(Matrix centroids) : centroids_(std::move(centroids)) {
  if (centroids_.rows() < 1) throw Error(ErrorKind::Domain, "codebook needs at least one centroid");
}

std::size_t Codebook::assign(std::span<const double> v) const {
  if (v.size() != centroids_.cols()) {
    throw Error(ErrorKind::Shape, "vector width " + std::to_string(v.size()) +
                                      " does not match codebook width " +
                                      std::to_string(centroids_.cols()));
  }
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < centroids_.rows(); ++k) {
    const double d = squared_distance(v, centroids_.row(k));
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

std::vector<std::size_t> Codebook::assign_all(const Matrix& vectors) const {
  std::vector<std::size_t> out(vectors.rows());
  for (std::size_t r = 0; r < vectors.rows(); ++r) out[r] = assign(vectors.row(r));
  return out;
}

double Codebook::distortion(const Matrix& vectors) const {
  if (vectors.rows() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t r = 0; r < vectors.rows(); ++r) {
    s += squared_distance(vectors.row(r), centroids_.row(assign(vectors.row(r))));
  }
  return s / static_cast<double>(vectors.rows());
}

nlohmann::json Codebook::to_json() const {
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < centroids_.rows(); ++k) {
    auto r = centroids_.row(k);
    rows.emplace_back(r.begin(), r.end());
  }
  return {{"k", centroids_.rows()}, {"dim", centroids_.cols()}, {"centroids", rows}};
}

Codebook Codebook::from_json(const nlohmann::json& j) {
  try {
    Matrix m;
    for (const auto& r : j.at("centroids").get<std::vector<std::vector<double>>>()) m.append_row(r);
    return Codebook(std::move(m));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("codebook json: ") + e.what());
  }
}

Codebook kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, const KMeansOptions& options) {
  const std::size_t n = points.rows();
  const std::size_t dim = points.cols();
  if (k < 1) throw Error(ErrorKind::Domain, "k-means needs k >= 1");
  if (k > n) {
    throw Error(ErrorKind::Capacity, "k-means asked for " + std::to_string(k) + " centroids from " +
                                         std::to_string(n) + " points");
  }

  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // k-means++: each new seed drawn with probability proportional to its
  // squared distance from the nearest seed chosen so far.
  Matrix centroids(k, dim);
  std::vector<bool> chosen(n, false);
  std::size_t first = static_cast<std::size_t>(unit(rng) * static_cast<double>(n));
  if (first >= n) first = n - 1;
  chosen[first] = true;
  std::copy(points.row(first).begin(), points.row(first).end(), centroids.row(0).begin());
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points.row(i), centroids.row(0));

  for (std::size_t c = 1; c < k; ++c) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        acc += d2[i];
        pick = i;
        if (acc > target) break;
      }
    }
    if (pick == n) {
      // Every remaining point coincides with a seed; take the first unused one.
      pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), false) - chosen.begin());
    }
    chosen[pick] = true;
    std::copy(points.row(pick).begin(), points.row(pick).end(), centroids.row(c).begin());
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(points.row(i), centroids.row(c)));
    }
  }

  Codebook book(centroids);
  std::vector<double> sums(k * dim);
  std::vector<std::size_t> counts(k);
  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t a = book.assign(points.row(i));
      ++counts[a];
      auto p = points.row(i);
      for (std::size_t j = 0; j < dim; ++j) sums[a * dim + j] += p[j];
    }
    double max_move = 0.0;
    Matrix next = book.centroids();
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its centroid
      for (std::size_t j = 0; j < dim; ++j) next(c, j) = sums[c * dim + j] / static_cast<double>(counts[c]);
      max_move = std::max(max_move, std::sqrt(squared_distance(next.row(c), book.centroids().row(c))));
    }
    book = Codebook(std::move(next));
    if (max_move < options.tolerance) break;
  }
  return book;
}

Codebook build_codebook(const Matrix& test_vectors, const Matrix& production_vectors,
                        std::size_t k, std::uint64_t seed) {
  if (test_vectors.rows() > 0 && production_vectors.rows() > 0 &&
      test_vectors.cols() != production_vectors.cols()) {
    throw Error(ErrorKind::Shape, "test and production vectors differ in width");
  }
  Matrix all = test_vectors;
  for (std::size_t r = 0; r < production_vectors.rows(); ++r) all.append_row(production_vectors.row(r));
  return kmeans(all, k, seed);
}

std::size_t default_codeword_count(std::size_t feature_dim, int class_count) {
  if (feature_dim > 100) return 256;
  return feature_dim + static_cast<std::size_t>(class_count);
}

std::vector<double> compute_weights(std::span<const std::size_t> test_codewords,
                                    std::span<const std::size_t> production_codewords,
                                    std::size_t k, double threshold) {
  if (test_codewords.empty() || production_codewords.empty()) {
    throw Error(ErrorKind::EmptyInput, "weights need nonempty test and production sets");
  }
  if (!(threshold >= 0.0)) throw Error(ErrorKind::Domain, "threshold must be nonnegative");
  std::vector<std::size_t> t(k, 0), p(k, 0);
  for (std::size_t c : test_codewords) {
    if (c >= k) throw Error(ErrorKind::Domain, "codeword index out of range");
    ++t[c];
  }
  for (std::size_t c : production_codewords) {
    if (c >= k) throw Error(ErrorKind::Domain, "codeword index out of range");
    ++p[c];
  }
  const double selection = static_cast<double>(test_codewords.size()) /
                           static_cast<double>(production_codewords.size());
  std::vector<double> w(test_codewords.size(), 0.0);
  for (std::size_t i = 0; i < test_codewords.size(); ++i) {
    const std::size_t c = test_codewords[i];
    if (p[c] == 0) continue;
    const double local = static_cast<double>(t[c]) / static_cast<double>(p[c]);
    const double wi = selection / local;
    w[i] = wi < threshold ? 0.0 : wi;
  }
  return w;
}

std::uint64_t WeightedTestSet::resampled_size() const noexcept {
  return std::accumulate(multiplicities.begin(), multiplicities.end(), std::uint64_t{0});
}

double WeightedTestSet::weighted_accuracy(std::span<const std::uint8_t> outcomes) const {
  if (outcomes.size() != multiplicities.size()) {
    throw Error(ErrorKind::Shape, "outcomes and multiplicities differ in length");
  }
  std::uint64_t hits = 0, total = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    hits += multiplicities[i] * outcomes[i];
    total += multiplicities[i];
  }
  if (total == 0) throw Error(ErrorKind::DegenerateResample, "resampled test set is empty");
  return static_cast<double>(hits) / static_cast<double>(total);
}

WeightedTestSet upsample(std::span<const double> weights, std::span<const SampleId> ids,
                         std::span<const std::size_t> codewords) {
  if (!ids.empty() && ids.size() != weights.size()) throw Error(ErrorKind::Shape, "ids and weights differ in length");
  if (!codewords.empty() && codewords.size() != weights.size()) {
    throw Error(ErrorKind::Shape, "codewords and weights differ in length");
  }
  double w_min = std::numeric_limits<double>::infinity();
  for (double w : weights) {
    if (w < 0.0) throw Error(ErrorKind::Domain, "negative weight");
    if (w > 0.0) w_min = std::min(w_min, w);
  }
  if (!std::isfinite(w_min)) {
    throw Error(ErrorKind::DegenerateResample, "no positive weight; nothing to resample");
  }
  WeightedTestSet out;
  out.ids.assign(ids.begin(), ids.end());
  out.codewords.assign(codewords.begin(), codewords.end());
  out.raw_weights.assign(weights.begin(), weights.end());
  out.multiplicities.resize(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] == 0.0) continue;
    out.multiplicities[i] = static_cast<std::uint64_t>(std::floor(weights[i] / w_min + 0.5));
  }
  return out;
}

}  // namespace driftqa
