#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "driftqa/basemodel.hpp"
#include "driftqa/matrix.hpp"

namespace driftqa {

// Rows of standardized features followed by the base model's class probabilities.
Matrix concat_vectors(const Matrix& features, const ScoredDataset& scored);

/// Vector-quantization codebook over the concatenated feature/probability space.
class Codebook {
 public:
  Codebook() = default;
  explicit Codebook(Matrix centroids);

  std::size_t size() const noexcept { return centroids_.rows(); }
  std::size_t dim() const noexcept { return centroids_.cols(); }
  const Matrix& centroids() const noexcept { return centroids_; }

  // Nearest centroid by Euclidean distance; ties go to the lowest index.
  std::size_t assign(std::span<const double> v) const;
  std::vector<std::size_t> assign_all(const Matrix& vectors) const;
  // Mean squared distance of each row to its codeword.
  double distortion(const Matrix& vectors) const;

  nlohmann::json to_json() const;
  static Codebook from_json(const nlohmann::json& j);

 private:
  Matrix centroids_;
};

struct KMeansOptions {
  std::size_t max_iterations = 100;
  double tolerance = 1e-6;  // stop once no centroid moves farther than this
};

// k-means++ seeding followed by Lloyd iterations. Deterministic given seed.
Codebook kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                const KMeansOptions& options = {});

// Codebook fitted on the union of test and production vectors.
Codebook build_codebook(const Matrix& test_vectors, const Matrix& production_vectors,
                        std::size_t k, std::uint64_t seed);

// Default codeword count: the data-vector width for tabular data, 256 when
// the feature count exceeds 100 (image-like data).
std::size_t default_codeword_count(std::size_t feature_dim, int class_count);

/**
 * Importance weights for test members:
 *   w_i = (|T| / |P|) / (t_c / p_c)
 * where c is the member's codeword and t_c, p_c count codeword occurrences in
 * the test and production sets. Codewords absent from production give 0, and
 * any weight below `threshold` is reset to 0.
 */
std::vector<double> compute_weights(std::span<const std::size_t> test_codewords,
                                    std::span<const std::size_t> production_codewords,
                                    std::size_t k, double threshold);

struct WeightedTestSet {
  std::vector<SampleId> ids;
  std::vector<double> raw_weights;
  // round(w / w_min), half-up; 0 marks a deleted member.
  std::vector<std::uint64_t> multiplicities;
  std::vector<std::size_t> codewords;

  std::uint64_t resampled_size() const noexcept;
  // Accuracy of the upsampled multiset: sum(m_i o_i) / sum(m_i).
  double weighted_accuracy(std::span<const std::uint8_t> outcomes) const;
};

// Throws Error{DegenerateResample} when no weight is positive.
WeightedTestSet upsample(std::span<const double> weights, std::span<const SampleId> ids = {},
                         std::span<const std::size_t> codewords = {});

}  // namespace driftqa
