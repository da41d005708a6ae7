#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "driftqa/data.hpp"
#include "driftqa/matrix.hpp"

namespace driftqa {

// A classifier seen only through its class-probability output.
class BlackboxModel {
 public:
  virtual ~BlackboxModel() = default;

  virtual std::size_t feature_dim() const = 0;
  virtual int class_count() const = 0;
  // Probability vector of length class_count(); nonnegative, sums to 1.
  virtual std::vector<double> score(std::span<const double> features) const = 0;
};

/**
 * Per-row base-model output.
 *
 * `confidence[i]` is the top class probability and `predicted[i]` its class
 * (lowest index on ties). `outcome` is present only once labels have been
 * revealed: 1 when the prediction was correct, 0 otherwise.
 */
struct ScoredDataset {
  std::vector<SampleId> ids;
  Matrix class_probs;
  std::vector<int> predicted;
  std::vector<double> confidence;
  std::optional<std::vector<std::uint8_t>> outcome;

  std::size_t size() const noexcept { return ids.size(); }
  int class_count() const noexcept { return static_cast<int>(class_probs.cols()); }

  ScoredDataset subset(std::span<const std::size_t> rows) const;
  // Row index per id.
  std::unordered_map<SampleId, std::size_t> index() const;
};

// Builds predicted/confidence from a probability matrix. Throws Error{Domain}
// when a row is not a probability vector within 1e-6.
ScoredDataset make_scored(std::vector<SampleId> ids, Matrix class_probs);

void attach_outcomes(ScoredDataset& scored, std::span<const int> labels);

// Fraction of correct predictions; requires outcomes.
double accuracy(const ScoredDataset& scored);

class LinearSoftmaxModel final : public BlackboxModel {
 public:
  LinearSoftmaxModel(Matrix weights, std::vector<double> bias,
                     std::optional<Standardizer> standardizer = std::nullopt);

  std::size_t feature_dim() const override { return weights_.cols(); }
  int class_count() const override { return static_cast<int>(weights_.rows()); }
  std::vector<double> score(std::span<const double> features) const override;

  const Matrix& weights() const noexcept { return weights_; }
  const std::vector<double>& bias() const noexcept { return bias_; }
  // Transform that maps raw inputs into the space the model was trained in.
  const std::optional<Standardizer>& standardizer() const noexcept { return standardizer_; }

  nlohmann::json to_json() const;
  static LinearSoftmaxModel from_json(const nlohmann::json& j);

 private:
  Matrix weights_;  // class_count x feature_dim
  std::vector<double> bias_;
  std::optional<Standardizer> standardizer_;
};

struct TrainOptions {
  double learning_rate = 0.5;
  int epochs = 300;
  std::uint64_t seed = 0;
};

// Multinomial logistic regression fitted by full-batch gradient descent on
// mean cross-entropy.
LinearSoftmaxModel train_builtin(const Dataset& train, const TrainOptions& options,
                                 std::optional<Standardizer> standardizer = std::nullopt);

ScoredDataset score_features(const BlackboxModel& model, const Matrix& features,
                             std::vector<SampleId> ids);
ScoredDataset score_batch(const BlackboxModel& model, const Dataset& ds, bool reveal_labels);

// Reads `id,prob_0,...,prob_{C-1}[,label]`. Rows are renormalized to sum to 1.
ScoredDataset ingest_scores(const std::filesystem::path& path);
void write_scores(const std::filesystem::path& path, const ScoredDataset& scored,
                  std::span<const int> labels = {});

}  // namespace driftqa
