#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "driftqa/basemodel.hpp"

namespace driftqa {

struct ConfidenceBin {
  double lower = 0.0;
  double upper = 0.0;
  double accuracy = 0.0;  // mean outcome; 0 when empty
  double sigma = 0.0;     // population std of outcomes; 0 when empty
  std::uint64_t count = 0;

  bool empty() const noexcept { return count == 0; }
};

struct InstancePrediction {
  double accuracy;
  double sigma;
};

/**
 * Confidence-binning performance predictor.
 *
 * Confidences are assigned to M equal-width bins over [0, 1]. Bins are
 * half-open [l, u) except the last, which is closed at 1. Each bin keeps the
 * mean and population standard deviation of the base model's outcomes. A
 * query landing in an empty bin falls back to the global training accuracy
 * with sigma 0.5, the largest spread a Bernoulli outcome can have.
 */
class BinnedPredictor {
 public:
  static constexpr double kEmptyBinSigma = 0.5;

  // `multiplicities`, when non-empty, gives each sample an integer weight;
  // the result is identical to fitting on the replicated multiset.
  static BinnedPredictor fit(std::span<const double> confidences,
                             std::span<const std::uint8_t> outcomes, std::size_t bin_count,
                             std::span<const std::uint64_t> multiplicities = {});

  std::size_t bin_count() const noexcept { return bins_.size(); }
  const std::vector<ConfidenceBin>& bins() const noexcept { return bins_; }
  double global_accuracy() const noexcept { return global_accuracy_; }
  std::uint64_t sample_count() const noexcept { return sample_count_; }

  std::size_t bin_of(double confidence) const;
  InstancePrediction predict(double confidence) const;
  // Mean predicted accuracy over a batch of confidences.
  double predict_batch(std::span<const double> confidences) const;
  double predict_batch(const ScoredDataset& scored) const { return predict_batch(scored.confidence); }

  nlohmann::json to_json() const;
  static BinnedPredictor from_json(const nlohmann::json& j);

 private:
  std::vector<ConfidenceBin> bins_;
  double global_accuracy_ = 0.0;
  std::uint64_t sample_count_ = 0;
};

// Lower edge of bin `i` out of `bin_count`; shared by fit and lookup.
double bin_lower_edge(std::size_t i, std::size_t bin_count) noexcept;

}  // namespace driftqa
