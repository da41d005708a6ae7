#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include <json.hpp>

#include "driftqa/matrix.hpp"

namespace driftqa {

using SampleId = std::int64_t;

/**
 * Feature matrix, class labels and stable ids.
 *
 * Rows are aligned across the three members. Categorical columns carry their
 * sorted vocabulary in `vocabularies[col]`; numeric columns have an empty one.
 */
class Dataset {
 public:
  Dataset() = default;

  // Validates shape, label range and id uniqueness; throws Error otherwise.
  Dataset(Matrix features, std::vector<int> labels, std::vector<SampleId> ids, int class_count,
          std::vector<std::string> feature_names = {},
          std::vector<std::vector<std::string>> vocabularies = {});

  const Matrix& features() const noexcept { return features_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const std::vector<SampleId>& ids() const noexcept { return ids_; }
  int class_count() const noexcept { return class_count_; }
  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return features_.cols(); }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  const std::vector<std::vector<std::string>>& vocabularies() const noexcept {
    return vocabularies_;
  }

  std::optional<std::size_t> column_index(const std::string& name) const;

  Dataset subset(std::span<const std::size_t> rows) const;
  Dataset with_features(Matrix features) const;

 private:
  Matrix features_;
  std::vector<int> labels_;
  std::vector<SampleId> ids_;
  int class_count_ = 0;
  std::vector<std::string> feature_names_;
  std::vector<std::vector<std::string>> vocabularies_;
};

/**
 * A dataset whose labels are stored but hidden.
 *
 * Reading a label is an explicit, counted action so tests can prove which
 * partitions were looked at and how often.
 */
class MaskedDataset {
 public:
  MaskedDataset() = default;
  explicit MaskedDataset(Dataset data);
  MaskedDataset(const MaskedDataset& other);
  MaskedDataset& operator=(const MaskedDataset& other);

  const Matrix& features() const noexcept { return data_.features(); }
  const std::vector<SampleId>& ids() const noexcept { return data_.ids(); }
  std::size_t size() const noexcept { return data_.size(); }
  int class_count() const noexcept { return data_.class_count(); }

  std::optional<std::size_t> row_of(SampleId id) const;

  int reveal(std::size_t row) const;
  // One full pass over every label.
  const std::vector<int>& reveal_all() const;

  std::size_t single_reads() const noexcept { return single_reads_.load(); }
  std::size_t full_passes() const noexcept { return full_passes_.load(); }

  // Bypasses the mask; for persistence and tests only.
  const Dataset& unmasked() const noexcept { return data_; }

 private:
  Dataset data_;
  std::unordered_map<SampleId, std::size_t> row_index_;
  mutable std::atomic<std::size_t> single_reads_{0};
  mutable std::atomic<std::size_t> full_passes_{0};
};

struct ThresholdPredicate {
  double threshold;
  friend bool operator==(const ThresholdPredicate&, const ThresholdPredicate&) = default;
};
struct EqualityPredicate {
  double value;
  friend bool operator==(const EqualityPredicate&, const EqualityPredicate&) = default;
};

// Bin A holds rows where the predicate is true: `x[feature] > t` or `x[feature] == v`.
struct SplitCondition {
  std::size_t feature_index = 0;
  std::variant<ThresholdPredicate, EqualityPredicate> predicate = ThresholdPredicate{0.0};

  bool in_bin_a(std::span<const double> row) const;

  friend bool operator==(const SplitCondition&, const SplitCondition&) = default;
};

// Parses "name>value" or "name=value" against the dataset's column names and
// categorical vocabularies.
SplitCondition parse_condition(const Dataset& ds, const std::string& text);

inline constexpr int kAllowedProportions[] = {10, 20, 30, 40, 60, 70, 80, 90};
bool is_allowed_proportion(int k) noexcept;

struct SplitSizes {
  std::size_t train = 0;
  std::size_t test = 0;
  std::size_t prod = 0;
};

// Per-column z-score parameters.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Matrix& x);
  Matrix apply(const Matrix& x) const;
};

struct BiasedSplit {
  Dataset train;
  Dataset test;
  MaskedDataset pool;
  MaskedDataset production_eval;
  int proportion_k = 0;
  std::uint64_t seed = 0;
  SplitCondition condition;
  SplitSizes sizes;
  Standardizer standardizer;
};

struct CsvOptions {
  std::string label_column;
  std::optional<std::string> id_column;  // row index when absent
  std::set<std::string> categorical_columns;
};

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options);
void write_csv(const std::filesystem::path& path, const Dataset& ds,
               const std::string& label_column = "label");

/**
 * Draws train and test k% from bin A and (100-k)% from bin B, production the
 * other way around, then carves a pool of |test| samples out of production.
 *
 * Bin-A counts are floored, bin B takes the remainder. Features of all four
 * partitions are z-scored with statistics of train, test and production.
 */
BiasedSplit biased_split(const Dataset& ds, const SplitCondition& cond, int k,
                         const SplitSizes& sizes, std::uint64_t seed);

struct PoolCarve {
  Dataset pool;
  Dataset production_eval;
};

PoolCarve carve_pool(const Dataset& production, std::size_t pool_size, std::uint64_t seed);

// Ids per partition plus everything needed to rebuild the split bit-exactly.
struct SplitManifest {
  int proportion_k = 0;
  std::uint64_t seed = 0;
  SplitCondition condition;
  SplitSizes sizes;
  std::vector<SampleId> train_ids;
  std::vector<SampleId> test_ids;
  std::vector<SampleId> pool_ids;
  std::vector<SampleId> production_eval_ids;
};

SplitManifest make_manifest(const BiasedSplit& split);
BiasedSplit replay_manifest(const Dataset& ds, const SplitManifest& manifest);

nlohmann::json to_json(const SplitManifest& m);
SplitManifest manifest_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SplitCondition& c);
SplitCondition condition_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Standardizer& s);
Standardizer standardizer_from_json(const nlohmann::json& j);

}  // namespace driftqa
