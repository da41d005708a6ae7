#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "driftqa/basemodel.hpp"
#include "driftqa/data.hpp"
#include "driftqa/metrics.hpp"
#include "driftqa/strategy.hpp"
#include "driftqa/synthetic.hpp"

namespace driftqa {

struct CsvSource {
  std::filesystem::path path;
  CsvOptions options;
};

struct BuiltinModel {
  double learning_rate = 0.5;
  int epochs = 300;
};

struct ExternalScores {
  std::filesystem::path path;
};

struct ExperimentConfig {
  std::string name = "synthetic";
  std::variant<SyntheticSpec, CsvSource> dataset = SyntheticSpec{};
  std::string split_condition = "x0>0";
  SplitSizes sizes{4000, 2000, 6000};
  std::vector<int> proportions{10, 20, 30, 40, 60, 70, 80, 90};
  std::vector<StrategyKind> strategies{std::begin(kAllStrategies), std::end(kAllStrategies)};
  std::size_t repetitions = 4;
  std::size_t iterations = 40;
  std::size_t bins = 10;
  std::optional<std::size_t> codewords;  // default_codeword_count() when unset
  double threshold = 0.1;
  std::uint64_t seed = 0;
  std::variant<BuiltinModel, ExternalScores> base_model = BuiltinModel{};
  std::size_t parallelism = 1;
  bool verbose_weights = false;

  // Throws Error{Domain} on an invalid grid.
  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& config);
// Relative paths inside the document resolve against `base_dir`.
ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

struct WeightTraceRow {
  std::size_t iteration;
  SampleId id;
  std::size_t codeword;
  double weight;
  std::uint64_t multiplicity;
};

struct IterationRecord {
  std::size_t iteration = 0;
  std::vector<SampleId> added;    // applied to reach this iteration
  std::vector<SampleId> deleted;
  std::size_t test_size = 0;
  std::uint64_t labels_added = 0;
  std::uint64_t resampled_size = 0;
  bool degenerate_resample = false;
  double estimates[4] = {};  // indexed by Method
  double errors[4] = {};
};

struct RunResult {
  double true_accuracy = 0.0;
  std::vector<IterationRecord> iterations;
  std::vector<WeightTraceRow> weight_trace;  // filled only when verbose
  std::size_t codeword_count = 0;

  ErrorCurve curve(Method m) const;
};

// Accuracy estimates at one evaluation point; exposed for tests.
double estimate(const RunResult& run, std::size_t iteration, Method m);

struct RunOptions {
  std::size_t iterations = 40;
  std::size_t bins = 10;
  std::optional<std::size_t> codewords;
  double threshold = 0.1;
  bool verbose_weights = false;
  std::variant<BuiltinModel, ExternalScores> base_model = BuiltinModel{};
};

// The builtin base model for a split; its seed derives from the split seed so
// every strategy run on the same split sees the same model.
LinearSoftmaxModel train_split_model(const BiasedSplit& split, const BuiltinModel& options);

// Cached external scores: loaded once and shared read-only between cells.
using ScoreTable = std::shared_ptr<const ScoredDataset>;

/**
 * One split, one strategy. Scores every partition once, freezes a codebook
 * built from the initial test set and the whole unlabeled batch, then for
 * iterations 0..I evaluates the four estimators against the true
 * production accuracy before taking a strategy step.
 */
RunResult run_single(const BiasedSplit& split, StrategyKind kind, const RunOptions& options,
                     std::uint64_t seed, const ScoreTable& external = nullptr);

// One row group of curves.csv: a method's rep-averaged curve for one cell.
struct CurveRecord {
  std::string experiment_id;
  int split_k = 0;
  StrategyKind strategy = StrategyKind::AddOnlyRandom;
  Method method = Method::TestSet;
  CurveStats stats;
};

struct CellResult {
  int split_k = 0;
  StrategyKind strategy = StrategyKind::AddOnlyRandom;
  std::size_t repetition = 0;
  std::uint64_t split_seed = 0;
  std::uint64_t seed = 0;
  RunResult run;
};

struct ResultSet {
  ExperimentConfig config;
  std::vector<CellResult> cells;
  std::vector<CurveRecord> curves;
  std::vector<SplitManifest> splits;  // one per (proportion, repetition)
  nlohmann::json summary;
};

std::uint64_t split_seed_for(std::uint64_t master, int k, std::size_t repetition);
std::uint64_t cell_seed_for(std::uint64_t master, int k, StrategyKind kind, std::size_t repetition);

Dataset load_dataset(const ExperimentConfig& config);

ResultSet run_experiment(const ExperimentConfig& config);

inline constexpr double kDefaultTolerances[] = {3.0, 6.0, 9.0};
inline const std::set<int> kModerateProportions{30, 40, 60, 70};
inline const std::set<int> kExtremeProportions{10, 20, 80, 90};

// AUCs, per-experiment ranks, strategy/group averages and the effort-saved
// table. Depends only on the curve records.
nlohmann::json summarize(const std::vector<CurveRecord>& curves, std::span<const double> tolerances);

void write_curves_csv(const std::filesystem::path& path, const std::vector<CurveRecord>& curves);
std::vector<CurveRecord> read_curves_csv(const std::filesystem::path& path);

// manifest.json, curves.csv, summary.json, events/<cell>.jsonl, splits/.
void write_results(const std::filesystem::path& dir, const ResultSet& results);

std::string cell_name(int k, StrategyKind kind, std::size_t repetition);

}  // namespace driftqa
