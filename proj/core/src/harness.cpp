#include "driftqa/harness.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "driftqa/csv.hpp"
#include "driftqa/error.hpp"
#include "driftqa/predictor.hpp"
#include "driftqa/random.hpp"
#include "driftqa/resample.hpp"

namespace driftqa {

namespace {

constexpr std::uint64_t kModelTag = 0x6d6f64656cULL;
constexpr std::uint64_t kCodebookTag = 0x636f6465ULL;
constexpr std::uint64_t kSplitTag = 0x73706c6974ULL;
constexpr std::uint64_t kAddTag = 1;
constexpr std::uint64_t kDeleteTag = 2;

std::size_t method_index(Method m) { return static_cast<std::size_t>(m); }

ScoredDataset lookup_scores(const ScoredDataset& table,
                            const std::unordered_map<SampleId, std::size_t>& index,
                            std::span<const SampleId> ids) {
  std::vector<std::size_t> rows;
  rows.reserve(ids.size());
  for (SampleId id : ids) {
    auto it = index.find(id);
    if (it == index.end()) {
      throw Error(ErrorKind::Consistency, "external score file has no row for id " + std::to_string(id));
    }
    rows.push_back(it->second);
  }
  ScoredDataset out = table.subset(rows);
  out.outcome.reset();
  return out;
}

// Rows of `b` appended to `a`; outcomes dropped.
ScoredDataset concat_scored(const ScoredDataset& a, const ScoredDataset& b) {
  ScoredDataset out;
  out.ids = a.ids;
  out.ids.insert(out.ids.end(), b.ids.begin(), b.ids.end());
  out.class_probs = a.class_probs;
  for (std::size_t r = 0; r < b.size(); ++r) out.class_probs.append_row(b.class_probs.row(r));
  out.predicted = a.predicted;
  out.predicted.insert(out.predicted.end(), b.predicted.begin(), b.predicted.end());
  out.confidence = a.confidence;
  out.confidence.insert(out.confidence.end(), b.confidence.begin(), b.confidence.end());
  return out;
}

Matrix stack(const Matrix& a, const Matrix& b) {
  Matrix out = a;
  for (std::size_t r = 0; r < b.rows(); ++r) out.append_row(b.row(r));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

void ExperimentConfig::validate() const {
  if (repetitions < 1) throw Error(ErrorKind::Domain, "repetitions must be at least 1");
  if (iterations < 1) throw Error(ErrorKind::Domain, "iterations must be at least 1");
  if (bins < 1) throw Error(ErrorKind::Domain, "bins must be at least 1");
  if (codewords && *codewords < 1) throw Error(ErrorKind::Domain, "codewords must be at least 1");
  if (!(threshold >= 0.0)) throw Error(ErrorKind::Domain, "threshold must be nonnegative");
  if (proportions.empty()) throw Error(ErrorKind::Domain, "proportions must not be empty");
  if (strategies.empty()) throw Error(ErrorKind::Domain, "strategies must not be empty");
  std::set<int> seen_k;
  for (int k : proportions) {
    if (!is_allowed_proportion(k)) {
      throw Error(ErrorKind::Domain, "proportion " + std::to_string(k) + " not in {10,20,30,40,60,70,80,90}");
    }
    if (!seen_k.insert(k).second) throw Error(ErrorKind::Domain, "proportion " + std::to_string(k) + " repeated");
  }
  std::set<StrategyKind> seen_s;
  for (StrategyKind s : strategies) {
    if (!seen_s.insert(s).second) {
      throw Error(ErrorKind::Domain, "strategy " + std::string(to_string(s)) + " repeated");
    }
  }
  if (sizes.test == 0) throw Error(ErrorKind::Domain, "test size must be positive");
  if (sizes.prod <= sizes.test) {
    throw Error(ErrorKind::Domain, "production size must exceed the test size (pool = |test|)");
  }
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["name"] = c.name;
  if (const auto* syn = std::get_if<SyntheticSpec>(&c.dataset)) {
    j["dataset"] = {{"synthetic", to_json(*syn)}};
  } else {
    const auto& src = std::get<CsvSource>(c.dataset);
    nlohmann::json csv_j{{"path", src.path.string()}, {"label_column", src.options.label_column}};
    if (src.options.id_column) csv_j["id_column"] = *src.options.id_column;
    csv_j["categorical"] = std::vector<std::string>(src.options.categorical_columns.begin(),
                                                    src.options.categorical_columns.end());
    j["dataset"] = {{"csv", csv_j}};
  }
  j["split"] = {{"condition", c.split_condition},
                {"train", c.sizes.train},
                {"test", c.sizes.test},
                {"prod", c.sizes.prod}};
  j["proportions"] = c.proportions;
  std::vector<std::string> strategies;
  for (StrategyKind s : c.strategies) strategies.emplace_back(to_string(s));
  j["strategies"] = strategies;
  j["repetitions"] = c.repetitions;
  j["iterations"] = c.iterations;
  j["bins"] = c.bins;
  j["codewords"] = c.codewords ? nlohmann::json(*c.codewords) : nlohmann::json(nullptr);
  j["threshold"] = c.threshold;
  j["seed"] = c.seed;
  if (const auto* b = std::get_if<BuiltinModel>(&c.base_model)) {
    j["base_model"] = {{"kind", "builtin"}, {"learning_rate", b->learning_rate}, {"epochs", b->epochs}};
  } else {
    j["base_model"] = {{"kind", "external"}, {"scores", std::get<ExternalScores>(c.base_model).path.string()}};
  }
  j["parallelism"] = c.parallelism;
  j["verbose_weights"] = c.verbose_weights;
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  try {
    ExperimentConfig c;
    c.name = j.value("name", c.name);
    if (j.contains("dataset")) {
      const auto& d = j.at("dataset");
      if (d.contains("synthetic")) {
        c.dataset = synthetic_from_json(d.at("synthetic"));
      } else if (d.contains("csv")) {
        const auto& cj = d.at("csv");
        CsvSource src;
        src.path = resolve(cj.at("path").get<std::string>());
        src.options.label_column = cj.at("label_column").get<std::string>();
        if (cj.contains("id_column") && !cj.at("id_column").is_null()) {
          src.options.id_column = cj.at("id_column").get<std::string>();
        }
        for (const auto& col : cj.value("categorical", std::vector<std::string>{})) {
          src.options.categorical_columns.insert(col);
        }
        c.dataset = src;
      } else {
        throw Error(ErrorKind::Schema, "dataset must hold a 'synthetic' or 'csv' entry");
      }
    }
    if (j.contains("split")) {
      const auto& s = j.at("split");
      c.split_condition = s.value("condition", c.split_condition);
      c.sizes.train = s.value("train", c.sizes.train);
      c.sizes.test = s.value("test", c.sizes.test);
      c.sizes.prod = s.value("prod", c.sizes.prod);
    }
    c.proportions = j.value("proportions", c.proportions);
    if (j.contains("strategies")) {
      c.strategies.clear();
      for (const auto& s : j.at("strategies")) c.strategies.push_back(strategy_from_string(s.get<std::string>()));
    }
    c.repetitions = j.value("repetitions", c.repetitions);
    c.iterations = j.value("iterations", c.iterations);
    c.bins = j.value("bins", c.bins);
    if (j.contains("codewords") && !j.at("codewords").is_null()) c.codewords = j.at("codewords").get<std::size_t>();
    c.threshold = j.value("threshold", c.threshold);
    c.seed = j.value("seed", c.seed);
    if (j.contains("base_model")) {
      const auto& b = j.at("base_model");
      const std::string kind = b.value("kind", std::string("builtin"));
      if (kind == "builtin") {
        BuiltinModel m;
        m.learning_rate = b.value("learning_rate", m.learning_rate);
        m.epochs = b.value("epochs", m.epochs);
        c.base_model = m;
      } else if (kind == "external") {
        c.base_model = ExternalScores{resolve(b.at("scores").get<std::string>())};
      } else {
        throw Error(ErrorKind::Schema, "base_model.kind must be 'builtin' or 'external'");
      }
    }
    c.parallelism = j.value("parallelism", c.parallelism);
    c.verbose_weights = j.value("verbose_weights", c.verbose_weights);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

// ---------------------------------------------------------------------------
// Single run

ErrorCurve RunResult::curve(Method m) const {
  ErrorCurve c;
  c.method = m;
  c.points.reserve(iterations.size());
  for (const auto& it : iterations) c.points.push_back({it.labels_added, it.errors[method_index(m)]});
  return c;
}

double estimate(const RunResult& run, std::size_t iteration, Method m) {
  return run.iterations.at(iteration).estimates[method_index(m)];
}

LinearSoftmaxModel train_split_model(const BiasedSplit& split, const BuiltinModel& options) {
  TrainOptions t;
  t.learning_rate = options.learning_rate;
  t.epochs = options.epochs;
  t.seed = derive_seed(split.seed, {kModelTag});
  return train_builtin(split.train, t, split.standardizer);
}

RunResult run_single(const BiasedSplit& split, StrategyKind kind, const RunOptions& options,
                     std::uint64_t seed, const ScoreTable& external) {
  if (split.test.size() == 0) throw Error(ErrorKind::EmptyInput, "split has an empty test set");
  if (split.production_eval.size() == 0) throw Error(ErrorKind::EmptyInput, "split has an empty production set");

  // Base-model scores are computed once; the model never changes.
  ScoredDataset scored_test, scored_pool, scored_eval;
  if (const auto* builtin = std::get_if<BuiltinModel>(&options.base_model)) {
    const LinearSoftmaxModel model = train_split_model(split, *builtin);
    scored_test = score_features(model, split.test.features(), split.test.ids());
    scored_pool = score_features(model, split.pool.features(), split.pool.ids());
    scored_eval = score_features(model, split.production_eval.features(), split.production_eval.ids());
  } else {
    if (!external) throw Error(ErrorKind::Consistency, "external base model selected but no scores loaded");
    const auto index = external->index();
    scored_test = lookup_scores(*external, index, split.test.ids());
    scored_pool = lookup_scores(*external, index, split.pool.ids());
    scored_eval = lookup_scores(*external, index, split.production_eval.ids());
  }
  attach_outcomes(scored_test, split.test.labels());

  RunResult result;
  {
    // The only read of production labels: the ground truth being estimated.
    const auto& truth = split.production_eval.reveal_all();
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hits += scored_eval.predicted[i] == truth[i] ? 1 : 0;
    result.true_accuracy = static_cast<double>(hits) / static_cast<double>(truth.size());
  }

  // Labelable rows: initial test set followed by the pool.
  const ScoredDataset labelable = concat_scored(scored_test, scored_pool);
  const auto labelable_index = labelable.index();

  const Matrix test_vectors = concat_vectors(split.test.features(), scored_test);
  const Matrix pool_vectors = concat_vectors(split.pool.features(), scored_pool);
  const Matrix eval_vectors = concat_vectors(split.production_eval.features(), scored_eval);
  const std::size_t k = options.codewords.value_or(
      default_codeword_count(split.test.dim(), scored_test.class_count()));
  const Codebook codebook = build_codebook(test_vectors, stack(eval_vectors, pool_vectors), k,
                                           derive_seed(split.seed, {kCodebookTag}));
  result.codeword_count = codebook.size();
  std::vector<std::size_t> labelable_codewords = codebook.assign_all(test_vectors);
  for (std::size_t cw : codebook.assign_all(pool_vectors)) labelable_codewords.push_back(cw);
  const std::vector<std::size_t> eval_codewords = codebook.assign_all(eval_vectors);

  TestSetState state = TestSetState::initial(split.test, split.pool);
  const BatchSchedule schedule = batch_budget(split.pool.size(), options.iterations);
  std::uint64_t labels_added = 0;
  std::vector<SampleId> last_added, last_deleted;

  for (std::size_t t = 0; t <= options.iterations; ++t) {
    const auto& members = state.members();
    std::vector<double> confidence(members.size());
    std::vector<std::uint8_t> outcome(members.size());
    std::vector<std::size_t> codewords(members.size());
    std::vector<SampleId> ids(members.size());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < members.size(); ++i) {
      const std::size_t row = labelable_index.at(members[i].id);
      ids[i] = members[i].id;
      confidence[i] = labelable.confidence[row];
      outcome[i] = labelable.predicted[row] == members[i].label ? 1 : 0;
      codewords[i] = labelable_codewords[row];
      hits += outcome[i];
    }

    const BinnedPredictor raw = BinnedPredictor::fit(confidence, outcome, options.bins);

    IterationRecord rec;
    rec.iteration = t;
    rec.added = std::move(last_added);
    rec.deleted = std::move(last_deleted);
    rec.test_size = members.size();
    rec.labels_added = labels_added;

    const double test_acc = static_cast<double>(hits) / static_cast<double>(members.size());
    double resampled_acc = test_acc;
    double resampled_pred = 0.0;
    const std::vector<double> weights = compute_weights(codewords, eval_codewords, k, options.threshold);
    try {
      const WeightedTestSet ws = upsample(weights, ids, codewords);
      resampled_acc = ws.weighted_accuracy(outcome);
      rec.resampled_size = ws.resampled_size();
      const BinnedPredictor resampled =
          BinnedPredictor::fit(confidence, outcome, options.bins, ws.multiplicities);
      resampled_pred = resampled.predict_batch(scored_eval);
      if (options.verbose_weights) {
        for (std::size_t i = 0; i < ids.size(); ++i) {
          result.weight_trace.push_back({t, ids[i], codewords[i], ws.raw_weights[i], ws.multiplicities[i]});
        }
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateResample) throw;
      // Nothing survives thresholding: report the unresampled estimates.
      rec.degenerate_resample = true;
      rec.resampled_size = members.size();
      resampled_pred = raw.predict_batch(scored_eval);
    }

    rec.estimates[method_index(Method::TestSet)] = test_acc;
    rec.estimates[method_index(Method::TestSetResampled)] = resampled_acc;
    rec.estimates[method_index(Method::PerfPred)] = raw.predict_batch(scored_eval);
    rec.estimates[method_index(Method::PerfPredResampled)] = resampled_pred;
    for (Method m : kAllMethods) {
      rec.errors[method_index(m)] = abs_error(rec.estimates[method_index(m)], result.true_accuracy);
    }
    result.iterations.push_back(std::move(rec));

    if (t == options.iterations) break;
    const std::size_t budget = schedule.at(t);
    last_added = select_additions(kind, state, labelable, raw, budget, derive_seed(seed, {t, kAddTag}));
    last_deleted = select_deletions(kind, state, labelable, raw, last_added.size(),
                                    derive_seed(seed, {t, kDeleteTag}));
    state = apply_iteration(state, last_added, last_deleted, split.pool);
    labels_added += last_added.size();
  }
  return result;
}

// ---------------------------------------------------------------------------
// Grid

std::uint64_t split_seed_for(std::uint64_t master, int k, std::size_t repetition) {
  return derive_seed(master, {kSplitTag, static_cast<std::uint64_t>(k), repetition});
}

std::uint64_t cell_seed_for(std::uint64_t master, int k, StrategyKind kind, std::size_t repetition) {
  return derive_seed(master, {static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(kind), repetition});
}

std::string cell_name(int k, StrategyKind kind, std::size_t repetition) {
  return "k" + std::to_string(k) + "_" + std::string(to_string(kind)) + "_r" + std::to_string(repetition);
}

Dataset load_dataset(const ExperimentConfig& config) {
  if (const auto* syn = std::get_if<SyntheticSpec>(&config.dataset)) return generate_synthetic(*syn);
  const auto& src = std::get<CsvSource>(config.dataset);
  return load_csv(src.path, src.options);
}

ResultSet run_experiment(const ExperimentConfig& config) {
  config.validate();
  const Dataset ds = load_dataset(config);
  const SplitCondition cond = parse_condition(ds, config.split_condition);

  ScoreTable external;
  if (const auto* ext = std::get_if<ExternalScores>(&config.base_model)) {
    external = std::make_shared<const ScoredDataset>(ingest_scores(ext->path));
  }

  RunOptions opts;
  opts.iterations = config.iterations;
  opts.bins = config.bins;
  opts.codewords = config.codewords;
  opts.threshold = config.threshold;
  opts.verbose_weights = config.verbose_weights;
  opts.base_model = config.base_model;

  ResultSet results;
  results.config = config;

  std::vector<BiasedSplit> splits;
  std::map<std::pair<int, std::size_t>, std::size_t> split_slot;
  for (int k : config.proportions) {
    for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
      try {
        splits.push_back(biased_split(ds, cond, k, config.sizes, split_seed_for(config.seed, k, rep)));
      } catch (const Error& e) {
        throw Error(e.kind(), "split k=" + std::to_string(k) + " rep=" + std::to_string(rep) + ": " + e.what());
      }
      split_slot[{k, rep}] = splits.size() - 1;
      results.splits.push_back(make_manifest(splits.back()));
    }
  }

  for (int k : config.proportions) {
    for (StrategyKind s : config.strategies) {
      for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
        CellResult cell;
        cell.split_k = k;
        cell.strategy = s;
        cell.repetition = rep;
        cell.split_seed = split_seed_for(config.seed, k, rep);
        cell.seed = cell_seed_for(config.seed, k, s, rep);
        results.cells.push_back(std::move(cell));
      }
    }
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::optional<Error> first_error;
  auto worker = [&] {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= results.cells.size()) return;
      CellResult& cell = results.cells[i];
      try {
        const BiasedSplit& split = splits[split_slot.at({cell.split_k, cell.repetition})];
        cell.run = run_single(split, cell.strategy, opts, cell.seed, external);
      } catch (const Error& e) {
        std::lock_guard lock(error_mutex);
        if (!first_error) {
          first_error.emplace(e.kind(), "cell " + cell_name(cell.split_k, cell.strategy, cell.repetition) +
                                            ": " + e.what());
        }
        failed = true;
      } catch (const std::exception& e) {
        std::lock_guard lock(error_mutex);
        if (!first_error) {
          first_error.emplace(ErrorKind::Consistency,
                              "cell " + cell_name(cell.split_k, cell.strategy, cell.repetition) + ": " + e.what());
        }
        failed = true;
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(config.parallelism, 1, results.cells.size());
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (first_error) throw *first_error;

  // Cells are laid out k-major, then strategy, then repetition.
  std::size_t cursor = 0;
  for (int k : config.proportions) {
    for (StrategyKind s : config.strategies) {
      for (Method m : kAllMethods) {
        std::vector<ErrorCurve> reps;
        for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
          reps.push_back(results.cells[cursor + rep].run.curve(m));
        }
        results.curves.push_back({config.name, k, s, m, aggregate(reps)});
      }
      cursor += config.repetitions;
    }
  }
  results.summary = summarize(results.curves, kDefaultTolerances);
  return results;
}

// ---------------------------------------------------------------------------
// Summary

namespace {

struct Experiment {
  std::string id;
  int k = 0;
  StrategyKind strategy{};
  std::map<Method, const CurveRecord*> curves;
};

ErrorCurve mean_curve(const CurveRecord& r) {
  ErrorCurve c;
  c.method = r.method;
  for (std::size_t i = 0; i < r.stats.mean.size(); ++i) c.points.push_back({r.stats.labels_added[i], r.stats.mean[i]});
  return c;
}

struct Accumulator {
  double auc_sum = 0.0;
  double rank_sum = 0.0;
  std::size_t n = 0;

  nlohmann::json to_json() const {
    const double dn = static_cast<double>(n);
    return {{"auc_mean", n ? auc_sum / dn : 0.0}, {"rank_mean", n ? rank_sum / dn : 0.0}, {"experiments", n}};
  }
};

struct EffortAccumulator {
  double percent_sum = 0.0;
  std::size_t saved = 0;
  std::size_t not_reached = 0;
  std::size_t undefined = 0;

  void add(const EffortSaved& e) {
    switch (e.status) {
      case EffortSaved::Status::Saved:
        percent_sum += e.percent;
        ++saved;
        break;
      case EffortSaved::Status::NotReached: ++not_reached; break;
      case EffortSaved::Status::Undefined: ++undefined; break;
    }
  }
  nlohmann::json to_json() const {
    return {{"mean_percent", saved ? nlohmann::json(percent_sum / static_cast<double>(saved)) : nlohmann::json(nullptr)},
            {"saved", saved},
            {"not_reached", not_reached},
            {"undefined", undefined}};
  }
};

nlohmann::json effort_json(const EffortSaved& e) {
  nlohmann::json j{{"status", to_string(e.status)}};
  j["percent"] = e.status == EffortSaved::Status::Saved ? nlohmann::json(e.percent) : nlohmann::json(nullptr);
  return j;
}

}  // namespace

nlohmann::json summarize(const std::vector<CurveRecord>& curves, std::span<const double> tolerances) {
  std::vector<Experiment> experiments;
  for (const auto& r : curves) {
    if (experiments.empty() || experiments.back().id != r.experiment_id || experiments.back().k != r.split_k ||
        experiments.back().strategy != r.strategy) {
      experiments.push_back({r.experiment_id, r.split_k, r.strategy, {}});
    }
    if (!experiments.back().curves.emplace(r.method, &r).second) {
      throw Error(ErrorKind::Consistency, "duplicate curve for " + r.experiment_id + " k=" +
                                              std::to_string(r.split_k) + " " + std::string(to_string(r.method)));
    }
  }

  std::map<Method, Accumulator> overall;
  std::map<std::string, std::map<Method, Accumulator>> by_strategy;
  std::map<std::string, std::map<Method, Accumulator>> by_group;
  std::map<std::string, std::map<std::string, std::map<Method, EffortAccumulator>>> effort;
  nlohmann::json per_experiment = nlohmann::json::array();

  for (const auto& ex : experiments) {
    if (ex.curves.size() != std::size(kAllMethods)) {
      throw Error(ErrorKind::Consistency, "experiment " + ex.id + " k=" + std::to_string(ex.k) + " " +
                                              std::string(to_string(ex.strategy)) + " lacks some methods");
    }
    std::vector<double> aucs;
    for (Method m : kAllMethods) aucs.push_back(auc(ex.curves.at(m)->stats.mean));
    const std::vector<double> ranks = rank_order(aucs);

    nlohmann::json ej;
    ej["experiment_id"] = ex.id;
    ej["split_k"] = ex.k;
    ej["strategy"] = to_string(ex.strategy);
    const std::string strategy(to_string(ex.strategy));
    const char* group = kExtremeProportions.contains(ex.k) ? "extreme" : "moderate";
    for (std::size_t i = 0; i < std::size(kAllMethods); ++i) {
      const std::string name(to_string(kAllMethods[i]));
      ej["auc"][name] = aucs[i];
      ej["rank"][name] = ranks[i];
      for (auto* acc : {&overall[kAllMethods[i]], &by_strategy[strategy][kAllMethods[i]],
                        &by_group[group][kAllMethods[i]]}) {
        acc->auc_sum += aucs[i];
        acc->rank_sum += ranks[i];
        ++acc->n;
      }
    }

    const ErrorCurve baseline = mean_curve(*ex.curves.at(Method::TestSet));
    for (double tol : tolerances) {
      const std::string tkey = csv::format_double(tol);
      for (Method m : kAllMethods) {
        if (m == Method::TestSet) continue;
        const EffortSaved e = effort_saved(baseline, mean_curve(*ex.curves.at(m)), tol);
        ej["effort_saved"][tkey][std::string(to_string(m))] = effort_json(e);
        effort[tkey][strategy][m].add(e);
        effort[tkey]["all"][m].add(e);
      }
    }
    per_experiment.push_back(std::move(ej));
  }

  nlohmann::json out;
  out["experiments"] = std::move(per_experiment);
  out["tolerances"] = std::vector<double>(tolerances.begin(), tolerances.end());
  for (const auto& [m, acc] : overall) out["overall"][std::string(to_string(m))] = acc.to_json();
  for (const auto& [s, methods] : by_strategy) {
    for (const auto& [m, acc] : methods) out["by_strategy"][s][std::string(to_string(m))] = acc.to_json();
  }
  for (const auto& [g, methods] : by_group) {
    for (const auto& [m, acc] : methods) out["groups"][g][std::string(to_string(m))] = acc.to_json();
  }
  for (const auto& [t, strategies] : effort) {
    for (const auto& [s, methods] : strategies) {
      for (const auto& [m, acc] : methods) out["effort_saved"][t][s][std::string(to_string(m))] = acc.to_json();
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

void write_curves_csv(const std::filesystem::path& path, const std::vector<CurveRecord>& curves) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "experiment_id,split_k,strategy,method,iteration,labels_added,error_mean,error_std\n";
  for (const auto& r : curves) {
    for (std::size_t i = 0; i < r.stats.mean.size(); ++i) {
      out << csv::escape(r.experiment_id) << ',' << r.split_k << ',' << to_string(r.strategy) << ','
          << to_string(r.method) << ',' << i << ',' << r.stats.labels_added[i] << ','
          << csv::format_double(r.stats.mean[i]) << ',' << csv::format_double(r.stats.stddev[i]) << '\n';
    }
  }
}

std::vector<CurveRecord> read_curves_csv(const std::filesystem::path& path) {
  const csv::Table table = csv::read(path);
  const std::vector<std::string> expected{"experiment_id", "split_k", "strategy", "method",
                                          "iteration", "labels_added", "error_mean", "error_std"};
  if (table.header != expected) throw Error(ErrorKind::Schema, path.string() + " does not have the curves.csv header");
  std::vector<CurveRecord> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = path.string() + " row " + std::to_string(r + 1);
    double k = 0, iteration = 0, labels = 0, mean = 0, sd = 0;
    if (!csv::parse_double(row[1], k) || !csv::parse_double(row[4], iteration) ||
        !csv::parse_double(row[5], labels) || !csv::parse_double(row[6], mean) || !csv::parse_double(row[7], sd)) {
      throw Error(ErrorKind::Parse, where + ": non-numeric field");
    }
    const StrategyKind strategy = strategy_from_string(row[2]);
    const Method method = method_from_string(row[3]);
    if (out.empty() || out.back().experiment_id != row[0] || out.back().split_k != static_cast<int>(k) ||
        out.back().strategy != strategy || out.back().method != method) {
      out.push_back({row[0], static_cast<int>(k), strategy, method, {}});
    }
    auto& stats = out.back().stats;
    if (static_cast<std::size_t>(iteration) != stats.mean.size()) {
      throw Error(ErrorKind::Parse, where + ": iterations must run 0,1,2,... within a curve");
    }
    stats.labels_added.push_back(static_cast<std::uint64_t>(labels));
    stats.mean.push_back(mean);
    stats.stddev.push_back(sd);
  }
  return out;
}

namespace {

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

nlohmann::json method_map(const double (&values)[4]) {
  nlohmann::json j;
  for (Method m : kAllMethods) j[std::string(to_string(m))] = values[method_index(m)];
  return j;
}

}  // namespace

void write_results(const std::filesystem::path& dir, const ResultSet& results) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir / "events", ec);
  fs::create_directories(dir / "splits", ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());

  nlohmann::json manifest;
  manifest["tool"] = "driftqa";
  manifest["config"] = to_json(results.config);
  manifest["master_seed"] = results.config.seed;
  auto& cells = manifest["cells"] = nlohmann::json::array();
  for (const auto& c : results.cells) {
    cells.push_back({{"name", cell_name(c.split_k, c.strategy, c.repetition)},
                     {"split_k", c.split_k},
                     {"strategy", to_string(c.strategy)},
                     {"repetition", c.repetition},
                     {"seed", c.seed},
                     {"split_seed", c.split_seed},
                     {"true_accuracy", c.run.true_accuracy},
                     {"codewords", c.run.codeword_count}});
  }
  auto& split_files = manifest["splits"] = nlohmann::json::array();
  for (std::size_t i = 0; i < results.splits.size(); ++i) {
    const auto& s = results.splits[i];
    const std::size_t rep = i % results.config.repetitions;
    const std::string name = "splits/k" + std::to_string(s.proportion_k) + "_r" + std::to_string(rep) + ".json";
    write_json(dir / name, to_json(s));
    split_files.push_back(name);
  }
  write_json(dir / "manifest.json", manifest);
  write_curves_csv(dir / "curves.csv", results.curves);
  write_json(dir / "summary.json", results.summary);

  for (const auto& c : results.cells) {
    const std::string name = cell_name(c.split_k, c.strategy, c.repetition);
    std::ofstream ev(dir / "events" / (name + ".jsonl"), std::ios::binary);
    if (!ev) throw Error(ErrorKind::Io, "cannot write event log for " + name);
    for (const auto& it : c.run.iterations) {
      nlohmann::json line{{"iteration", it.iteration},
                          {"added", it.added},
                          {"deleted", it.deleted},
                          {"test_size", it.test_size},
                          {"labels_added", it.labels_added},
                          {"resampled_size", it.resampled_size},
                          {"degenerate_resample", it.degenerate_resample},
                          {"true_accuracy", c.run.true_accuracy},
                          {"estimates", method_map(it.estimates)},
                          {"errors", method_map(it.errors)}};
      ev << line.dump() << '\n';
    }
    if (!c.run.weight_trace.empty()) {
      std::ofstream wt(dir / "events" / (name + ".weights.csv"), std::ios::binary);
      if (!wt) throw Error(ErrorKind::Io, "cannot write weight trace for " + name);
      wt << "iteration,id,codeword,weight,multiplicity\n";
      for (const auto& w : c.run.weight_trace) {
        wt << w.iteration << ',' << w.id << ',' << w.codeword << ',' << csv::format_double(w.weight) << ','
           << w.multiplicity << '\n';
      }
    }
  }
}

}  // namespace driftqa
