#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "driftqa/csv.hpp"
#include "driftqa/data.hpp"
#include "driftqa/error.hpp"
#include "driftqa/harness.hpp"
#include "driftqa/synthetic.hpp"

namespace driftqa::cli {

namespace {

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

struct GenerateArgs {
  std::string out;
  std::string config;
  std::uint64_t seed = 0;
  std::size_t points = 0;
};

void run_generate(const GenerateArgs& a, std::ostream& out) {
  SyntheticSpec spec;
  if (!a.config.empty()) {
    nlohmann::json j = read_json(a.config);
    // Accept either a bare spec or a full experiment config.
    if (j.contains("dataset") && j["dataset"].contains("synthetic")) j = j["dataset"]["synthetic"];
    spec = synthetic_from_json(j);
  }
  spec.seed = a.seed;
  if (a.points > 0) spec.points = a.points;
  const Dataset ds = generate_synthetic(spec);
  write_csv(a.out, ds);
  out << "wrote " << ds.size() << " rows (" << ds.dim() << " features, " << ds.class_count() << " classes) to "
      << a.out << '\n';
}

struct SplitArgs {
  std::string data;
  std::string label = "label";
  std::string id_column;
  std::vector<std::string> categorical;
  std::string condition = "x0>0";
  int k = 10;
  std::size_t train = 4000;
  std::size_t test = 2000;
  std::size_t prod = 6000;
  std::uint64_t seed = 0;
  std::string out;
};

void run_split(const SplitArgs& a, std::ostream& out) {
  CsvOptions options;
  options.label_column = a.label;
  if (!a.id_column.empty()) options.id_column = a.id_column;
  options.categorical_columns.insert(a.categorical.begin(), a.categorical.end());
  const Dataset ds = load_csv(a.data, options);
  const SplitCondition cond = parse_condition(ds, a.condition);
  const BiasedSplit split = biased_split(ds, cond, a.k, {a.train, a.test, a.prod}, a.seed);
  write_json(a.out, to_json(make_manifest(split)));
  out << "train " << split.train.size() << ", test " << split.test.size() << ", pool " << split.pool.size()
      << ", production_eval " << split.production_eval.size() << " -> " << a.out << '\n';
}

struct RunArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> parallelism;
  bool verbose_weights = false;
};

void run_run(const RunArgs& a, std::ostream& out) {
  ExperimentConfig config = load_config(a.config);
  if (a.seed) config.seed = *a.seed;
  if (a.parallelism) config.parallelism = *a.parallelism;
  if (a.verbose_weights) config.verbose_weights = true;
  const ResultSet results = run_experiment(config);
  write_results(a.out, results);
  out << results.cells.size() << " runs, " << results.curves.size() << " curves -> " << a.out << '\n';
  for (Method m : kAllMethods) {
    const auto& o = results.summary["overall"][std::string(to_string(m))];
    out << "  " << std::left << std::setw(22) << to_string(m) << " auc " << std::fixed << std::setprecision(2)
        << o["auc_mean"].get<double>() << "  rank " << o["rank_mean"].get<double>() << '\n';
  }
}

struct ReportArgs {
  std::string results;
  std::vector<double> tolerances;
  std::string out;
};

// Fields of `recomputed` that must agree with the stored summary.
std::vector<std::string> compare_summaries(const nlohmann::json& stored, const nlohmann::json& recomputed) {
  std::vector<std::string> mismatches;
  for (const char* key : {"overall", "by_strategy", "groups"}) {
    if (stored.value(key, nlohmann::json()) != recomputed.value(key, nlohmann::json())) mismatches.emplace_back(key);
  }
  if (recomputed.contains("effort_saved") && stored.contains("effort_saved")) {
    for (const auto& [tol, table] : recomputed["effort_saved"].items()) {
      if (stored["effort_saved"].contains(tol) && stored["effort_saved"][tol] != table) {
        mismatches.push_back("effort_saved@" + tol);
      }
    }
  }
  return mismatches;
}

std::string format_percent(const nlohmann::json& v) {
  if (v.is_null()) return "-";
  std::ostringstream s;
  s << std::fixed << std::setprecision(1) << v.get<double>() << '%';
  return s.str();
}

int run_report(const ReportArgs& a, std::ostream& out, std::ostream& err) {
  const std::filesystem::path dir(a.results);
  const std::vector<CurveRecord> curves = read_curves_csv(dir / "curves.csv");
  std::vector<double> tolerances = a.tolerances;
  if (tolerances.empty()) tolerances.assign(std::begin(kDefaultTolerances), std::end(kDefaultTolerances));
  const nlohmann::json summary = summarize(curves, tolerances);

  out << "method                  auc_mean   rank_mean\n";
  for (Method m : kAllMethods) {
    const auto& o = summary["overall"][std::string(to_string(m))];
    out << std::left << std::setw(22) << to_string(m) << std::right << std::fixed << std::setprecision(2)
        << std::setw(10) << o["auc_mean"].get<double>() << std::setw(12) << o["rank_mean"].get<double>() << '\n';
  }
  for (double tol : tolerances) {
    const std::string tkey = csv::format_double(tol);
    out << "\neffort saved at tolerance " << tkey << " pp\n";
    out << "strategy                 method                 mean    saved  not_reached  undefined\n";
    for (const auto& [strategy, methods] : summary["effort_saved"][tkey].items()) {
      for (Method m : kAllMethods) {
        if (m == Method::TestSet) continue;
        const auto& e = methods[std::string(to_string(m))];
        out << std::left << std::setw(25) << strategy << std::setw(22) << to_string(m) << std::right << std::setw(7)
            << format_percent(e["mean_percent"]) << std::setw(8) << e["saved"].get<std::size_t>() << std::setw(13)
            << e["not_reached"].get<std::size_t>() << std::setw(11) << e["undefined"].get<std::size_t>() << '\n';
      }
    }
  }

  if (!a.out.empty()) write_json(a.out, summary);

  const auto summary_path = dir / "summary.json";
  if (std::filesystem::exists(summary_path)) {
    const auto mismatches = compare_summaries(read_json(summary_path), summary);
    if (!mismatches.empty()) {
      err << "driftqa: curves.csv disagrees with summary.json in:";
      for (const auto& m : mismatches) err << ' ' << m;
      err << '\n';
      return kExitFailure;
    }
    out << "\nsummary.json: consistent\n";
  }
  return kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Estimate classifier accuracy under drift and simulate test-set maintenance", "driftqa"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write a synthetic labeled dataset as CSV");
  generate->add_option("--out", gen.out, "Output CSV path")->required();
  generate->add_option("--seed", gen.seed, "Random seed");
  generate->add_option("--config", gen.config, "JSON synthetic spec or experiment config");
  generate->add_option("--points", gen.points, "Override the number of points");

  SplitArgs sp;
  auto* split = app.add_subcommand("split", "Draw a biased split from a CSV and write its manifest");
  split->add_option("--data", sp.data, "Input CSV")->required()->check(CLI::ExistingFile);
  split->add_option("--label", sp.label, "Label column")->capture_default_str();
  split->add_option("--id-column", sp.id_column, "Id column (row index when omitted)");
  split->add_option("--categorical", sp.categorical, "Categorical column (repeatable)");
  split->add_option("--condition", sp.condition, "Bin-A predicate, 'col>t' or 'col=v'")->capture_default_str();
  split->add_option("--k", sp.k, "Bin-A percentage of train and test")
      ->check(CLI::IsMember({10, 20, 30, 40, 60, 70, 80, 90}))
      ->capture_default_str();
  split->add_option("--train", sp.train, "Train size")->capture_default_str();
  split->add_option("--test", sp.test, "Test size (also the pool size)")->capture_default_str();
  split->add_option("--prod", sp.prod, "Production size")->capture_default_str();
  split->add_option("--seed", sp.seed, "Random seed");
  split->add_option("--out", sp.out, "Output manifest JSON")->required();

  RunArgs ra;
  auto* run = app.add_subcommand("run", "Run an experiment grid and write a results directory");
  run->add_option("--config", ra.config, "Experiment config JSON")->required();
  run->add_option("--out", ra.out, "Results directory")->required();
  run->add_option("--seed", ra.seed, "Override the master seed");
  run->add_option("--parallelism", ra.parallelism, "Concurrent grid cells")->check(CLI::PositiveNumber);
  run->add_flag("--verbose-weights", ra.verbose_weights, "Also write per-iteration resampling weights");

  ReportArgs rep;
  auto* report = app.add_subcommand("report", "Recompute AUC, ranks and effort saved from curves.csv");
  report->add_option("--results", rep.results, "Results directory")->required();
  report->add_option("--tolerance", rep.tolerances, "Error tolerance in percentage points (repeatable)")
      ->check(CLI::NonNegativeNumber);
  report->add_option("--out", rep.out, "Also write the recomputed summary JSON here");

  std::vector<const char*> raw;
  raw.reserve(argv.size());
  for (const auto& a : argv) raw.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(raw.size()), raw.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*generate) run_generate(gen, out);
    if (*split) run_split(sp, out);
    if (*run) run_run(ra, out);
    if (*report) return run_report(rep, out, err);
    return kExitOk;
  } catch (const std::exception& e) {
    err << "driftqa: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace driftqa::cli
