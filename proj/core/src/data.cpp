#include "driftqa/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "driftqa/csv.hpp"
#include "driftqa/error.hpp"
#include "driftqa/random.hpp"

namespace driftqa {

Dataset::Dataset(Matrix features, std::vector<int> labels, std::vector<SampleId> ids,
                 int class_count, std::vector<std::string> feature_names,
                 std::vector<std::vector<std::string>> vocabularies)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      ids_(std::move(ids)),
      class_count_(class_count),
      feature_names_(std::move(feature_names)),
      vocabularies_(std::move(vocabularies)) {
  if (features_.rows() != labels_.size() || labels_.size() != ids_.size()) {
    throw Error(ErrorKind::Shape, "feature rows, labels and ids differ in length (" +
                                      std::to_string(features_.rows()) + "/" +
                                      std::to_string(labels_.size()) + "/" +
                                      std::to_string(ids_.size()) + ")");
  }
  if (class_count_ < 1) throw Error(ErrorKind::Domain, "class count must be positive");
  for (int y : labels_) {
    if (y < 0 || y >= class_count_) {
      throw Error(ErrorKind::Domain, "label " + std::to_string(y) + " outside [0, " +
                                         std::to_string(class_count_) + ")");
    }
  }
  std::unordered_set<SampleId> seen;
  seen.reserve(ids_.size());
  for (SampleId id : ids_) {
    if (!seen.insert(id).second) {
      throw Error(ErrorKind::Schema, "duplicate id " + std::to_string(id));
    }
  }
  if (feature_names_.empty()) {
    for (std::size_t c = 0; c < features_.cols(); ++c) feature_names_.push_back("x" + std::to_string(c));
  }
  if (vocabularies_.empty()) vocabularies_.resize(features_.cols());
  if (feature_names_.size() != features_.cols() || vocabularies_.size() != features_.cols()) {
    throw Error(ErrorKind::Shape, "column metadata does not match feature count");
  }
}

std::optional<std::size_t> Dataset::column_index(const std::string& name) const {
  for (std::size_t c = 0; c < feature_names_.size(); ++c) {
    if (feature_names_[c] == name) return c;
  }
  return std::nullopt;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  std::vector<int> labels;
  std::vector<SampleId> ids;
  labels.reserve(rows.size());
  ids.reserve(rows.size());
  for (std::size_t r : rows) {
    labels.push_back(labels_[r]);
    ids.push_back(ids_[r]);
  }
  return Dataset(features_.select_rows(rows), std::move(labels), std::move(ids), class_count_,
                 feature_names_, vocabularies_);
}

Dataset Dataset::with_features(Matrix features) const {
  return Dataset(std::move(features), labels_, ids_, class_count_, feature_names_, vocabularies_);
}

MaskedDataset::MaskedDataset(Dataset data) : data_(std::move(data)) {
  row_index_.reserve(data_.size());
  for (std::size_t r = 0; r < data_.size(); ++r) row_index_.emplace(data_.ids()[r], r);
}

MaskedDataset::MaskedDataset(const MaskedDataset& other)
    : data_(other.data_),
      row_index_(other.row_index_),
      single_reads_(other.single_reads_.load()),
      full_passes_(other.full_passes_.load()) {}

MaskedDataset& MaskedDataset::operator=(const MaskedDataset& other) {
  if (this != &other) {
    data_ = other.data_;
    row_index_ = other.row_index_;
    single_reads_ = other.single_reads_.load();
    full_passes_ = other.full_passes_.load();
  }
  return *this;
}

std::optional<std::size_t> MaskedDataset::row_of(SampleId id) const {
  auto it = row_index_.find(id);
  if (it == row_index_.end()) return std::nullopt;
  return it->second;
}

int MaskedDataset::reveal(std::size_t row) const {
  single_reads_.fetch_add(1);
  return data_.labels().at(row);
}

const std::vector<int>& MaskedDataset::reveal_all() const {
  full_passes_.fetch_add(1);
  return data_.labels();
}

bool SplitCondition::in_bin_a(std::span<const double> row) const {
  double v = row[feature_index];
  if (const auto* t = std::get_if<ThresholdPredicate>(&predicate)) return v > t->threshold;
  return v == std::get<EqualityPredicate>(predicate).value;
}

SplitCondition parse_condition(const Dataset& ds, const std::string& text) {
  auto op_pos = text.find_first_of(">=");
  if (op_pos == std::string::npos || op_pos == 0 || op_pos + 1 >= text.size()) {
    throw Error(ErrorKind::Parse, "condition '" + text + "' is not of the form name>value or name=value");
  }
  std::string name = text.substr(0, op_pos);
  std::string value = text.substr(op_pos + 1);
  auto col = ds.column_index(name);
  if (!col) throw Error(ErrorKind::Schema, "no feature column named '" + name + "'");

  SplitCondition cond;
  cond.feature_index = *col;
  if (text[op_pos] == '=') {
    const auto& vocab = ds.vocabularies()[*col];
    if (!vocab.empty()) {
      auto it = std::find(vocab.begin(), vocab.end(), value);
      if (it == vocab.end()) {
        throw Error(ErrorKind::Schema, "value '" + value + "' not in vocabulary of '" + name + "'");
      }
      cond.predicate = EqualityPredicate{static_cast<double>(it - vocab.begin())};
      return cond;
    }
    double v = 0;
    if (!csv::parse_double(value, v)) throw Error(ErrorKind::Parse, "bad value in '" + text + "'");
    cond.predicate = EqualityPredicate{v};
  } else {
    double v = 0;
    if (!csv::parse_double(value, v)) throw Error(ErrorKind::Parse, "bad threshold in '" + text + "'");
    cond.predicate = ThresholdPredicate{v};
  }
  return cond;
}

bool is_allowed_proportion(int k) noexcept {
  return std::find(std::begin(kAllowedProportions), std::end(kAllowedProportions), k) !=
         std::end(kAllowedProportions);
}

Standardizer Standardizer::fit(const Matrix& x) {
  Standardizer s;
  const std::size_t d = x.cols();
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 1.0);
  if (x.rows() == 0) return s;
  const double n = static_cast<double>(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < d; ++c) s.mean[c] += x(r, c);
  }
  for (double& m : s.mean) m /= n;
  std::vector<double> var(d, 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      double dv = x(r, c) - s.mean[c];
      var[c] += dv * dv;
    }
  }
  for (std::size_t c = 0; c < d; ++c) {
    double sd = std::sqrt(var[c] / n);
    s.scale[c] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& x) const {
  if (x.cols() != mean.size()) {
    throw Error(ErrorKind::Shape, "standardizer has " + std::to_string(mean.size()) +
                                      " columns, input has " + std::to_string(x.cols()));
  }
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = (x(r, c) - mean[c]) / scale[c];
  }
  return out;
}

namespace {

// Labels that are all nonnegative integers keep their value; anything else
// goes through a sorted vocabulary.
std::pair<std::vector<int>, int> encode_labels(const std::vector<std::string>& raw) {
  std::vector<int> out;
  out.reserve(raw.size());
  bool integral = true;
  for (const auto& s : raw) {
    double v = 0;
    if (!csv::parse_double(s, v) || v < 0 || v != std::floor(v) || v > 1e6) {
      integral = false;
      break;
    }
    out.push_back(static_cast<int>(v));
  }
  if (integral) {
    int c = out.empty() ? 0 : *std::max_element(out.begin(), out.end()) + 1;
    return {std::move(out), c};
  }
  std::vector<std::string> vocab(raw.begin(), raw.end());
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  out.clear();
  for (const auto& s : raw) {
    out.push_back(static_cast<int>(std::lower_bound(vocab.begin(), vocab.end(), s) - vocab.begin()));
  }
  return {std::move(out), static_cast<int>(vocab.size())};
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  csv::Table table = csv::read(path);
  if (table.rows.empty()) throw Error(ErrorKind::EmptyInput, path.string() + " has no data rows");

  const auto& header = table.header;
  auto find_col = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };

  auto label_col = find_col(options.label_column);
  if (!label_col) {
    throw Error(ErrorKind::Schema, "label column '" + options.label_column + "' missing from " + path.string());
  }
  std::optional<std::size_t> id_col;
  if (options.id_column) {
    id_col = find_col(*options.id_column);
    if (!id_col) {
      throw Error(ErrorKind::Schema, "id column '" + *options.id_column + "' missing from " + path.string());
    }
  }
  for (const auto& name : options.categorical_columns) {
    if (!find_col(name)) throw Error(ErrorKind::Schema, "categorical column '" + name + "' missing");
  }

  std::vector<std::size_t> feature_cols;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == *label_col || (id_col && c == *id_col)) continue;
    feature_cols.push_back(c);
    names.push_back(header[c]);
  }

  const std::size_t n = table.rows.size();
  std::vector<std::vector<std::string>> vocabs(feature_cols.size());
  for (std::size_t j = 0; j < feature_cols.size(); ++j) {
    if (!options.categorical_columns.contains(names[j])) continue;
    auto& vocab = vocabs[j];
    for (const auto& row : table.rows) vocab.push_back(row[feature_cols[j]]);
    std::sort(vocab.begin(), vocab.end());
    vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  }

  Matrix features(n, feature_cols.size());
  std::vector<SampleId> ids(n);
  std::vector<std::string> raw_labels(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = table.rows[r];
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      const std::string& cell = row[feature_cols[j]];
      if (!vocabs[j].empty()) {
        features(r, j) = static_cast<double>(
            std::lower_bound(vocabs[j].begin(), vocabs[j].end(), cell) - vocabs[j].begin());
      } else if (!csv::parse_double(cell, features(r, j))) {
        throw Error(ErrorKind::Parse, "row " + std::to_string(r + 1) + ", column '" + names[j] +
                                          "': cannot parse '" + cell + "' as a number");
      }
    }
    if (id_col) {
      double v = 0;
      if (!csv::parse_double(row[*id_col], v) || v != std::floor(v)) {
        throw Error(ErrorKind::Parse, "row " + std::to_string(r + 1) + ", column '" +
                                          *options.id_column + "': id '" + row[*id_col] +
                                          "' is not an integer");
      }
      ids[r] = static_cast<SampleId>(v);
    } else {
      ids[r] = static_cast<SampleId>(r);
    }
    raw_labels[r] = row[*label_col];
  }
  auto [labels, class_count] = encode_labels(raw_labels);
  return Dataset(std::move(features), std::move(labels), std::move(ids), class_count,
                 std::move(names), std::move(vocabs));
}

void write_csv(const std::filesystem::path& path, const Dataset& ds, const std::string& label_column) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "id";
  for (const auto& name : ds.feature_names()) out << ',' << csv::escape(name);
  out << ',' << csv::escape(label_column) << '\n';
  for (std::size_t r = 0; r < ds.size(); ++r) {
    out << ds.ids()[r];
    for (std::size_t c = 0; c < ds.dim(); ++c) {
      const auto& vocab = ds.vocabularies()[c];
      double v = ds.features()(r, c);
      if (!vocab.empty()) {
        out << ',' << csv::escape(vocab.at(static_cast<std::size_t>(v)));
      } else {
        out << ',' << csv::format_double(v);
      }
    }
    out << ',' << ds.labels()[r] << '\n';
  }
}

namespace {

struct Partition {
  std::vector<std::size_t> train, test, prod;
};

std::size_t floor_percent(int k, std::size_t n) {
  return static_cast<std::size_t>(k) * n / 100;
}

std::uint64_t pool_seed(std::uint64_t split_seed) { return derive_seed(split_seed, {0x706f6f6cULL}); }

// Uniform subsample of positions [0, n); both halves returned sorted.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> carve_positions(
    std::size_t n, std::size_t pool_size, std::uint64_t seed) {
  if (pool_size > n) {
    throw Error(ErrorKind::Capacity, "pool of " + std::to_string(pool_size) +
                                         " requested, production has " + std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto cut = order.begin() + static_cast<std::ptrdiff_t>(pool_size);
  std::vector<std::size_t> pool(order.begin(), cut);
  std::vector<std::size_t> rest(cut, order.end());
  std::sort(pool.begin(), pool.end());
  std::sort(rest.begin(), rest.end());
  return {std::move(pool), std::move(rest)};
}

BiasedSplit assemble(const Dataset& ds, const Partition& rows, const std::vector<std::size_t>& pool_rows,
                     const std::vector<std::size_t>& eval_rows) {
  std::vector<std::size_t> all;
  all.insert(all.end(), rows.train.begin(), rows.train.end());
  all.insert(all.end(), rows.test.begin(), rows.test.end());
  all.insert(all.end(), rows.prod.begin(), rows.prod.end());
  std::sort(all.begin(), all.end());

  BiasedSplit split;
  split.standardizer = Standardizer::fit(ds.features().select_rows(all));
  auto part = [&](const std::vector<std::size_t>& r) {
    Dataset sub = ds.subset(r);
    return sub.with_features(split.standardizer.apply(sub.features()));
  };
  split.train = part(rows.train);
  split.test = part(rows.test);
  split.pool = MaskedDataset(part(pool_rows));
  split.production_eval = MaskedDataset(part(eval_rows));
  return split;
}

}  // namespace

PoolCarve carve_pool(const Dataset& production, std::size_t pool_size, std::uint64_t seed) {
  auto [pool, rest] = carve_positions(production.size(), pool_size, seed);
  return {production.subset(pool), production.subset(rest)};
}

BiasedSplit biased_split(const Dataset& ds, const SplitCondition& cond, int k,
                         const SplitSizes& sizes, std::uint64_t seed) {
  if (!is_allowed_proportion(k)) {
    throw Error(ErrorKind::Domain, "proportion " + std::to_string(k) +
                                       " not in {10,20,30,40,60,70,80,90}");
  }
  if (cond.feature_index >= ds.dim()) {
    throw Error(ErrorKind::Domain, "split feature index " + std::to_string(cond.feature_index) +
                                       " out of range for " + std::to_string(ds.dim()) + " features");
  }
  std::vector<std::size_t> bin_a, bin_b;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    (cond.in_bin_a(ds.features().row(r)) ? bin_a : bin_b).push_back(r);
  }

  const std::size_t a_train = floor_percent(k, sizes.train);
  const std::size_t a_test = floor_percent(k, sizes.test);
  const std::size_t a_prod = floor_percent(100 - k, sizes.prod);
  const std::size_t need_a = a_train + a_test + a_prod;
  const std::size_t need_b = (sizes.train - a_train) + (sizes.test - a_test) + (sizes.prod - a_prod);
  if (need_a > bin_a.size() || need_b > bin_b.size()) {
    throw Error(ErrorKind::Capacity, "split at k=" + std::to_string(k) + " needs " +
                                         std::to_string(need_a) + " rows in bin A (have " +
                                         std::to_string(bin_a.size()) + ") and " +
                                         std::to_string(need_b) + " in bin B (have " +
                                         std::to_string(bin_b.size()) + ")");
  }

  Rng rng = make_rng(seed);
  std::shuffle(bin_a.begin(), bin_a.end(), rng);
  std::shuffle(bin_b.begin(), bin_b.end(), rng);

  Partition rows;
  auto take = [](const std::vector<std::size_t>& from, std::size_t& cursor, std::size_t count,
                 std::vector<std::size_t>& into) {
    into.insert(into.end(), from.begin() + static_cast<std::ptrdiff_t>(cursor),
                from.begin() + static_cast<std::ptrdiff_t>(cursor + count));
    cursor += count;
  };
  std::size_t ca = 0, cb = 0;
  take(bin_a, ca, a_train, rows.train);
  take(bin_b, cb, sizes.train - a_train, rows.train);
  take(bin_a, ca, a_test, rows.test);
  take(bin_b, cb, sizes.test - a_test, rows.test);
  take(bin_a, ca, a_prod, rows.prod);
  take(bin_b, cb, sizes.prod - a_prod, rows.prod);
  for (auto* v : {&rows.train, &rows.test, &rows.prod}) std::sort(v->begin(), v->end());

  auto [pool_pos, eval_pos] = carve_positions(rows.prod.size(), sizes.test, pool_seed(seed));
  std::vector<std::size_t> pool_rows, eval_rows;
  for (std::size_t p : pool_pos) pool_rows.push_back(rows.prod[p]);
  for (std::size_t p : eval_pos) eval_rows.push_back(rows.prod[p]);

  BiasedSplit split = assemble(ds, rows, pool_rows, eval_rows);
  split.proportion_k = k;
  split.seed = seed;
  split.condition = cond;
  split.sizes = sizes;
  return split;
}

SplitManifest make_manifest(const BiasedSplit& split) {
  SplitManifest m;
  m.proportion_k = split.proportion_k;
  m.seed = split.seed;
  m.condition = split.condition;
  m.sizes = split.sizes;
  m.train_ids = split.train.ids();
  m.test_ids = split.test.ids();
  m.pool_ids = split.pool.ids();
  m.production_eval_ids = split.production_eval.ids();
  return m;
}

BiasedSplit replay_manifest(const Dataset& ds, const SplitManifest& m) {
  std::unordered_map<SampleId, std::size_t> row_of;
  row_of.reserve(ds.size());
  for (std::size_t r = 0; r < ds.size(); ++r) row_of.emplace(ds.ids()[r], r);
  auto rows_for = [&](const std::vector<SampleId>& ids) {
    std::vector<std::size_t> rows;
    rows.reserve(ids.size());
    for (SampleId id : ids) {
      auto it = row_of.find(id);
      if (it == row_of.end()) {
        throw Error(ErrorKind::Consistency, "manifest id " + std::to_string(id) + " not in dataset");
      }
      rows.push_back(it->second);
    }
    return rows;
  };
  Partition rows;
  rows.train = rows_for(m.train_ids);
  rows.test = rows_for(m.test_ids);
  auto pool_rows = rows_for(m.pool_ids);
  auto eval_rows = rows_for(m.production_eval_ids);
  rows.prod = pool_rows;
  rows.prod.insert(rows.prod.end(), eval_rows.begin(), eval_rows.end());

  std::unordered_set<std::size_t> seen;
  for (const auto* v : {&rows.train, &rows.test, &rows.prod}) {
    for (std::size_t r : *v) {
      if (!seen.insert(r).second) {
        throw Error(ErrorKind::Consistency, "manifest partitions overlap at id " + std::to_string(ds.ids()[r]));
      }
    }
  }

  BiasedSplit split = assemble(ds, rows, pool_rows, eval_rows);
  split.proportion_k = m.proportion_k;
  split.seed = m.seed;
  split.condition = m.condition;
  split.sizes = m.sizes;
  return split;
}

nlohmann::json to_json(const SplitCondition& c) {
  nlohmann::json j;
  j["feature_index"] = c.feature_index;
  if (const auto* t = std::get_if<ThresholdPredicate>(&c.predicate)) {
    j["op"] = ">";
    j["value"] = t->threshold;
  } else {
    j["op"] = "=";
    j["value"] = std::get<EqualityPredicate>(c.predicate).value;
  }
  return j;
}

SplitCondition condition_from_json(const nlohmann::json& j) {
  SplitCondition c;
  c.feature_index = j.at("feature_index").get<std::size_t>();
  const std::string op = j.at("op").get<std::string>();
  const double v = j.at("value").get<double>();
  if (op == ">") {
    c.predicate = ThresholdPredicate{v};
  } else if (op == "=") {
    c.predicate = EqualityPredicate{v};
  } else {
    throw Error(ErrorKind::Parse, "unknown split operator '" + op + "'");
  }
  return c;
}

nlohmann::json to_json(const Standardizer& s) {
  return {{"mean", s.mean}, {"scale", s.scale}};
}

Standardizer standardizer_from_json(const nlohmann::json& j) {
  Standardizer s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.scale = j.at("scale").get<std::vector<double>>();
  if (s.mean.size() != s.scale.size()) throw Error(ErrorKind::Shape, "standardizer mean/scale length mismatch");
  return s;
}

nlohmann::json to_json(const SplitManifest& m) {
  nlohmann::json j;
  j["proportion_k"] = m.proportion_k;
  j["seed"] = m.seed;
  j["condition"] = to_json(m.condition);
  j["sizes"] = {{"train", m.sizes.train}, {"test", m.sizes.test}, {"prod", m.sizes.prod}};
  j["train_ids"] = m.train_ids;
  j["test_ids"] = m.test_ids;
  j["pool_ids"] = m.pool_ids;
  j["production_eval_ids"] = m.production_eval_ids;
  return j;
}

SplitManifest manifest_from_json(const nlohmann::json& j) {
  try {
    SplitManifest m;
    m.proportion_k = j.at("proportion_k").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.condition = condition_from_json(j.at("condition"));
    const auto& s = j.at("sizes");
    m.sizes = {s.at("train").get<std::size_t>(), s.at("test").get<std::size_t>(),
               s.at("prod").get<std::size_t>()};
    m.train_ids = j.at("train_ids").get<std::vector<SampleId>>();
    m.test_ids = j.at("test_ids").get<std::vector<SampleId>>();
    m.pool_ids = j.at("pool_ids").get<std::vector<SampleId>>();
    m.production_eval_ids = j.at("production_eval_ids").get<std::vector<SampleId>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("split manifest: ") + e.what());
  }
}

}  // namespace driftqa
