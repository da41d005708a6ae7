#include "driftqa/basemodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <unordered_set>

#include "driftqa/csv.hpp"
#include "driftqa/error.hpp"
#include "driftqa/random.hpp"

namespace driftqa {

namespace {

constexpr double kSimplexTolerance = 1e-6;

void softmax_inplace(std::span<double> z) {
  const double top = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - top);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

}  // namespace

ScoredDataset ScoredDataset::subset(std::span<const std::size_t> rows) const {
  ScoredDataset out;
  out.class_probs = class_probs.select_rows(rows);
  out.ids.reserve(rows.size());
  out.predicted.reserve(rows.size());
  out.confidence.reserve(rows.size());
  if (outcome) out.outcome.emplace();
  for (std::size_t r : rows) {
    out.ids.push_back(ids[r]);
    out.predicted.push_back(predicted[r]);
    out.confidence.push_back(confidence[r]);
    if (outcome) out.outcome->push_back((*outcome)[r]);
  }
  return out;
}

std::unordered_map<SampleId, std::size_t> ScoredDataset::index() const {
  std::unordered_map<SampleId, std::size_t> idx;
  idx.reserve(ids.size());
  for (std::size_t r = 0; r < ids.size(); ++r) idx.emplace(ids[r], r);
  return idx;
}

ScoredDataset make_scored(std::vector<SampleId> ids, Matrix class_probs) {
  if (ids.size() != class_probs.rows()) {
    throw Error(ErrorKind::Shape, "ids and probability rows differ in length");
  }
  ScoredDataset out;
  out.predicted.resize(ids.size());
  out.confidence.resize(ids.size());
  for (std::size_t r = 0; r < class_probs.rows(); ++r) {
    auto p = class_probs.row(r);
    double sum = 0.0;
    for (double v : p) {
      if (!(v >= 0.0)) throw Error(ErrorKind::Domain, "negative probability in row " + std::to_string(r));
      sum += v;
    }
    if (std::abs(sum - 1.0) > kSimplexTolerance) {
      throw Error(ErrorKind::Domain, "probabilities in row " + std::to_string(r) + " sum to " +
                                         csv::format_double(sum));
    }
    // max_element returns the first maximum, so ties go to the lowest class.
    auto top = std::max_element(p.begin(), p.end());
    out.predicted[r] = static_cast<int>(top - p.begin());
    out.confidence[r] = *top;
  }
  out.ids = std::move(ids);
  out.class_probs = std::move(class_probs);
  return out;
}

void attach_outcomes(ScoredDataset& scored, std::span<const int> labels) {
  if (labels.size() != scored.size()) {
    throw Error(ErrorKind::Shape, "label count " + std::to_string(labels.size()) +
                                      " does not match scored rows " + std::to_string(scored.size()));
  }
  std::vector<std::uint8_t> o(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) o[i] = scored.predicted[i] == labels[i] ? 1 : 0;
  scored.outcome = std::move(o);
}

double accuracy(const ScoredDataset& scored) {
  if (!scored.outcome) throw Error(ErrorKind::Consistency, "accuracy requires revealed outcomes");
  if (scored.outcome->empty()) throw Error(ErrorKind::EmptyInput, "accuracy of an empty set");
  std::size_t hits = std::accumulate(scored.outcome->begin(), scored.outcome->end(), std::size_t{0});
  return static_cast<double>(hits) / static_cast<double>(scored.outcome->size());
}

LinearSoftmaxModel::LinearSoftmaxModel(Matrix weights, std::vector<double> bias,
                                       std::optional<Standardizer> standardizer)
    : weights_(std::move(weights)), bias_(std::move(bias)), standardizer_(std::move(standardizer)) {
  if (weights_.rows() < 1 || bias_.size() != weights_.rows()) {
    throw Error(ErrorKind::Shape, "weight rows and bias length must match and be positive");
  }
  if (standardizer_ && standardizer_->mean.size() != weights_.cols()) {
    throw Error(ErrorKind::Shape, "standardizer width does not match model input");
  }
}

std::vector<double> LinearSoftmaxModel::score(std::span<const double> x) const {
  if (x.size() != weights_.cols()) {
    throw Error(ErrorKind::Shape, "model expects " + std::to_string(weights_.cols()) +
                                      " features, got " + std::to_string(x.size()));
  }
  std::vector<double> z(bias_);
  for (std::size_t c = 0; c < z.size(); ++c) {
    auto w = weights_.row(c);
    z[c] += std::inner_product(w.begin(), w.end(), x.begin(), 0.0);
  }
  softmax_inplace(z);
  return z;
}

nlohmann::json LinearSoftmaxModel::to_json() const {
  nlohmann::json j;
  j["kind"] = "linear_softmax";
  j["class_count"] = class_count();
  j["feature_dim"] = feature_dim();
  std::vector<std::vector<double>> w;
  for (std::size_t c = 0; c < weights_.rows(); ++c) {
    auto row = weights_.row(c);
    w.emplace_back(row.begin(), row.end());
  }
  j["weights"] = w;
  j["bias"] = bias_;
  if (standardizer_) j["standardization"] = driftqa::to_json(*standardizer_);
  return j;
}

LinearSoftmaxModel LinearSoftmaxModel::from_json(const nlohmann::json& j) {
  try {
    auto rows = j.at("weights").get<std::vector<std::vector<double>>>();
    Matrix w;
    for (const auto& r : rows) w.append_row(r);
    std::optional<Standardizer> st;
    if (j.contains("standardization")) st = standardizer_from_json(j.at("standardization"));
    return LinearSoftmaxModel(std::move(w), j.at("bias").get<std::vector<double>>(), std::move(st));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("model json: ") + e.what());
  }
}

LinearSoftmaxModel train_builtin(const Dataset& train, const TrainOptions& options,
                                 std::optional<Standardizer> standardizer) {
  const std::size_t n = train.size();
  const std::size_t d = train.dim();
  const auto classes = static_cast<std::size_t>(train.class_count());
  std::set<int> present(train.labels().begin(), train.labels().end());
  if (present.size() < 2) {
    throw Error(ErrorKind::DegenerateData, "training data has " + std::to_string(present.size()) +
                                               " distinct class(es); need at least 2");
  }
  if (n < classes) {
    throw Error(ErrorKind::DegenerateData, "training set of " + std::to_string(n) +
                                               " rows is smaller than the class count");
  }
  if (options.epochs < 0 || !(options.learning_rate > 0.0)) {
    throw Error(ErrorKind::Domain, "epochs must be >= 0 and learning rate > 0");
  }

  Rng rng = make_rng(options.seed);
  std::normal_distribution<double> init(0.0, 0.01);
  Matrix w(classes, d);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t k = 0; k < d; ++k) w(c, k) = init(rng);
  }
  std::vector<double> b(classes, 0.0);

  const auto& x = train.features();
  const auto& y = train.labels();
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> z(classes);
  Matrix grad_w(classes, d);
  std::vector<double> grad_b(classes);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::fill(grad_b.begin(), grad_b.end(), 0.0);
    grad_w = Matrix(classes, d);
    for (std::size_t i = 0; i < n; ++i) {
      auto xi = x.row(i);
      for (std::size_t c = 0; c < classes; ++c) {
        auto wc = w.row(c);
        z[c] = b[c] + std::inner_product(wc.begin(), wc.end(), xi.begin(), 0.0);
      }
      softmax_inplace(z);
      z[static_cast<std::size_t>(y[i])] -= 1.0;
      for (std::size_t c = 0; c < classes; ++c) {
        grad_b[c] += z[c];
        auto g = grad_w.row(c);
        for (std::size_t k = 0; k < d; ++k) g[k] += z[c] * xi[k];
      }
    }
    const double step = options.learning_rate * inv_n;
    for (std::size_t c = 0; c < classes; ++c) {
      b[c] -= step * grad_b[c];
      for (std::size_t k = 0; k < d; ++k) w(c, k) -= step * grad_w(c, k);
    }
  }
  return LinearSoftmaxModel(std::move(w), std::move(b), std::move(standardizer));
}

ScoredDataset score_features(const BlackboxModel& model, const Matrix& features,
                             std::vector<SampleId> ids) {
  if (features.rows() > 0 && features.cols() != model.feature_dim()) {
    throw Error(ErrorKind::Shape, "dataset has " + std::to_string(features.cols()) +
                                      " features, model expects " + std::to_string(model.feature_dim()));
  }
  Matrix probs(features.rows(), static_cast<std::size_t>(model.class_count()));
  for (std::size_t r = 0; r < features.rows(); ++r) {
    auto p = model.score(features.row(r));
    std::copy(p.begin(), p.end(), probs.row(r).begin());
  }
  return make_scored(std::move(ids), std::move(probs));
}

ScoredDataset score_batch(const BlackboxModel& model, const Dataset& ds, bool reveal_labels) {
  ScoredDataset out = score_features(model, ds.features(), ds.ids());
  if (reveal_labels) attach_outcomes(out, ds.labels());
  return out;
}

ScoredDataset ingest_scores(const std::filesystem::path& path) {
  csv::Table table = csv::read(path);
  const auto& h = table.header;
  if (h.empty() || h[0] != "id") throw Error(ErrorKind::Schema, "score file must start with an 'id' column");
  std::size_t classes = 0;
  while (1 + classes < h.size() && h[1 + classes] == "prob_" + std::to_string(classes)) ++classes;
  if (classes < 1) throw Error(ErrorKind::Schema, "score file has no prob_0 column");
  const bool has_label = h.size() == classes + 2 && h.back() == "label";
  if (h.size() != classes + 1 && !has_label) {
    throw Error(ErrorKind::Schema, "unexpected columns after prob_" + std::to_string(classes - 1));
  }
  if (table.rows.empty()) throw Error(ErrorKind::EmptyInput, path.string() + " has no score rows");

  std::vector<SampleId> ids;
  std::vector<int> labels;
  Matrix probs(table.rows.size(), classes);
  std::unordered_set<SampleId> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = "row " + std::to_string(r + 1);
    double v = 0;
    if (!csv::parse_double(row[0], v) || v != std::floor(v)) {
      throw Error(ErrorKind::Parse, where + ": id '" + row[0] + "' is not an integer");
    }
    auto id = static_cast<SampleId>(v);
    if (!seen.insert(id).second) throw Error(ErrorKind::Schema, "duplicate id " + std::to_string(id));
    ids.push_back(id);
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      double p = 0;
      if (!csv::parse_double(row[1 + c], p)) {
        throw Error(ErrorKind::Parse, where + ", prob_" + std::to_string(c) + ": '" + row[1 + c] + "'");
      }
      if (p < 0.0) {
        throw Error(ErrorKind::Parse, where + ", prob_" + std::to_string(c) + ": negative probability");
      }
      probs(r, c) = p;
      sum += p;
    }
    if (!(sum > 0.0)) throw Error(ErrorKind::Parse, where + ": probabilities sum to zero");
    for (std::size_t c = 0; c < classes; ++c) probs(r, c) /= sum;
    if (has_label) {
      double y = 0;
      if (!csv::parse_double(row.back(), y) || y < 0 || y != std::floor(y) ||
          y >= static_cast<double>(classes)) {
        throw Error(ErrorKind::Parse, where + ": label '" + row.back() + "' is not a class index");
      }
      labels.push_back(static_cast<int>(y));
    }
  }
  ScoredDataset out = make_scored(std::move(ids), std::move(probs));
  if (has_label) attach_outcomes(out, labels);
  return out;
}

void write_scores(const std::filesystem::path& path, const ScoredDataset& scored,
                  std::span<const int> labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "id";
  for (int c = 0; c < scored.class_count(); ++c) out << ",prob_" << c;
  if (!labels.empty()) out << ",label";
  out << '\n';
  for (std::size_t r = 0; r < scored.size(); ++r) {
    out << scored.ids[r];
    for (double p : scored.class_probs.row(r)) out << ',' << csv::format_double(p);
    if (!labels.empty()) out << ',' << labels[r];
    out << '\n';
  }
}

}  // namespace driftqa
