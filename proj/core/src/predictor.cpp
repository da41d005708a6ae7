#include "driftqa/predictor.hpp"

#include <cmath>

#include "driftqa/csv.hpp"
#include "driftqa/error.hpp"

namespace driftqa {

namespace {

void check_confidence(double s) {
  if (!(s >= 0.0 && s <= 1.0)) {
    throw Error(ErrorKind::Domain, "confidence " + csv::format_double(s) + " outside [0, 1]");
  }
}

// Mean and std computed from integer tallies, so weighted and replicated
// inputs give bit-identical statistics.
void set_stats(ConfidenceBin& bin, std::uint64_t hits, std::uint64_t total) {
  bin.count = total;
  if (total == 0) {
    bin.accuracy = 0.0;
    bin.sigma = 0.0;
    return;
  }
  const double p = static_cast<double>(hits) / static_cast<double>(total);
  bin.accuracy = p;
  bin.sigma = std::sqrt(p * (1.0 - p));
}

}  // namespace

double bin_lower_edge(std::size_t i, std::size_t bin_count) noexcept {
  return static_cast<double>(i) / static_cast<double>(bin_count);
}

std::size_t BinnedPredictor::bin_of(double s) const {
  check_confidence(s);
  const std::size_t m = bins_.size();
  auto b = static_cast<std::size_t>(s * static_cast<double>(m));
  if (b >= m) b = m - 1;
  // Align with the stored edges where s * m rounds across an integer.
  while (b + 1 < m && s >= bins_[b + 1].lower) ++b;
  while (b > 0 && s < bins_[b].lower) --b;
  return b;
}

BinnedPredictor BinnedPredictor::fit(std::span<const double> confidences,
                                     std::span<const std::uint8_t> outcomes, std::size_t bin_count,
                                     std::span<const std::uint64_t> multiplicities) {
  if (confidences.size() != outcomes.size()) {
    throw Error(ErrorKind::Shape, "confidences and outcomes differ in length");
  }
  if (!multiplicities.empty() && multiplicities.size() != confidences.size()) {
    throw Error(ErrorKind::Shape, "multiplicities and confidences differ in length");
  }
  if (confidences.empty()) throw Error(ErrorKind::EmptyInput, "cannot fit a predictor on no samples");
  if (bin_count < 1) throw Error(ErrorKind::Domain, "bin count must be at least 1");

  BinnedPredictor pred;
  pred.bins_.resize(bin_count);
  for (std::size_t i = 0; i < bin_count; ++i) {
    pred.bins_[i].lower = bin_lower_edge(i, bin_count);
    pred.bins_[i].upper = i + 1 == bin_count ? 1.0 : bin_lower_edge(i + 1, bin_count);
  }

  std::vector<std::uint64_t> hits(bin_count, 0), totals(bin_count, 0);
  for (std::size_t i = 0; i < confidences.size(); ++i) {
    if (outcomes[i] > 1) throw Error(ErrorKind::Domain, "outcome must be 0 or 1");
    const std::uint64_t w = multiplicities.empty() ? 1 : multiplicities[i];
    const std::size_t b = pred.bin_of(confidences[i]);
    totals[b] += w;
    hits[b] += w * outcomes[i];
  }

  std::uint64_t all_hits = 0;
  for (std::size_t b = 0; b < bin_count; ++b) {
    set_stats(pred.bins_[b], hits[b], totals[b]);
    all_hits += hits[b];
    pred.sample_count_ += totals[b];
  }
  if (pred.sample_count_ == 0) throw Error(ErrorKind::EmptyInput, "all multiplicities are zero");
  pred.global_accuracy_ = static_cast<double>(all_hits) / static_cast<double>(pred.sample_count_);
  return pred;
}

InstancePrediction BinnedPredictor::predict(double confidence) const {
  const auto& bin = bins_[bin_of(confidence)];
  if (bin.empty()) return {global_accuracy_, kEmptyBinSigma};
  return {bin.accuracy, bin.sigma};
}

double BinnedPredictor::predict_batch(std::span<const double> confidences) const {
  if (confidences.empty()) throw Error(ErrorKind::EmptyInput, "cannot predict on an empty batch");
  double sum = 0.0;
  for (double s : confidences) sum += predict(s).accuracy;
  return sum / static_cast<double>(confidences.size());
}

nlohmann::json BinnedPredictor::to_json() const {
  nlohmann::json j;
  j["bin_count"] = bins_.size();
  j["global_accuracy"] = global_accuracy_;
  j["sample_count"] = sample_count_;
  auto& arr = j["bins"] = nlohmann::json::array();
  for (const auto& b : bins_) {
    arr.push_back({{"lower", b.lower},
                   {"upper", b.upper},
                   {"accuracy", b.accuracy},
                   {"sigma", b.sigma},
                   {"count", b.count}});
  }
  return j;
}

BinnedPredictor BinnedPredictor::from_json(const nlohmann::json& j) {
  try {
    BinnedPredictor p;
    p.global_accuracy_ = j.at("global_accuracy").get<double>();
    p.sample_count_ = j.at("sample_count").get<std::uint64_t>();
    for (const auto& b : j.at("bins")) {
      p.bins_.push_back({b.at("lower").get<double>(), b.at("upper").get<double>(),
                         b.at("accuracy").get<double>(), b.at("sigma").get<double>(),
                         b.at("count").get<std::uint64_t>()});
    }
    if (p.bins_.size() != j.at("bin_count").get<std::size_t>() || p.bins_.empty()) {
      throw Error(ErrorKind::Schema, "predictor bin_count does not match bins");
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("predictor json: ") + e.what());
  }
}

}  // namespace driftqa
