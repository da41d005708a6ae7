#include "driftqa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "driftqa/error.hpp"

namespace driftqa {

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::PerfPred: return "perf-pred";
    case Method::PerfPredResampled: return "perf-pred-resampled";
    case Method::TestSet: return "test-set";
    case Method::TestSetResampled: return "test-set-resampled";
  }
  return "unknown";
}

Method method_from_string(std::string_view name) {
  for (Method m : kAllMethods) {
    if (to_string(m) == name) return m;
  }
  throw Error(ErrorKind::Parse, "unknown method '" + std::string(name) + "'");
}

std::string_view to_string(EffortSaved::Status s) noexcept {
  switch (s) {
    case EffortSaved::Status::Saved: return "saved";
    case EffortSaved::Status::NotReached: return "not-reached";
    case EffortSaved::Status::Undefined: return "undefined";
  }
  return "undefined";
}

double abs_error(double estimate, double truth) noexcept { return 100.0 * std::abs(estimate - truth); }

double auc(std::span<const double> errors) {
  if (errors.size() < 2) throw Error(ErrorKind::Domain, "area under a curve needs at least two points");
  double area = 0.0;
  for (std::size_t i = 1; i < errors.size(); ++i) area += 0.5 * (errors[i - 1] + errors[i]);
  return area;
}

double auc(const ErrorCurve& curve) {
  std::vector<double> e;
  e.reserve(curve.points.size());
  for (const auto& p : curve.points) e.push_back(p.error);
  return auc(e);
}

std::optional<std::uint64_t> labels_to_reach(const ErrorCurve& curve, double tolerance) {
  for (const auto& p : curve.points) {
    if (p.error <= tolerance) return p.labels_added;
  }
  return std::nullopt;
}

EffortSaved effort_saved(const ErrorCurve& baseline, const ErrorCurve& method, double tolerance) {
  if (baseline.points.size() != method.points.size()) {
    throw Error(ErrorKind::Alignment, "curves have " + std::to_string(baseline.points.size()) + " and " +
                                          std::to_string(method.points.size()) + " points");
  }
  for (std::size_t i = 0; i < baseline.points.size(); ++i) {
    if (baseline.points[i].labels_added != method.points[i].labels_added) {
      throw Error(ErrorKind::Alignment, "curves disagree on labels_added at point " + std::to_string(i));
    }
  }
  const auto n_base = labels_to_reach(baseline, tolerance);
  const auto n_method = labels_to_reach(method, tolerance);
  if (!n_base) return {EffortSaved::Status::Undefined, 0.0};
  if (!n_method) return {EffortSaved::Status::NotReached, 0.0};
  if (*n_base == 0) {
    // The baseline needs no labels: nothing to save, and any later crossing
    // has no finite relative cost.
    if (*n_method == 0) return {EffortSaved::Status::Saved, 0.0};
    return {EffortSaved::Status::Undefined, 0.0};
  }
  if (*n_method == 0) return {EffortSaved::Status::Saved, 100.0};
  const double b = static_cast<double>(*n_base);
  const double m = static_cast<double>(*n_method);
  return {EffortSaved::Status::Saved, 100.0 * (b - m) / b};
}

std::vector<double> rank_order(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 (0-based) share rank mean of (i+1)..j.
    const double shared = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = shared;
    i = j;
  }
  return ranks;
}

CurveStats aggregate(std::span<const ErrorCurve> reps) {
  if (reps.empty()) throw Error(ErrorKind::EmptyInput, "no curves to aggregate");
  const std::size_t points = reps.front().points.size();
  for (const auto& c : reps) {
    if (c.points.size() != points) throw Error(ErrorKind::Alignment, "repetitions differ in length");
  }
  CurveStats s;
  s.labels_added.resize(points);
  s.mean.assign(points, 0.0);
  s.stddev.assign(points, 0.0);
  const double n = static_cast<double>(reps.size());
  for (std::size_t i = 0; i < points; ++i) {
    s.labels_added[i] = reps.front().points[i].labels_added;
    double sum = 0.0;
    for (const auto& c : reps) {
      if (c.points[i].labels_added != s.labels_added[i]) {
        throw Error(ErrorKind::Alignment, "repetitions disagree on labels_added at point " + std::to_string(i));
      }
      sum += c.points[i].error;
    }
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& c : reps) {
      const double d = c.points[i].error - mean;
      ss += d * d;
    }
    s.mean[i] = mean;
    s.stddev[i] = std::sqrt(ss / n);
  }
  return s;
}

}  // namespace driftqa
