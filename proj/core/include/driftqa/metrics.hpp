#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace driftqa {

// The four accuracy estimates tracked per iteration.
enum class Method { PerfPred, PerfPredResampled, TestSet, TestSetResampled };

inline constexpr Method kAllMethods[] = {Method::PerfPredResampled, Method::PerfPred,
                                         Method::TestSetResampled, Method::TestSet};

std::string_view to_string(Method m) noexcept;
Method method_from_string(std::string_view name);

struct CurvePoint {
  std::uint64_t labels_added = 0;
  double error = 0.0;  // percentage points
};

struct ErrorCurve {
  Method method = Method::TestSet;
  std::vector<CurvePoint> points;
};

// 100 * |estimate - truth|, in percentage points.
double abs_error(double estimate, double truth) noexcept;

// Trapezoidal area under the error curve with x in minibatch units
// (point i sits at x = i). Throws Error{Domain} for fewer than two points.
double auc(std::span<const double> errors);
double auc(const ErrorCurve& curve);

// Smallest labels_added at which the error is within tolerance.
std::optional<std::uint64_t> labels_to_reach(const ErrorCurve& curve, double tolerance);

struct EffortSaved {
  enum class Status { Saved, NotReached, Undefined };
  Status status = Status::Undefined;
  double percent = 0.0;  // meaningful only for Saved
};

std::string_view to_string(EffortSaved::Status s) noexcept;

/**
 * Relative labeling effort saved against the baseline at a tolerance:
 *   100 * (N_baseline - N_method) / N_baseline
 * Reaching the tolerance with no labels counts as 100%. A method that never
 * reaches it is NotReached; a baseline that never does makes the saving
 * Undefined. Curves must share their x-grid.
 */
EffortSaved effort_saved(const ErrorCurve& baseline, const ErrorCurve& method, double tolerance);

// Fractional ranks ascending by value (1 = smallest); ties share the mean rank.
std::vector<double> rank_order(std::span<const double> values);

struct CurveStats {
  std::vector<std::uint64_t> labels_added;
  std::vector<double> mean;
  std::vector<double> stddev;  // population
};

// Pointwise mean and population std over repetitions of one method's curve.
CurveStats aggregate(std::span<const ErrorCurve> repetitions);

}  // namespace driftqa
