#pragma once

// Kaplan-Meier censoring survivor, IPCW failure-time CDF and the
// conditional-mean imputation of censored responses.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace ifs::survival {

/// Observed times y = min(T, C) and event indicators delta = 1{T <= C}.
class CensoredSample {
 public:
  CensoredSample(std::vector<double> time, std::vector<int> status);

  std::size_t size() const noexcept { return time_.size(); }
  std::span<const double> time() const noexcept { return time_; }
  std::span<const int> status() const noexcept { return status_; }
  double max_time() const noexcept { return max_time_; }

 private:
  std::vector<double> time_;
  std::vector<int> status_;
  double max_time_;
};

/// Monotone right-continuous step function: `initial` before the first knot,
/// values[j] on [knots[j], knots[j+1]).
class StepFunction {
 public:
  enum class Shape { Nonincreasing, Nondecreasing };

  StepFunction(double initial, std::vector<double> knots, std::vector<double> values, Shape shape);

  double operator()(double t) const;
  /// Limit from the left, F(t-).
  double left_limit(double t) const;

  double initial() const noexcept { return initial_; }
  std::span<const double> knots() const noexcept { return knots_; }
  std::span<const double> values() const noexcept { return values_; }
  Shape shape() const noexcept { return shape_; }

  /// Exact integral of the step function over [a, b], a <= b.
  double integral(double a, double b) const;

 private:
  double initial_;
  std::vector<double> knots_;
  std::vector<double> values_;
  Shape shape_;
};

/// Kaplan-Meier estimate of the censoring survivor G, treating 1 - delta as
/// the event indicator. Starts at 1; ties use the risk set {i : y_i >= t}.
StepFunction km_censoring_survivor(const CensoredSample& sample);

/// F_T(y) = n^-1 sum_i delta_i / G(y_i) 1{y_i <= y}, clamped to [0, 1].
/// G(y_i) is read right-continuously; a zero value is replaced by the last
/// strictly positive level of G.
StepFunction failure_cdf_ipcw(const CensoredSample& sample, const StepFunction& censoring_survivor);

/// Estimated E(T | tau > T > y) written as
///   [{tau - y F(y)} - int_y^tau F(t) dt] / (1 - F(y)).
/// Equal to tau when y == tau. Throws UndefinedConditionalError if F(y) >= 1.
/// The expression equals the truncated mean of F only when F(tau) = 1; any
/// mass F leaves beyond tau is effectively placed at tau.
double conditional_mean_beyond(double y, const StepFunction& cdf, double tau);

struct ImputedResponse {
  std::vector<double> values;
  double tau;
};

/// Y* = delta y + (1 - delta) E(T | T > y) with the IPCW CDF. tau defaults to
/// the largest observed time and must not be smaller than it. Censored
/// subjects where F(y_i) = 1 are imputed as tau.
ImputedResponse impute_response(const CensoredSample& sample, std::optional<double> tau = {});

}  // namespace ifs::survival
