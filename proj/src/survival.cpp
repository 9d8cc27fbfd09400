#include "ifs/survival.hpp"

#include "ifs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace ifs::survival {

CensoredSample::CensoredSample(std::vector<double> time, std::vector<int> status)
    : time_(std::move(time)), status_(std::move(status)), max_time_(0.0) {
  if (time_.size() != status_.size())
    throw DimensionError("censored sample: " + std::to_string(time_.size()) + " times but " +
                         std::to_string(status_.size()) + " status values");
  if (time_.size() < 2) throw InputError("censored sample: need at least 2 subjects");
  bool any_event = false;
  for (std::size_t i = 0; i < time_.size(); ++i) {
    if (!std::isfinite(time_[i]) || time_[i] <= 0.0)
      throw InputError("censored sample: time at subject " + std::to_string(i + 1) +
                       " must be finite and positive");
    if (status_[i] != 0 && status_[i] != 1)
      throw InputError("censored sample: status at subject " + std::to_string(i + 1) +
                       " must be 0 or 1");
    any_event = any_event || status_[i] == 1;
    max_time_ = std::max(max_time_, time_[i]);
  }
  if (!any_event) throw InputError("censored sample: no observed events");
}

StepFunction::StepFunction(double initial, std::vector<double> knots, std::vector<double> values,
                           Shape shape)
    : initial_(initial), knots_(std::move(knots)), values_(std::move(values)), shape_(shape) {
  if (knots_.size() != values_.size())
    throw DimensionError("step function: knots and values differ in length");
  double prev = initial_;
  for (std::size_t j = 0; j < knots_.size(); ++j) {
    if (!std::isfinite(knots_[j])) throw InputError("step function: non-finite knot");
    if (j > 0 && !(knots_[j] > knots_[j - 1]))
      throw InputError("step function: knots must be strictly increasing");
    const bool ok = shape_ == Shape::Nondecreasing ? values_[j] >= prev : values_[j] <= prev;
    if (!ok) throw InputError("step function: values violate monotonicity");
    prev = values_[j];
  }
}

double StepFunction::operator()(double t) const {
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  if (it == knots_.begin()) return initial_;
  return values_[static_cast<std::size_t>(it - knots_.begin()) - 1];
}

double StepFunction::left_limit(double t) const {
  auto it = std::lower_bound(knots_.begin(), knots_.end(), t);
  if (it == knots_.begin()) return initial_;
  return values_[static_cast<std::size_t>(it - knots_.begin()) - 1];
}

double StepFunction::integral(double a, double b) const {
  if (!(a <= b)) throw InputError("step function integral: need a <= b");
  double total = 0.0;
  double left = a;
  double level = (*this)(a);
  auto it = std::upper_bound(knots_.begin(), knots_.end(), a);
  for (; it != knots_.end() && *it < b; ++it) {
    total += level * (*it - left);
    left = *it;
    level = values_[static_cast<std::size_t>(it - knots_.begin())];
  }
  total += level * (b - left);
  return total;
}

namespace {

std::vector<std::size_t> order_by_time(std::span<const double> time) {
  std::vector<std::size_t> idx(time.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return time[a] < time[b]; });
  return idx;
}

// Integral of 1 - F over [a, b].
double survivor_integral(const StepFunction& cdf, double a, double b) {
  double total = 0.0;
  double left = a;
  double level = cdf(a);
  const auto knots = cdf.knots();
  const auto values = cdf.values();
  auto it = std::upper_bound(knots.begin(), knots.end(), a);
  for (; it != knots.end() && *it < b; ++it) {
    total += (1.0 - level) * (*it - left);
    left = *it;
    level = values[static_cast<std::size_t>(it - knots.begin())];
  }
  total += (1.0 - level) * (b - left);
  return total;
}

}  // namespace

StepFunction km_censoring_survivor(const CensoredSample& sample) {
  const auto time = sample.time();
  const auto status = sample.status();
  const auto order = order_by_time(time);
  const std::size_t n = order.size();

  std::vector<double> knots;
  std::vector<double> values;
  double surv = 1.0;
  std::size_t pos = 0;
  while (pos < n) {
    const double t = time[order[pos]];
    const std::size_t at_risk = n - pos;
    std::size_t censored = 0;
    std::size_t end = pos;
    while (end < n && time[order[end]] == t) {
      if (status[order[end]] == 0) ++censored;
      ++end;
    }
    if (censored > 0) {
      surv *= 1.0 - static_cast<double>(censored) / static_cast<double>(at_risk);
      knots.push_back(t);
      values.push_back(surv);
    }
    pos = end;
  }
  return StepFunction(1.0, std::move(knots), std::move(values),
                      StepFunction::Shape::Nonincreasing);
}

StepFunction failure_cdf_ipcw(const CensoredSample& sample, const StepFunction& censoring_survivor) {
  const auto time = sample.time();
  const auto status = sample.status();
  const auto order = order_by_time(time);
  const double n = static_cast<double>(order.size());

  auto weight_at = [&](double t) {
    double g = censoring_survivor(t);
    if (g > 0.0) return 1.0 / g;
    // Last strictly positive level at or before t.
    const auto knots = censoring_survivor.knots();
    const auto values = censoring_survivor.values();
    g = censoring_survivor.initial();
    for (std::size_t j = 0; j < knots.size() && knots[j] <= t; ++j)
      if (values[j] > 0.0) g = values[j];
    if (!(g > 0.0)) throw NumericError("IPCW: censoring survivor has no positive level");
    return 1.0 / g;
  };

  std::vector<double> knots;
  std::vector<double> values;
  double cumulative = 0.0;
  std::size_t pos = 0;
  while (pos < order.size()) {
    const double t = time[order[pos]];
    bool event = false;
    for (; pos < order.size() && time[order[pos]] == t; ++pos) {
      if (status[order[pos]] == 1) {
        cumulative += weight_at(t);
        event = true;
      }
    }
    if (event) {
      knots.push_back(t);
      values.push_back(std::min(cumulative / n, 1.0));
    }
  }
  return StepFunction(0.0, std::move(knots), std::move(values),
                      StepFunction::Shape::Nondecreasing);
}

double conditional_mean_beyond(double y, const StepFunction& cdf, double tau) {
  if (!std::isfinite(y) || !std::isfinite(tau) || y > tau)
    throw InputError("conditional mean: need finite y <= tau");
  if (y == tau) return tau;
  const double fy = cdf(y);
  if (fy >= 1.0)
    throw UndefinedConditionalError("conditional mean: F(y) = 1 at y = " + std::to_string(y));
  // tau - y F(y) - int_y^tau F  ==  y (1 - F(y)) + int_y^tau (1 - F)
  const double value = y + survivor_integral(cdf, y, tau) / (1.0 - fy);
  return std::min(value, tau);
}

ImputedResponse impute_response(const CensoredSample& sample, std::optional<double> tau) {
  const double upper = tau.value_or(sample.max_time());
  if (!std::isfinite(upper) || upper < sample.max_time())
    throw InputError("imputation: tau must be at least the largest observed time");

  const StepFunction g = km_censoring_survivor(sample);
  const StepFunction f = failure_cdf_ipcw(sample, g);

  const auto time = sample.time();
  const auto status = sample.status();
  ImputedResponse out{std::vector<double>(time.begin(), time.end()), upper};
  for (std::size_t i = 0; i < time.size(); ++i) {
    if (status[i] == 1) continue;
    out.values[i] = f(time[i]) >= 1.0 ? upper : conditional_mean_beyond(time[i], f, upper);
  }
  return out;
}

}  // namespace ifs::survival
