#pragma once

// Empirical distance covariance / correlation (V-statistic form) and the
// marginal screening sweep built on it.

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace ifs::dcorr {

/// Symmetric n x n matrix of Euclidean distances with a zero diagonal.
class DistanceMatrix {
 public:
  explicit DistanceMatrix(Eigen::MatrixXd entries);
  const Eigen::MatrixXd& entries() const noexcept { return entries_; }
  Eigen::Index size() const noexcept { return entries_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

 private:
  Eigen::MatrixXd entries_;
};

/// Double-centered distance matrix: every row and column sums to zero.
class CenteredMatrix {
 public:
  explicit CenteredMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {}
  const Eigen::MatrixXd& entries() const noexcept { return entries_; }
  Eigen::Index size() const noexcept { return entries_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

 private:
  Eigen::MatrixXd entries_;
};

DistanceMatrix pairwise_distances(std::span<const double> sample);

/// Rows of `points` are observations in R^d.
DistanceMatrix pairwise_distances(const Eigen::MatrixXd& points);

/// A_kl = a_kl - mean(a_k.) - mean(a_.l) + mean(a_..)
CenteredMatrix double_center(const DistanceMatrix& d);

/// dcov_n^2(u, v) = n^-2 sum_kl A_kl B_kl
double distance_covariance_squared(std::span<const double> u, std::span<const double> v);

/// Square root of distance_covariance_squared.
double distance_covariance(std::span<const double> u, std::span<const double> v);

/// dcov(u,v) / sqrt(dcov(u,u) dcov(v,v)), in [0, 1]. Zero when either
/// variable has zero distance variance.
double distance_correlation(std::span<const double> u, std::span<const double> v);

/// Centered distance matrix of a fixed variable (typically the response),
/// built once and reused against many partner columns.
class ResponseKernel {
 public:
  explicit ResponseKernel(std::span<const double> response);

  std::size_t size() const noexcept { return n_; }
  double distance_variance_squared() const noexcept { return dvar2_; }
  const CenteredMatrix& centered() const noexcept { return centered_; }

  struct Moments {
    double dcov2;      // dcov_n^2(response, x)
    double dvar2_x;    // dcov_n^2(x, x)
  };

  /// Both moments in one pass; x's centered entries are formed on the fly.
  Moments moments(std::span<const double> x) const;

  /// distance_correlation(response, x)
  double correlation(std::span<const double> x) const;

 private:
  std::size_t n_;
  CenteredMatrix centered_;
  double dvar2_;
};

/// omega_k = distance_correlation(response, covariates.col(k)) for every k.
/// Columns are evaluated independently; the result does not depend on the
/// worker count.
std::vector<double> marginal_sweep(std::span<const double> response,
                                   const Eigen::MatrixXd& covariates,
                                   std::size_t workers = 1);

/// Sweep against an already-built response kernel.
std::vector<double> marginal_sweep(const ResponseKernel& kernel,
                                   const Eigen::MatrixXd& covariates,
                                   std::size_t workers = 1);

}  // namespace ifs::dcorr
