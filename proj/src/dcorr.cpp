#include "ifs/dcorr.hpp"

#include "ifs/errors.hpp"
#include "ifs/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ifs::dcorr {
namespace {

void require_sample(std::span<const double> x, const char* what) {
  if (x.size() < 2) throw InputError(std::string(what) + ": need at least 2 observations");
  for (double v : x)
    if (!std::isfinite(v)) throw InputError(std::string(what) + ": non-finite value");
}

void require_same_length(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw DimensionError("length mismatch: " + std::to_string(u.size()) + " vs " +
                         std::to_string(v.size()));
}

// Symmetric in (row_k, row_l) bit for bit, so A_kl == A_lk exactly.
inline double center(double a, double row_k, double row_l, double grand) {
  return (a - (row_k + row_l)) + grand;
}

struct RowMeans {
  std::vector<double> row;
  double grand = 0.0;
};

RowMeans row_means_1d(std::span<const double> x) {
  const std::size_t n = x.size();
  RowMeans m;
  m.row.resize(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  double grand = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double s = 0.0;
    const double xk = x[k];
    for (std::size_t l = 0; l < n; ++l) s += std::abs(xk - x[l]);
    m.row[k] = s * inv_n;
    grand += m.row[k];
  }
  m.grand = grand * inv_n;
  return m;
}

std::span<const double> column(const Eigen::MatrixXd& m, Eigen::Index k) {
  return {m.data() + k * m.rows(), static_cast<std::size_t>(m.rows())};
}

}  // namespace

DistanceMatrix::DistanceMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols()) throw DimensionError("distance matrix must be square");
  if (entries_.rows() < 2) throw InputError("distance matrix: need at least 2 observations");
}

DistanceMatrix pairwise_distances(std::span<const double> sample) {
  require_sample(sample, "pairwise_distances");
  const auto n = static_cast<Eigen::Index>(sample.size());
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) d(i, j) = std::abs(sample[i] - sample[j]);
  return DistanceMatrix(std::move(d));
}

DistanceMatrix pairwise_distances(const Eigen::MatrixXd& points) {
  if (points.rows() < 2) throw InputError("pairwise_distances: need at least 2 observations");
  if (!points.allFinite()) throw InputError("pairwise_distances: non-finite value");
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = (points.row(i) - points.row(j)).norm();
      d(i, j) = v;
      d(j, i) = v;
    }
  return DistanceMatrix(std::move(d));
}

CenteredMatrix double_center(const DistanceMatrix& dm) {
  const Eigen::MatrixXd& d = dm.entries();
  const Eigen::Index n = d.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> row(n);
  double grand = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    double s = 0.0;
    for (Eigen::Index l = 0; l < n; ++l) s += d(k, l);
    row[k] = s * inv_n;
    grand += row[k];
  }
  grand *= inv_n;

  Eigen::MatrixXd a(n, n);
  for (Eigen::Index l = 0; l < n; ++l)
    for (Eigen::Index k = 0; k < n; ++k) a(k, l) = center(d(k, l), row[k], row[l], grand);
  return CenteredMatrix(std::move(a));
}

ResponseKernel::ResponseKernel(std::span<const double> response)
    : n_(response.size()),
      centered_(double_center(pairwise_distances(response))),
      dvar2_(0.0) {
  dvar2_ = moments(response).dvar2_x;
}

ResponseKernel::Moments ResponseKernel::moments(std::span<const double> x) const {
  if (x.size() != n_)
    throw DimensionError("length mismatch: " + std::to_string(n_) + " vs " +
                         std::to_string(x.size()));
  require_sample(x, "distance covariance");
  const RowMeans m = row_means_1d(x);
  const Eigen::MatrixXd& b = centered_.entries();
  const auto n = static_cast<Eigen::Index>(n_);

  // Upper triangle doubled plus the diagonal; rows accumulate in fixed order.
  double cross = 0.0;
  double self = 0.0;
  for (Eigen::Index l = 0; l < n; ++l) {
    const double xl = x[l];
    const double rl = m.row[l];
    const double* bcol = b.data() + l * n;
    double cross_row = 0.0;
    double self_row = 0.0;
    for (Eigen::Index k = 0; k < l; ++k) {
      const double a = center(std::abs(x[k] - xl), m.row[k], rl, m.grand);
      cross_row += a * bcol[k];
      self_row += a * a;
    }
    const double diag = center(0.0, rl, rl, m.grand);
    cross += 2.0 * cross_row + diag * bcol[l];
    self += 2.0 * self_row + diag * diag;
  }
  const double inv_n2 = 1.0 / (static_cast<double>(n_) * static_cast<double>(n_));
  return {cross * inv_n2, self * inv_n2};
}

double ResponseKernel::correlation(std::span<const double> x) const {
  const Moments m = moments(x);
  if (!(dvar2_ > 0.0) || !(m.dvar2_x > 0.0)) return 0.0;
  const double dcov = std::sqrt(std::max(m.dcov2, 0.0));
  const double r = dcov / std::sqrt(std::sqrt(dvar2_) * std::sqrt(m.dvar2_x));
  return std::clamp(r, 0.0, 1.0);
}

double distance_covariance_squared(std::span<const double> u, std::span<const double> v) {
  require_same_length(u, v);
  require_sample(u, "distance covariance");
  return ResponseKernel(u).moments(v).dcov2;
}

double distance_covariance(std::span<const double> u, std::span<const double> v) {
  return std::sqrt(std::max(distance_covariance_squared(u, v), 0.0));
}

double distance_correlation(std::span<const double> u, std::span<const double> v) {
  require_same_length(u, v);
  require_sample(u, "distance correlation");
  return ResponseKernel(u).correlation(v);
}

std::vector<double> marginal_sweep(const ResponseKernel& kernel, const Eigen::MatrixXd& covariates,
                                   std::size_t workers) {
  if (static_cast<std::size_t>(covariates.rows()) != kernel.size())
    throw DimensionError("marginal_sweep: covariate rows " + std::to_string(covariates.rows()) +
                         " != response length " + std::to_string(kernel.size()));
  if (covariates.cols() < 1) throw DimensionError("marginal_sweep: need at least one covariate");
  std::vector<double> out(static_cast<std::size_t>(covariates.cols()));
  parallel_for(out.size(), workers, [&](std::size_t k) {
    out[k] = kernel.correlation(column(covariates, static_cast<Eigen::Index>(k)));
  });
  return out;
}

std::vector<double> marginal_sweep(std::span<const double> response,
                                   const Eigen::MatrixXd& covariates, std::size_t workers) {
  require_sample(response, "marginal_sweep response");
  return marginal_sweep(ResponseKernel(response), covariates, workers);
}

}  // namespace ifs::dcorr
