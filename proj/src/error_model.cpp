#include "ifs/error_model.hpp"

#include "ifs/errors.hpp"

#include <algorithm>
#include <cmath>

namespace ifs::error_model {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Known: return "known";
    case Provenance::Repeated: return "repeated";
    case Provenance::Validation: return "validation";
    case Provenance::AssumedDiagonal: return "assumed-diagonal";
  }
  return "unknown";
}

ErrorCovariance::ErrorCovariance(Eigen::MatrixXd sigma, Provenance provenance)
    : sigma_(std::move(sigma)), provenance_(provenance) {
  if (sigma_.rows() != sigma_.cols()) throw DimensionError("error covariance must be square");
  if (sigma_.rows() < 1) throw DimensionError("error covariance must be at least 1 x 1");
  if (!sigma_.allFinite()) throw InputError("error covariance has non-finite entries");

  const double scale = std::max(1.0, sigma_.cwiseAbs().maxCoeff());
  if ((sigma_ - sigma_.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw InputError("error covariance is not symmetric");
  sigma_ = (0.5 * (sigma_ + sigma_.transpose())).eval();

  const auto p = sigma_.rows();
  Eigen::LLT<Eigen::MatrixXd> probe(sigma_ + 1e-8 * Eigen::MatrixXd::Identity(p, p));
  if (probe.info() == Eigen::Success) return;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma_);
  if (eig.info() != Eigen::Success) throw NumericError("error covariance: eigensolver failed");
  if (eig.eigenvalues().minCoeff() >= -1e-8) return;
  const Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(0.0);
  sigma_ = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
  sigma_ = (0.5 * (sigma_ + sigma_.transpose())).eval();
  psd_repaired_ = true;
}

ErrorCovariance ErrorCovariance::zero(std::size_t p, Provenance provenance) {
  const auto d = static_cast<Eigen::Index>(p);
  return ErrorCovariance(Eigen::MatrixXd::Zero(d, d), provenance);
}

bool ErrorCovariance::is_zero() const { return (sigma_.array() == 0.0).all(); }

std::size_t RepeatedMeasurements::dimension() const {
  return subjects.empty() ? 0 : static_cast<std::size_t>(subjects.front().replicates.cols());
}

std::size_t RepeatedMeasurements::contrasts() const {
  std::size_t total = 0;
  for (const auto& s : subjects)
    if (s.replicates.rows() > 0) total += static_cast<std::size_t>(s.replicates.rows()) - 1;
  return total;
}

ErrorCovariance sigma_from_repeats(const RepeatedMeasurements& data) {
  if (data.subjects.empty()) throw InputError("repeated measurements: no subjects");
  const auto p = static_cast<Eigen::Index>(data.dimension());
  if (p < 1) throw DimensionError("repeated measurements: no covariates");

  Eigen::Index rows = 0;
  for (const auto& s : data.subjects) {
    if (s.replicates.cols() != p)
      throw DimensionError("repeated measurements: subject '" + s.id + "' has " +
                           std::to_string(s.replicates.cols()) + " covariates, expected " +
                           std::to_string(p));
    if (s.replicates.rows() < 1)
      throw InputError("repeated measurements: subject '" + s.id + "' has no replicates");
    if (!s.replicates.allFinite())
      throw InputError("repeated measurements: subject '" + s.id + "' has non-finite values");
    rows += s.replicates.rows();
  }
  const std::size_t contrasts = data.contrasts();
  if (contrasts < 1)
    throw InputError("repeated measurements: every subject has a single replicate; "
                     "Sigma_e is not identifiable");

  // Stack within-subject deviations, then one cross-product.
  Eigen::MatrixXd dev(rows, p);
  Eigen::Index at = 0;
  for (const auto& s : data.subjects) {
    const Eigen::RowVectorXd mean = s.replicates.colwise().mean();
    dev.middleRows(at, s.replicates.rows()) = s.replicates.rowwise() - mean;
    at += s.replicates.rows();
  }
  Eigen::MatrixXd sigma = dev.transpose() * dev;
  sigma /= static_cast<double>(contrasts);
  return ErrorCovariance(std::move(sigma), Provenance::Repeated);
}

ErrorCovariance sigma_from_validation(const ValidationPairs& pairs) {
  if (pairs.surrogate.rows() != pairs.truth.rows() || pairs.surrogate.cols() != pairs.truth.cols())
    throw DimensionError("validation pairs: surrogate is " +
                         std::to_string(pairs.surrogate.rows()) + "x" +
                         std::to_string(pairs.surrogate.cols()) + " but truth is " +
                         std::to_string(pairs.truth.rows()) + "x" +
                         std::to_string(pairs.truth.cols()));
  if (pairs.surrogate.rows() < 2) throw InputError("validation pairs: need m >= 2");
  if (pairs.surrogate.cols() < 1) throw DimensionError("validation pairs: no covariates");
  if (!pairs.surrogate.allFinite() || !pairs.truth.allFinite())
    throw InputError("validation pairs: non-finite values");
  const Eigen::MatrixXd resid = pairs.surrogate - pairs.truth;
  Eigen::MatrixXd sigma = resid.transpose() * resid;
  sigma /= static_cast<double>(pairs.surrogate.rows() - 1);
  return ErrorCovariance(std::move(sigma), Provenance::Validation);
}

ErrorCovariance assumed_diagonal(std::size_t p, double sigma_e2) {
  if (!(sigma_e2 >= 0.0) || !std::isfinite(sigma_e2))
    throw InputError("assumed error variance must be finite and nonnegative");
  if (p < 1) throw DimensionError("assumed error covariance: p must be positive");
  const auto d = static_cast<Eigen::Index>(p);
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(d, d);
  sigma.diagonal().setConstant(sigma_e2);
  return ErrorCovariance(std::move(sigma), Provenance::AssumedDiagonal);
}

std::vector<std::size_t> complement(std::size_t p, const std::vector<std::size_t>& active) {
  std::vector<char> taken(p, 0);
  for (std::size_t k : active) {
    if (k >= p)
      throw InputError("active index " + std::to_string(k) + " out of range for p = " +
                       std::to_string(p));
    if (taken[k]) throw InputError("active index " + std::to_string(k) + " repeated");
    taken[k] = 1;
  }
  std::vector<std::size_t> out;
  out.reserve(p - active.size());
  for (std::size_t k = 0; k < p; ++k)
    if (!taken[k]) out.push_back(k);
  return out;
}

SigmaBlocks partition_sigma(const ErrorCovariance& sigma, const std::vector<std::size_t>& active) {
  const Eigen::MatrixXd& s = sigma.matrix();
  SigmaBlocks b;
  b.active = active;
  b.inactive = complement(sigma.dimension(), active);
  const auto q = static_cast<Eigen::Index>(b.active.size());
  const auto r = static_cast<Eigen::Index>(b.inactive.size());
  b.active_active.resize(q, q);
  b.active_inactive.resize(q, r);
  b.inactive_inactive.resize(r, r);
  for (Eigen::Index i = 0; i < q; ++i) {
    const auto ai = static_cast<Eigen::Index>(b.active[i]);
    for (Eigen::Index j = 0; j < q; ++j) b.active_active(i, j) = s(ai, b.active[j]);
    for (Eigen::Index j = 0; j < r; ++j) b.active_inactive(i, j) = s(ai, b.inactive[j]);
  }
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < r; ++j)
      b.inactive_inactive(i, j) = s(b.inactive[i], b.inactive[j]);
  return b;
}

Eigen::MatrixXd SigmaBlocks::scatter() const {
  const auto p = static_cast<Eigen::Index>(active.size() + inactive.size());
  Eigen::MatrixXd s(p, p);
  const auto q = static_cast<Eigen::Index>(active.size());
  const auto r = static_cast<Eigen::Index>(inactive.size());
  for (Eigen::Index i = 0; i < q; ++i) {
    for (Eigen::Index j = 0; j < q; ++j) s(active[i], active[j]) = active_active(i, j);
    for (Eigen::Index j = 0; j < r; ++j) {
      s(active[i], inactive[j]) = active_inactive(i, j);
      s(inactive[j], active[i]) = active_inactive(i, j);
    }
  }
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < r; ++j) s(inactive[i], inactive[j]) = inactive_inactive(i, j);
  return s;
}

}  // namespace ifs::error_model
