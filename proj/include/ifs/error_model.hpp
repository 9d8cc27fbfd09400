#pragma once

// Measurement-error covariance for the additive model X* = X + e,
// e ~ N(0, Sigma_e): estimators and block bookkeeping by active set.

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ifs::error_model {

enum class Provenance { Known, Repeated, Validation, AssumedDiagonal };

std::string_view to_string(Provenance p);

/// Symmetric PSD p x p matrix. Construction symmetrizes inputs that are
/// symmetric to 1e-10 and projects onto the PSD cone (eigenvalue truncation)
/// when the smallest eigenvalue is below -1e-8; `psd_repaired()` reports it.
class ErrorCovariance {
 public:
  ErrorCovariance(Eigen::MatrixXd sigma, Provenance provenance);

  static ErrorCovariance zero(std::size_t p, Provenance provenance = Provenance::Known);

  const Eigen::MatrixXd& matrix() const noexcept { return sigma_; }
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(sigma_.rows()); }
  Provenance provenance() const noexcept { return provenance_; }
  bool psd_repaired() const noexcept { return psd_repaired_; }
  bool is_zero() const;

 private:
  Eigen::MatrixXd sigma_;
  Provenance provenance_;
  bool psd_repaired_ = false;
};

/// Replicate rows X*_{ir} grouped by subject.
struct RepeatedMeasurements {
  struct Subject {
    std::string id;
    Eigen::MatrixXd replicates;  // n_i x p
  };
  std::vector<Subject> subjects;
  std::size_t single_replicate_subjects = 0;

  std::size_t dimension() const;
  std::size_t contrasts() const;  // sum_i (n_i - 1)
};

/// Validation rows (x*_i, x_i).
struct ValidationPairs {
  Eigen::MatrixXd surrogate;  // m x p
  Eigen::MatrixXd truth;      // m x p
};

/// Method of moments: sum_i sum_r (X*_ir - mean_i)(X*_ir - mean_i)^T / sum_i (n_i - 1).
ErrorCovariance sigma_from_repeats(const RepeatedMeasurements& data);

/// (m - 1)^-1 sum_i e_i e_i^T with e_i = x*_i - x_i; residuals are not centered.
ErrorCovariance sigma_from_validation(const ValidationPairs& pairs);

/// sigma_e2 * I_p
ErrorCovariance assumed_diagonal(std::size_t p, double sigma_e2);

/// Blocks of Sigma_e under the permutation (active, inactive). `inactive` is
/// the complement of `active` in ascending order.
struct SigmaBlocks {
  Eigen::MatrixXd active_active;      // q x q
  Eigen::MatrixXd active_inactive;    // q x (p - q)
  Eigen::MatrixXd inactive_inactive;  // (p - q) x (p - q)
  std::vector<std::size_t> active;
  std::vector<std::size_t> inactive;

  /// Reassembles the parent matrix.
  Eigen::MatrixXd scatter() const;
};

/// `active` holds distinct 0-based indices below p, in any order.
SigmaBlocks partition_sigma(const ErrorCovariance& sigma, const std::vector<std::size_t>& active);

/// Complement of `active` in [0, p), ascending. Validates `active`.
std::vector<std::size_t> complement(std::size_t p, const std::vector<std::size_t>& active);

}  // namespace ifs::error_model
