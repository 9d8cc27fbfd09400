#pragma once

// Simulation design for censored, error-prone covariate screening and the
// Monte Carlo runner that tabulates selection proportions.

#include "ifs/error_model.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace ifs::simgen {

using Rng = std::mt19937_64;

enum class Model { PH, PO };
enum class Knowledge { Known, Repeated, Validation, ErrorFree };

std::string_view to_string(Model m);
std::string_view to_string(Knowledge k);
Model parse_model(std::string_view s);
Knowledge parse_knowledge(std::string_view s);

/// Covariates with corr(X_j, X_k) = rho for j, k != 4 and corr(X_4, X_k) =
/// sqrt(rho): X_4 = W, X_k = sqrt(rho) W + sqrt(1 - rho) Z_k. Column 3 is X_4.
Eigen::MatrixXd gen_covariates(std::size_t n, std::size_t p, double rho, Rng& rng);

/// Error term eta: standard minimum extreme value (CDF 1 - exp(-e^x)) for PH,
/// standard logistic for PO.
double draw_eta(Model model, Rng& rng);

/// X_1 + X_2 + X_3 - 3 sqrt(rho) X_4 for row i.
double linear_predictor(const Eigen::MatrixXd& x, Eigen::Index i, double rho);

/// T = exp(X_1 + X_2 + X_3 - 3 sqrt(rho) X_4 + eta). Needs p >= 4.
std::vector<double> gen_failure(const Eigen::MatrixXd& x, double rho, Model model, Rng& rng);

/// Upper bound tau_C of C ~ U(0, tau_C) giving the target censoring rate,
/// found by bisection on a fixed pilot of `pilot` draws of (T, C / tau_C).
double calibrate_censoring(Model model, double rho, double target_rate, Rng& rng,
                           std::size_t pilot = 10000);

/// P(C < T) estimated on `draws` fresh draws with C ~ U(0, tau_c).
double censoring_rate(Model model, double rho, double tau_c, Rng& rng, std::size_t draws);

/// Draws e ~ N(0, Sigma_e) rows. Diagonal and zero covariances take fast paths.
class ErrorSampler {
 public:
  explicit ErrorSampler(const Eigen::MatrixXd& sigma);

  std::size_t dimension() const noexcept { return p_; }
  bool is_zero() const noexcept { return zero_; }
  Eigen::MatrixXd draw(std::size_t rows, Rng& rng) const;

 private:
  std::size_t p_;
  bool zero_ = false;
  bool diagonal_ = false;
  Eigen::VectorXd sd_;
  Eigen::MatrixXd factor_;  // Sigma = factor factor^T
};

/// X* = X + e. Returns X unchanged when Sigma_e = 0.
Eigen::MatrixXd add_error(const Eigen::MatrixXd& x, const ErrorSampler& sampler, Rng& rng);

/// Subject i's replicates are X_i + e_ir, r = 1..replicates.
error_model::RepeatedMeasurements gen_repeats(const Eigen::MatrixXd& x, const ErrorSampler& sampler,
                                              std::size_t replicates, Rng& rng);

/// m fresh subjects from the covariate design, with their surrogates.
error_model::ValidationPairs gen_validation(std::size_t m, std::size_t p, double rho,
                                            const ErrorSampler& sampler, Rng& rng);

struct ScenarioConfig {
  std::size_t n = 300;
  std::size_t p = 500;
  double rho = 0.5;
  std::optional<double> sigma2 = 0.15;  // diagonal error variance; empty = error-free
  Model model = Model::PH;
  Knowledge knowledge = Knowledge::Known;
  std::size_t replications = 100;
  std::uint64_t seed = 20240521;
  std::size_t q = 0;   // 0 = floor(n / ln n)
  std::size_t q1 = 0;  // 0 = ceil(0.4 q)
  std::size_t replicates_per_subject = 2;
  std::size_t validation_size = 100;
  double censoring_target = 0.5;
  std::size_t workers = 0;  // 0 = hardware concurrency

  void validate() const;
  /// n = 400, p = 2000, R = 1000.
  static ScenarioConfig paper_scale();
};

/// Row order of ExperimentReport::rows and ReplicateOutcome::selected.
enum class Method { FsNaive, FsProposed, IfsNaive, IfsProposed, FsTrue, IfsTrue };
inline constexpr std::size_t kMethodCount = 6;
inline constexpr std::size_t kTracked = 4;  // X1..X4

std::string_view screening_label(Method m);  // "FS" / "IFS"
std::string_view method_label(Method m);     // "naive" / "proposed" / "true-X"

struct ReplicateOutcome {
  std::array<std::array<bool, kTracked>, kMethodCount> selected{};
  bool fs_modes_agree = false;  // naive and proposed FS active sets identical
  double censoring_rate = 0.0;
  bool sigma_repaired = false;
};

struct MethodRow {
  Method method;
  std::array<double, kTracked> ps{};
  double pa = 0.0;
};

struct ExperimentReport {
  ScenarioConfig config;
  std::size_t q = 0;
  std::size_t q1 = 0;
  double tau_c = 0.0;
  double mean_censoring_rate = 0.0;
  std::vector<MethodRow> rows;
  std::vector<ReplicateOutcome> replicates;

  const MethodRow& row(Method m) const { return rows[static_cast<std::size_t>(m)]; }
};

/// splitmix64 of (master, index)
std::uint64_t child_seed(std::uint64_t master, std::uint64_t index);

ExperimentReport run_experiment(const ScenarioConfig& config);

}  // namespace ifs::simgen
