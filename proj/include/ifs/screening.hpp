#pragma once

// Marginal distance-correlation screening and its iterated, measurement-error
// corrected refinement.

#include "ifs/error_model.hpp"
#include "ifs/survival.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ifs::screening {

enum class Mode { Naive, Corrected };

std::string_view to_string(Mode m);

/// Keep the highest utilities up to the stage's size budget.
struct TopCount {};

/// Keep utilities >= c * n^-zeta (still capped by the stage's size budget).
struct Threshold {
  double c;
  double zeta;
  double value(std::size_t n) const;
};

using SelectionRule = std::variant<TopCount, Threshold>;

struct ScreeningConfig {
  std::size_t q = 0;           // final active-set size
  std::size_t q1 = 0;          // size chosen in the first round
  std::size_t round_size = 0;  // per-round additions after the first; 0 = all remaining
  Mode mode = Mode::Corrected;
  SelectionRule rule = TopCount{};
  std::size_t workers = 1;

  /// q = floor(n / ln n), q1 = ceil(0.4 q), both clamped to [1, p].
  static ScreeningConfig defaults(std::size_t n, std::size_t p);

  void validate(std::size_t p) const;
};

struct ActiveMember {
  std::size_t index;  // 0-based column
  double utility;     // utility at the round it entered
  std::size_t round;  // 1-based round of inclusion

  bool operator==(const ActiveMember&) const = default;
};

struct ActiveSet {
  std::vector<ActiveMember> members;

  std::size_t size() const noexcept { return members.size(); }
  std::vector<std::size_t> indices() const;
  bool contains(std::size_t index) const;

  bool operator==(const ActiveSet&) const = default;
};

/// Candidates ranked by utility (ties to the smaller index), filtered by the
/// rule and truncated to `limit`.
std::vector<std::size_t> rank_select(std::span<const double> utilities, const SelectionRule& rule,
                                     std::size_t n, std::size_t limit);

/// Top-q rule returns the q largest; the threshold rule returns every index
/// with utility >= c n^-zeta. Members are tagged round 1.
ActiveSet select(std::span<const double> utilities, const ScreeningConfig& config, std::size_t n);

/// (X_I^T X_I)^-1 X_I^T X_Ic. Throws RankDeficientError when X_I^T X_I is
/// singular or has condition number above 1e12.
Eigen::MatrixXd naive_beta(const Eigen::MatrixXd& active_cols, const Eigen::MatrixXd& inactive_cols);

/// (X_I^T X_I - n S_I)^-1 (X_I^T X_Ic - n S_IIc). Retries once with ridge
/// jitter 1e-8 trace / q on failure, then throws DegenerateError.
Eigen::MatrixXd corrected_beta(const Eigen::MatrixXd& active_cols,
                               const Eigen::MatrixXd& inactive_cols,
                               const error_model::SigmaBlocks& blocks, std::size_t n);

/// X_Ic - X_I beta
Eigen::MatrixXd residualize(const Eigen::MatrixXd& inactive_cols, const Eigen::MatrixXd& active_cols,
                            const Eigen::MatrixXd& beta);

enum class StopReason { SizeReached, NoNewCovariates, RoundLimit, Degenerate };

std::string_view to_string(StopReason r);

struct Round {
  std::vector<std::size_t> screened;  // columns whose utility was computed
  std::vector<double> utilities;      // aligned with `screened`
  Eigen::MatrixXd beta;               // empty in round 1
  std::vector<std::size_t> added;
};

struct ScreeningResult {
  ActiveSet active;
  std::vector<Round> rounds;
  StopReason reason = StopReason::SizeReached;
  std::string detail;
};

bool operator==(const Round& a, const Round& b);
bool operator==(const ScreeningResult& a, const ScreeningResult& b);

/// Plain screening: top q (or threshold) of the marginal utilities, one round.
ScreeningResult marginal_screen(std::span<const double> response, const Eigen::MatrixXd& covariates,
                                const ScreeningConfig& config);

/// Iterated screening. Round 1 keeps q1 covariates by marginal utility. Each
/// later round regresses the inactive columns on the active ones (naive or
/// corrected beta), rescreens the residuals against the response and adds up
/// to round_size new indices. Stops at |I| = q, when nothing new enters,
/// after q rounds, or when a round's beta is degenerate.
ScreeningResult iterative_screen(const survival::ImputedResponse& imputed,
                                 const Eigen::MatrixXd& covariates,
                                 const error_model::ErrorCovariance& sigma,
                                 const ScreeningConfig& config);

/// Same, with an arbitrary response vector.
ScreeningResult iterative_screen(std::span<const double> response,
                                 const Eigen::MatrixXd& covariates,
                                 const error_model::ErrorCovariance& sigma,
                                 const ScreeningConfig& config);

}  // namespace ifs::screening
