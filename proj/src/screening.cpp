#include "ifs/screening.hpp"

#include "ifs/dcorr.hpp"
#include "ifs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ifs::screening {

std::string_view to_string(Mode m) { return m == Mode::Naive ? "naive" : "corrected"; }

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::SizeReached: return "size-reached";
    case StopReason::NoNewCovariates: return "no-new-covariates";
    case StopReason::RoundLimit: return "round-limit";
    case StopReason::Degenerate: return "degenerate";
  }
  return "unknown";
}

double Threshold::value(std::size_t n) const {
  return c * std::pow(static_cast<double>(n), -zeta);
}

ScreeningConfig ScreeningConfig::defaults(std::size_t n, std::size_t p) {
  if (n < 2 || p < 1) throw InputError("screening defaults: need n >= 2 and p >= 1");
  const double nd = static_cast<double>(n);
  auto q = static_cast<std::size_t>(std::floor(nd / std::log(nd)));
  q = std::clamp<std::size_t>(q, 1, p);
  auto q1 = static_cast<std::size_t>(std::ceil(0.4 * static_cast<double>(q)));
  q1 = std::clamp<std::size_t>(q1, 1, q);
  ScreeningConfig c;
  c.q = q;
  c.q1 = q1;
  return c;
}

void ScreeningConfig::validate(std::size_t p) const {
  if (q < 1 || q1 < 1 || q1 > q || q > p)
    throw InputError("screening config: need 1 <= q1 <= q <= p (q1 = " + std::to_string(q1) +
                     ", q = " + std::to_string(q) + ", p = " + std::to_string(p) + ")");
  if (const auto* t = std::get_if<Threshold>(&rule)) {
    if (!(t->c > 0.0)) throw InputError("threshold rule: c must be positive");
    if (!(t->zeta > 0.0 && t->zeta < 0.5)) throw InputError("threshold rule: zeta must be in (0, 1/2)");
  }
}

std::vector<std::size_t> ActiveSet::indices() const {
  std::vector<std::size_t> out;
  out.reserve(members.size());
  for (const auto& m : members) out.push_back(m.index);
  return out;
}

bool ActiveSet::contains(std::size_t index) const {
  return std::any_of(members.begin(), members.end(),
                     [&](const ActiveMember& m) { return m.index == index; });
}

std::vector<std::size_t> rank_select(std::span<const double> utilities, const SelectionRule& rule,
                                     std::size_t n, std::size_t limit) {
  for (double u : utilities)
    if (!std::isfinite(u)) throw InputError("selection: non-finite utility");
  std::vector<std::size_t> order(utilities.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return utilities[a] > utilities[b];
  });
  if (const auto* t = std::get_if<Threshold>(&rule)) {
    const double cut = t->value(n);
    auto end = std::find_if(order.begin(), order.end(),
                            [&](std::size_t k) { return utilities[k] < cut; });
    order.erase(end, order.end());
  }
  if (order.size() > limit) order.resize(limit);
  return order;
}

ActiveSet select(std::span<const double> utilities, const ScreeningConfig& config, std::size_t n) {
  const std::size_t limit = std::holds_alternative<TopCount>(config.rule)
                                ? config.q
                                : std::numeric_limits<std::size_t>::max();
  ActiveSet out;
  for (std::size_t k : rank_select(utilities, config.rule, n, limit))
    out.members.push_back({k, utilities[k], 1});
  return out;
}

namespace {

Eigen::MatrixXd solve_normal(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& rhs) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  const double cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(lo > 0.0) || cond > 1e12)
    throw RankDeficientError("Gram matrix is singular or ill-conditioned (condition number " +
                                 std::to_string(cond) + ")",
                             cond);
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success)
    throw RankDeficientError("Gram matrix is not positive definite", cond);
  return llt.solve(rhs);
}

void require_conforming(const Eigen::MatrixXd& active_cols, const Eigen::MatrixXd& inactive_cols) {
  if (active_cols.rows() != inactive_cols.rows())
    throw DimensionError("active and inactive blocks have different row counts");
  if (active_cols.cols() < 1) throw DimensionError("active block is empty");
}

Eigen::MatrixXd gather(const Eigen::MatrixXd& x, const std::vector<std::size_t>& cols) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    out.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(cols[j]));
  return out;
}

}  // namespace

Eigen::MatrixXd naive_beta(const Eigen::MatrixXd& active_cols, const Eigen::MatrixXd& inactive_cols) {
  require_conforming(active_cols, inactive_cols);
  const Eigen::MatrixXd gram = active_cols.transpose() * active_cols;
  const Eigen::MatrixXd cross = active_cols.transpose() * inactive_cols;
  return solve_normal(gram, cross);
}

Eigen::MatrixXd corrected_beta(const Eigen::MatrixXd& active_cols,
                               const Eigen::MatrixXd& inactive_cols,
                               const error_model::SigmaBlocks& blocks, std::size_t n) {
  require_conforming(active_cols, inactive_cols);
  if (blocks.active_active.rows() != active_cols.cols() ||
      blocks.active_inactive.rows() != active_cols.cols() ||
      blocks.active_inactive.cols() != inactive_cols.cols())
    throw DimensionError("Sigma blocks do not conform to the covariate blocks");

  const double scale = static_cast<double>(n);
  const Eigen::MatrixXd gram =
      active_cols.transpose() * active_cols - scale * blocks.active_active;
  const Eigen::MatrixXd cross =
      active_cols.transpose() * inactive_cols - scale * blocks.active_inactive;
  try {
    return solve_normal(gram, cross);
  } catch (const RankDeficientError& first) {
    const double q = static_cast<double>(gram.rows());
    const double jitter = 1e-8 * gram.trace() / q;
    if (!(jitter > 0.0))
      throw DegenerateError(std::string("corrected Gram matrix has nonpositive trace: ") +
                            first.what());
    const Eigen::MatrixXd ridged =
        gram + jitter * Eigen::MatrixXd::Identity(gram.rows(), gram.cols());
    try {
      return solve_normal(ridged, cross);
    } catch (const RankDeficientError& second) {
      throw DegenerateError(std::string("corrected Gram matrix stays degenerate after ridge "
                                        "jitter; use a smaller error covariance or fewer "
                                        "active covariates: ") +
                            second.what());
    }
  }
}

Eigen::MatrixXd residualize(const Eigen::MatrixXd& inactive_cols, const Eigen::MatrixXd& active_cols,
                            const Eigen::MatrixXd& beta) {
  if (active_cols.rows() != inactive_cols.rows() || beta.rows() != active_cols.cols() ||
      beta.cols() != inactive_cols.cols())
    throw DimensionError("residualize: shapes do not conform");
  Eigen::MatrixXd out = inactive_cols;
  out.noalias() -= active_cols * beta;
  return out;
}

bool operator==(const Round& a, const Round& b) {
  return a.screened == b.screened && a.utilities == b.utilities && a.added == b.added &&
         a.beta.rows() == b.beta.rows() && a.beta.cols() == b.beta.cols() &&
         (a.beta.size() == 0 || (a.beta.array() == b.beta.array()).all());
}

bool operator==(const ScreeningResult& a, const ScreeningResult& b) {
  return a.active == b.active && a.rounds == b.rounds && a.reason == b.reason &&
         a.detail == b.detail;
}

namespace {

void require_data(std::span<const double> response, const Eigen::MatrixXd& covariates) {
  if (static_cast<std::size_t>(covariates.rows()) != response.size())
    throw DimensionError("covariate rows " + std::to_string(covariates.rows()) +
                         " != response length " + std::to_string(response.size()));
}

}  // namespace

ScreeningResult marginal_screen(std::span<const double> response, const Eigen::MatrixXd& covariates,
                                const ScreeningConfig& config) {
  require_data(response, covariates);
  const auto p = static_cast<std::size_t>(covariates.cols());
  config.validate(p);
  const std::vector<double> u = dcorr::marginal_sweep(response, covariates, config.workers);

  ScreeningResult result;
  Round first;
  first.screened.resize(p);
  std::iota(first.screened.begin(), first.screened.end(), std::size_t{0});
  first.utilities = u;
  first.added = rank_select(u, config.rule, response.size(), config.q);
  for (std::size_t k : first.added) result.active.members.push_back({k, u[k], 1});
  result.rounds.push_back(std::move(first));
  result.reason =
      result.active.size() == config.q ? StopReason::SizeReached : StopReason::NoNewCovariates;
  return result;
}

ScreeningResult iterative_screen(std::span<const double> response,
                                 const Eigen::MatrixXd& covariates,
                                 const error_model::ErrorCovariance& sigma,
                                 const ScreeningConfig& config) {
  require_data(response, covariates);
  const auto p = static_cast<std::size_t>(covariates.cols());
  const std::size_t n = response.size();
  config.validate(p);
  if (sigma.dimension() != p)
    throw DimensionError("error covariance is " + std::to_string(sigma.dimension()) +
                         "-dimensional but there are " + std::to_string(p) + " covariates");

  const dcorr::ResponseKernel kernel(response);
  ScreeningResult result;

  {
    const std::vector<double> u = dcorr::marginal_sweep(kernel, covariates, config.workers);
    Round first;
    first.screened.resize(p);
    std::iota(first.screened.begin(), first.screened.end(), std::size_t{0});
    first.added = rank_select(u, config.rule, n, config.q1);
    for (std::size_t k : first.added) result.active.members.push_back({k, u[k], 1});
    first.utilities = u;
    result.rounds.push_back(std::move(first));
    if (result.active.size() == 0) {
      result.reason = StopReason::NoNewCovariates;
      return result;
    }
  }

  for (std::size_t round = 2;; ++round) {
    const std::size_t have = result.active.size();
    if (have >= config.q || have >= p) {
      result.reason = StopReason::SizeReached;
      break;
    }
    if (round > config.q) {
      result.reason = StopReason::RoundLimit;
      break;
    }

    const std::vector<std::size_t> active = result.active.indices();
    const std::vector<std::size_t> inactive = error_model::complement(p, active);
    const Eigen::MatrixXd xa = gather(covariates, active);
    const Eigen::MatrixXd xi = gather(covariates, inactive);

    Eigen::MatrixXd beta;
    try {
      if (config.mode == Mode::Naive) {
        beta = naive_beta(xa, xi);
      } else {
        beta = corrected_beta(xa, xi, error_model::partition_sigma(sigma, active), n);
      }
    } catch (const NumericError& e) {
      result.reason = StopReason::Degenerate;
      result.detail = "round " + std::to_string(round) + ": " + e.what();
      break;
    }

    const Eigen::MatrixXd resid = residualize(xi, xa, beta);
    const std::vector<double> u = dcorr::marginal_sweep(kernel, resid, config.workers);

    const std::size_t budget = config.q - have;
    const std::size_t limit = config.round_size == 0 ? budget : std::min(config.round_size, budget);
    Round r;
    r.screened = inactive;
    r.beta = std::move(beta);
    for (std::size_t j : rank_select(u, config.rule, n, limit)) {
      r.added.push_back(inactive[j]);
      result.active.members.push_back({inactive[j], u[j], round});
    }
    r.utilities = u;
    const bool stalled = r.added.empty();
    result.rounds.push_back(std::move(r));
    if (stalled) {
      result.reason = StopReason::NoNewCovariates;
      break;
    }
  }
  return result;
}

ScreeningResult iterative_screen(const survival::ImputedResponse& imputed,
                                 const Eigen::MatrixXd& covariates,
                                 const error_model::ErrorCovariance& sigma,
                                 const ScreeningConfig& config) {
  return iterative_screen(std::span<const double>(imputed.values), covariates, sigma, config);
}

}  // namespace ifs::screening
