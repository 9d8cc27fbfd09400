#include "ifs/simgen.hpp"

#include "ifs/errors.hpp"
#include "ifs/parallel.hpp"
#include "ifs/screening.hpp"
#include "ifs/survival.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ifs::simgen {

std::string_view to_string(Model m) { return m == Model::PH ? "PH" : "PO"; }

std::string_view to_string(Knowledge k) {
  switch (k) {
    case Knowledge::Known: return "known";
    case Knowledge::Repeated: return "repeated";
    case Knowledge::Validation: return "validation";
    case Knowledge::ErrorFree: return "error-free";
  }
  return "unknown";
}

Model parse_model(std::string_view s) {
  if (s == "PH" || s == "ph") return Model::PH;
  if (s == "PO" || s == "po") return Model::PO;
  throw InputError("unknown model '" + std::string(s) + "' (expected PH or PO)");
}

Knowledge parse_knowledge(std::string_view s) {
  if (s == "known") return Knowledge::Known;
  if (s == "repeated") return Knowledge::Repeated;
  if (s == "validation") return Knowledge::Validation;
  if (s == "error-free") return Knowledge::ErrorFree;
  throw InputError("unknown error knowledge '" + std::string(s) +
                   "' (expected known, repeated, validation or error-free)");
}

namespace {

void require_rho(double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw InputError("rho must lie in (0, 1)");
}

// Uniform on the open interval (0, 1).
double open_uniform(Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = 0.0;
  do {
    u = unif(rng);
  } while (u <= 0.0 || u >= 1.0);
  return u;
}

struct Pilot {
  std::vector<double> failure;
  std::vector<double> unit_censor;  // C / tau_C
};

Pilot draw_pilot(Model model, double rho, Rng& rng, std::size_t draws) {
  Pilot pilot;
  pilot.failure.resize(draws);
  pilot.unit_censor.resize(draws);
  const Eigen::MatrixXd x = gen_covariates(draws, 4, rho, rng);
  for (std::size_t i = 0; i < draws; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    pilot.failure[i] = std::exp(linear_predictor(x, row, rho) + draw_eta(model, rng));
  }
  for (auto& c : pilot.unit_censor) c = open_uniform(rng);
  return pilot;
}

double pilot_rate(const Pilot& pilot, double tau_c) {
  std::size_t censored = 0;
  for (std::size_t i = 0; i < pilot.failure.size(); ++i)
    if (pilot.unit_censor[i] * tau_c < pilot.failure[i]) ++censored;
  return static_cast<double>(censored) / static_cast<double>(pilot.failure.size());
}

}  // namespace

Eigen::MatrixXd gen_covariates(std::size_t n, std::size_t p, double rho, Rng& rng) {
  require_rho(rho);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto rows = static_cast<Eigen::Index>(n);
  const auto cols = static_cast<Eigen::Index>(p);
  Eigen::VectorXd w(rows);
  for (Eigen::Index i = 0; i < rows; ++i) w(i) = normal(rng);
  const double a = std::sqrt(rho);
  const double b = std::sqrt(1.0 - rho);
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index k = 0; k < cols; ++k) {
    if (k == 3) {
      x.col(k) = w;
      continue;
    }
    for (Eigen::Index i = 0; i < rows; ++i) x(i, k) = a * w(i) + b * normal(rng);
  }
  return x;
}

double draw_eta(Model model, Rng& rng) {
  const double u = open_uniform(rng);
  if (model == Model::PH) return std::log(-std::log(u));  // log of an Exp(1) draw
  return std::log(u / (1.0 - u));
}

double linear_predictor(const Eigen::MatrixXd& x, Eigen::Index i, double rho) {
  return x(i, 0) + x(i, 1) + x(i, 2) - 3.0 * std::sqrt(rho) * x(i, 3);
}

std::vector<double> gen_failure(const Eigen::MatrixXd& x, double rho, Model model, Rng& rng) {
  if (x.cols() < 4) throw DimensionError("failure model needs at least 4 covariates");
  std::vector<double> t(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    t[static_cast<std::size_t>(i)] = std::exp(linear_predictor(x, i, rho) + draw_eta(model, rng));
  return t;
}

double calibrate_censoring(Model model, double rho, double target_rate, Rng& rng,
                           std::size_t pilot_size) {
  if (!(target_rate > 0.0 && target_rate < 1.0))
    throw CalibrationError("censoring target must lie strictly between 0 and 1; with C > 0 and "
                           "T > 0 the rates 0 and 1 are not attainable");
  if (pilot_size < 100) throw InputError("calibration pilot must have at least 100 draws");
  const Pilot pilot = draw_pilot(model, rho, rng, pilot_size);

  double lo = std::log(1e-8);
  double hi = std::log(1e8);
  if (!(pilot_rate(pilot, std::exp(lo)) > target_rate) ||
      !(pilot_rate(pilot, std::exp(hi)) < target_rate))
    throw CalibrationError("censoring calibration: search bounds do not bracket target " +
                           std::to_string(target_rate));
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (pilot_rate(pilot, std::exp(mid)) > target_rate)
      lo = mid;
    else
      hi = mid;
  }
  const double tau = std::exp(hi);
  if (std::abs(pilot_rate(pilot, tau) - target_rate) > 0.02)
    throw CalibrationError("censoring calibration did not reach the target within 0.02");
  return tau;
}

double censoring_rate(Model model, double rho, double tau_c, Rng& rng, std::size_t draws) {
  if (draws < 1) throw InputError("censoring rate: need at least one draw");
  return pilot_rate(draw_pilot(model, rho, rng, draws), tau_c);
}

ErrorSampler::ErrorSampler(const Eigen::MatrixXd& sigma) : p_(static_cast<std::size_t>(sigma.rows())) {
  if (sigma.rows() != sigma.cols() || sigma.rows() < 1)
    throw DimensionError("error sampler: covariance must be square and nonempty");
  if (!sigma.allFinite()) throw InputError("error sampler: non-finite covariance");
  const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw InputError("error sampler: covariance is not symmetric");

  zero_ = (sigma.array() == 0.0).all();
  if (zero_) return;
  Eigen::MatrixXd off = sigma;
  off.diagonal().setZero();
  diagonal_ = (off.array() == 0.0).all();
  if (diagonal_) {
    if (sigma.diagonal().minCoeff() < 0.0)
      throw InputError("error sampler: covariance is not positive semidefinite");
    sd_ = sigma.diagonal().cwiseSqrt();
    return;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
  if (eig.info() != Eigen::Success) throw NumericError("error sampler: eigensolver failed");
  if (eig.eigenvalues().minCoeff() < -1e-8 * scale)
    throw InputError("error sampler: covariance is not positive semidefinite");
  factor_ = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

Eigen::MatrixXd ErrorSampler::draw(std::size_t rows, Rng& rng) const {
  const auto n = static_cast<Eigen::Index>(rows);
  const auto p = static_cast<Eigen::Index>(p_);
  if (zero_) return Eigen::MatrixXd::Zero(n, p);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd z(n, p);
  for (Eigen::Index k = 0; k < p; ++k)
    for (Eigen::Index i = 0; i < n; ++i) z(i, k) = normal(rng);
  if (diagonal_) return z * sd_.asDiagonal();
  return z * factor_.transpose();
}

Eigen::MatrixXd add_error(const Eigen::MatrixXd& x, const ErrorSampler& sampler, Rng& rng) {
  if (static_cast<std::size_t>(x.cols()) != sampler.dimension())
    throw DimensionError("add_error: covariate and error dimensions differ");
  if (sampler.is_zero()) return x;
  return x + sampler.draw(static_cast<std::size_t>(x.rows()), rng);
}

error_model::RepeatedMeasurements gen_repeats(const Eigen::MatrixXd& x, const ErrorSampler& sampler,
                                              std::size_t replicates, Rng& rng) {
  if (replicates < 1) throw InputError("gen_repeats: need at least one replicate");
  if (static_cast<std::size_t>(x.cols()) != sampler.dimension())
    throw DimensionError("gen_repeats: covariate and error dimensions differ");
  error_model::RepeatedMeasurements out;
  out.subjects.resize(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    auto& s = out.subjects[static_cast<std::size_t>(i)];
    s.id = std::to_string(i + 1);
    s.replicates.resize(static_cast<Eigen::Index>(replicates), x.cols());
  }
  for (std::size_t r = 0; r < replicates; ++r) {
    const Eigen::MatrixXd e = sampler.draw(static_cast<std::size_t>(x.rows()), rng);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      out.subjects[static_cast<std::size_t>(i)].replicates.row(static_cast<Eigen::Index>(r)) =
          x.row(i) + e.row(i);
  }
  if (replicates == 1) out.single_replicate_subjects = out.subjects.size();
  return out;
}

error_model::ValidationPairs gen_validation(std::size_t m, std::size_t p, double rho,
                                            const ErrorSampler& sampler, Rng& rng) {
  if (m < 2) throw InputError("gen_validation: need m >= 2");
  error_model::ValidationPairs v;
  v.truth = gen_covariates(m, p, rho, rng);
  v.surrogate = add_error(v.truth, sampler, rng);
  return v;
}

void ScenarioConfig::validate() const {
  if (n < 4 || p < 4) throw InputError("scenario: need n >= 4 and p >= 4");
  require_rho(rho);
  if (sigma2 && !(*sigma2 >= 0.0 && std::isfinite(*sigma2)))
    throw InputError("scenario: error variance must be finite and nonnegative");
  if (!sigma2 && knowledge != Knowledge::ErrorFree)
    throw InputError("scenario: an error variance is required unless knowledge is error-free");
  if (replications < 1) throw InputError("scenario: need at least one replication");
  if (knowledge == Knowledge::Repeated && replicates_per_subject < 2)
    throw InputError("scenario: repeated measurements need at least 2 replicates per subject");
  if (knowledge == Knowledge::Validation && validation_size < 2)
    throw InputError("scenario: validation sample needs m >= 2");
  if (!(censoring_target > 0.0 && censoring_target < 1.0))
    throw InputError("scenario: censoring target must lie in (0, 1)");
  if (q > p || q1 > (q == 0 ? p : q)) throw InputError("scenario: need q1 <= q <= p");
}

ScenarioConfig ScenarioConfig::paper_scale() {
  ScenarioConfig c;
  c.n = 400;
  c.p = 2000;
  c.replications = 1000;
  return c;
}

std::string_view screening_label(Method m) {
  switch (m) {
    case Method::FsNaive:
    case Method::FsProposed:
    case Method::FsTrue: return "FS";
    default: return "IFS";
  }
}

std::string_view method_label(Method m) {
  switch (m) {
    case Method::FsNaive:
    case Method::IfsNaive: return "naive";
    case Method::FsProposed:
    case Method::IfsProposed: return "proposed";
    default: return "true-X";
  }
}

std::uint64_t child_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master ^ (0x9E3779B97F4A7C15ULL * (index + 1));
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

constexpr std::uint64_t kCalibrationStream = std::numeric_limits<std::uint64_t>::max();

std::array<bool, kTracked> tracked(const std::vector<std::size_t>& selected) {
  std::array<bool, kTracked> out{};
  for (std::size_t k : selected)
    if (k < kTracked) out[k] = true;
  return out;
}

struct Shared {
  const ScenarioConfig& config;
  screening::ScreeningConfig naive;
  screening::ScreeningConfig corrected;
  double tau_c;
  std::optional<ErrorSampler> sampler;
  std::optional<error_model::ErrorCovariance> known;
  error_model::ErrorCovariance zero;
};

ReplicateOutcome run_replicate(const Shared& s, std::size_t index) {
  const ScenarioConfig& c = s.config;
  Rng rng(child_seed(c.seed, index));

  const Eigen::MatrixXd x = gen_covariates(c.n, c.p, c.rho, rng);
  const std::vector<double> failure = gen_failure(x, c.rho, c.model, rng);
  std::vector<double> time(c.n);
  std::vector<int> status(c.n);
  std::size_t censored = 0;
  for (std::size_t i = 0; i < c.n; ++i) {
    const double cens = open_uniform(rng) * s.tau_c;
    status[i] = failure[i] <= cens ? 1 : 0;
    time[i] = std::min(failure[i], cens);
    censored += 1 - static_cast<std::size_t>(status[i]);
  }

  Eigen::MatrixXd surrogate;
  std::optional<error_model::ErrorCovariance> estimated;
  switch (c.knowledge) {
    case Knowledge::ErrorFree:
      surrogate = x;
      break;
    case Knowledge::Known:
      surrogate = add_error(x, *s.sampler, rng);
      break;
    case Knowledge::Repeated: {
      const auto reps = gen_repeats(x, *s.sampler, c.replicates_per_subject, rng);
      surrogate.resize(x.rows(), x.cols());
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        surrogate.row(i) = reps.subjects[static_cast<std::size_t>(i)].replicates.row(0);
      estimated.emplace(error_model::sigma_from_repeats(reps));
      break;
    }
    case Knowledge::Validation: {
      surrogate = add_error(x, *s.sampler, rng);
      estimated.emplace(error_model::sigma_from_validation(
          gen_validation(c.validation_size, c.p, c.rho, *s.sampler, rng)));
      break;
    }
  }
  const error_model::ErrorCovariance& sigma =
      estimated ? *estimated : (s.known ? *s.known : s.zero);

  const survival::ImputedResponse imputed =
      survival::impute_response(survival::CensoredSample(std::move(time), std::move(status)));

  const auto ifs_true = screening::iterative_screen(imputed, x, s.zero, s.naive);
  const auto ifs_naive = screening::iterative_screen(imputed, surrogate, sigma, s.naive);
  const auto ifs_proposed = screening::iterative_screen(imputed, surrogate, sigma, s.corrected);

  // FS keeps the top q of the first-round marginal utilities.
  auto fs = [&](const screening::ScreeningResult& r) {
    return screening::rank_select(r.rounds.front().utilities, screening::TopCount{}, c.n, s.naive.q);
  };
  const auto fs_naive = fs(ifs_naive);
  const auto fs_proposed = fs(ifs_proposed);

  ReplicateOutcome out;
  out.selected[static_cast<std::size_t>(Method::FsNaive)] = tracked(fs_naive);
  out.selected[static_cast<std::size_t>(Method::FsProposed)] = tracked(fs_proposed);
  out.selected[static_cast<std::size_t>(Method::IfsNaive)] = tracked(ifs_naive.active.indices());
  out.selected[static_cast<std::size_t>(Method::IfsProposed)] =
      tracked(ifs_proposed.active.indices());
  out.selected[static_cast<std::size_t>(Method::FsTrue)] = tracked(fs(ifs_true));
  out.selected[static_cast<std::size_t>(Method::IfsTrue)] = tracked(ifs_true.active.indices());
  out.fs_modes_agree = fs_naive == fs_proposed;
  out.censoring_rate = static_cast<double>(censored) / static_cast<double>(c.n);
  out.sigma_repaired = sigma.psd_repaired();
  return out;
}

}  // namespace

ExperimentReport run_experiment(const ScenarioConfig& config) {
  config.validate();
  ExperimentReport report;
  report.config = config;

  screening::ScreeningConfig base = screening::ScreeningConfig::defaults(config.n, config.p);
  if (config.q != 0) {
    base.q = config.q;
    base.q1 = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(0.4 * static_cast<double>(base.q))), 1, base.q);
  }
  if (config.q1 != 0) base.q1 = config.q1;
  base.validate(config.p);
  report.q = base.q;
  report.q1 = base.q1;

  Rng calibration(child_seed(config.seed, kCalibrationStream));
  report.tau_c = calibrate_censoring(config.model, config.rho, config.censoring_target, calibration);

  const std::size_t p = config.p;
  Shared shared{config, base, base, report.tau_c, std::nullopt, std::nullopt,
                error_model::ErrorCovariance::zero(p)};
  shared.naive.mode = screening::Mode::Naive;
  shared.corrected.mode = screening::Mode::Corrected;
  shared.naive.workers = shared.corrected.workers = 1;
  if (config.knowledge != Knowledge::ErrorFree) {
    const auto truth = error_model::assumed_diagonal(p, *config.sigma2);
    shared.sampler.emplace(truth.matrix());
    if (config.knowledge == Knowledge::Known)
      shared.known.emplace(truth.matrix(), error_model::Provenance::Known);
  }

  report.replicates.resize(config.replications);
  parallel_for(config.replications, resolve_workers(config.workers), [&](std::size_t r) {
    try {
      report.replicates[r] = run_replicate(shared, r);
    } catch (const ReplicationError&) {
      throw;
    } catch (const std::exception& e) {
      throw ReplicationError(r, e.what());
    }
  });

  const double reps = static_cast<double>(config.replications);
  double censoring = 0.0;
  for (const auto& o : report.replicates) censoring += o.censoring_rate;
  report.mean_censoring_rate = censoring / reps;
  for (std::size_t m = 0; m < kMethodCount; ++m) {
    MethodRow row{static_cast<Method>(m), {}, 0.0};
    std::array<std::size_t, kTracked> hits{};
    std::size_t all = 0;
    for (const auto& o : report.replicates) {
      bool every = true;
      for (std::size_t k = 0; k < kTracked; ++k) {
        hits[k] += o.selected[m][k] ? 1 : 0;
        every = every && o.selected[m][k];
      }
      all += every ? 1 : 0;
    }
    for (std::size_t k = 0; k < kTracked; ++k) row.ps[k] = static_cast<double>(hits[k]) / reps;
    row.pa = static_cast<double>(all) / reps;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace ifs::simgen
