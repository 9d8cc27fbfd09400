#include "ifs/cli.hpp"

#include "ifs/error_model.hpp"
#include "ifs/errors.hpp"
#include "ifs/io.hpp"
#include "ifs/parallel.hpp"
#include "ifs/screening.hpp"
#include "ifs/simgen.hpp"
#include "ifs/survival.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

namespace ifs::cli {
namespace {

using nlohmann::ordered_json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SigmaSource {
  std::string sigma_known;
  std::string repeats;
  std::string validation;
  std::optional<double> assumed;

  bool present() const {
    return !sigma_known.empty() || !repeats.empty() || !validation.empty() || assumed.has_value();
  }

  ordered_json describe() const {
    if (!sigma_known.empty()) return {{"type", "known"}, {"path", sigma_known}};
    if (!repeats.empty()) return {{"type", "repeated"}, {"path", repeats}};
    if (!validation.empty()) return {{"type", "validation"}, {"path", validation}};
    if (assumed) return {{"type", "assumed-diagonal"}, {"sigma_e2", *assumed}};
    return nullptr;
  }
};

void warn_repaired(const error_model::ErrorCovariance& s, std::ostream& err) {
  if (s.psd_repaired())
    err << "ifscreen: warning: estimated error covariance was not PSD; projected by eigenvalue "
           "truncation\n";
}

error_model::ErrorCovariance load_sigma(const SigmaSource& src, std::size_t p, std::ostream& err) {
  auto check = [&](error_model::ErrorCovariance s) {
    if (s.dimension() != p)
      throw DimensionError("error covariance is " + std::to_string(s.dimension()) + " x " +
                           std::to_string(s.dimension()) + " but the data have " +
                           std::to_string(p) + " covariates");
    warn_repaired(s, err);
    return s;
  };
  if (!src.sigma_known.empty())
    return check(error_model::ErrorCovariance(io::load_matrix_csv(src.sigma_known),
                                              error_model::Provenance::Known));
  if (!src.repeats.empty()) {
    const auto reps = io::load_repeats_csv(src.repeats);
    if (reps.single_replicate_subjects > 0)
      err << "ifscreen: warning: " << reps.single_replicate_subjects
          << " subject(s) have a single replicate and contribute no contrast\n";
    return check(error_model::sigma_from_repeats(reps));
  }
  if (!src.validation.empty())
    return check(error_model::sigma_from_validation(io::load_validation_csv(src.validation)));
  if (src.assumed) return check(error_model::assumed_diagonal(p, *src.assumed));
  return error_model::ErrorCovariance::zero(p);
}

screening::Threshold parse_threshold(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw UsageError("--threshold expects 'c,zeta'");
  try {
    return {io::parse_double(text.substr(0, comma)), io::parse_double(text.substr(comma + 1))};
  } catch (const InputError& e) {
    throw UsageError(std::string("--threshold: ") + e.what());
  }
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  return out;
}

// ---------------------------------------------------------------- screen

struct ScreenArgs {
  std::string data;
  SigmaSource sigma;
  std::size_t q = 0;
  std::size_t q1 = 0;
  std::size_t round_size = 0;
  std::string mode = "corrected";
  bool iterate = false;
  std::string threshold;
  std::string out;
  std::string format = "json";
  std::uint64_t seed = 0;
  std::optional<double> tau;
  std::size_t workers = 0;
};

int run_screen(const ScreenArgs& a, std::ostream& out, std::ostream& err) {
  const screening::Mode mode =
      a.mode == "naive" ? screening::Mode::Naive : screening::Mode::Corrected;
  if (a.iterate && mode == screening::Mode::Corrected && !a.sigma.present())
    throw UsageError("--mode corrected --iterate needs an error covariance source "
                     "(--sigma-known, --repeats, --validation or --assume-sigma)");
  std::optional<screening::Threshold> threshold;
  if (!a.threshold.empty()) threshold = parse_threshold(a.threshold);

  const io::Dataset data = io::load_main_csv(a.data);
  const std::size_t n = data.size();
  const auto p = static_cast<std::size_t>(data.covariates.cols());

  screening::ScreeningConfig config = screening::ScreeningConfig::defaults(n, p);
  if (a.q != 0) {
    config.q = a.q;
    config.q1 = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(0.4 * static_cast<double>(a.q))));
  }
  if (a.q1 != 0) config.q1 = a.q1;
  if (config.q1 > config.q) config.q1 = config.q;
  config.round_size = a.round_size;
  config.mode = mode;
  if (threshold) config.rule = *threshold;
  config.workers = resolve_workers(a.workers);
  config.validate(p);

  const survival::CensoredSample sample(data.time, data.status);
  const survival::ImputedResponse imputed = survival::impute_response(sample, a.tau);

  screening::ScreeningResult result;
  if (a.iterate) {
    const auto sigma = load_sigma(a.sigma, p, err);
    result = screening::iterative_screen(imputed, data.covariates, sigma, config);
  } else {
    if (a.sigma.present()) (void)load_sigma(a.sigma, p, err);
    result = screening::marginal_screen(imputed.values, data.covariates, config);
  }

  ordered_json cfg;
  cfg["command"] = "screen";
  cfg["data"] = a.data;
  cfg["n"] = n;
  cfg["p"] = p;
  cfg["q"] = config.q;
  cfg["q1"] = config.q1;
  cfg["round_size"] = config.round_size;
  cfg["mode"] = std::string(screening::to_string(mode));
  cfg["iterate"] = a.iterate;
  if (threshold)
    cfg["rule"] = {{"type", "threshold"}, {"c", threshold->c}, {"zeta", threshold->zeta}};
  else
    cfg["rule"] = {{"type", "top-q"}};
  cfg["sigma_source"] = a.sigma.describe();
  cfg["tau"] = imputed.tau;

  const std::string mode_label(screening::to_string(mode));
  auto name_of = [&](std::size_t k) { return data.names[k]; };

  out << "screened " << p << " covariates, n = " << n << ", "
      << (a.iterate ? "iterated" : "marginal") << " screening, mode " << mode_label
      << ", stop: " << screening::to_string(result.reason) << '\n';
  if (!result.detail.empty()) out << "note: " << result.detail << '\n';
  out << std::left << std::setw(6) << "rank" << std::setw(8) << "index" << std::setw(24) << "name"
      << std::setw(14) << "utility" << "round\n";
  for (std::size_t r = 0; r < result.active.size(); ++r) {
    const auto& m = result.active.members[r];
    std::ostringstream u;
    u << std::fixed << std::setprecision(6) << m.utility;
    out << std::left << std::setw(6) << r + 1 << std::setw(8) << m.index + 1 << std::setw(24)
        << name_of(m.index) << std::setw(14) << u.str() << m.round << '\n';
  }

  if (!a.out.empty()) {
    auto file = open_output(a.out);
    if (a.format == "json") {
      ordered_json doc;
      doc["config"] = cfg;
      doc["seed"] = a.seed;
      doc["active_set"] = ordered_json::array();
      for (const auto& m : result.active.members)
        doc["active_set"].push_back({{"index", m.index + 1},
                                     {"name", name_of(m.index)},
                                     {"utility", m.utility},
                                     {"round", m.round}});
      doc["stop_reason"] = std::string(screening::to_string(result.reason));
      doc["rounds"] = result.rounds.size();
      file << doc.dump(2) << '\n';
    } else {
      file << "# config: " << cfg.dump() << '\n' << "# seed: " << a.seed << '\n';
      file << "rank,index,name,utility,round,mode\n";
      for (std::size_t r = 0; r < result.active.size(); ++r) {
        const auto& m = result.active.members[r];
        file << r + 1 << ',' << m.index + 1 << ',' << name_of(m.index) << ','
             << io::format_double(m.utility) << ',' << m.round << ',' << mode_label << '\n';
      }
    }
  }
  return kExitOk;
}

// -------------------------------------------------------------- simulate

struct SimulateArgs {
  std::optional<std::size_t> n, p, reps;
  double rho = 0.5;
  std::string sigma2 = "0.15";
  std::string model = "PH";
  std::string knowledge = "known";
  std::uint64_t seed = simgen::ScenarioConfig{}.seed;
  std::size_t q = 0;
  std::size_t q1 = 0;
  bool paper_scale = false;
  std::string out;
  std::string format = "json";
  std::size_t workers = 0;
};

ordered_json scenario_json(const simgen::ScenarioConfig& c) {
  ordered_json j;
  j["command"] = "simulate";
  j["n"] = c.n;
  j["p"] = c.p;
  j["rho"] = c.rho;
  j["sigma2"] = c.sigma2 ? ordered_json(*c.sigma2) : ordered_json(nullptr);
  j["model"] = std::string(simgen::to_string(c.model));
  j["knowledge"] = std::string(simgen::to_string(c.knowledge));
  j["replications"] = c.replications;
  j["q"] = c.q;
  j["q1"] = c.q1;
  j["replicates_per_subject"] = c.replicates_per_subject;
  j["validation_size"] = c.validation_size;
  j["censoring_target"] = c.censoring_target;
  return j;
}

int run_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  simgen::ScenarioConfig c = a.paper_scale ? simgen::ScenarioConfig::paper_scale()
                                           : simgen::ScenarioConfig{};
  if (a.paper_scale)
    err << "ifscreen: warning: paper-scale simulation (n = 400, p >= 2000, R = 1000) can take "
           "hours\n";
  if (a.n) c.n = *a.n;
  if (a.p) c.p = *a.p;
  if (a.reps) c.replications = *a.reps;
  c.rho = a.rho;
  c.model = simgen::parse_model(a.model);
  c.knowledge = simgen::parse_knowledge(a.knowledge);
  if (c.knowledge == simgen::Knowledge::ErrorFree || a.sigma2 == "none") {
    c.sigma2.reset();
    c.knowledge = simgen::Knowledge::ErrorFree;
  } else {
    try {
      c.sigma2 = io::parse_double(a.sigma2);
    } catch (const InputError& e) {
      throw UsageError(std::string("--sigma2: ") + e.what());
    }
  }
  c.seed = a.seed;
  c.q = a.q;
  c.q1 = a.q1;
  c.workers = a.workers;

  const simgen::ExperimentReport report = simgen::run_experiment(c);
  std::ostringstream sigma_label;
  if (c.sigma2)
    sigma_label << *c.sigma2;
  else
    sigma_label << "none";

  out << "model " << simgen::to_string(c.model) << ", rho " << c.rho << ", sigma_e^2 "
      << sigma_label.str() << ", " << simgen::to_string(c.knowledge) << ", n = " << c.n
      << ", p = " << c.p << ", R = " << c.replications << ", q = " << report.q
      << ", q1 = " << report.q1 << '\n';
  out << "tau_C = " << std::setprecision(6) << report.tau_c
      << ", mean censoring rate = " << report.mean_censoring_rate << '\n';
  out << std::left << std::setw(6) << "" << std::setw(10) << "method" << std::setw(9) << "Ps(X1)"
      << std::setw(9) << "Ps(X2)" << std::setw(9) << "Ps(X3)" << std::setw(9) << "Ps(X4)"
      << "Pa\n";
  for (const auto& row : report.rows) {
    out << std::left << std::setw(6) << simgen::screening_label(row.method) << std::setw(10)
        << simgen::method_label(row.method) << std::fixed << std::setprecision(3);
    for (double v : row.ps) out << std::setw(9) << v;
    out << row.pa << '\n' << std::defaultfloat;
  }

  if (!a.out.empty()) {
    ordered_json cfg = scenario_json(c);
    cfg["q"] = report.q;
    cfg["q1"] = report.q1;
    auto file = open_output(a.out);
    if (a.format == "json") {
      ordered_json rows = ordered_json::array();
      for (const auto& row : report.rows)
        rows.push_back({{"screening", std::string(simgen::screening_label(row.method))},
                        {"method", std::string(simgen::method_label(row.method))},
                        {"ps", row.ps},
                        {"pa", row.pa}});
      ordered_json reps = ordered_json::array();
      for (const auto& o : report.replicates) {
        ordered_json sel = ordered_json::array();
        for (const auto& m : o.selected) {
          ordered_json flags = ordered_json::array();
          for (bool b : m) flags.push_back(b ? 1 : 0);
          sel.push_back(flags);
        }
        reps.push_back({{"selected", sel},
                        {"fs_modes_agree", o.fs_modes_agree},
                        {"censoring_rate", o.censoring_rate},
                        {"sigma_repaired", o.sigma_repaired}});
      }
      ordered_json doc;
      doc["config"] = cfg;
      doc["seed"] = c.seed;
      doc["active_set"] = ordered_json::array();
      doc["report"] = {{"tau_c", report.tau_c},
                       {"mean_censoring_rate", report.mean_censoring_rate},
                       {"rows", rows},
                       {"replicates", reps}};
      file << doc.dump(2) << '\n';
    } else {
      file << "# config: " << cfg.dump() << '\n'
           << "# seed: " << c.seed << '\n'
           << "# tau_c: " << io::format_double(report.tau_c)
           << ", mean censoring rate: " << io::format_double(report.mean_censoring_rate) << '\n';
      file << "sigma2,screening,method,Ps_X1,Ps_X2,Ps_X3,Ps_X4,Pa\n";
      for (const auto& row : report.rows) {
        file << sigma_label.str() << ',' << simgen::screening_label(row.method) << ','
             << simgen::method_label(row.method);
        for (double v : row.ps) file << ',' << io::format_double(v);
        file << ',' << io::format_double(row.pa) << '\n';
      }
    }
  }
  return kExitOk;
}

// -------------------------------------------------------- estimate-sigma

struct EstimateArgs {
  std::string repeats;
  std::string validation;
  std::string out;
};

int run_estimate(const EstimateArgs& a, std::ostream& out, std::ostream& err) {
  std::optional<error_model::ErrorCovariance> sigma;
  ordered_json cfg;
  cfg["command"] = "estimate-sigma";
  if (!a.repeats.empty()) {
    const auto reps = io::load_repeats_csv(a.repeats);
    if (reps.single_replicate_subjects > 0)
      err << "ifscreen: warning: " << reps.single_replicate_subjects
          << " subject(s) have a single replicate and contribute no contrast\n";
    sigma.emplace(error_model::sigma_from_repeats(reps));
    cfg["repeats"] = a.repeats;
  } else {
    sigma.emplace(error_model::sigma_from_validation(io::load_validation_csv(a.validation)));
    cfg["validation"] = a.validation;
  }
  warn_repaired(*sigma, err);
  cfg["provenance"] = std::string(error_model::to_string(sigma->provenance()));
  cfg["psd_repaired"] = sigma->psd_repaired();

  std::ostringstream body;
  body << "# config: " << cfg.dump() << '\n' << "# seed: null\n";
  io::write_matrix_csv(body, sigma->matrix());
  if (a.out.empty()) {
    out << body.str();
  } else {
    auto file = open_output(a.out);
    file << body.str();
    out << "wrote " << sigma->dimension() << " x " << sigma->dimension()
        << " error covariance to " << a.out << '\n';
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Iterated distance-correlation feature screening for censored data with "
               "covariate measurement error",
               "ifscreen"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  ScreenArgs sa;
  auto* screen = app.add_subcommand("screen", "Screen covariates of a censored dataset");
  screen->add_option("data", sa.data, "Main CSV: time,status,<covariates...>")
      ->required()
      ->check(CLI::ExistingFile);
  auto* o_known = screen->add_option("--sigma-known", sa.sigma.sigma_known,
                                     "Known error covariance (p x p CSV)")
                      ->check(CLI::ExistingFile);
  auto* o_reps = screen->add_option("--repeats", sa.sigma.repeats,
                                    "Repeated measurements CSV: subject,replicate,<covariates...>")
                     ->check(CLI::ExistingFile);
  auto* o_valid = screen->add_option("--validation", sa.sigma.validation,
                                     "Validation CSV: <x_star...>,<x...>")
                      ->check(CLI::ExistingFile);
  auto* o_assume = screen->add_option("--assume-sigma", sa.sigma.assumed,
                                      "Assume Sigma_e = sigma^2 I (sensitivity analysis)")
                       ->check(CLI::NonNegativeNumber);
  o_known->excludes(o_reps, o_valid, o_assume);
  o_reps->excludes(o_valid, o_assume);
  o_valid->excludes(o_assume);
  screen->add_option("--q", sa.q, "Final active-set size (default floor(n / ln n))")
      ->check(CLI::PositiveNumber);
  screen->add_option("--q1", sa.q1, "First-round size (default ceil(0.4 q))")
      ->check(CLI::PositiveNumber);
  screen->add_option("--round-size", sa.round_size,
                     "Additions per later round (default: all remaining)");
  screen->add_option("--mode", sa.mode, "naive or corrected")
      ->check(CLI::IsMember({"naive", "corrected"}));
  screen->add_flag("--iterate", sa.iterate, "Iterated screening on regression residuals");
  screen->add_option("--threshold", sa.threshold, "Threshold rule c,zeta: keep omega >= c n^-zeta");
  screen->add_option("--tau", sa.tau, "Upper bound for imputation (default: largest time)");
  screen->add_option("--out", sa.out, "Result file");
  screen->add_option("--format", sa.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  screen->add_option("--seed", sa.seed, "Seed echoed into the result file");
  screen->add_option("--workers", sa.workers, "Worker threads (0 = all cores)");

  SimulateArgs ma;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo selection-proportion experiment");
  simulate->add_option("--n", ma.n, "Sample size (default 300)")->check(CLI::PositiveNumber);
  simulate->add_option("--p", ma.p, "Number of covariates (default 500)")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--rho", ma.rho, "Covariate correlation in (0, 1)");
  simulate->add_option("--sigma2", ma.sigma2, "Diagonal error variance, or 'none'");
  simulate->add_option("--model", ma.model, "PH or PO")->check(CLI::IsMember({"PH", "PO"}));
  simulate->add_option("--knowledge", ma.knowledge, "known, repeated, validation or error-free")
      ->check(CLI::IsMember({"known", "repeated", "validation", "error-free"}));
  simulate->add_option("--reps", ma.reps, "Replications (default 100)")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--seed", ma.seed, "Master seed");
  simulate->add_option("--q", ma.q, "Final active-set size (default floor(n / ln n))");
  simulate->add_option("--q1", ma.q1, "First-round size (default ceil(0.4 q))");
  simulate->add_flag("--paper-scale", ma.paper_scale, "n = 400, p = 2000, R = 1000");
  simulate->add_option("--out", ma.out, "Report file");
  simulate->add_option("--format", ma.format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  simulate->add_option("--workers", ma.workers, "Worker threads (0 = all cores)");

  EstimateArgs ea;
  auto* estimate = app.add_subcommand("estimate-sigma", "Estimate Sigma_e from auxiliary data");
  auto* e_reps = estimate->add_option("--repeats", ea.repeats, "Repeated measurements CSV")
                     ->check(CLI::ExistingFile);
  auto* e_valid = estimate->add_option("--validation", ea.validation, "Validation CSV")
                      ->check(CLI::ExistingFile);
  e_reps->excludes(e_valid);
  estimate->add_option("--out", ea.out, "Output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "ifscreen: usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (screen->parsed()) return run_screen(sa, out, err);
    if (simulate->parsed()) return run_simulate(ma, out, err);
    if (ea.repeats.empty() && ea.validation.empty())
      throw UsageError("estimate-sigma needs --repeats or --validation");
    return run_estimate(ea, out, err);
  } catch (const UsageError& e) {
    err << "ifscreen: usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "ifscreen: error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace ifs::cli
