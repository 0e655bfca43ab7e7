#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <sstream>

#include "sdlevy/calibration.hpp"
#include "sdlevy/cli.hpp"
#include "sdlevy/errors.hpp"
#include "sdlevy/market_data.hpp"
#include "sdlevy/parameter_sets.hpp"
#include "sdlevy/pricing.hpp"
#include "sdlevy/sampling.hpp"

namespace sdlevy::cli {
namespace {

namespace fs = std::filesystem;

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::string shortest(double x) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir + "': " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
}

void write_manifest(const RunConfig& c, const std::string& command,
                    const std::vector<std::string>& outputs) {
  nlohmann::json m = {
      {"command", command},
      {"artifact_version", kArtifactVersion},
      {"seed", c.seed},
      {"config_hash", hex64(fnv1a64(canonical_config(c)))},
      {"outputs", outputs},
  };
  write_text(c.out_dir + "/manifest.json", m.dump(2) + "\n");
}

std::string dependence_rows(const Dependence& d) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6);
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, SSDDependence>) {
          os << "  A    " << x.A << "\n  B    " << x.B << "\n  a    " << x.a << '\n';
        } else if constexpr (std::is_same_v<T, LSSDDependence>) {
          os << "  A    " << x.A << "\n  B    " << x.B << "\n  rho  " << x.rho << "\n  a    " << x.a
             << '\n';
        } else {
          os << "  a1   " << x.a1 << "\n  a2   " << x.a2 << "\n  a    " << x.a << "\n  nuR  " << x.nuR
             << '\n';
        }
      },
      d);
  return os.str();
}

std::string calibration_report(const CalibrationResult& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6);
  os << "model " << to_string(r.kind) << "\n\n";
  os << "marginal parameters\n";
  os << "  asset            mu         sigma      alpha      rmse         converged boundary\n";
  for (int j = 0; j < 2; ++j) {
    const auto& f = r.marginal_fits[j];
    os << "  " << std::left << std::setw(16) << r.assets[j] << std::right << std::setw(10)
       << r.marginals[j].mu << ' ' << std::setw(10) << r.marginals[j].sigma << ' ' << std::setw(10)
       << r.marginals[j].alpha << ' ' << std::scientific << std::setprecision(3) << std::setw(12)
       << f.rmse << std::fixed << std::setprecision(6) << ' ' << std::setw(9)
       << (f.converged ? "yes" : "no") << ' ' << (f.boundary ? "yes" : "no") << '\n';
  }
  os << "\ndependence parameters\n" << dependence_rows(r.dependence);
  if (r.kind == ModelKind::BBSD) {
    const auto in = r.spec().bbsd_internal();
    os << "  beta1 " << in.beta1 << "  beta2 " << in.beta2 << "  gamma1 " << in.gamma1
       << "  gamma2 " << in.gamma2 << "\n  nu1 " << in.nu1 << "  nu2 " << in.nu2 << "  betaR1 "
       << in.betaR1 << "  betaR2 " << in.betaR2 << "  gammaR1 " << in.gammaR1 << "  gammaR2 "
       << in.gammaR2 << '\n';
  }
  const auto& df = r.dependence_fit;
  os << "\nrho_mod " << r.rho_model << "\nrho_mkt " << r.rho_market << '\n';
  os << "shortfall " << (df.shortfall ? "yes" : "no") << " (max attainable " << df.max_attainable
     << ")\n";
  os << "near-optimal alternatives " << df.near_optimal.size() << '\n';
  os << "dependence solver: starts " << df.starts << ", iterations " << df.iterations
     << ", converged " << (df.converged ? "yes" : "no") << "\n\n";
  os << "percentage errors\n  asset,T,K,market,model,eps\n";
  os << std::setprecision(8);
  for (int j = 0; j < 2; ++j) {
    for (const auto& e : r.marginal_fits[j].errors) {
      os << "  " << r.assets[j] << ',' << e.T << ',' << e.K << ',' << e.market << ',' << e.model
         << ',' << std::scientific << e.error << std::fixed << '\n';
    }
  }
  return os.str();
}

CalibrationResult load_artifact(const RunConfig& c) {
  const auto path = c.resolved_calibration_path();
  if (!fs::exists(path)) throw ParseError("calibration artifact '" + path + "' does not exist");
  return load_calibration(path);
}

SimulationOptions sim_options(const RunConfig& c) {
  SimulationOptions o;
  o.antithetic = c.antithetic;
  return o;
}

// Mutable copy of the bundled set with `set.<name>` overrides applied.
ModelSpec overridden_spec(const ParameterSet& base, ModelKind kind,
                          const std::map<std::string, double>& ov) {
  ParameterSet p = base;
  const auto take = [&](const char* key, double& target) {
    if (auto it = ov.find(key); it != ov.end()) target = it->second;
  };
  take("mu1", p.marginals[0].mu);
  take("sigma1", p.marginals[0].sigma);
  take("alpha1", p.marginals[0].alpha);
  take("mu2", p.marginals[1].mu);
  take("sigma2", p.marginals[1].sigma);
  take("alpha2", p.marginals[1].alpha);
  take("A", p.ssd.A);
  take("A", p.lssd.A);
  take("B", p.ssd.B);
  take("B", p.lssd.B);
  take("a", p.ssd.a);
  take("a", p.lssd.a);
  take("a", p.bbsd.a);
  take("rho", p.lssd.rho);
  take("a1", p.bbsd.a1);
  take("a2", p.bbsd.a2);
  take("nuR", p.bbsd.nuR);
  return p.spec(kind);
}

}  // namespace

ModelSpec validation_spec(const RunConfig& c, ModelKind kind) {
  return overridden_spec(parameter_set(c.parameter_set), kind, c.overrides);
}

int cmd_calibrate(const RunConfig& c, std::ostream& log) {
  if (c.quotes_path.empty()) throw ParseError("calibrate: no quotes file configured (quotes = ...)");
  if (c.history_path.empty()) throw ParseError("calibrate: no history file configured (history = ...)");
  if (!fs::exists(c.quotes_path)) throw ParseError("calibrate: quotes file '" + c.quotes_path + "' does not exist");
  if (!fs::exists(c.history_path)) {
    throw ParseError("calibrate: history file '" + c.history_path + "' does not exist");
  }
  const auto history = load_forward_history(c.history_path);
  const auto quotes = load_option_quotes(c.quotes_path, {c.F0, c.r, c.strike_window});
  for (const auto& asset : quotes.assets()) {
    if (asset != history.assets[0] && asset != history.assets[1]) {
      throw ParseError("calibrate: quoted asset '" + asset + "' is not in the history file");
    }
  }

  CalibrationResult result;
  result.kind = c.model;
  result.assets = history.assets;
  result.market.r = c.r;
  result.market.T = 0.0;
  MarginalFitOptions mopt;
  mopt.grid = c.vanilla_grid;
  mopt.relative_errors = c.relative_errors;
  mopt.seed = c.seed;
  bool converged = true;
  for (int j = 0; j < 2; ++j) {
    const auto asset_quotes = quotes.quotes_for(history.assets[j]);
    if (asset_quotes.empty()) throw ParseError("calibrate: no quotes for asset '" + history.assets[j] + "'");
    const double F0 = quotes.F0.at(history.assets[j]);
    log << "fitting " << history.assets[j] << " on " << asset_quotes.size() << " quotes\n";
    result.marginal_fits[j] = fit_marginal_vg(asset_quotes, F0, c.r, std::nullopt, mopt);
    result.marginals[j] = result.marginal_fits[j].params;
    result.market.F0[j] = F0;
    converged = converged && result.marginal_fits[j].converged;
    for (const auto& q : asset_quotes) result.market.T = std::max(result.market.T, q.T);
  }

  result.rho_market = c.target_rho ? *c.target_rho : historical_correlation(history.prices[0], history.prices[1]);
  DependenceFitOptions dopt;
  dopt.pinned = c.pinned;
  dopt.seed = c.seed;
  result.dependence_fit = fit_dependence(c.model, result.marginals, result.rho_market, dopt);
  result.dependence = result.dependence_fit.dependence;
  result.rho_model = result.dependence_fit.rho_model;
  result.spec().require_feasible();

  ensure_dir(c.out_dir);
  save_calibration(result, c.out_dir + "/calibration.json");
  const std::string report = calibration_report(result);
  write_text(c.out_dir + "/report.txt", report);
  write_manifest(c, "calibrate", {"calibration.json", "report.txt"});
  log << report;
  if (!converged) {
    log << "marginal fit did not converge; best iterate written\n";
    return kNonConvergence;
  }
  return kOk;
}

int cmd_price(const RunConfig& c, std::ostream& log) {
  const auto result = load_artifact(c);
  const ModelSpec spec = result.spec();
  spec.require_feasible();
  MarketFrame frame = result.market;
  frame.r = c.r;
  if (c.maturity) frame.T = *c.maturity;
  std::vector<double> strikes = c.strikes;
  if (strikes.empty()) {
    const double atm = std::round(frame.F0[0] - frame.F0[1]);
    for (int k = -4; k <= 4; ++k) strikes.push_back(atm + k);
  }
  for (double K : strikes) {
    if (!(K >= 0.0)) {
      throw DomainError("price: strike " + std::to_string(K) + " is negative; the spread bound needs K >= 0");
    }
  }
  const auto mc = mc_spread_prices(spec, frame, strikes, c.n_paths, c.seed, sim_options(c));
  std::ostringstream csv;
  csv << "K,mc_price,mc_stderr,fourier_price,gap\n" << std::setprecision(10);
  for (std::size_t i = 0; i < strikes.size(); ++i) {
    const auto cf = cf_spread_lower_bound(spec, frame, strikes[i], c.spread_grid);
    csv << strikes[i] << ',' << mc[i].price << ',' << mc[i].std_error << ',' << cf.price << ','
        << cf.price - mc[i].price << '\n';
  }
  ensure_dir(c.out_dir);
  write_text(c.out_dir + "/prices.csv", csv.str());
  write_manifest(c, "price", {"prices.csv"});
  log << csv.str();
  return kOk;
}

int cmd_simulate(const RunConfig& c, std::ostream& log) {
  const auto result = load_artifact(c);
  const ModelSpec spec = result.spec();
  spec.require_feasible();
  const double T = c.maturity ? *c.maturity : result.market.T;
  if (!(T > 0.0)) throw DomainError("simulate: maturity must be positive");
  const TimeGrid grid = TimeGrid::uniform(T, c.steps);
  const PathBatch y = simulate_paths(spec, grid, c.n_paths, c.seed, sim_options(c));
  const PathBatch f =
      to_forward_prices(y, result.market.F0, {spec.effective_marginal(0), spec.effective_marginal(1)});
  ensure_dir(c.out_dir);
  write_path_batch(f, c.out_dir + "/paths.bin");

  // Sample correlation of the terminal log-drivers.
  const Eigen::VectorXd y1 = y.terminal(0), y2 = y.terminal(1);
  const Eigen::ArrayXd d1 = y1.array() - y1.mean(), d2 = y2.array() - y2.mean();
  const double sample_rho = (d1 * d2).sum() / std::sqrt(d1.square().sum() * d2.square().sum());
  const double rho_mod = model_correlation(spec, T);

  // One subordinator pair per a on a fine grid, all driven by the same stream.
  double A = 0.0, B = 1.0;
  if (spec.kind() == ModelKind::BBSD) {
    A = B = 1.0 / spec.bbsd().nuR;
  } else {
    A = spec.kind() == ModelKind::SSD ? spec.ssd().A : spec.lssd().A;
    B = spec.kind() == ModelKind::SSD ? spec.ssd().B : spec.lssd().B;
  }
  const TimeGrid fine = TimeGrid::uniform(T, 250);
  std::vector<SubordinatorPaths> pairs;
  std::vector<double> gap;
  for (double a : c.a_values) {
    if (!(a > 0.0 && a <= 1.0)) throw DomainError("simulate: a_values must lie in (0, 1]");
    RngStream rng(c.seed, 1u << 20);
    pairs.push_back(sample_sd_subordinator_pair(A, B, a, fine, rng));
    RngStream terminal_rng(c.seed, (1u << 20) + 1);
    double total = 0.0;
    const int n_gap = 10000;
    for (int p = 0; p < n_gap; ++p) {
      const double h1 = sample_gamma(A * T, B, terminal_rng);
      const double h2 = a * h1 + sample_a_remainder(A * T, B, a, terminal_rng);
      total += std::abs(h2 - h1);
    }
    gap.push_back(total / n_gap);
  }
  std::ostringstream sub;
  sub << "t";
  for (double a : c.a_values) sub << ",H1_a" << a << ",H2_a" << a;
  sub << '\n' << std::setprecision(10);
  for (std::size_t k = 0; k < fine.size(); ++k) {
    sub << fine.points()[k];
    for (const auto& p : pairs) sub << ',' << p.h1[static_cast<Eigen::Index>(k)] << ',' << p.h2[static_cast<Eigen::Index>(k)];
    sub << '\n';
  }
  write_text(c.out_dir + "/subordinators.csv", sub.str());

  std::ostringstream report;
  report << std::setprecision(6) << std::fixed;
  report << "model " << to_string(spec.kind()) << "\npaths " << c.n_paths << "\nsteps " << c.steps
         << "\nmaturity " << T << "\nsample correlation " << sample_rho << "\nrho_mod " << rho_mod
         << "\nabs difference " << std::abs(sample_rho - rho_mod) << "\n\nmean |H2(T) - H1(T)|\n";
  for (std::size_t i = 0; i < c.a_values.size(); ++i) {
    report << "  a = " << c.a_values[i] << "  " << gap[i] << '\n';
  }
  write_text(c.out_dir + "/report.txt", report.str());
  write_manifest(c, "simulate", {"paths.bin", "subordinators.csv", "report.txt"});
  log << report.str();
  return kOk;
}

int cmd_synth(const RunConfig& c, std::ostream& log) {
  const ParameterSet& set = parameter_set(c.parameter_set);
  SyntheticOptions opt;
  opt.seed = c.seed;
  opt.noise = c.noise;
  const auto data = generate_synthetic_dataset(set, opt);
  ensure_dir(c.out_dir);
  write_option_quotes(data.quotes, c.out_dir + "/quotes.csv");
  write_forward_history(data.history, c.out_dir + "/history.csv");
  std::ostringstream cfg;
  cfg << "# synthetic " << set.name << " dataset, seed " << c.seed << '\n'
      << "quotes = \"" << c.out_dir << "/quotes.csv\"\n"
      << "history = \"" << c.out_dir << "/history.csv\"\n"
      << "r = " << shortest(set.market.r) << '\n';
  for (const auto& [asset, F0] : data.quotes.F0) cfg << "F0." << asset << " = " << shortest(F0) << '\n';
  write_text(c.out_dir + "/run.toml", cfg.str());
  write_manifest(c, "synth", {"quotes.csv", "history.csv", "run.toml"});
  log << "wrote " << data.quotes.quotes.size() << " quotes and " << data.history.size()
      << " history rows to " << c.out_dir << '\n';
  return kOk;
}

int cmd_validate(const RunConfig& c, std::ostream& log) {
  for (ModelKind kind : {ModelKind::SSD, ModelKind::LSSD, ModelKind::BBSD}) {
    const ModelSpec spec = validation_spec(c, kind);
    if (!spec.feasible()) {
      log << "FAIL feasibility " << to_string(kind) << ": " << spec.report().to_string() << '\n';
      return kInfeasible;
    }
  }
  const auto checks = run_validation_suite(c, log);
  int failed = 0;
  std::ostringstream report;
  for (const auto& ch : checks) {
    if (!ch.passed) ++failed;
    report << (ch.passed ? "PASS " : "FAIL ") << ch.name << " measured=" << ch.measured
           << " tol=" << ch.tolerance;
    if (!ch.detail.empty()) report << ' ' << ch.detail;
    report << '\n';
  }
  report << checks.size() - failed << '/' << checks.size() << " checks passed\n";
  ensure_dir(c.out_dir);
  write_text(c.out_dir + "/report.txt", report.str());
  write_manifest(c, "validate", {"report.txt"});
  log << report.str();
  return failed == 0 ? kOk : kFailure;
}

int run_command(const std::string& name, const RunConfig& config, std::ostream& log,
                std::ostream& err) {
  try {
    if (name == "calibrate") return cmd_calibrate(config, log);
    if (name == "price") return cmd_price(config, log);
    if (name == "simulate") return cmd_simulate(config, log);
    if (name == "validate") return cmd_validate(config, log);
    if (name == "synth") return cmd_synth(config, log);
    err << "unknown command '" << name << "'\n";
    return kParse;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kParse;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kParse;
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const ConvergenceError& e) {
    err << "non-convergence: " << e.what() << '\n';
    return kNonConvergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace sdlevy::cli
