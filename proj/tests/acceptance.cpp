// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Run from ctest or directly.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <future>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sdlevy/calibration.hpp"
#include "sdlevy/cli.hpp"
#include "sdlevy/model.hpp"
#include "sdlevy/parameter_sets.hpp"
#include "sdlevy/pricing.hpp"
#include "sdlevy/sampling.hpp"

using namespace sdlevy;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool passed = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      passed = false;
      detail << " [" << what << "]";
    }
  }
};

// Empirical chf with per-component standard errors.
struct EmpiricalChf {
  Complex value;
  double se_re = 0.0;
  double se_im = 0.0;

  double z_score(Complex target) const {
    return std::max(std::abs(value.real() - target.real()) / se_re,
                    std::abs(value.imag() - target.imag()) / se_im);
  }
};

EmpiricalChf empirical_chf(const Eigen::ArrayXd& phase) {
  const Eigen::ArrayXd re = phase.cos(), im = phase.sin();
  const double n = static_cast<double>(phase.size());
  EmpiricalChf e;
  e.value = {re.mean(), im.mean()};
  e.se_re = std::sqrt((re - re.mean()).square().sum() / (n - 1.0) / n);
  e.se_im = std::sqrt((im - im.mean()).square().sum() / (n - 1.0) / n);
  return e;
}

double sample_correlation(const PathBatch& b) {
  const Eigen::ArrayXd x = b.terminal(0).array() - b.terminal(0).mean();
  const Eigen::ArrayXd y = b.terminal(1).array() - b.terminal(1).mean();
  return (x * y).sum() / std::sqrt(x.square().sum() * y.square().sum());
}

std::vector<std::pair<double, double>> chf_points() {
  return {{1.0, 1.0},  {-1.0, 1.0}, {0.5, 2.0},   {2.0, -0.5}, {-3.0, 3.0}, {3.0, 0.0},
          {0.0, -3.0}, {1.5, 1.5},  {-2.0, -2.5}, {2.5, 1.0},  {-0.7, 0.3}, {3.0, 3.0}};
}

ModelSpec power_pair(ModelKind k) { return parameter_set("power_pair").spec(k); }

Outcome criterion1() {
  Outcome o;
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (double A : {0.5, 5.0, 40.0})
    for (double B : {0.5, 1.0, 4.0})
      for (double a : {0.1, 0.5, 0.99})
        for (int k = 0; k < 100; ++k) {
          const double u = -20.0 + 40.0 * k / 99.0;
          const Complex lhs = gamma_chf(A, B, u);
          const Complex rhs = gamma_chf(A, B, a * u) * za_chf(A, B, a, 1.0, u);
          worst = std::max(worst, std::abs(lhs - rhs));
        }
  const double dt = seconds_since(t0);
  o.detail << "max |phi(u) - phi(au) chi_a(u)| = " << worst << ", " << dt << " s";
  o.require(worst < 1e-12, "residual >= 1e-12");
  o.require(dt < 1.0, "runtime >= 1 s");
  return o;
}

struct RemainderCase {
  double alpha, lambda, a;
  double mean_z = 0.0, var_z = 0.0, chf_err = 0.0;
};

RemainderCase run_remainder_case(RemainderCase c, std::uint64_t stream) {
  constexpr std::size_t n = 1000000;
  RngStream rng(2020, stream);
  Eigen::ArrayXd z(static_cast<Eigen::Index>(n));
  for (auto& v : z) v = sample_a_remainder(c.alpha, c.lambda, c.a, rng);
  const double mean0 = c.alpha * (1.0 - c.a) / c.lambda;
  const double var0 = c.alpha * (1.0 - c.a * c.a) / (c.lambda * c.lambda);
  const double m = z.mean();
  const Eigen::ArrayXd d = z - m;
  const double var = d.square().sum() / (n - 1.0);
  const double m4 = d.square().square().mean();
  c.mean_z = std::abs(m - mean0) / std::sqrt(var / n);
  c.var_z = std::abs(var - var0) / std::sqrt((m4 - var * var) / n);
  // 20 points u = +/- m du, m = 1..10, accumulated by powers of exp(i du z);
  // the negative half is the complex conjugate.
  const double du = 0.25 * c.lambda;
  std::array<Complex, 11> acc{};
  for (double v : z) {
    const Complex w = std::polar(1.0, du * v);
    Complex p = 1.0;
    for (int m = 1; m <= 10; ++m) {
      p *= w;
      acc[m] += p;
    }
  }
  for (int m = 1; m <= 10; ++m) {
    const Complex est = acc[m] / static_cast<double>(n);
    for (double sign : {1.0, -1.0}) {
      const Complex e = sign > 0 ? est : std::conj(est);
      c.chf_err = std::max(c.chf_err, std::abs(e - za_chf(c.alpha, c.lambda, c.a, 1.0, sign * m * du)));
    }
  }
  return c;
}

Outcome criterion2() {
  Outcome o;
  const auto t0 = Clock::now();
  std::vector<std::future<RemainderCase>> jobs;
  std::uint64_t stream = 0;
  for (double alpha : {0.5, 2.0, 10.0})
    for (double lambda : {0.5, 1.0, 5.0})
      for (double a : {0.1, 0.5, 0.9})
        jobs.push_back(std::async(std::launch::async, run_remainder_case,
                                  RemainderCase{alpha, lambda, a}, stream++));
  double worst_mean = 0.0, worst_var = 0.0, worst_chf = 0.0;
  for (auto& j : jobs) {
    const RemainderCase c = j.get();
    worst_mean = std::max(worst_mean, c.mean_z);
    worst_var = std::max(worst_var, c.var_z);
    worst_chf = std::max(worst_chf, c.chf_err);
  }
  const double dt = seconds_since(t0);
  o.detail << "27 cases x 1e6 draws: worst mean " << worst_mean << " SE, worst variance " << worst_var
           << " SE, worst chf error " << worst_chf << ", " << dt << " s";
  o.require(worst_mean < 4.0, "mean outside 4 SE");
  o.require(worst_var < 4.0, "variance outside 4 SE");
  o.require(worst_chf < 0.005, "chf error >= 0.005");
  o.require(dt < 30.0, "runtime >= 30 s");
  return o;
}

Outcome criterion3() {
  Outcome o;
  const auto t0 = Clock::now();
  std::uint64_t seed = 300;
  for (auto kind : {ModelKind::SSD, ModelKind::LSSD, ModelKind::BBSD}) {
    const ModelSpec spec = power_pair(kind);
    const PathBatch b = simulate_terminals(spec, 1.0, 1000000, seed++);
    double worst = 0.0;
    for (auto [u1, u2] : chf_points()) {
      const Eigen::ArrayXd phase = u1 * b.terminal(0).array() + u2 * b.terminal(1).array();
      worst = std::max(worst, empirical_chf(phase).z_score(joint_chf(spec, 1.0, u1, u2)));
    }
    o.detail << to_string(kind) << " worst " << worst << " SE; ";
    o.require(worst < 4.0, std::string(to_string(kind)) + " outside 4 SE");
  }
  const double dt = seconds_since(t0);
  o.detail << chf_points().size() << " points in [-3,3]^2, " << dt << " s";
  o.require(dt < 120.0, "runtime >= 2 min");
  return o;
}

Outcome criterion4() {
  Outcome o;
  const auto& pp = parameter_set("power_pair");
  const auto& pg = parameter_set("power_gas");
  const MarginalPair m3{VGMarginal{0.3, 0.25, 0.1}, VGMarginal{0.2, 0.3, 0.05}};
  const MarginalPair m4{VGMarginal{-0.2, 0.2, 0.2}, VGMarginal{0.35, 0.4, 0.15}};
  const MarginalPair m5{VGMarginal{0.5, 0.15, 0.3}, VGMarginal{0.6, 0.2, 0.25}};
  const std::vector<ModelSpec> specs{
      pp.spec(ModelKind::SSD), pg.spec(ModelKind::SSD),
      ModelSpec(m3, SSDDependence{8.0, 1.0, 0.7}), ModelSpec(m4, SSDDependence{4.0, 1.0, 0.4}),
      ModelSpec(m5, SSDDependence{3.0, 1.0, 0.95}),
      pp.spec(ModelKind::LSSD), pg.spec(ModelKind::LSSD),
      ModelSpec(m3, LSSDDependence{8.0, 1.0, 0.7, -0.6}), ModelSpec(m4, LSSDDependence{4.0, 1.0, 0.4, 0.3}),
      ModelSpec(m5, LSSDDependence{3.0, 1.0, 0.95, 0.95}),
      pp.spec(ModelKind::BBSD), pg.spec(ModelKind::BBSD),
      ModelSpec(m3, BBSDDependence{1.0, -0.8, 0.7, 0.3}), ModelSpec(m4, BBSDDependence{0.5, 1.5, 0.4, 0.5}),
      ModelSpec(m5, BBSDDependence{1.2, 0.9, 0.95, 0.6}),
  };
  double worst = 0.0;
  std::uint64_t seed = 400;
  for (const auto& spec : specs) {
    if (!spec.feasible()) {
      o.require(false, "test spec infeasible: " + spec.report().to_string());
      continue;
    }
    const double closed = spec.kind() == ModelKind::SSD ? ssd_vg_correlation(spec.marginals(), spec.ssd())
                          : spec.kind() == ModelKind::LSSD ? lssd_vg_correlation(spec.marginals(), spec.lssd())
                                                           : bbsd_vg_correlation(spec.marginals(), spec.bbsd(),
                                                                                 spec.bbsd_internal());
    const double sample = sample_correlation(simulate_terminals(spec, 1.0, 1000000, seed++));
    worst = std::max(worst, std::abs(sample - closed));
    o.require(std::abs(sample - closed) < 0.01, std::string(to_string(spec.kind())) + " off by " +
                                                     std::to_string(sample - closed));
  }
  o.detail << "15 specs (5 per model) x 1e6 pairs: worst |sample - closed form| = " << worst;
  return o;
}

Outcome criterion5() {
  Outcome o;
  const auto& pp = parameter_set("power_pair");
  const auto& pg = parameter_set("power_gas");
  const double ssd = ssd_vg_correlation(pp.marginals, SSDDependence{41.89, 1.0, 0.99});

  // Published BBSD internals: the common loading products are mu_j - beta_j
  // and sqrt(sigma_j^2 - gamma_j^2); the loadings themselves are absorbed.
  auto from_internals = [](const MarginalPair& m, double b1, double b2, double g1, double g2,
                           double a, double nuR) {
    BBSDInternal in;
    in.betaR1 = m[0].mu - b1;
    in.betaR2 = m[1].mu - b2;
    in.gammaR1 = std::sqrt(m[0].sigma * m[0].sigma - g1 * g1);
    in.gammaR2 = std::sqrt(m[1].sigma * m[1].sigma - g2 * g2);
    return bbsd_vg_correlation(m, BBSDDependence{1.0, 1.0, a, nuR}, in);
  };
  const double nu1 = 1.01;
  const double nuR4 = pp.marginals[0].alpha * nu1 / (nu1 - pp.marginals[0].alpha);
  const double bbsd4 = from_internals(pp.marginals, -0.00, 0.09, 0.00, 0.10, 0.99, nuR4);
  const double bbsd8 = from_internals(pg.marginals, 0.13, 0.12, 0.23, 0.23, 0.90, 0.11);
  o.detail << std::setprecision(5) << "SSD " << ssd << " (0.05 +/- 0.02), BBSD power " << bbsd4
           << " (0.94 +/- 0.02), BBSD power-gas " << bbsd8 << " (0.54 +/- 0.02)";
  o.require(std::abs(ssd - 0.05) <= 0.02, "SSD anchor");
  o.require(std::abs(bbsd4 - 0.94) <= 0.02, "BBSD power anchor");
  o.require(std::abs(bbsd8 - 0.54) <= 0.02, "BBSD power-gas anchor");
  return o;
}

Outcome criterion6() {
  Outcome o;
  double worst = 0.0;
  for (const char* name : {"power_pair", "power_gas"})
    for (auto kind : {ModelKind::SSD, ModelKind::LSSD, ModelKind::BBSD}) {
      const ParameterSet& set = parameter_set(name);
      Dependence d = set.spec(kind).dependence();
      std::visit([](auto& dep) { dep.a = 1.0 - 1e-8; }, d);
      const ModelSpec spec(set.marginals, d);
      for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) {
          const double u1 = -5.0 + i, u2 = -5.0 + j;
          worst = std::max(worst, std::abs(joint_chf(spec, 1.0, u1, u2) -
                                           common_subordinator_chf(spec, 1.0, u1, u2)));
        }
    }
  o.detail << "a = 1 - 1e-8, 6 specs on an 11 x 11 grid in [-5,5]^2: max deviation " << worst;
  o.require(worst < 1e-6, "deviation >= 1e-6");
  return o;
}

Outcome criterion7() {
  Outcome o;
  const std::vector<double> us{-3.0, -2.0, -1.0, -0.5, 0.3, 0.7, 1.2, 2.0, 2.5, 3.0};
  std::uint64_t seed = 700;
  for (const char* name : {"power_pair", "power_gas"}) {
    const ModelSpec spec = parameter_set(name).spec(ModelKind::BBSD);
    const PathBatch b = simulate_terminals(spec, 1.0, 1000000, seed++);
    for (int j = 0; j < 2; ++j) {
      double worst = 0.0;
      for (double u : us) {
        const Eigen::ArrayXd phase = u * b.terminal(j).array();
        worst = std::max(worst, empirical_chf(phase).z_score(marginal_vg_chf(spec.marginal(j), 1.0, u)));
      }
      o.detail << name << " Y" << j + 1 << " worst " << worst << " SE; ";
      o.require(worst < 4.0, std::string(name) + " asset " + std::to_string(j + 1));
    }
  }
  return o;
}

Outcome criterion8() {
  Outcome o;
  const auto& pp = parameter_set("power_pair");
  double worst_vanilla = 0.0;
  for (int j = 0; j < 2; ++j) {
    const VanillaFrame f = asset_frame(pp.market, j);
    std::vector<double> strikes;
    for (int k = -2; k <= 2; ++k) strikes.push_back(f.F0 + 5.0 * k);
    const auto cf = carr_madan_calls(pp.marginals[j], f, strikes);
    RngStream rng(800, j);
    const auto mc = mc_vanilla_prices(pp.marginals[j], f, strikes, 1000000, rng);
    for (std::size_t i = 0; i < strikes.size(); ++i) {
      worst_vanilla = std::max(worst_vanilla, std::abs(cf[i].price - mc[i].price) / mc[i].std_error);
    }
    const std::vector<double> zero{0.0};
    const double k0 = carr_madan_calls(pp.marginals[j], f, zero)[0].price;
    const double fwd = std::exp(-f.r * f.T) * f.F0;
    o.require(std::abs(k0 / fwd - 1.0) < 1e-3, "K = 0 vanilla");
  }
  o.detail << "vanilla FFT vs MC worst " << worst_vanilla << " SE; ";
  o.require(worst_vanilla < 3.0, "vanilla outside 3 SE");

  double worst_rel = 0.0, worst_excess = -1e300;
  std::string worst_case;
  const double centre = std::round(pp.market.F0[0] - pp.market.F0[1]);
  const std::vector<double> strikes{centre - 3.0, centre, centre + 3.0};
  std::uint64_t seed = 810;
  for (auto kind : {ModelKind::SSD, ModelKind::LSSD, ModelKind::BBSD}) {
    const ModelSpec spec = pp.spec(kind);
    const auto mc = mc_spread_prices(spec, pp.market, strikes, 1000000, seed++);
    for (std::size_t i = 0; i < strikes.size(); ++i) {
      const double cf = cf_spread_lower_bound(spec, pp.market, strikes[i]).price;
      const double rel = std::abs(cf - mc[i].price) / mc[i].price;
      if (rel > worst_rel) {
        worst_rel = rel;
        std::ostringstream where;
        where << to_string(kind) << " K=" << strikes[i] << " cf " << cf << " mc " << mc[i].price;
        worst_case = where.str();
      }
      worst_excess = std::max(worst_excess, (cf - mc[i].price) / mc[i].std_error);
    }
  }
  o.detail << "spread bound: max (cf - mc) / SE = " << worst_excess << ", max relative gap "
           << worst_rel << " (" << worst_case << ")";
  o.require(worst_excess <= 3.0, "spread bound above MC + 3 SE");
  o.require(worst_rel < 0.01, "spread bound not within 1%");
  return o;
}

Outcome criterion9() {
  Outcome o;
  for (const char* name : {"power_pair", "power_gas"}) {
    const ParameterSet& set = parameter_set(name);
    const double centre = std::round(set.market.F0[0] - set.market.F0[1]);
    double min_gap_sl = 1e300, min_gap_lb = 1e300;
    for (double K = std::max(centre - 10.0, 0.0); K <= centre + 10.0; K += 1.0) {
      const double ssd = cf_spread_lower_bound(set.spec(ModelKind::SSD), set.market, K).price;
      const double lssd = cf_spread_lower_bound(set.spec(ModelKind::LSSD), set.market, K).price;
      const double bbsd = cf_spread_lower_bound(set.spec(ModelKind::BBSD), set.market, K).price;
      min_gap_sl = std::min(min_gap_sl, ssd - lssd);
      min_gap_lb = std::min(min_gap_lb, lssd - bbsd);
    }
    o.detail << name << ": min(SSD - LSSD) = " << min_gap_sl << ", min(LSSD - BBSD) = " << min_gap_lb
             << "; ";
    o.require(min_gap_sl > 0.0, std::string(name) + " SSD > LSSD violated");
    o.require(min_gap_lb >= 0.0, std::string(name) + " LSSD >= BBSD violated");
  }
  return o;
}

Outcome criterion10() {
  Outcome o;
  std::mt19937_64 gen(1010);
  std::uniform_real_distribution<double> mu(-0.3, 0.5), sigma(0.15, 0.5), alpha(0.01, 0.3);
  double worst_rmse = 0.0;
  for (int s = 0; s < 5; ++s) {
    const VGMarginal truth{mu(gen), sigma(gen), alpha(gen)};
    const double F0 = 50.0, r = 0.015;
    std::vector<OptionQuote> quotes;
    for (double T : {0.5, 1.0}) {
      std::vector<double> strikes;
      for (int k = -4; k <= 4; ++k) strikes.push_back(F0 + 2.5 * k);
      const auto p = carr_madan_calls(truth, VanillaFrame{F0, r, T}, strikes);
      for (std::size_t i = 0; i < strikes.size(); ++i) quotes.push_back({"X", T, strikes[i], p[i].price});
    }
    const MarginalFit fit = fit_marginal_vg(quotes, F0, r);
    worst_rmse = std::max(worst_rmse, fit.rmse);
  }
  o.detail << "5 random VG sets: worst price RMSE " << worst_rmse << "; ";
  o.require(worst_rmse < 1e-6, "RMSE >= 1e-6");

  const auto& pp = parameter_set("power_pair");
  const auto& pg = parameter_set("power_gas");
  const double ssd_max = max_attainable_correlation(ModelKind::SSD, pp.marginals);
  struct Target {
    ModelKind kind;
    const MarginalPair* m;
    double rho;
  };
  const Target targets[] = {
      {ModelKind::SSD, &pp.marginals, 0.5 * ssd_max}, {ModelKind::SSD, &pg.marginals, 0.0},
      {ModelKind::LSSD, &pp.marginals, 0.5},          {ModelKind::LSSD, &pg.marginals, 0.54},
      {ModelKind::BBSD, &pp.marginals, 0.94},         {ModelKind::BBSD, &pg.marginals, 0.54},
  };
  double worst_dep = 0.0;
  for (const auto& t : targets) {
    const DependenceFit fit = fit_dependence(t.kind, *t.m, t.rho);
    worst_dep = std::max(worst_dep, std::abs(fit.rho_model - t.rho));
    o.require(!fit.shortfall, std::string(to_string(t.kind)) + " false shortfall");
  }
  o.detail << "dependence targets worst miss " << worst_dep << "; ";
  o.require(worst_dep < 1e-3, "dependence miss >= 1e-3");
  const DependenceFit ssd = fit_dependence(ModelKind::SSD, pp.marginals, 0.94);
  o.detail << "SSD at 0.94: rho " << ssd.rho_model << ", shortfall " << (ssd.shortfall ? "flagged" : "missed");
  o.require(ssd.shortfall, "SSD 0.94 not flagged");
  return o;
}

Outcome criterion11() {
  Outcome o;
  for (auto kind : {ModelKind::SSD, ModelKind::LSSD, ModelKind::BBSD}) {
    const auto t0 = Clock::now();
    const PathBatch b = simulate_terminals(power_pair(kind), 1.0, 1000000, 1100);
    const double dt = seconds_since(t0);
    o.detail << to_string(kind) << " 1e6 terminals " << dt << " s; ";
    o.require(dt < 10.0 && b.n_paths() == 1000000, std::string(to_string(kind)) + " too slow");
  }
  cli::RunConfig cfg;
  cfg.out_dir = (std::filesystem::temp_directory_path() / "sdlevy_acceptance_validate").string();
  std::ostringstream log;
  const auto t0 = Clock::now();
  const int code = cli::cmd_validate(cfg, log);
  const double dt = seconds_since(t0);
  o.detail << "validate " << dt << " s, exit " << code;
  o.require(code == 0, "validate failed");
  o.require(dt < 300.0, "validate >= 5 min");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"chf factorization", criterion1},
      {"a-remainder exact sampler", criterion2},
      {"joint chf by simulation", criterion3},
      {"correlation closed forms", criterion4},
      {"anchored correlations", criterion5},
      {"limit recovery", criterion6},
      {"BBSD marginal closure", criterion7},
      {"pricing cross-validation", criterion8},
      {"spread price ordering", criterion9},
      {"calibration round trip", criterion10},
      {"performance", criterion11},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.passed = false;
      o.detail << "exception: " << e.what();
    }
    failed += !o.passed;
    std::cout << (o.passed ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first
              << "): " << o.detail.str() << std::endl;
  }
  std::cout << criteria.size() - failed << '/' << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
