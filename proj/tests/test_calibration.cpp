#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "sdlevy/calibration.hpp"
#include "sdlevy/errors.hpp"
#include "sdlevy/parameter_sets.hpp"

using namespace sdlevy;

namespace {

std::vector<OptionQuote> synthetic_quotes(const VGMarginal& m, double F0, double r,
                                          std::vector<double> maturities, double noise = 0.0,
                                          unsigned seed = 1) {
  std::vector<double> strikes;
  for (int k = -3; k <= 3; ++k) strikes.push_back(F0 + 2.5 * k);
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> eps(0.0, noise);
  std::vector<OptionQuote> quotes;
  for (double T : maturities) {
    const auto prices = carr_madan_calls(m, VanillaFrame{F0, r, T}, strikes);
    for (std::size_t i = 0; i < strikes.size(); ++i) {
      const double p = prices[i].price * (noise > 0.0 ? 1.0 + eps(gen) : 1.0);
      quotes.push_back({"X", T, strikes[i], p});
    }
  }
  return quotes;
}

}  // namespace

TEST(MarginalFit, RecoversPowerParameters) {
  const VGMarginal truth{0.40, 0.31, 0.02};
  const auto q = synthetic_quotes(truth, 50.0, 0.015, {0.5, 1.0});
  const MarginalFit fit = fit_marginal_vg(q, 50.0, 0.015);
  EXPECT_LT(fit.rmse, 1e-6);
  EXPECT_NEAR(fit.params.mu, truth.mu, 0.01 * truth.mu);
  EXPECT_NEAR(fit.params.sigma, truth.sigma, 0.01 * truth.sigma);
  EXPECT_NEAR(fit.params.alpha, truth.alpha, 0.01 * truth.alpha);
  EXPECT_TRUE(fit.converged);
  EXPECT_FALSE(fit.boundary);
  EXPECT_EQ(fit.errors.size(), q.size());
  EXPECT_EQ(fit.starts, 8);
}

TEST(MarginalFit, DeterministicForSeed) {
  const auto q = synthetic_quotes({0.24, 0.33, 0.05}, 17.0, 0.015, {0.3});
  MarginalFitOptions opt;
  opt.starts = 4;
  EXPECT_EQ(fit_marginal_vg(q, 17.0, 0.015, std::nullopt, opt),
            fit_marginal_vg(q, 17.0, 0.015, std::nullopt, opt));
}

TEST(MarginalFit, NoisyQuotesStayClose) {
  const VGMarginal truth{0.40, 0.31, 0.02};
  const auto q = synthetic_quotes(truth, 50.0, 0.015, {0.5, 1.0}, 0.005, 3);
  MarginalFitOptions opt;
  opt.relative_errors = true;
  const MarginalFit fit = fit_marginal_vg(q, 50.0, 0.015, std::nullopt, opt);
  EXPECT_NEAR(fit.params.sigma, truth.sigma, 0.02);
  double worst = 0.0;
  for (const auto& e : fit.errors) worst = std::max(worst, std::abs(e.error));
  EXPECT_LT(worst, 0.03);
}

TEST(MarginalFit, FlagsBoundary) {
  // Quotes generated with sigma below the box floor pin the fit to it.
  MarginalFitOptions opt;
  opt.sigma_bounds = {0.2, 2.0};
  opt.starts = 4;
  const auto q = synthetic_quotes({0.10, 0.10, 0.05}, 50.0, 0.015, {1.0});
  const MarginalFit fit = fit_marginal_vg(q, 50.0, 0.015, std::nullopt, opt);
  EXPECT_TRUE(fit.boundary);
}

TEST(MarginalFit, RejectsBadQuotes) {
  auto q = synthetic_quotes({0.4, 0.31, 0.02}, 50.0, 0.015, {1.0});
  EXPECT_THROW(fit_marginal_vg(std::span(q).first(2), 50.0, 0.015), DomainError);
  q[1].price = -1.0;
  EXPECT_THROW(fit_marginal_vg(q, 50.0, 0.015), DomainError);
}

TEST(DependenceFit, SsdCannotReachPowerCorrelation) {
  const auto& set = parameter_set("power_pair");
  const DependenceFit fit = fit_dependence(ModelKind::SSD, set.marginals, 0.94);
  EXPECT_TRUE(fit.shortfall);
  EXPECT_GT(fit.rho_model, 0.03);
  EXPECT_LT(fit.rho_model, 0.07);
  EXPECT_NEAR(fit.max_attainable, fit.rho_model, 1e-3);
  EXPECT_LE(fit.objective, fit.objective_at_init + 1e-15);
}

TEST(DependenceFit, AttainableTargets) {
  const auto& pp = parameter_set("power_pair");
  const auto& pg = parameter_set("power_gas");
  struct Case {
    ModelKind kind;
    const MarginalPair* m;
    double target;
  };
  const Case cases[] = {
      {ModelKind::SSD, &pp.marginals, 0.0},   {ModelKind::SSD, &pp.marginals, 0.03},
      {ModelKind::LSSD, &pp.marginals, 0.5},  {ModelKind::LSSD, &pg.marginals, -0.3},
      {ModelKind::BBSD, &pp.marginals, 0.94}, {ModelKind::BBSD, &pg.marginals, 0.54},
  };
  for (const auto& c : cases) {
    const DependenceFit fit = fit_dependence(c.kind, *c.m, c.target);
    EXPECT_FALSE(fit.shortfall) << to_string(c.kind) << " " << c.target;
    EXPECT_NEAR(fit.rho_model, c.target, 1e-3);
    const ModelSpec spec(*c.m, fit.dependence);
    EXPECT_TRUE(spec.feasible());
    EXPECT_NEAR(model_correlation(spec), fit.rho_model, 1e-12);
  }
}

TEST(DependenceFit, PinnedParameterIsExact) {
  const auto& set = parameter_set("power_gas");
  DependenceFitOptions opt;
  opt.pinned["a"] = 0.5;
  const DependenceFit fit = fit_dependence(ModelKind::BBSD, set.marginals, 0.3, opt);
  EXPECT_EQ(std::get<BBSDDependence>(fit.dependence).a, 0.5);
  EXPECT_NEAR(fit.rho_model, 0.3, 1e-3);
  opt.pinned.clear();
  opt.pinned["bogus"] = 1.0;
  EXPECT_THROW(fit_dependence(ModelKind::BBSD, set.marginals, 0.3, opt), DomainError);
}

TEST(DependenceFit, RejectsBadTargetAndInit) {
  const auto& set = parameter_set("power_gas");
  EXPECT_THROW(fit_dependence(ModelKind::SSD, set.marginals, 1.5), DomainError);
  EXPECT_THROW(fit_dependence(ModelKind::SSD, set.marginals, 0.0, {}, Dependence{set.bbsd}),
               DomainError);
}

TEST(MaxAttainable, Values) {
  const auto& set = parameter_set("power_pair");
  const double ssd = max_attainable_correlation(ModelKind::SSD, set.marginals);
  EXPECT_GT(ssd, 0.03);
  EXPECT_LT(ssd, 0.07);
  EXPECT_GE(max_attainable_correlation(ModelKind::BBSD, set.marginals), 0.94);
  EXPECT_GT(max_attainable_correlation(ModelKind::LSSD, set.marginals), 0.8);
  const MarginalPair zero_drift{VGMarginal{0.0, 0.3, 0.02}, VGMarginal{0.0, 0.3, 0.02}};
  EXPECT_NEAR(max_attainable_correlation(ModelKind::SSD, zero_drift), 0.0, 1e-12);
}

TEST(DefaultBounds, Names) {
  const auto& set = parameter_set("power_pair");
  auto names = [&](ModelKind k) {
    std::vector<std::string> v;
    for (const auto& b : default_dependence_bounds(k, set.marginals)) v.push_back(b.name);
    return v;
  };
  EXPECT_EQ(names(ModelKind::SSD), (std::vector<std::string>{"A", "a"}));
  EXPECT_EQ(names(ModelKind::LSSD), (std::vector<std::string>{"A", "a", "rho"}));
  EXPECT_EQ(names(ModelKind::BBSD), (std::vector<std::string>{"a1", "a2", "a", "nuR"}));
}

TEST(HistoricalCorrelation, Cases) {
  const std::vector<double> p{10, 11, 10.5, 12, 11.8, 13};
  EXPECT_NEAR(historical_correlation(p, p), 1.0, 1e-12);
  std::vector<double> inv;
  for (double x : p) inv.push_back(100.0 / x);
  EXPECT_NEAR(historical_correlation(p, inv), -1.0, 1e-12);

  const std::vector<double> doubling{1, 2, 4, 8}, other{1, 2, 4, 16};
  EXPECT_THROW(historical_correlation(doubling, other), DomainError);

  const std::vector<double> x{1, 2, 3, 5, 4}, y{2, 3, 3, 4, 5};
  std::vector<double> rx, ry;
  for (std::size_t i = 1; i < x.size(); ++i) {
    rx.push_back(std::log(x[i] / x[i - 1]));
    ry.push_back(std::log(y[i] / y[i - 1]));
  }
  const double mx = (rx[0] + rx[1] + rx[2] + rx[3]) / 4, my = (ry[0] + ry[1] + ry[2] + ry[3]) / 4;
  double sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 4; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  EXPECT_NEAR(historical_correlation(x, y), sxy / std::sqrt(sxx * syy), 1e-12);

  const std::vector<double> short_series{1, 2};
  EXPECT_THROW(historical_correlation(short_series, short_series), DomainError);
  EXPECT_THROW(historical_correlation(x, short_series), DomainError);
  const std::vector<double> neg{1, -2, 3};
  EXPECT_THROW(historical_correlation(neg, neg), DomainError);
}
