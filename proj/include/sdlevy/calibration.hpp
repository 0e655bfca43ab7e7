#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sdlevy/model.hpp"
#include "sdlevy/pricing.hpp"

namespace sdlevy {

struct OptionQuote {
  std::string asset;
  double T = 0.0;      // years to expiry
  double K = 0.0;      // strike
  double price = 0.0;  // observed call premium

  bool operator==(const OptionQuote&) const = default;
};

/// Per-quote fit diagnostic; error = (model - market) / market.
struct QuoteError {
  double T = 0.0;
  double K = 0.0;
  double market = 0.0;
  double model = 0.0;
  double error = 0.0;

  bool operator==(const QuoteError&) const = default;
};

struct MarginalFitOptions {
  FourierGrid grid = FourierGrid::vanilla_default();
  // Minimise sum ((C_model - C) / C)^2 instead of absolute squared errors.
  bool relative_errors = false;
  int starts = 8;
  std::uint64_t seed = 20200731;
  // Search box for (mu, sigma, alpha).
  std::array<double, 2> mu_bounds{-2.0, 2.0};
  std::array<double, 2> sigma_bounds{1e-3, 2.0};
  std::array<double, 2> alpha_bounds{1e-4, 2.0};
};

struct MarginalFit {
  VGMarginal params;
  double objective = 0.0;
  double rmse = 0.0;
  std::vector<QuoteError> errors;
  int starts = 0;
  int iterations = 0;
  bool converged = false;
  // sigma or alpha ended on its lower bound.
  bool boundary = false;

  bool operator==(const MarginalFit&) const = default;
};

/// Nonlinear least squares fit of VG parameters to call quotes of one asset
/// priced on the FFT lattice: Nelder-Mead multi-starts in a transformed box,
/// then a Levenberg-Marquardt polish of the best start.
MarginalFit fit_marginal_vg(std::span<const OptionQuote> quotes, double F0, double r,
                            std::optional<VGMarginal> init = std::nullopt,
                            const MarginalFitOptions& options = {});

struct ParameterBound {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
};

/// Free dependence parameters per model, in fitting order:
/// SSD (A, a), LSSD (A, a, rho), BBSD (a1, a2, a, nuR). B is fixed to 1.
std::vector<ParameterBound> default_dependence_bounds(ModelKind kind,
                                                      const MarginalPair& marginals);

struct DependenceFitOptions {
  // Replaces the default box entry of the same name.
  std::vector<ParameterBound> bounds;
  // Parameters held at a fixed value, e.g. {"a", 0.5}.
  std::map<std::string, double> pinned;
  int starts = 8;
  std::uint64_t seed = 20200731;
  // |rho_model - rho_target| above this flags a shortfall.
  double tolerance = 1e-3;
  // Alternative optima within this objective distance of the best are kept.
  double near_optimal_gap = 1e-6;
};

struct DependenceFit {
  Dependence dependence;
  double rho_model = 0.0;
  double rho_target = 0.0;
  double objective = 0.0;
  double objective_at_init = 0.0;
  bool shortfall = false;
  double max_attainable = 0.0;
  std::vector<Dependence> near_optimal;
  int starts = 0;
  int iterations = 0;
  bool converged = false;

  bool operator==(const DependenceFit&) const = default;
};

/// Fits the dependence parameters to a correlation target through the closed
/// form model correlation, with marginals held fixed.
DependenceFit fit_dependence(ModelKind kind, const MarginalPair& marginals, double rho_target,
                             const DependenceFitOptions& options = {},
                             std::optional<Dependence> init = std::nullopt);

/// Supremum of the model correlation over the feasible dependence box.
double max_attainable_correlation(ModelKind kind, const MarginalPair& marginals,
                                  const DependenceFitOptions& options = {});

/// Pearson correlation of one-step log-returns of two aligned price series.
double historical_correlation(std::span<const double> series1, std::span<const double> series2);

inline constexpr const char* kArtifactVersion = "1";

struct CalibrationResult {
  std::string version = kArtifactVersion;
  ModelKind kind = ModelKind::SSD;
  std::array<std::string, 2> assets;
  MarketFrame market;
  MarginalPair marginals;
  std::array<MarginalFit, 2> marginal_fits;
  Dependence dependence;
  DependenceFit dependence_fit;
  double rho_model = 0.0;
  double rho_market = 0.0;

  ModelSpec spec() const { return ModelSpec(marginals, dependence); }
  bool operator==(const CalibrationResult&) const = default;
};

}  // namespace sdlevy
