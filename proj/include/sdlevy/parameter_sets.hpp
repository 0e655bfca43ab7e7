#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "sdlevy/model.hpp"
#include "sdlevy/pricing.hpp"

namespace sdlevy {

/// Bundled desk-scale parameter sets: a two-country power pair and a power
/// versus gas pair, each with fitted marginals and one dependence record per
/// model.
struct ParameterSet {
  std::string name;
  std::array<std::string, 2> assets;
  MarginalPair marginals;
  SSDDependence ssd;
  LSSDDependence lssd;
  BBSDDependence bbsd;
  MarketFrame market;
  double rho_market = 0.0;  // historical log-return correlation

  ModelSpec spec(ModelKind kind) const;
};

/// "power_pair" or "power_gas". Throws ParseError for other names.
const ParameterSet& parameter_set(std::string_view name);
std::vector<std::string> parameter_set_names();

/// BBSD record whose derived common-component parameters reproduce the given
/// gamma_R1, gamma_R2 and nu_1: nuR = alpha1 nu1 / (nu1 - alpha1) and
/// a_j = sigma_j sqrt(alpha_j / nuR) / gamma_Rj.
BBSDDependence bbsd_from_published(const MarginalPair& marginals, double gammaR1, double gammaR2,
                                   double nu1, double a);

}  // namespace sdlevy
