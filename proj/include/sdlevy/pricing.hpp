#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "sdlevy/model.hpp"
#include "sdlevy/sampling.hpp"

namespace sdlevy {

/// Two-asset market snapshot: forwards at time 0, flat continuously
/// compounded rate and maturity in years.
struct MarketFrame {
  std::array<double, 2> F0{0.0, 0.0};
  double r = 0.0;
  double T = 1.0;

  bool operator==(const MarketFrame&) const = default;
};

struct VanillaFrame {
  double F0 = 0.0;
  double r = 0.0;
  double T = 1.0;
};

inline VanillaFrame asset_frame(const MarketFrame& f, int j) { return {f.F0.at(j), f.r, f.T}; }

struct FourierGrid {
  std::size_t n_points = 4096;
  double eta = 0.25;
  double damping = 1.5;

  static FourierGrid vanilla_default() { return {4096, 0.25, 1.5}; }
  static FourierGrid spread_default() { return {4096, 0.25, 0.75}; }
  void check() const;
};

enum class PricingMethod { FourierFFT, FourierSpreadBound, MonteCarlo };
std::string_view to_string(PricingMethod method);

struct PriceResult {
  double price = 0.0;
  double std_error = 0.0;  // zero for Fourier methods
  PricingMethod method = PricingMethod::FourierFFT;
};

enum class OptionType { Call, Put };

/// Discounted European calls on F(T) = F0 exp(omega T + Y(T)) by damped
/// Fourier inversion on an FFT log-strike lattice, cubic-interpolated to the
/// requested strikes. K = 0 returns the discounted forward.
std::vector<PriceResult> carr_madan_calls(const VGMarginal& m, const VanillaFrame& frame,
                                          std::span<const double> strikes,
                                          const FourierGrid& grid = FourierGrid::vanilla_default());

struct SpreadBoundOptions {
  // Search the exponent beta of the exercise boundary F1 > e^k F2^beta as well
  // as k. When false beta stays at F2 / (F2 + K).
  bool optimize_beta = true;
};

/// Lower bound on exp(-rT) E[(F1(T) - F2(T) - K)^+] from the sub-optimal
/// exercise region {ln F1 - beta ln F2 > k}, maximised over k (and beta).
/// Each candidate is a single Fourier integral in k over the joint chf of the
/// log-forwards.
PriceResult cf_spread_lower_bound(const ModelSpec& spec, const MarketFrame& frame, double K,
                                  const FourierGrid& grid = FourierGrid::spread_default(),
                                  const SpreadBoundOptions& options = {});

/// Spread prices for a strike ladder on one set of simulated paths.
std::vector<PriceResult> mc_spread_prices(const ModelSpec& spec, const MarketFrame& frame,
                                          std::span<const double> strikes, std::size_t n_paths,
                                          std::uint64_t seed,
                                          const SimulationOptions& options = {});

PriceResult mc_spread_price(const ModelSpec& spec, const MarketFrame& frame, double K,
                            std::size_t n_paths, std::uint64_t seed,
                            const SimulationOptions& options = {});

/// Single-asset VG terminal simulation; all strikes share the same paths.
std::vector<PriceResult> mc_vanilla_prices(const VGMarginal& m, const VanillaFrame& frame,
                                           std::span<const double> strikes, std::size_t n_paths,
                                           RngStream& rng, OptionType type = OptionType::Call);

PriceResult mc_vanilla_price(const VGMarginal& m, const VanillaFrame& frame, double K,
                             std::size_t n_paths, RngStream& rng,
                             OptionType type = OptionType::Call);

}  // namespace sdlevy
