#include "sdlevy/pricing.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "sdlevy/errors.hpp"
#include "sdlevy/optimize.hpp"

namespace sdlevy {
namespace {

const Complex kI{0.0, 1.0};
constexpr double kPi = std::numbers::pi;

// Simpson weights on v_j = j * eta, j = 0..n-1.
double simpson_weight(std::size_t j) {
  if (j == 0) return 1.0 / 3.0;
  return j % 2 == 1 ? 4.0 / 3.0 : 2.0 / 3.0;
}

// Tail of a Fourier integrand relative to its head; non-negligible tails mean
// the frequency range is too short for this chf.
void check_tail(double head, double tail, const char* what) {
  if (tail > 1e-7 * std::max(head, 1e-300)) {
    std::ostringstream os;
    os << what << ": integrand not decayed at the end of the grid (|tail|/|head| = "
       << tail / head << "); increase n_points * eta";
    throw ConvergenceError(os.str());
  }
}

}  // namespace

void FourierGrid::check() const {
  if (n_points < 16 || (n_points & (n_points - 1)) != 0) {
    throw std::invalid_argument("FourierGrid: n_points must be a power of two >= 16");
  }
  if (!(eta > 0.0)) throw std::invalid_argument("FourierGrid: eta must be positive");
  if (!(damping > 0.0)) throw std::invalid_argument("FourierGrid: damping must be positive");
}

std::string_view to_string(PricingMethod method) {
  switch (method) {
    case PricingMethod::FourierFFT:
      return "fourier-fft";
    case PricingMethod::FourierSpreadBound:
      return "fourier-spread-bound";
    case PricingMethod::MonteCarlo:
      return "monte-carlo";
  }
  return "unknown";
}

std::vector<PriceResult> carr_madan_calls(const VGMarginal& m, const VanillaFrame& frame,
                                          std::span<const double> strikes,
                                          const FourierGrid& grid) {
  grid.check();
  if (!(frame.F0 > 0.0) || !(frame.T > 0.0)) {
    throw std::invalid_argument("carr_madan_calls: F0 and T must be positive");
  }
  const double omega = drift_correction(m);
  const double alpha = grid.damping;
  if (!(exponential_moment_base(m, 1.0 + alpha) > 0.0)) {
    std::ostringstream os;
    os << "carr_madan_calls: damping " << alpha
       << " outside the chf strip (1 - mu*alpha*(1+d) - sigma^2*alpha*(1+d)^2/2 <= 0)";
    throw DomainError(os.str());
  }
  const double T = frame.T;
  const double disc = std::exp(-frame.r * T);

  // Normalised log-forward X = ln(F(T)/F0) = omega T + Y(T).
  auto chf_x = [&](Complex v) { return std::exp(kI * v * omega * T) * marginal_vg_chf(m, T, v); };

  const std::size_t n = grid.n_points;
  const double eta = grid.eta;
  const double lambda = 2.0 * kPi / (static_cast<double>(n) * eta);
  const double b = static_cast<double>(n) * lambda / 2.0;

  std::vector<Complex> input(n), output(n);
  double head = 0.0, tail = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double v = static_cast<double>(j) * eta;
    const Complex shifted = v - (alpha + 1.0) * kI;
    const Complex denom = alpha * alpha + alpha - v * v + kI * (2.0 * alpha + 1.0) * v;
    const Complex psi = chf_x(shifted) / denom;
    if (j == 0) head = std::abs(psi);
    if (j == n - 1) tail = std::abs(psi);
    input[j] = std::exp(kI * b * v) * psi * eta * simpson_weight(j);
  }
  check_tail(head, tail, "carr_madan_calls");
  Eigen::FFT<double> fft;
  fft.fwd(output, input);

  // Undiscounted normalised call c(k_u) on k_u = -b + u lambda.
  std::vector<double> c(n);
  for (std::size_t u = 0; u < n; ++u) {
    const double k = -b + lambda * static_cast<double>(u);
    c[u] = std::exp(-alpha * k) / kPi * output[u].real();
  }

  std::vector<PriceResult> prices;
  prices.reserve(strikes.size());
  for (double K : strikes) {
    if (K < 0.0 || !std::isfinite(K)) throw DomainError("carr_madan_calls: strike must be >= 0");
    if (K == 0.0) {
      prices.push_back({disc * frame.F0 * chf_x(-kI).real(), 0.0, PricingMethod::FourierFFT});
      continue;
    }
    const double k = std::log(K / frame.F0);
    const double pos = (k + b) / lambda;
    const auto base = static_cast<long>(std::floor(pos)) - 1;
    if (base < 0 || base + 3 >= static_cast<long>(n)) {
      std::ostringstream os;
      os << "carr_madan_calls: strike " << K << " outside the FFT lattice [" << frame.F0 * std::exp(-b + 2 * lambda)
         << ", " << frame.F0 * std::exp(b - 3 * lambda) << "]";
      throw DomainError(os.str());
    }
    // 4-point Lagrange cubic in log-strike.
    const double x = pos - static_cast<double>(base);
    double value = 0.0;
    for (int i = 0; i < 4; ++i) {
      double w = 1.0;
      for (int l = 0; l < 4; ++l) {
        if (l != i) w *= (x - l) / static_cast<double>(i - l);
      }
      value += w * c[static_cast<std::size_t>(base + i)];
    }
    prices.push_back({std::max(0.0, disc * frame.F0 * value), 0.0, PricingMethod::FourierFFT});
  }
  return prices;
}

PriceResult cf_spread_lower_bound(const ModelSpec& spec, const MarketFrame& frame, double K,
                                  const FourierGrid& grid, const SpreadBoundOptions& options) {
  grid.check();
  spec.require_feasible();
  if (!(K >= 0.0) || !std::isfinite(K)) throw DomainError("cf_spread_lower_bound: K must be >= 0");
  if (!(frame.F0[0] > 0.0) || !(frame.F0[1] > 0.0) || !(frame.T > 0.0)) {
    throw std::invalid_argument("cf_spread_lower_bound: F0 and T must be positive");
  }
  const double T = frame.T;
  const double delta = grid.damping;
  const std::array<double, 2> x0{std::log(frame.F0[0]) + drift_correction(spec.effective_marginal(0)) * T,
                                 std::log(frame.F0[1]) + drift_correction(spec.effective_marginal(1)) * T};

  // Joint chf of (ln F1(T), ln F2(T)).
  auto chf = [&](Complex u1, Complex u2) {
    return std::exp(kI * (u1 * x0[0] + u2 * x0[1])) * joint_chf(spec, T, u1, u2);
  };

  const std::size_t n = grid.n_points;
  const double eta = grid.eta;
  std::vector<Complex> psi(n);
  std::vector<double> gamma(n), weight(n);
  for (std::size_t j = 0; j < n; ++j) {
    gamma[j] = static_cast<double>(j) * eta;
    weight[j] = simpson_weight(j) * eta;
  }

  // Transform of e^{delta k} E[(F1 - F2 - K) 1{ln F1 - beta ln F2 > k}] in k.
  auto fill_psi = [&](double beta) {
    for (std::size_t j = 0; j < n; ++j) {
      const Complex g = gamma[j];
      const Complex w = g - kI * delta;  // (delta + i g) / i
      const Complex value = chf(g - kI * (delta + 1.0), -beta * w) - chf(w, -beta * w - kI) -
                            K * chf(w, -beta * w);
      psi[j] = value / (delta + kI * g);
    }
    check_tail(std::abs(psi.front()), std::abs(psi.back()), "cf_spread_lower_bound");
  };
  auto bound_at = [&](double k) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      s += weight[j] * (std::exp(-kI * gamma[j] * k) * psi[j]).real();
    }
    return std::exp(-delta * k) / kPi * s;
  };
  // Best k for the current psi: coarse scan around the tangent boundary, then
  // golden-section refinement.
  auto best_k = [&](double beta) {
    const double F2 = frame.F0[1];
    const double k0 = std::log(F2 + K) - beta * std::log(F2);
    double kb = k0, vb = bound_at(k0);
    const double half_width = 1.0, step = 0.05;
    for (double k = k0 - half_width; k <= k0 + half_width + 1e-12; k += step) {
      const double v = bound_at(k);
      if (v > vb) {
        vb = v;
        kb = k;
      }
    }
    return golden_section_maximize(bound_at, kb - step, kb + step, 1e-9);
  };

  const double beta0 = frame.F0[1] / (frame.F0[1] + K);
  fill_psi(beta0);
  ScalarOptimum best = best_k(beta0);
  if (options.optimize_beta && K > 0.0) {
    auto value_at_beta = [&](double beta) {
      fill_psi(beta);
      const ScalarOptimum o = best_k(beta);
      if (o.value > best.value) best = o;
      return o.value;
    };
    golden_section_maximize(value_at_beta, std::max(1e-3, beta0 - 0.25), beta0 + 0.25, 1e-6, 40);
  }
  const double price = std::exp(-frame.r * T) * best.value;
  return {std::max(0.0, price), 0.0, PricingMethod::FourierSpreadBound};
}

std::vector<PriceResult> mc_spread_prices(const ModelSpec& spec, const MarketFrame& frame,
                                          std::span<const double> strikes, std::size_t n_paths,
                                          std::uint64_t seed, const SimulationOptions& options) {
  spec.require_feasible();
  if (n_paths < 2) throw std::invalid_argument("mc_spread_prices: need at least two paths");
  const PathBatch y = simulate_terminals(spec, frame.T, n_paths, seed, options);
  const PathBatch f = to_forward_prices(y, frame.F0, {spec.effective_marginal(0), spec.effective_marginal(1)});
  const Eigen::ArrayXd spread = (f.terminal(0) - f.terminal(1)).array();
  const double disc = std::exp(-frame.r * frame.T);
  const double nd = static_cast<double>(n_paths);
  std::vector<PriceResult> out;
  out.reserve(strikes.size());
  for (double K : strikes) {
    const Eigen::ArrayXd payoff = (spread - K).max(0.0);
    const double mean = payoff.mean();
    const double var = (payoff - mean).square().sum() / (nd - 1.0);
    out.push_back({disc * mean, disc * std::sqrt(var / nd), PricingMethod::MonteCarlo});
  }
  return out;
}

PriceResult mc_spread_price(const ModelSpec& spec, const MarketFrame& frame, double K,
                            std::size_t n_paths, std::uint64_t seed,
                            const SimulationOptions& options) {
  const double strikes[] = {K};
  return mc_spread_prices(spec, frame, strikes, n_paths, seed, options).front();
}

std::vector<PriceResult> mc_vanilla_prices(const VGMarginal& m, const VanillaFrame& frame,
                                           std::span<const double> strikes, std::size_t n_paths,
                                           RngStream& rng, OptionType type) {
  if (n_paths < 2) throw std::invalid_argument("mc_vanilla_prices: need at least two paths");
  if (!(frame.F0 > 0.0) || !(frame.T > 0.0)) {
    throw std::invalid_argument("mc_vanilla_prices: F0 and T must be positive");
  }
  const double omega = drift_correction(m);
  const double T = frame.T;
  Eigen::ArrayXd terminal(static_cast<Eigen::Index>(n_paths));
  for (Eigen::Index p = 0; p < terminal.size(); ++p) {
    const double g = sample_gamma(T / m.alpha, 1.0 / m.alpha, rng);
    const double y = m.mu * g + m.sigma * std::sqrt(g) * rng.normal();
    terminal[p] = frame.F0 * std::exp(omega * T + y);
  }
  const double disc = std::exp(-frame.r * T);
  const double nd = static_cast<double>(n_paths);
  std::vector<PriceResult> out;
  out.reserve(strikes.size());
  for (double K : strikes) {
    const double sign = type == OptionType::Call ? 1.0 : -1.0;
    const Eigen::ArrayXd payoff = (sign * (terminal - K)).max(0.0);
    const double mean = payoff.mean();
    const double var = (payoff - mean).square().sum() / (nd - 1.0);
    out.push_back({disc * mean, disc * std::sqrt(var / nd), PricingMethod::MonteCarlo});
  }
  return out;
}

PriceResult mc_vanilla_price(const VGMarginal& m, const VanillaFrame& frame, double K,
                             std::size_t n_paths, RngStream& rng, OptionType type) {
  const double strikes[] = {K};
  return mc_vanilla_prices(m, frame, strikes, n_paths, rng, type).front();
}

}  // namespace sdlevy
