#include <chrono>
#include <cmath>
#include <sstream>

#include "sdlevy/cli.hpp"
#include "sdlevy/parameter_sets.hpp"
#include "sdlevy/pricing.hpp"
#include "sdlevy/sampling.hpp"

namespace sdlevy::cli {
namespace {

ValidationCheck upper(std::string name, double measured, double tol, std::string detail = {}) {
  return {std::move(name), measured <= tol, measured, tol, std::move(detail)};
}

std::string model_tag(ModelKind k) { return std::string(to_string(k)); }

std::vector<double> u_grid(int n, double lo, double hi) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(lo + (hi - lo) * i / (n - 1));
  return out;
}

// Normalised with / without the sd decomposition of Gamma(A, B) at a.
double gamma_factorization_error(double A, double B, double a) {
  double worst = 0.0;
  for (double u : u_grid(50, -20.0, 20.0)) {
    const Complex lhs = gamma_chf(A, B, u);
    const Complex rhs = gamma_chf(A, B, a * u) * za_chf(A, B, a, 1.0, u);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

ModelSpec with_a(const ModelSpec& spec, double a) {
  return std::visit(
      [&](auto d) {
        d.a = a;
        return ModelSpec(spec.marginals(), d, AMode::Limit);
      },
      spec.dependence());
}

}  // namespace

std::vector<ValidationCheck> run_validation_suite(const RunConfig& c, std::ostream& log) {
  std::vector<ValidationCheck> checks;
  const auto started = std::chrono::steady_clock::now();
  const std::size_t n = c.n_paths;
  const ParameterSet& set = parameter_set(c.parameter_set);

  for (ModelKind kind : {ModelKind::SSD, ModelKind::LSSD, ModelKind::BBSD}) {
    const ModelSpec spec = validation_spec(c, kind);
    const std::string tag = model_tag(kind);
    log << "checking " << tag << '\n';

    // Self-decomposability of the common Gamma clock.
    double A = 0.0, B = 1.0;
    if (kind == ModelKind::BBSD) {
      A = B = 1.0 / spec.bbsd().nuR;
    } else {
      A = kind == ModelKind::SSD ? spec.ssd().A : spec.lssd().A;
      B = kind == ModelKind::SSD ? spec.ssd().B : spec.lssd().B;
    }
    checks.push_back(upper("sd-factorization/" + tag, gamma_factorization_error(A, B, spec.sd_parameter()),
                           1e-12));

    // Marginal closure of the closed-form joint chf.
    double closure = 0.0;
    for (double u : u_grid(40, -10.0, 10.0)) {
      closure = std::max(closure, std::abs(joint_chf(spec, 1.0, u, 0.0) -
                                           marginal_vg_chf(spec.effective_marginal(0), 1.0, u)));
      closure = std::max(closure, std::abs(joint_chf(spec, 1.0, 0.0, u) -
                                           marginal_vg_chf(spec.effective_marginal(1), 1.0, u)));
    }
    checks.push_back(upper("chf-marginal-closure/" + tag, closure, 1e-12));

    // Extended chf approaches the common-subordinator chf as a -> 1.
    const ModelSpec near_one = with_a(spec, 1.0 - 1e-8);
    double limit = 0.0;
    for (double u1 : u_grid(7, -3.0, 3.0)) {
      for (double u2 : u_grid(7, -3.0, 3.0)) {
        limit = std::max(limit, std::abs(joint_chf(near_one, 1.0, u1, u2) -
                                         common_subordinator_chf(near_one, 1.0, u1, u2)));
      }
    }
    checks.push_back(upper("limit-recovery/" + tag, limit, 1e-6));

    // Simulated terminal pairs against the closed forms.
    const PathBatch y = simulate_terminals(spec, 1.0, n, c.seed + static_cast<int>(kind));
    const Eigen::VectorXd y1 = y.terminal(0), y2 = y.terminal(1);
    const Eigen::ArrayXd d1 = y1.array() - y1.mean(), d2 = y2.array() - y2.mean();
    const double rho_hat = (d1 * d2).sum() / std::sqrt(d1.square().sum() * d2.square().sum());
    checks.push_back(upper("correlation/" + tag, std::abs(rho_hat - model_correlation(spec)), 0.01));

    double worst_z = 0.0;
    const double pts[][2] = {{0.5, 0.5}, {-1.0, 2.0}, {2.0, -1.5}, {1.5, 1.5}, {-2.5, 0.75}};
    for (const auto& p : pts) {
      const Eigen::ArrayXd phase = p[0] * y1.array() + p[1] * y2.array();
      const Eigen::ArrayXd re = phase.cos(), im = phase.sin();
      const double nd = static_cast<double>(n);
      const Complex est(re.mean(), im.mean());
      const double var = (re - re.mean()).square().sum() / (nd - 1) + (im - im.mean()).square().sum() / (nd - 1);
      const double se = std::sqrt(var / nd);
      worst_z = std::max(worst_z, std::abs(est - joint_chf(spec, 1.0, p[0], p[1])) / se);
    }
    checks.push_back(upper("joint-chf-mc/" + tag, worst_z, 4.5, "(in standard errors)"));

    // Spread lower bound against simulation.
    const MarketFrame frame{set.market.F0, c.r, set.market.T};
    const double atm = std::round(frame.F0[0] - frame.F0[1]);
    const std::vector<double> strikes{std::max(0.0, atm - 2.0), atm, atm + 2.0};
    const auto mc = mc_spread_prices(spec, frame, strikes, n, c.seed + 10 + static_cast<int>(kind));
    double excess = 0.0, rel = 0.0;
    for (std::size_t i = 0; i < strikes.size(); ++i) {
      const double cf = cf_spread_lower_bound(spec, frame, strikes[i], c.spread_grid).price;
      excess = std::max(excess, (cf - mc[i].price) / mc[i].std_error);
      rel = std::max(rel, std::abs(cf - mc[i].price) / mc[i].price);
    }
    checks.push_back(upper("spread-bound-below-mc/" + tag, excess, 4.0, "(cf - mc in standard errors)"));
    checks.push_back(upper("spread-bound-vs-mc/" + tag, rel, 0.02, "(relative gap)"));
  }

  // a-remainder sampler moments.
  {
    RngStream rng(c.seed, 77);
    const double alpha = 2.0, lambda = 3.0, a = 0.6;
    const std::size_t m = std::max<std::size_t>(n, 100000);
    Eigen::ArrayXd z(static_cast<Eigen::Index>(m));
    for (auto& v : z) v = sample_a_remainder(alpha, lambda, a, rng);
    const double mean = z.mean();
    const double sd = std::sqrt((z - mean).square().sum() / static_cast<double>(m - 1));
    const double expect = alpha * (1.0 - a) / lambda;
    checks.push_back(upper("a-remainder-mean", std::abs(mean - expect) / (sd / std::sqrt(static_cast<double>(m))),
                           4.5, "(in standard errors)"));
  }

  // Fourier against simulation for vanilla calls.
  for (int j = 0; j < 2; ++j) {
    const VanillaFrame frame{set.market.F0[j], c.r, set.market.T};
    std::vector<double> strikes;
    for (int k = -2; k <= 2; ++k) strikes.push_back(frame.F0 + 4.0 * k);
    const auto cf = carr_madan_calls(set.marginals[j], frame, strikes, c.vanilla_grid);
    RngStream rng(c.seed, 100 + j);
    const auto mc = mc_vanilla_prices(set.marginals[j], frame, strikes, n, rng);
    double worst = 0.0;
    for (std::size_t i = 0; i < strikes.size(); ++i) {
      worst = std::max(worst, std::abs(cf[i].price - mc[i].price) / mc[i].std_error);
    }
    checks.push_back(upper("vanilla-fft-vs-mc/asset" + std::to_string(j + 1), worst, 4.5,
                           "(in standard errors)"));
  }

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  checks.push_back(upper("runtime-seconds", seconds, 300.0));
  return checks;
}

}  // namespace sdlevy::cli
