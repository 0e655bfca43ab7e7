#include "sdlevy/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "sdlevy/errors.hpp"
#include "sdlevy/optimize.hpp"

namespace sdlevy {
namespace {

constexpr double kPenalty = 1e12;

// Quotes grouped by maturity so every expiry needs a single FFT.
struct QuoteLadder {
  double T = 0.0;
  std::vector<double> strikes;
  std::vector<std::size_t> index;  // position in the caller's quote list
};

std::vector<QuoteLadder> group_by_maturity(std::span<const OptionQuote> quotes) {
  std::map<double, QuoteLadder> by_T;
  for (std::size_t i = 0; i < quotes.size(); ++i) {
    auto& ladder = by_T[quotes[i].T];
    ladder.T = quotes[i].T;
    ladder.strikes.push_back(quotes[i].K);
    ladder.index.push_back(i);
  }
  std::vector<QuoteLadder> out;
  for (auto& [T, ladder] : by_T) out.push_back(std::move(ladder));
  return out;
}

class MarginalProblem {
 public:
  MarginalProblem(std::span<const OptionQuote> quotes, double F0, double r,
                  const MarginalFitOptions& options)
      : quotes_(quotes), ladders_(group_by_maturity(quotes)), F0_(F0), r_(r), options_(options) {}

  VGMarginal decode(const Eigen::VectorXd& z) const {
    return {to_box(z[0], options_.mu_bounds[0], options_.mu_bounds[1]),
            to_box(z[1], options_.sigma_bounds[0], options_.sigma_bounds[1]),
            to_box(z[2], options_.alpha_bounds[0], options_.alpha_bounds[1])};
  }

  Eigen::VectorXd encode(const VGMarginal& m) const {
    Eigen::VectorXd z(3);
    z << from_box(m.mu, options_.mu_bounds[0], options_.mu_bounds[1]),
        from_box(m.sigma, options_.sigma_bounds[0], options_.sigma_bounds[1]),
        from_box(m.alpha, options_.alpha_bounds[0], options_.alpha_bounds[1]);
    return z;
  }

  bool priceable(const VGMarginal& m) const {
    return m.sigma > 0.0 && m.alpha > 0.0 && exponential_moment_base(m, 1.0) > 0.0 &&
           exponential_moment_base(m, 1.0 + options_.grid.damping) > 0.0;
  }

  // Model prices in quote order; empty when the parameters cannot be priced.
  std::vector<double> model_prices(const VGMarginal& m) const {
    if (!priceable(m)) return {};
    std::vector<double> out(quotes_.size());
    try {
      for (const auto& ladder : ladders_) {
        const auto prices =
            carr_madan_calls(m, VanillaFrame{F0_, r_, ladder.T}, ladder.strikes, options_.grid);
        for (std::size_t i = 0; i < prices.size(); ++i) out[ladder.index[i]] = prices[i].price;
      }
    } catch (const Error&) {
      return {};
    }
    return out;
  }

  // Fills res and returns false when the parameters cannot be priced.
  bool residuals(const VGMarginal& m, Eigen::VectorXd& res) const {
    res.resize(static_cast<Eigen::Index>(quotes_.size()));
    const auto prices = model_prices(m);
    if (prices.empty()) {
      res.setConstant(std::sqrt(kPenalty));
      return false;
    }
    for (std::size_t i = 0; i < quotes_.size(); ++i) {
      double e = prices[i] - quotes_[i].price;
      if (options_.relative_errors) e /= quotes_[i].price;
      res[static_cast<Eigen::Index>(i)] = e;
    }
    return true;
  }

  double objective(const Eigen::VectorXd& z) const {
    Eigen::VectorXd res;
    if (!residuals(decode(z), res)) return kPenalty;
    return res.squaredNorm();
  }

  std::size_t size() const { return quotes_.size(); }
  std::span<const OptionQuote> quotes() const { return quotes_; }
  double F0() const { return F0_; }

 private:
  std::span<const OptionQuote> quotes_;
  std::vector<QuoteLadder> ladders_;
  double F0_;
  double r_;
  const MarginalFitOptions& options_;
};

// Adapter for Eigen's Levenberg-Marquardt in the transformed coordinates.
struct ResidualFunctor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  const MarginalProblem* problem = nullptr;

  int inputs() const { return 3; }
  int values() const { return static_cast<int>(problem->size()); }
  int operator()(const Eigen::VectorXd& z, Eigen::VectorXd& fvec) const {
    problem->residuals(problem->decode(z), fvec);
    return 0;
  }
};

bool lm_converged(int status) {
  using namespace Eigen::LevenbergMarquardtSpace;
  switch (status) {
    case RelativeReductionTooSmall:
    case RelativeErrorTooSmall:
    case RelativeErrorAndReductionTooSmall:
    case CosinusTooSmall:
    case FtolTooSmall:
    case XtolTooSmall:
    case GtolTooSmall:
      return true;
    default:
      return false;
  }
}

bool near_bound(double x, const std::array<double, 2>& b) {
  const double width = b[1] - b[0];
  return (x - b[0]) < 1e-3 * width || (b[1] - x) < 1e-3 * width;
}

void check_quotes(std::span<const OptionQuote> quotes, double F0) {
  if (quotes.size() < 3) throw DomainError("fit_marginal_vg: at least 3 quotes are required");
  if (!(F0 > 0.0)) throw DomainError("fit_marginal_vg: F0 must be positive");
  for (std::size_t i = 0; i < quotes.size(); ++i) {
    const auto& q = quotes[i];
    std::ostringstream os;
    os << "fit_marginal_vg: quote " << i << ' ';
    if (q.asset != quotes.front().asset) throw DomainError(os.str() + "belongs to another asset");
    if (!(q.K > 0.0)) throw DomainError(os.str() + "field K must be > 0");
    if (!(q.T > 0.0)) throw DomainError(os.str() + "field T must be > 0");
    if (!(q.price > 0.0)) throw DomainError(os.str() + "field price must be > 0");
  }
}

struct StartOutcome {
  Eigen::VectorXd z;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Runs every start concurrently and returns outcomes in start order.
template <class Run>
std::vector<StartOutcome> run_starts(const std::vector<Eigen::VectorXd>& starts, Run run) {
  std::vector<std::future<StartOutcome>> jobs;
  jobs.reserve(starts.size());
  for (const auto& z0 : starts) jobs.push_back(std::async(std::launch::async, run, z0));
  std::vector<StartOutcome> out;
  out.reserve(starts.size());
  for (auto& job : jobs) out.push_back(job.get());
  return out;
}

// Lowest objective wins; exact ties go to the lexicographically smaller
// parameter vector.
std::size_t best_index(const std::vector<StartOutcome>& outcomes) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < outcomes.size(); ++i) {
    const auto& c = outcomes[i];
    const auto& b = outcomes[best];
    if (c.value < b.value) {
      best = i;
    } else if (c.value == b.value &&
               std::lexicographical_compare(c.z.begin(), c.z.end(), b.z.begin(), b.z.end())) {
      best = i;
    }
  }
  return best;
}

}  // namespace

MarginalFit fit_marginal_vg(std::span<const OptionQuote> quotes, double F0, double r,
                            std::optional<VGMarginal> init, const MarginalFitOptions& options) {
  check_quotes(quotes, F0);
  options.grid.check();
  MarginalProblem problem(quotes, F0, r, options);

  std::vector<Eigen::VectorXd> starts;
  if (init) {
    if (!problem.priceable(*init) || problem.model_prices(*init).empty()) {
      std::ostringstream os;
      os << "fit_marginal_vg: initial parameters (" << init->mu << ", " << init->sigma << ", "
         << init->alpha << ") are not feasible";
      throw InfeasibleError(os.str());
    }
    starts.push_back(problem.encode(*init));
  }
  // Latin hypercube starts in a typical region of the box; infeasible draws
  // are pulled towards zero drift until they can be priced.
  for (const auto& u : latin_hypercube(std::max(options.starts, 1), 3, options.seed)) {
    VGMarginal m{-0.5 + u[0], 0.05 + 0.75 * u[1], 0.005 + 0.3 * u[2]};
    m.mu = std::clamp(m.mu, options.mu_bounds[0], options.mu_bounds[1]);
    m.sigma = std::clamp(m.sigma, options.sigma_bounds[0], options.sigma_bounds[1]);
    m.alpha = std::clamp(m.alpha, options.alpha_bounds[0], options.alpha_bounds[1]);
    for (int k = 0; k < 20 && !problem.priceable(m); ++k) {
      m.mu *= 0.5;
      m.alpha *= 0.7;
    }
    if (problem.priceable(m)) starts.push_back(problem.encode(m));
  }
  if (starts.empty()) throw InfeasibleError("fit_marginal_vg: no feasible starting point in the box");

  NelderMeadOptions nm;
  nm.max_iterations = 400;
  nm.initial_step = 0.5;
  nm.f_tol = 1e-16;
  auto outcomes = run_starts(starts, [&](const Eigen::VectorXd& z0) {
    const auto res = nelder_mead([&](const Eigen::VectorXd& z) { return problem.objective(z); },
                                 z0, nm);
    return StartOutcome{res.x, res.value, res.iterations, res.converged};
  });
  const std::size_t best = best_index(outcomes);
  if (!(outcomes[best].value < kPenalty)) {
    throw InfeasibleError("fit_marginal_vg: every start left the feasible region");
  }

  // Gauss-Newton type polish of the winning simplex.
  Eigen::VectorXd z = outcomes[best].z;
  ResidualFunctor functor{&problem};
  Eigen::NumericalDiff<ResidualFunctor, Eigen::Central> diff(functor);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<ResidualFunctor, Eigen::Central>, double> lm(diff);
  lm.parameters.xtol = 1e-15;
  lm.parameters.ftol = 1e-15;
  lm.parameters.maxfev = 3000;
  const int status = lm.minimize(z);
  bool converged = outcomes[best].converged;
  if (problem.objective(z) <= outcomes[best].value) {
    converged = converged || lm_converged(status);
  } else {
    z = outcomes[best].z;
  }

  MarginalFit fit;
  fit.params = problem.decode(z);
  fit.starts = static_cast<int>(starts.size());
  fit.iterations = std::accumulate(outcomes.begin(), outcomes.end(), 0,
                                   [](int acc, const StartOutcome& o) { return acc + o.iterations; }) +
                   static_cast<int>(lm.nfev);
  fit.converged = converged;
  const auto prices = problem.model_prices(fit.params);
  double sq = 0.0;
  for (std::size_t i = 0; i < quotes.size(); ++i) {
    const double e = prices[i] - quotes[i].price;
    sq += e * e;
    fit.objective += options.relative_errors ? (e / quotes[i].price) * (e / quotes[i].price) : e * e;
    fit.errors.push_back({quotes[i].T, quotes[i].K, quotes[i].price, prices[i], e / quotes[i].price});
  }
  fit.rmse = std::sqrt(sq / static_cast<double>(quotes.size()));
  fit.boundary = near_bound(fit.params.sigma, options.sigma_bounds) ||
                 near_bound(fit.params.alpha, options.alpha_bounds) ||
                 near_bound(fit.params.mu, options.mu_bounds);
  return fit;
}

std::vector<ParameterBound> default_dependence_bounds(ModelKind kind,
                                                      const MarginalPair& marginals) {
  const double max_alpha = std::max(marginals[0].alpha, marginals[1].alpha);
  if (!(max_alpha > 0.0)) throw InfeasibleError("dependence bounds: alpha_j must be positive");
  const double A_max = 1.0 / max_alpha;
  const ParameterBound a{"a", 0.01, 0.999};
  switch (kind) {
    case ModelKind::SSD:
      return {{"A", 1e-6 * A_max, A_max}, a};
    case ModelKind::LSSD:
      return {{"A", 1e-6 * A_max, A_max}, a, {"rho", -1.0, 1.0}};
    case ModelKind::BBSD:
      return {{"a1", 0.01, 2.0},
              {"a2", 0.01, 2.0},
              a,
              {"nuR", max_alpha * (1.0 + 1e-6), std::max(1.0, 100.0 * max_alpha)}};
  }
  return {};
}

namespace {

Dependence assemble(ModelKind kind, const std::map<std::string, double>& v) {
  switch (kind) {
    case ModelKind::SSD:
      return SSDDependence{v.at("A"), 1.0, v.at("a")};
    case ModelKind::LSSD:
      return LSSDDependence{v.at("A"), 1.0, v.at("a"), v.at("rho")};
    case ModelKind::BBSD:
      return BBSDDependence{v.at("a1"), v.at("a2"), v.at("a"), v.at("nuR")};
  }
  throw std::logic_error("unknown model kind");
}

std::map<std::string, double> flatten(const Dependence& d) {
  return std::visit(
      [](const auto& x) -> std::map<std::string, double> {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, SSDDependence>) {
          return {{"A", x.A}, {"a", x.a}};
        } else if constexpr (std::is_same_v<T, LSSDDependence>) {
          return {{"A", x.A}, {"a", x.a}, {"rho", x.rho}};
        } else {
          return {{"a1", x.a1}, {"a2", x.a2}, {"a", x.a}, {"nuR", x.nuR}};
        }
      },
      d);
}

// Correlation objective over the free (unpinned) parameters in box
// coordinates.
class DependenceProblem {
 public:
  DependenceProblem(ModelKind kind, const MarginalPair& marginals,
                    const DependenceFitOptions& options)
      : kind_(kind), marginals_(marginals) {
    auto bounds = default_dependence_bounds(kind, marginals);
    for (const auto& user : options.bounds) {
      auto it = std::find_if(bounds.begin(), bounds.end(),
                             [&](const ParameterBound& b) { return b.name == user.name; });
      if (it == bounds.end()) {
        throw DomainError("fit_dependence: no parameter '" + user.name + "' in model " +
                          std::string(to_string(kind)));
      }
      *it = user;
    }
    for (const auto& [name, value] : options.pinned) {
      auto it = std::find_if(bounds.begin(), bounds.end(),
                             [&](const ParameterBound& b) { return b.name == name; });
      if (it == bounds.end()) {
        throw DomainError("fit_dependence: cannot pin unknown parameter '" + name + "'");
      }
      fixed_[name] = value;
    }
    for (const auto& b : bounds) {
      if (fixed_.count(b.name)) continue;
      if (!(b.lo < b.hi)) {
        throw InfeasibleError("fit_dependence: empty box for parameter '" + b.name + "'");
      }
      free_.push_back(b);
    }
  }

  int dim() const { return static_cast<int>(free_.size()); }
  const std::vector<ParameterBound>& free() const { return free_; }

  std::map<std::string, double> values(const Eigen::VectorXd& z) const {
    auto v = fixed_;
    for (int i = 0; i < dim(); ++i) v[free_[i].name] = to_box(z[i], free_[i].lo, free_[i].hi);
    return v;
  }

  Dependence dependence(const Eigen::VectorXd& z) const { return assemble(kind_, values(z)); }

  Eigen::VectorXd encode(const Dependence& d) const {
    const auto v = flatten(d);
    Eigen::VectorXd z(dim());
    for (int i = 0; i < dim(); ++i) {
      const double x = std::clamp(v.at(free_[i].name), free_[i].lo, free_[i].hi);
      z[i] = from_box(x, free_[i].lo, free_[i].hi);
    }
    return z;
  }

  Eigen::VectorXd from_unit(const Eigen::VectorXd& u) const {
    Eigen::VectorXd z(dim());
    for (int i = 0; i < dim(); ++i) {
      const double w = free_[i].hi - free_[i].lo;
      const double x = free_[i].lo + w * (1e-3 + (1.0 - 2e-3) * u[i]);
      z[i] = from_box(x, free_[i].lo, free_[i].hi);
    }
    return z;
  }

  std::optional<double> correlation(const Eigen::VectorXd& z) const {
    const ModelSpec spec(marginals_, dependence(z));
    if (!spec.feasible()) return std::nullopt;
    return model_correlation(spec);
  }

 private:
  ModelKind kind_;
  MarginalPair marginals_;
  std::map<std::string, double> fixed_;
  std::vector<ParameterBound> free_;
};

std::vector<StartOutcome> optimize_correlation(const DependenceProblem& problem,
                                               const std::vector<Eigen::VectorXd>& starts,
                                               const std::function<double(double)>& loss) {
  auto f = [&](const Eigen::VectorXd& z) {
    const auto rho = problem.correlation(z);
    return rho ? loss(*rho) : kPenalty;
  };
  if (problem.dim() == 0) {
    return {StartOutcome{Eigen::VectorXd(0), f(Eigen::VectorXd(0)), 0, true}};
  }
  NelderMeadOptions nm;
  nm.max_iterations = 3000;
  nm.f_tol = 1e-18;
  nm.initial_step = 0.5;
  return run_starts(starts, [&](const Eigen::VectorXd& z0) {
    const auto res = nelder_mead(f, z0, nm);
    return StartOutcome{res.x, res.value, res.iterations, res.converged};
  });
}

std::vector<Eigen::VectorXd> dependence_starts(const DependenceProblem& problem,
                                               const DependenceFitOptions& options) {
  std::vector<Eigen::VectorXd> starts;
  if (problem.dim() == 0) return {Eigen::VectorXd(0)};
  for (const auto& u : latin_hypercube(std::max(options.starts, 1), problem.dim(), options.seed)) {
    starts.push_back(problem.from_unit(u));
  }
  return starts;
}

}  // namespace

DependenceFit fit_dependence(ModelKind kind, const MarginalPair& marginals, double rho_target,
                             const DependenceFitOptions& options, std::optional<Dependence> init) {
  if (!(std::abs(rho_target) <= 1.0)) throw DomainError("fit_dependence: |rho_target| must be <= 1");
  if (init && kind_of(*init) != kind) {
    throw DomainError("fit_dependence: initial record is not a " + std::string(to_string(kind)) +
                      " dependence");
  }
  const DependenceProblem problem(kind, marginals, options);
  auto loss = [rho_target](double rho) { return (rho - rho_target) * (rho - rho_target); };

  // The initial point is the caller's record or, failing that, the box centre.
  Eigen::VectorXd z_init = init ? problem.encode(*init) : Eigen::VectorXd::Zero(problem.dim());
  auto starts = dependence_starts(problem, options);
  if (problem.dim() > 0) starts.insert(starts.begin(), z_init);

  auto outcomes = optimize_correlation(problem, starts, loss);
  const auto rho_init = problem.correlation(z_init);
  if (!rho_init && std::none_of(outcomes.begin(), outcomes.end(),
                                [](const StartOutcome& o) { return o.value < kPenalty; })) {
    throw InfeasibleError("fit_dependence: the feasible dependence set is empty for " +
                          std::string(to_string(kind)));
  }
  const std::size_t best = best_index(outcomes);

  DependenceFit fit;
  fit.dependence = problem.dependence(outcomes[best].z);
  fit.rho_target = rho_target;
  fit.objective = outcomes[best].value;
  fit.objective_at_init = rho_init ? loss(*rho_init) : kPenalty;
  fit.rho_model = model_correlation(ModelSpec(marginals, fit.dependence));
  fit.starts = static_cast<int>(starts.size());
  for (const auto& o : outcomes) {
    fit.iterations += o.iterations;
    fit.converged = fit.converged || o.converged;
  }
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (i == best || outcomes[i].value > fit.objective + options.near_optimal_gap) continue;
    const Dependence alt = problem.dependence(outcomes[i].z);
    const auto differs = [&](const Dependence& other) {
      const auto x = flatten(alt), y = flatten(other);
      for (const auto& [name, value] : x) {
        if (std::abs(value - y.at(name)) > 1e-6 * std::max(1.0, std::abs(value))) return true;
      }
      return false;
    };
    if (differs(fit.dependence) && std::all_of(fit.near_optimal.begin(), fit.near_optimal.end(), differs)) {
      fit.near_optimal.push_back(alt);
    }
  }
  fit.max_attainable = std::max(max_attainable_correlation(kind, marginals, options), fit.rho_model);
  fit.shortfall = std::abs(fit.rho_model - rho_target) > options.tolerance;
  return fit;
}

double max_attainable_correlation(ModelKind kind, const MarginalPair& marginals,
                                  const DependenceFitOptions& options) {
  const DependenceProblem problem(kind, marginals, options);
  auto starts = dependence_starts(problem, options);
  const auto outcomes = optimize_correlation(problem, starts, [](double rho) { return -rho; });
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& o : outcomes) {
    if (o.value < kPenalty) best = std::max(best, -o.value);
  }
  if (!std::isfinite(best)) {
    throw InfeasibleError("max_attainable_correlation: the feasible dependence set is empty");
  }
  return best;
}

double historical_correlation(std::span<const double> series1, std::span<const double> series2) {
  if (series1.size() != series2.size()) {
    throw DomainError("historical_correlation: series lengths differ (" +
                      std::to_string(series1.size()) + " vs " + std::to_string(series2.size()) + ")");
  }
  if (series1.size() < 3) throw DomainError("historical_correlation: at least 3 prices are required");
  const std::size_t n = series1.size() - 1;
  Eigen::VectorXd x(n), y(n);
  for (std::size_t k = 0; k <= n; ++k) {
    if (!(series1[k] > 0.0) || !(series2[k] > 0.0)) {
      throw DomainError("historical_correlation: prices must be strictly positive (index " +
                        std::to_string(k) + ")");
    }
    if (k < n) {
      x[k] = std::log(series1[k + 1] / series1[k]);
      y[k] = std::log(series2[k + 1] / series2[k]);
    }
  }
  const Eigen::VectorXd raw_x = x, raw_y = y;
  x.array() -= x.mean();
  y.array() -= y.mean();
  const double sxx = x.squaredNorm(), syy = y.squaredNorm();
  // Constant growth rates leave only rounding noise after centring.
  const auto flat = [n](double ss, const Eigen::VectorXd& centred_from) {
    return ss <= 1e-24 * std::max(1.0, centred_from.squaredNorm()) * static_cast<double>(n);
  };
  if (flat(sxx, raw_x) || flat(syy, raw_y)) {
    throw DomainError("historical_correlation: a log-return series has zero variance");
  }
  return x.dot(y) / std::sqrt(sxx * syy);
}

}  // namespace sdlevy
