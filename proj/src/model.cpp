#include "sdlevy/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "sdlevy/errors.hpp"

namespace sdlevy {
namespace {

const Complex kI{0.0, 1.0};

bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

void require_finite(Complex u, const char* what) {
  if (!finite(u)) {
    throw std::invalid_argument(std::string(what) + ": non-finite argument");
  }
}

// Log((1 - i w / rate)) with the strip check.
Complex gamma_log_base(double rate, Complex w) {
  const Complex base = 1.0 - kI * w / rate;
  if (!(base.real() > 0.0)) {
    std::ostringstream os;
    os << "Gamma chf base " << base << " has non-positive real part (argument " << w
       << ", rate " << rate << ")";
    throw BranchError(os.str());
  }
  return std::log(base);
}

Complex gamma_factor(double shape, double rate, Complex w) {
  if (shape == 0.0) return 1.0;
  return std::exp(-shape * gamma_log_base(rate, w));
}

// ((B - i w) / (B - i a w))^(-tA), evaluated as a difference of logs so the
// two principal branches never fold into one quotient.
Complex za_factor(double A, double B, double a, double t, Complex w) {
  if (a == 1.0) return 1.0;
  const Complex num = B - kI * w;
  const Complex den = B - kI * a * w;
  if (!(num.real() > 0.0) || !(den.real() > 0.0)) {
    std::ostringstream os;
    os << "a-remainder chf base left the strip at argument " << w;
    throw BranchError(os.str());
  }
  return std::exp(-t * A * (std::log(num) - std::log(den)));
}

// Exponent of the conditional Gaussian chf: E[exp(i u Y) | G] = exp(i psi G).
Complex psi(double mu, double sigma, Complex u) {
  return u * mu + kI * sigma * sigma * u * u / 2.0;
}

bool a_in_range(double a, AMode mode) {
  return mode == AMode::Limit ? (a > 0.0 && a <= 1.0) : (a > 0.0 && a < 1.0);
}

void check_marginal(const VGMarginal& m, int j, ValidationReport& r) {
  const std::string idx = std::to_string(j + 1);
  if (!(std::isfinite(m.mu) && std::isfinite(m.sigma) && std::isfinite(m.alpha))) {
    r.violations.push_back({"marginal" + idx, "finite parameters", m.mu, 0.0});
    return;
  }
  if (!(m.sigma > 0.0)) r.violations.push_back({"sigma" + idx, "sigma > 0", m.sigma, 0.0});
  if (!(m.alpha > 0.0)) r.violations.push_back({"alpha" + idx, "alpha > 0", m.alpha, 0.0});
  const double base = exponential_moment_base(m, 1.0);
  if (!(base > 0.0)) {
    r.violations.push_back(
        {"marginal" + idx, "1 - mu*alpha - sigma^2*alpha/2 > 0", base, 0.0});
  }
}

void check_sd_parameter(double a, AMode mode, ValidationReport& r) {
  if (!a_in_range(a, mode)) {
    r.violations.push_back({"a", mode == AMode::Limit ? "0 < a <= 1" : "0 < a < 1", a,
                            a <= 0.0 ? 0.0 : 1.0});
  }
}

void check_common_gamma(const MarginalPair& ms, double A, double B, ValidationReport& r) {
  if (!(A > 0.0)) r.violations.push_back({"A", "A > 0", A, 0.0});
  if (!(B > 0.0)) r.violations.push_back({"B", "B > 0", B, 0.0});
  if (!(A > 0.0 && B > 0.0)) return;
  for (int j = 0; j < 2; ++j) {
    const double alpha = ms[j].alpha;
    if (alpha > 0.0 && alpha > B / A) {
      r.violations.push_back(
          {"alpha" + std::to_string(j + 1), "alpha_j <= B/A", alpha, B / A});
    }
  }
  bool clocks_ok = true;
  for (const auto& m : ms) clocks_ok = clocks_ok && m.alpha > 0.0 && m.alpha <= B / A;
  if (clocks_ok) r.notes.emplace_back("E[G_j(1)] = 1 for j = 1, 2");
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::SSD:
      return "ssd";
    case ModelKind::LSSD:
      return "lssd";
    case ModelKind::BBSD:
      return "bbsd";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "ssd") return ModelKind::SSD;
  if (lower == "lssd") return ModelKind::LSSD;
  if (lower == "bbsd") return ModelKind::BBSD;
  throw ParseError("unknown model kind '" + std::string(text) + "' (expected ssd|lssd|bbsd)");
}

ModelKind kind_of(const Dependence& dependence) {
  switch (dependence.index()) {
    case 0:
      return ModelKind::SSD;
    case 1:
      return ModelKind::LSSD;
    default:
      return ModelKind::BBSD;
  }
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  if (violations.empty()) {
    os << "feasible";
  } else {
    os << "infeasible:";
    for (const auto& v : violations) {
      os << "\n  " << v.parameter << " = " << v.value << " violates " << v.constraint
         << " (bound " << v.bound << ")";
    }
  }
  for (const auto& n : notes) os << "\n  note: " << n;
  return os.str();
}

BBSDInternal derive_bbsd_internal(const MarginalPair& ms, const BBSDDependence& d) {
  struct Leg {
    double betaR, gammaR, beta, gamma, nu;
  };
  // alpha_j mu_j = nuR a_j betaR_j and alpha_j sigma_j^2 = nuR a_j^2 gammaR_j^2,
  // then the remainder goes to the idiosyncratic leg.
  auto leg = [&](const VGMarginal& m, double aj) {
    Leg l{};
    l.betaR = m.alpha * m.mu / (d.nuR * aj);
    l.gammaR = m.sigma * std::sqrt(m.alpha / d.nuR) / std::abs(aj);
    l.beta = m.mu - aj * l.betaR;
    const double gamma2 = m.sigma * m.sigma - aj * aj * l.gammaR * l.gammaR;
    l.gamma = gamma2 >= 0.0 ? std::sqrt(gamma2) : std::nan("");
    l.nu = m.alpha * d.nuR / (d.nuR - m.alpha);
    return l;
  };
  const Leg l1 = leg(ms[0], d.a1);
  const Leg l2 = leg(ms[1], d.a2);
  return BBSDInternal{l1.betaR, l2.betaR, l1.gammaR, l2.gammaR, l1.beta,
                      l2.beta,  l1.gamma, l2.gamma,  l1.nu,     l2.nu};
}

ModelSpec::ModelSpec(MarginalPair marginals, Dependence dependence, AMode mode)
    : marginals_(marginals), dependence_(std::move(dependence)), mode_(mode) {
  if (const auto* b = std::get_if<BBSDDependence>(&dependence_)) {
    internal_ = derive_bbsd_internal(marginals_, *b);
  }
  report_ = validate(*this);
}

const SSDDependence& ModelSpec::ssd() const {
  if (const auto* d = std::get_if<SSDDependence>(&dependence_)) return *d;
  throw std::logic_error("ModelSpec is not SSD");
}

const LSSDDependence& ModelSpec::lssd() const {
  if (const auto* d = std::get_if<LSSDDependence>(&dependence_)) return *d;
  throw std::logic_error("ModelSpec is not LSSD");
}

const BBSDDependence& ModelSpec::bbsd() const {
  if (const auto* d = std::get_if<BBSDDependence>(&dependence_)) return *d;
  throw std::logic_error("ModelSpec is not BBSD");
}

const BBSDInternal& ModelSpec::bbsd_internal() const {
  if (kind() != ModelKind::BBSD) throw std::logic_error("ModelSpec is not BBSD");
  return internal_;
}

double ModelSpec::sd_parameter() const {
  return std::visit([](const auto& d) { return d.a; }, dependence_);
}

VGMarginal ModelSpec::effective_marginal(int j) const {
  VGMarginal m = marginal(j);
  if (const auto* d = std::get_if<SSDDependence>(&dependence_)) m.alpha /= d->B;
  if (const auto* d = std::get_if<LSSDDependence>(&dependence_)) m.alpha /= d->B;
  return m;
}

double ModelSpec::idiosyncratic_shape(int j) const {
  const double alpha = marginal(j).alpha;
  if (const auto* d = std::get_if<SSDDependence>(&dependence_)) {
    return std::max(0.0, d->B / alpha - d->A);
  }
  if (const auto* d = std::get_if<LSSDDependence>(&dependence_)) {
    return std::max(0.0, d->B / alpha - d->A);
  }
  throw std::logic_error("idiosyncratic_shape: BBSD has no A_j");
}

void ModelSpec::require_feasible() const {
  if (!feasible()) {
    throw InfeasibleError(std::string(to_string(kind())) + " spec " + report_.to_string());
  }
}

ValidationReport validate(const ModelSpec& spec) {
  ValidationReport r;
  const auto& ms = spec.marginals();
  for (int j = 0; j < 2; ++j) check_marginal(ms[j], j, r);

  switch (spec.kind()) {
    case ModelKind::SSD: {
      const auto& d = spec.ssd();
      check_sd_parameter(d.a, spec.a_mode(), r);
      check_common_gamma(ms, d.A, d.B, r);
      break;
    }
    case ModelKind::LSSD: {
      const auto& d = spec.lssd();
      check_sd_parameter(d.a, spec.a_mode(), r);
      check_common_gamma(ms, d.A, d.B, r);
      if (!(std::abs(d.rho) <= 1.0)) r.violations.push_back({"rho", "|rho| <= 1", d.rho, 1.0});
      break;
    }
    case ModelKind::BBSD: {
      const auto& d = spec.bbsd();
      check_sd_parameter(d.a, spec.a_mode(), r);
      if (!(d.nuR > 0.0)) r.violations.push_back({"nuR", "nuR > 0", d.nuR, 0.0});
      if (!(d.a1 != 0.0 && std::isfinite(d.a1))) {
        r.violations.push_back({"a1", "a1 != 0", d.a1, 0.0});
      }
      if (!(d.a2 != 0.0 && std::isfinite(d.a2))) {
        r.violations.push_back({"a2", "a2 != 0", d.a2, 0.0});
      }
      const auto& in = spec.bbsd_internal();
      const std::array<double, 2> nus{in.nu1, in.nu2};
      for (int j = 0; j < 2; ++j) {
        const std::string idx = std::to_string(j + 1);
        if (!(nus[j] > 0.0) || !std::isfinite(nus[j])) {
          r.violations.push_back({"nu" + idx, "nu_j = alpha_j nuR/(nuR - alpha_j) > 0 (nuR > alpha_j)",
                                  nus[j], 0.0});
        }
      }
      break;
    }
  }
  return r;
}

double exponential_moment_base(const VGMarginal& m, double theta) {
  return 1.0 - m.mu * m.alpha * theta - m.sigma * m.sigma * m.alpha * theta * theta / 2.0;
}

Complex gamma_chf(double shape, double rate, Complex u) {
  if (!(shape > 0.0) || !(rate > 0.0)) {
    throw std::invalid_argument("gamma_chf: shape and rate must be positive");
  }
  require_finite(u, "gamma_chf");
  return gamma_factor(shape, rate, u);
}

Complex za_chf(double A, double B, double a, double t, Complex u) {
  if (!(A > 0.0) || !(B > 0.0) || !(t > 0.0) || !(a > 0.0 && a <= 1.0)) {
    throw std::invalid_argument("za_chf: need A, B, t > 0 and 0 < a <= 1");
  }
  require_finite(u, "za_chf");
  return za_factor(A, B, a, t, u);
}

Complex marginal_vg_chf(const VGMarginal& m, double t, Complex u) {
  if (!(m.sigma > 0.0) || !(m.alpha > 0.0)) {
    throw std::invalid_argument("marginal_vg_chf: sigma and alpha must be positive");
  }
  require_finite(u, "marginal_vg_chf");
  return gamma_factor(t / m.alpha, 1.0 / m.alpha, psi(m.mu, m.sigma, u));
}

Complex ssd_joint_chf(const ModelSpec& spec, double t, Complex u1, Complex u2) {
  spec.require_feasible();
  require_finite(u1, "ssd_joint_chf");
  require_finite(u2, "ssd_joint_chf");
  const auto& d = spec.ssd();
  const auto& m1 = spec.marginal(0);
  const auto& m2 = spec.marginal(1);
  const Complex p1 = psi(m1.mu, m1.sigma, u1);
  const Complex p2 = psi(m2.mu, m2.sigma, u2);
  // G_2 = I_2 + alpha_2 (a H_1 + Z_a): Z_a is seen through alpha_2 psi_2.
  return gamma_factor(t * spec.idiosyncratic_shape(0), d.B / m1.alpha, p1) *
         gamma_factor(t * spec.idiosyncratic_shape(1), d.B / m2.alpha, p2) *
         za_factor(d.A, d.B, d.a, t, m2.alpha * p2) *
         gamma_factor(t * d.A, d.B, m1.alpha * p1 + d.a * m2.alpha * p2);
}

Complex lssd_joint_chf(const ModelSpec& spec, double t, Complex u1, Complex u2) {
  spec.require_feasible();
  require_finite(u1, "lssd_joint_chf");
  require_finite(u2, "lssd_joint_chf");
  const auto& d = spec.lssd();
  const auto& m1 = spec.marginal(0);
  const auto& m2 = spec.marginal(1);
  const double s11 = m1.alpha * m1.sigma * m1.sigma;
  const double s22 = m2.alpha * m2.sigma * m2.sigma;
  const double s12 = std::sqrt(m1.alpha * m2.alpha) * m1.sigma * m2.sigma * d.rho;
  const Complex quad = u1 * u1 * s11 + 2.0 * u1 * u2 * s12 + u2 * u2 * s22;
  const Complex drift = u1 * m1.alpha * m1.mu + u2 * d.a * m2.alpha * m2.mu;
  const Complex h_arg = drift + kI / 2.0 * (u1 * u1 * s11 * (1.0 - d.a) + d.a * quad);
  const Complex z_arg = u2 * m2.mu * m2.alpha + kI / 2.0 * u2 * u2 * s22;
  return gamma_factor(t * spec.idiosyncratic_shape(0), d.B / m1.alpha,
                      psi(m1.mu, m1.sigma, u1)) *
         gamma_factor(t * spec.idiosyncratic_shape(1), d.B / m2.alpha,
                      psi(m2.mu, m2.sigma, u2)) *
         gamma_factor(t * d.A, d.B, h_arg) * za_factor(d.A, d.B, d.a, t, z_arg);
}

Complex bbsd_joint_chf(const ModelSpec& spec, double t, Complex u1, Complex u2) {
  spec.require_feasible();
  require_finite(u1, "bbsd_joint_chf");
  require_finite(u2, "bbsd_joint_chf");
  const auto& d = spec.bbsd();
  const auto& in = spec.bbsd_internal();
  const Complex v1 = d.a1 * u1;
  const Complex v2 = d.a2 * u2;
  const double cR = 1.0 / d.nuR;
  const Complex h_arg =
      v1 * in.betaR1 + v2 * in.betaR2 * d.a +
      kI / 2.0 *
          (v1 * v1 * in.gammaR1 * in.gammaR1 + 2.0 * v1 * v2 * in.gammaR1 * in.gammaR2 * d.a +
           v2 * v2 * d.a * in.gammaR2 * in.gammaR2);
  const Complex z_arg = v2 * in.betaR2 + kI / 2.0 * v2 * v2 * in.gammaR2 * in.gammaR2;
  return gamma_factor(t / in.nu1, 1.0 / in.nu1, psi(in.beta1, in.gamma1, u1)) *
         gamma_factor(t / in.nu2, 1.0 / in.nu2, psi(in.beta2, in.gamma2, u2)) *
         gamma_factor(t * cR, cR, h_arg) * za_factor(cR, cR, d.a, t, z_arg);
}

Complex joint_chf(const ModelSpec& spec, double t, Complex u1, Complex u2) {
  switch (spec.kind()) {
    case ModelKind::SSD:
      return ssd_joint_chf(spec, t, u1, u2);
    case ModelKind::LSSD:
      return lssd_joint_chf(spec, t, u1, u2);
    case ModelKind::BBSD:
      return bbsd_joint_chf(spec, t, u1, u2);
  }
  throw std::logic_error("joint_chf: unknown kind");
}

Complex common_subordinator_chf(const ModelSpec& spec, double t, Complex u1, Complex u2) {
  spec.require_feasible();
  const auto& m1 = spec.marginal(0);
  const auto& m2 = spec.marginal(1);
  switch (spec.kind()) {
    case ModelKind::SSD: {
      const auto& d = spec.ssd();
      const Complex p1 = psi(m1.mu, m1.sigma, u1);
      const Complex p2 = psi(m2.mu, m2.sigma, u2);
      return gamma_factor(t * spec.idiosyncratic_shape(0), d.B / m1.alpha, p1) *
             gamma_factor(t * spec.idiosyncratic_shape(1), d.B / m2.alpha, p2) *
             gamma_factor(t * d.A, d.B, m1.alpha * p1 + m2.alpha * p2);
    }
    case ModelKind::LSSD: {
      const auto& d = spec.lssd();
      // Common clock H: bivariate BM with covariance Sigma run on H.
      const double v1 = std::sqrt(m1.alpha) * m1.sigma;
      const double v2 = std::sqrt(m2.alpha) * m2.sigma;
      const Complex w = u1 * m1.alpha * m1.mu + u2 * m2.alpha * m2.mu +
                        kI / 2.0 *
                            (u1 * u1 * v1 * v1 + 2.0 * d.rho * u1 * u2 * v1 * v2 +
                             u2 * u2 * v2 * v2);
      return gamma_factor(t * spec.idiosyncratic_shape(0), d.B / m1.alpha,
                          psi(m1.mu, m1.sigma, u1)) *
             gamma_factor(t * spec.idiosyncratic_shape(1), d.B / m2.alpha,
                          psi(m2.mu, m2.sigma, u2)) *
             gamma_factor(t * d.A, d.B, w);
    }
    case ModelKind::BBSD: {
      const auto& d = spec.bbsd();
      const auto& in = spec.bbsd_internal();
      const Complex v1 = d.a1 * u1;
      const Complex v2 = d.a2 * u2;
      const Complex diff = v1 * in.gammaR1 + v2 * in.gammaR2;
      const Complex w = v1 * in.betaR1 + v2 * in.betaR2 + kI / 2.0 * diff * diff;
      return gamma_factor(t / in.nu1, 1.0 / in.nu1, psi(in.beta1, in.gamma1, u1)) *
             gamma_factor(t / in.nu2, 1.0 / in.nu2, psi(in.beta2, in.gamma2, u2)) *
             gamma_factor(t / d.nuR, 1.0 / d.nuR, w);
    }
  }
  throw std::logic_error("common_subordinator_chf: unknown kind");
}

double model_correlation(const ModelSpec& spec, double t) {
  spec.require_feasible();
  if (!(t > 0.0)) throw std::invalid_argument("model_correlation: t must be positive");
  const auto& m1 = spec.marginal(0);
  const auto& m2 = spec.marginal(1);
  double cov = 0.0;
  double var1 = 0.0;
  double var2 = 0.0;
  switch (spec.kind()) {
    case ModelKind::SSD:
    case ModelKind::LSSD: {
      const double A =
          spec.kind() == ModelKind::SSD ? spec.ssd().A : spec.lssd().A;
      const double B =
          spec.kind() == ModelKind::SSD ? spec.ssd().B : spec.lssd().B;
      const double a = spec.sd_parameter();
      const double mean_h = t * A / B;
      const double var_h = t * A / (B * B);
      // G_j(t) ~ Gamma(t B / alpha_j, B / alpha_j): mean t, variance t alpha_j / B.
      var1 = m1.sigma * m1.sigma * t + m1.mu * m1.mu * t * m1.alpha / B;
      var2 = m2.sigma * m2.sigma * t + m2.mu * m2.mu * t * m2.alpha / B;
      cov = a * m1.mu * m2.mu * m1.alpha * m2.alpha * var_h;
      if (spec.kind() == ModelKind::LSSD) {
        cov += a * spec.lssd().rho * m1.sigma * m2.sigma * std::sqrt(m1.alpha * m2.alpha) *
               mean_h;
      }
      break;
    }
    case ModelKind::BBSD: {
      const auto& d = spec.bbsd();
      const auto& in = spec.bbsd_internal();
      const double mean_h = t;
      const double var_h = t * d.nuR;
      cov = d.a1 * d.a2 * d.a * (in.betaR1 * in.betaR2 * var_h + in.gammaR1 * in.gammaR2 * mean_h);
      auto var = [&](double beta, double gamma, double nu, double aj, double betaR,
                     double gammaR) {
        return t * (gamma * gamma + beta * beta * nu) +
               aj * aj * t * (gammaR * gammaR + betaR * betaR * d.nuR);
      };
      var1 = var(in.beta1, in.gamma1, in.nu1, d.a1, in.betaR1, in.gammaR1);
      var2 = var(in.beta2, in.gamma2, in.nu2, d.a2, in.betaR2, in.gammaR2);
      break;
    }
  }
  if (!(var1 > 0.0) || !(var2 > 0.0)) {
    throw DomainError("model_correlation: zero marginal variance");
  }
  return cov / std::sqrt(var1 * var2);
}

namespace {
double vg_scale(const VGMarginal& m) { return std::sqrt(m.sigma * m.sigma + m.mu * m.mu * m.alpha); }
}  // namespace

double ssd_vg_correlation(const MarginalPair& m, const SSDDependence& d) {
  return m[0].mu * m[1].mu * m[0].alpha * m[1].alpha * d.a * d.A /
         (vg_scale(m[0]) * vg_scale(m[1]));
}

double lssd_vg_correlation(const MarginalPair& m, const LSSDDependence& d) {
  return d.a *
         (m[0].mu * m[1].mu * m[0].alpha * m[1].alpha * d.A +
          d.rho * d.A * m[0].sigma * m[1].sigma * std::sqrt(m[0].alpha * m[1].alpha)) /
         (vg_scale(m[0]) * vg_scale(m[1]));
}

double bbsd_vg_correlation(const MarginalPair& m, const BBSDDependence& d,
                           const BBSDInternal& in) {
  return d.a1 * d.a2 * d.a * (in.betaR1 * in.betaR2 * d.nuR + in.gammaR1 * in.gammaR2) /
         (vg_scale(m[0]) * vg_scale(m[1]));
}

double drift_correction(const VGMarginal& m) {
  if (!(m.alpha > 0.0)) throw std::invalid_argument("drift_correction: alpha must be positive");
  const double base = exponential_moment_base(m, 1.0);
  if (!(base > 0.0)) {
    std::ostringstream os;
    os << "drift correction undefined: 1 - mu*alpha - sigma^2*alpha/2 = " << base
       << " is not > 0 (mu=" << m.mu << ", sigma=" << m.sigma << ", alpha=" << m.alpha << ")";
    throw InfeasibleError(os.str());
  }
  return std::log(base) / m.alpha;
}

}  // namespace sdlevy
