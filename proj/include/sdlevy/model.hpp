#pragma once

#include <array>
#include <complex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sdlevy {

using Complex = std::complex<double>;

/// Variance-Gamma law of one asset's log-return driver: Brownian motion with
/// drift `mu` and volatility `sigma` run on a unit-mean Gamma clock whose
/// variance per unit time is `alpha`.
struct VGMarginal {
  double mu = 0.0;
  double sigma = 0.0;
  double alpha = 0.0;

  bool operator==(const VGMarginal&) const = default;
};

using MarginalPair = std::array<VGMarginal, 2>;

/// Common sd Gamma subordinator H1 ~ Gamma(A t, B), H2 = a H1 + Z_a.
/// Idiosyncratic shapes A_j = B / alpha_j - A are derived, never stored.
struct SSDDependence {
  double A = 0.0;
  double B = 1.0;
  double a = 0.0;

  bool operator==(const SSDDependence&) const = default;
};

/// SSD subordinators plus correlated Brownian motions on the common clocks.
struct LSSDDependence {
  double A = 0.0;
  double B = 1.0;
  double a = 0.0;
  double rho = 0.0;

  bool operator==(const LSSDDependence&) const = default;
};

/// Loadings a1, a2 on the common subordinated components, sd parameter a and
/// the shared variance rate nuR of the common Gamma clocks.
struct BBSDDependence {
  double a1 = 0.0;
  double a2 = 0.0;
  double a = 0.0;
  double nuR = 0.0;

  bool operator==(const BBSDDependence&) const = default;
};

/// Parameters of the idiosyncratic (X_j) and common (R_j) subordinated
/// Brownian motions, implied by the marginals through the convolution
/// conditions.
struct BBSDInternal {
  double betaR1 = 0.0;
  double betaR2 = 0.0;
  double gammaR1 = 0.0;
  double gammaR2 = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double nu1 = 0.0;
  double nu2 = 0.0;

  bool operator==(const BBSDInternal&) const = default;
};

enum class ModelKind { SSD, LSSD, BBSD };

std::string_view to_string(ModelKind kind);
/// Accepts "ssd", "lssd", "bbsd" in any case. Throws ParseError otherwise.
ModelKind parse_model_kind(std::string_view text);

using Dependence = std::variant<SSDDependence, LSSDDependence, BBSDDependence>;

ModelKind kind_of(const Dependence& dependence);

/// Strict mode requires 0 < a < 1. Limit mode also accepts a = 1, which
/// recovers the common-subordinator models.
enum class AMode { Strict, Limit };

struct Violation {
  std::string parameter;
  std::string constraint;
  double value = 0.0;
  double bound = 0.0;
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::vector<std::string> notes;

  bool feasible() const { return violations.empty(); }
  std::string to_string() const;
};

BBSDInternal derive_bbsd_internal(const MarginalPair& marginals,
                                  const BBSDDependence& dependence);

/// Immutable description of one of the three bivariate models. Feasibility is
/// evaluated once at construction; infeasible specs can be built and inspected
/// but every evaluator rejects them.
class ModelSpec {
 public:
  ModelSpec(MarginalPair marginals, Dependence dependence,
            AMode mode = AMode::Strict);

  ModelKind kind() const { return kind_of(dependence_); }
  AMode a_mode() const { return mode_; }
  const MarginalPair& marginals() const { return marginals_; }
  const VGMarginal& marginal(int j) const { return marginals_.at(j); }
  const Dependence& dependence() const { return dependence_; }

  const SSDDependence& ssd() const;
  const LSSDDependence& lssd() const;
  const BBSDDependence& bbsd() const;
  const BBSDInternal& bbsd_internal() const;

  /// The self-decomposability parameter a of whichever model this is.
  double sd_parameter() const;

  /// Law of Y_j(1). Equals marginal(j) except for SSD/LSSD with B != 1, where
  /// the Gamma clock variance is alpha_j / B.
  VGMarginal effective_marginal(int j) const;

  /// Idiosyncratic Gamma shape A_j = B / alpha_j - A (SSD and LSSD only).
  double idiosyncratic_shape(int j) const;

  const ValidationReport& report() const { return report_; }
  bool feasible() const { return report_.feasible(); }
  /// Throws InfeasibleError listing every violated constraint.
  void require_feasible() const;

  bool operator==(const ModelSpec& other) const {
    return marginals_ == other.marginals_ && dependence_ == other.dependence_ &&
           mode_ == other.mode_;
  }

 private:
  MarginalPair marginals_;
  Dependence dependence_;
  AMode mode_;
  BBSDInternal internal_{};
  ValidationReport report_;
};

ValidationReport validate(const ModelSpec& spec);

// Characteristic functions. Every Gamma-type factor is evaluated as
// exp(-shape * Log(base)); a base with non-positive real part means the
// argument left the analyticity strip and raises BranchError.

/// (1 - i u / rate)^(-shape).
Complex gamma_chf(double shape, double rate, Complex u);

/// Chf of the a-remainder Z_a(t) of a Gamma(A t, B) law:
/// ((B - i u) / (B - i a u))^(-t A).
Complex za_chf(double A, double B, double a, double t, Complex u);

/// (1 - i alpha (u mu + i sigma^2 u^2 / 2))^(-t / alpha).
Complex marginal_vg_chf(const VGMarginal& m, double t, Complex u);

Complex ssd_joint_chf(const ModelSpec& spec, double t, Complex u1, Complex u2);
Complex lssd_joint_chf(const ModelSpec& spec, double t, Complex u1, Complex u2);
Complex bbsd_joint_chf(const ModelSpec& spec, double t, Complex u1, Complex u2);

/// Dispatches on spec.kind().
Complex joint_chf(const ModelSpec& spec, double t, Complex u1, Complex u2);

/// Chf of the original model driven by one common subordinator, i.e. the
/// a = 1 member of the family, written out independently of the sd formulas.
Complex common_subordinator_chf(const ModelSpec& spec, double t, Complex u1,
                                Complex u2);

/// Linear correlation of (Y1(t), Y2(t)) from the general moment formulas.
double model_correlation(const ModelSpec& spec, double t = 1.0);

/// t-free closed forms for Gamma subordinators (B = 1 as in the VG setting).
double ssd_vg_correlation(const MarginalPair& m, const SSDDependence& d);
double lssd_vg_correlation(const MarginalPair& m, const LSSDDependence& d);
double bbsd_vg_correlation(const MarginalPair& m, const BBSDDependence& d,
                           const BBSDInternal& internal);

/// omega = (1 / alpha) ln(1 - mu alpha - sigma^2 alpha / 2), making
/// exp(omega t + Y(t)) a martingale. Throws InfeasibleError when the log
/// argument is not positive.
double drift_correction(const VGMarginal& m);

/// 1 - mu alpha theta - sigma^2 alpha theta^2 / 2: positive iff E[exp(theta Y)]
/// is finite.
double exponential_moment_base(const VGMarginal& m, double theta);

}  // namespace sdlevy
