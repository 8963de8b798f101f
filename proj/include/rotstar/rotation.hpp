#pragma once

#include <optional>
#include <string>

#include "rotstar/eos.hpp"
#include "rotstar/grid.hpp"
#include "rotstar/operators.hpp"

namespace rotstar {

/// Squared angular velocity Omega^2(r, z) >= 0, either as a closed-form rule
/// or as a sampled field, plus the forcing f = 2 Omega^2 + r d(Omega^2)/dr.
class RotationProfile {
 public:
  enum class Kind { constant, radial_rule, sampled };

  /// Omega^2 == value.
  static RotationProfile constant(double omega2);
  /// Omega^2 = a / (1 + b r^2).
  static RotationProfile rational(double a, double b);
  static RotationProfile sampled(ScalarField omega2);

  /// Parses `constant:<v>` (Omega = v), `rigid-squared:<v>` (Omega^2 = v),
  /// `rational:<a>,<b>` or `file:<path>` (AXIFIELD snapshot of Omega^2).
  static RotationProfile parse(const std::string& rule);

  Kind kind() const { return kind_; }
  /// True when Omega^2 does not vary along z (always for rules).
  bool z_independent() const;

  ScalarField omega2(const GridSpec& grid) const;
  /// Forcing on the grid; symbolic for rules, finite differences for samples.
  /// The result is cached for the last grid asked for.
  const ScalarField& forcing(const GridSpec& grid) const;
  /// Forcing of a rule at radius r. Throws DomainError for sampled profiles.
  double forcing_at(double r) const;

  /// J(r) = int_0^r t Omega^2(t) dt along the equator; requires z-independence.
  double centrifugal_potential(double r) const;

  std::string describe() const;

 private:
  RotationProfile() = default;

  Kind kind_ = Kind::constant;
  double a_ = 0.0;
  double b_ = 0.0;
  std::optional<ScalarField> samples_;
  mutable std::optional<ScalarField> forcing_;
};

/// Convenience wrapper: forcing of the profile on a grid.
ScalarField forcing_from_rotation(const RotationProfile& profile, const GridSpec& grid);

/// Curl defect for a rotation profile (samples it on the pressure grid).
MaskedField curl_theta_residual(const ScalarField& p, const ScalarField& rho,
                                const RotationProfile& profile);

/// Standard deviation over the domain of A(rho) - B rho - J(r), where
/// A(rho) = gamma/(gamma-1) e^s rho^{gamma-1} for a constant physical entropy s.
/// Throws HypothesisViolation when Omega^2 depends on z.
double bernoulli_residual(const ScalarField& rho, const ScalarField& potential,
                          const RotationProfile& profile, const EosParams& eos,
                          const StarDomain& domain, double entropy = 0.0);

}  // namespace rotstar
