#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rotstar/gravity.hpp"
#include "rotstar/grid.hpp"
#include "rotstar/operators.hpp"

namespace rotstar {

/// rho and its first and second derivatives sampled on a grid.
struct DensityDerivatives {
  ScalarField rho;
  ScalarField r, z;
  ScalarField rr, zz, rz;
};

/// A prescribed density: the family rho_c (1 - r^2/a^2 - z^2/b^2)_+^power with
/// analytic derivatives, or a sampled field differentiated numerically.
class DensitySpec {
 public:
  enum class Kind { ellipsoid, gridded };

  static DensitySpec ellipsoid(double a, double b, double power, double rho_c = 1.0);
  /// Sampled density; the support is the zero level set found column by column.
  static DensitySpec gridded(ScalarField rho);
  /// "ellipsoid:a=1.2,b=0.8,power=1[,rho_c=1]" or "file:<density.axifield>".
  static DensitySpec parse(const std::string& rule);

  Kind kind() const { return kind_; }
  double a() const { return a_; }
  double b() const { return b_; }
  double power() const { return power_; }
  std::string describe() const;

  ScalarField sample(const GridSpec& grid) const;
  /// Analytic inside the support for the ellipsoid (0 outside), centred
  /// differences otherwise.
  DensityDerivatives derivatives(const GridSpec& grid) const;
  /// Ellipsoid: psi(r) = b sqrt(1 - r^2/a^2). Gridded: linear interpolation of
  /// the zero level set.
  StarDomain domain(const GridSpec& grid) const;
  /// Sampled fields require this exact grid.
  const std::optional<ScalarField>& field() const { return field_; }

 private:
  Kind kind_ = Kind::ellipsoid;
  double a_ = 1.0, b_ = 1.0, power_ = 1.0, rho_c_ = 1.0;
  std::optional<ScalarField> field_;
};

/// Near-equator strip used by the (a), (a'), (a'') checks:
/// |z| < z_half_width and |r - r_equator| < r_half_width.
struct EquatorStrip {
  double r_equator = 0.0;
  double r_half_width = 0.0;
  double z_half_width = 0.0;
};

enum class HypothesisMode { smooth, holder };

struct HolderStrip {
  double eps;
  double c;  // max of |rho_r|, |rho_rr|, |rho_rz| over |rho_z| on {|z| >= eps}
};

struct HypothesisReport {
  HypothesisMode mode = HypothesisMode::smooth;
  /// rho >= 0 everywhere, > 0 on domain nodes, 0 off the domain.
  double h1_min_inside = 0.0;
  bool h1 = false;
  /// max |rho(r, z) - rho(r, -z)|.
  double h2_asymmetry = 0.0;
  bool h2 = false;
  /// min over domain nodes with z < 0 of rho_r (B rho)_z - rho_z (B rho)_r,
  /// judged against -1e-6 of its largest magnitude.
  double h3_min = 0.0;
  double h3_scale = 0.0;
  bool h3 = false;
  std::vector<std::pair<std::size_t, std::size_t>> h3_violations;
  /// min over domain nodes with z < 0 of rho_z.
  double h4_min = 0.0;
  bool h4 = false;
  /// max of rho_zz on the equator row inside the strip; (a) holds when < 0.
  double ha_equator = 0.0;
  bool ha = false;
  /// rho_r <= 0 on the strip.
  double ha_prime_max = 0.0;
  bool ha_prime = false;
  /// sup |z rho_r / rho_z| on the strip off the equator.
  double ha_dprime_bound = 0.0;
  bool ha_dprime = false;
  /// Holder mode only: sup of |rho_rz / rho_zz| and |rho_r / rho_zz| on the
  /// strip, the bounded-ratio form of (a), and the h5 constants.
  double ha_ratio_bound = 0.0;
  bool ha_ratio = false;
  std::vector<HolderStrip> h5;
  bool h5_ok = false;
  EquatorStrip strip;
  /// Names of the satisfied conditions, e.g. "h2", "h4", "a", "a'".
  std::vector<std::string> verdict;

  bool holds(const std::string& name) const;
};

/// Ratios and sup bounds above this count as unbounded.
inline constexpr double kRatioBound = 1e6;

HypothesisReport check_hypotheses(const DensitySpec& spec, const GridSpec& grid, const PotentialResult& potential,
                                  HypothesisMode mode = HypothesisMode::smooth);

struct PressureResult {
  ScalarField p;
  /// Set when rho_z <= 0 somewhere below the equator (h4 fails).
  bool warning = false;
};

/// p(r, z) = int_{-psi(r)}^{z} rho (B rho)_xi dxi, trapezoid per column from the
/// interpolated lower boundary, integrated for z <= 0 and mirrored.
PressureResult pressure_from_density(const DensitySpec& spec, const GridSpec& grid, const PotentialResult& potential);

struct Omega2Result {
  MaskedField omega2;
  std::vector<std::pair<std::size_t, std::size_t>> negative;
  double min_value = 0.0;
  double max_value = 0.0;
  /// Nodes where the near-axis fit was not available and no value was set.
  std::size_t unresolved = 0;
};

/// Omega^2 = (1 / (r rho)) int_{-psi(r)}^{z} (rho_r (B rho)_xi - rho_xi (B rho)_r) dxi.
/// On the two columns next to the axis, F / r is replaced by an odd cubic fit
/// F = c1 r + c3 r^3 through columns 2 and 3, so the axis value is c1 = F_r(0).
/// Nodes with rho < 1e-9 max rho are masked.
Omega2Result omega2_from_density(const DensitySpec& spec, const GridSpec& grid, const PotentialResult& potential);

struct MomentumResidual {
  double radial = 0.0;
  double axial = 0.0;
};

/// max over interior nodes of |p_r - rho (B rho)_r - rho r Omega^2| and
/// |p_z - rho (B rho)_z|, each divided by max |rho grad(B rho)|.
MomentumResidual momentum_residual(const ScalarField& rho, const ScalarField& p, const MaskedField& omega2,
                                   const PotentialResult& potential, const StarDomain& domain);

/// Curl identity defect of a constructed triple on nodes two steps inside the
/// domain with rho >= 0.05 max rho, divided by the max of |p_z rho_r| / rho^2
/// there.
double curl_closure(const ScalarField& p, const ScalarField& rho, const MaskedField& omega2,
                    const StarDomain& domain);

/// max |p| over domain nodes with a 4-neighbour outside the domain, over max p.
double boundary_pressure_ratio(const ScalarField& p, const StarDomain& domain);

/// Every product of the inverse construction for one density.
struct InverseResult {
  ScalarField rho;
  StarDomain domain;
  PotentialResult potential;
  HypothesisReport hypotheses;
  PressureResult pressure;
  Omega2Result omega2;
  MomentumResidual momentum;
  double curl = 0.0;
};

/// Computes the potential with potential_axisym unless one is supplied.
InverseResult run_inverse(const DensitySpec& spec, const GridSpec& grid, HypothesisMode mode = HypothesisMode::smooth,
                          const PotentialResult* potential = nullptr);

/// Square-cell grid with nr radial nodes covering the support with a 25% margin.
GridSpec inverse_grid(const DensitySpec& spec, std::size_t nr);

}  // namespace rotstar
