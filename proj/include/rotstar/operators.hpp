#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "rotstar/grid.hpp"

namespace rotstar {

/// Pair of (d/dr, d/dz) components.
struct Gradient {
  ScalarField dr;
  ScalarField dz;
};

/// Central differences in the interior, second-order one-sided differences on
/// the outer edges. On the axis, d/dr of an even field is exactly zero and
/// d/dr of an odd field uses its reflection f(-h) = -f(h).
///
/// The r-component has the opposite parity of the input; the z-component keeps it.
Gradient gradient_rz(const ScalarField& field);

/// Discrete (1/r) d/dr(r a dw/dr) + d/dz(a dw/dz) in conservative flux form
/// with face coefficients a_{i+1/2} = (a_i + a_{i+1}) / 2. The axis node uses
/// the flux through r = hr/2 over the disk of radius hr/2, the discrete form
/// of the limit 2 a w_rr. Outer edge rows use a quadratic ghost extrapolation
/// of w. Throws DomainError unless weight > 0 everywhere.
ScalarField div_weighted_grad(const ScalarField& w, const ScalarField& weight);

enum class Quadrature {
  /// Tensor trapezoid with the 2 pi r weight taken at nodes (axis weight 0).
  trapezoid,
  /// Finite-volume cells; the axis cell is the disk of radius hr/2. Interior
  /// weights coincide with the trapezoid ones.
  control_volume,
};

/// Volume weight of node (i, j) including the 2 pi r factor.
double node_volume(const GridSpec& grid, std::size_t i, std::size_t j,
                   Quadrature rule = Quadrature::trapezoid);
std::vector<double> node_volumes(const GridSpec& grid, Quadrature rule = Quadrature::trapezoid);

/// Integral of field * 2 pi r dr dz, optionally restricted to a domain mask.
/// Summation is row-major, so the result is bit-reproducible.
double integrate_axisym(const ScalarField& field, const StarDomain* mask = nullptr,
                        Quadrature rule = Quadrature::trapezoid);

/// Field with a per-node validity flag.
struct MaskedField {
  ScalarField values;
  std::vector<unsigned char> valid;

  /// Max |value| over valid nodes accepted by `keep`.
  template <class Pred>
  double max_abs_where(Pred keep) const {
    double m = 0.0;
    const GridSpec& g = values.grid();
    for (std::size_t i = 0; i < g.nr(); ++i)
      for (std::size_t j = 0; j < g.nz(); ++j) {
        std::size_t k = g.index(i, j);
        if (valid[k] && keep(i, j)) m = std::max(m, std::abs(values[k]));
      }
    return m;
  }
};

/// Pointwise defect (p_z rho_r - p_r rho_z) / rho^2 - r d(Omega^2)/dz of the
/// azimuthal curl identity. Nodes with rho <= 0 are flagged invalid.
MaskedField curl_theta_residual(const ScalarField& p, const ScalarField& rho,
                                const ScalarField& omega2);

}  // namespace rotstar
