#pragma once

#include <functional>

#include "rotstar/grid.hpp"
#include "rotstar/operators.hpp"

namespace rotstar {

/// K(m) = int_0^{pi/2} (1 - m sin^2 t)^{-1/2} dt in the parameter convention,
/// by the arithmetic-geometric mean. Throws DomainError unless 0 <= m < 1.
double complete_elliptic_k(double m);

/// K expressed through the complementary modulus k' = sqrt(1 - m), which
/// keeps full relative accuracy as m -> 1. Requires 0 < k' <= 1.
double elliptic_k_from_complement(double kprime);

/// Ring kernel: potential at radius r of a unit-line-density ring of radius rs
/// at axial offset dz, integrated over azimuth, i.e. 4 K(m) / sqrt((r+rs)^2 + dz^2).
double ring_kernel(double r, double rs, double dz);

struct PotentialResult {
  ScalarField potential;  // B rho = int rho(y) / |x - y| dy, G = 1
  Gradient gradient;
  double source_mass;
};

/// Direct summation of the ring kernel over all source nodes, treating rho as
/// constant on the cell [r' - hr/2, r' + hr/2] x [z' - hz/2, z' + hz/2] of each
/// node (clipped at the axis). Far cells use a 2x2 Gauss rule, cells within two
/// steps of the target a 16x16 rule, and the singular self cell a polar rule
/// centred on the target. Plain midpoint sums leave an O(h^2) error that is not
/// harmonic, which shows up as an O(1) Laplacian defect next to the axis.
///
/// rho must be >= 0 and vanish on the two outermost node layers, otherwise
/// SupportViolation is thrown.
PotentialResult potential_axisym(const ScalarField& rho);

/// Exact-geometry potential of a spherically symmetric density rho(|x|)
/// supported in |x| <= radius: B = M(s)/s + 4 pi int_s^R rho t dt and
/// grad B = -M(s) x / s^3, with M and the shell integral by composite
/// Gauss-Legendre quadrature. Used as an oracle and wherever the exact
/// parallel-gradient structure of a spherical star matters.
PotentialResult potential_spherical(const GridSpec& grid, const std::function<double(double)>& rho, double radius);

/// max |Lap(B rho) + 4 pi rho| / (4 pi max rho) over nodes lying, with all
/// neighbours within 3 steps, on one side of the support boundary and away
/// from the outer grid edge.
double poisson_residual(const PotentialResult& result, const ScalarField& rho);

}  // namespace rotstar
