#pragma once

#include <vector>

#include "rotstar/eos.hpp"
#include "rotstar/grid.hpp"

namespace rotstar {

/// theta'' + (2/xi) theta' + theta^n = 0, theta(0) = 1, theta'(0) = 0,
/// sampled on [0, xi1].
struct PolytropeSolution {
  double n = 0.0;
  std::vector<double> xi;
  std::vector<double> theta;
  std::vector<double> dtheta;
  double xi1 = 0.0;
  double dtheta_at_xi1 = 0.0;
  /// int_0^xi1 theta^n xi^2 d xi, integrated alongside theta.
  double mass_integral = 0.0;

  /// Cubic Hermite interpolation; 0 beyond xi1.
  double theta_at(double x) const;
};

/// Classical RK4 with fixed step, series start near the centre and the first
/// zero located by bisection on the length of the last step (to 1e-10).
/// Throws DomainError for n < 0 and ConvergenceError when theta stays positive
/// up to xi = 50.
PolytropeSolution lane_emden_solve(double n, double step = 2e-4);

/// Maps the oracle onto w through w = w_c theta(A |x|) with
/// A^2 = K e^{-2 s} w_c^{q-1}, w_c the central value and s the (constant)
/// effective entropy, and returns the largest relative deviation over nodes
/// with |x| below half the predicted radius xi1 / A.
///
/// Throws DomainError when w departs from spherical symmetry by more than 1%
/// of w_c on that region, or when n differs from q.
double compare_with_field(const PolytropeSolution& sol, const ScalarField& w, const EosParams& eos,
                          double entropy = 0.0);

}  // namespace rotstar
