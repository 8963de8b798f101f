#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "rotstar/eos.hpp"
#include "rotstar/grid.hpp"

namespace rotstar {

/// Settings for the sub/supersolution construction and the monotone iteration
/// for div(e^s grad w) + K e^{-s} w^q - f = 0, 0 < q < 1, w = 0 off a ball.
/// Here s is the effective entropy (alpha already absorbed).
struct MonotoneConfig {
  /// Ball radius; when empty, 0.8 of the smaller grid half-extent. The value
  /// used is snapped to a multiple of hr.
  std::optional<double> ball_radius_hint;
  /// A1 <= min K e^{-2s}, A2 >= max e^{-s} f.
  double a1 = 0.0;
  double a2 = 0.0;
  /// Lambda in (-L + Lambda) w_{k+1} = K e^{-s} w_k^q - f + Lambda w_k. Any
  /// Lambda >= 0 keeps the map monotone because t -> K e^{-s} t^q increases.
  double shift = 0.0;
  std::size_t max_iters = 20000;
  double tol = 1e-8;

  /// Fills a1 and a2 with a safety margin from the extrema of the data, so the
  /// sampled radial subsolution stays a discrete subsolution.
  static MonotoneConfig from_fields(const ScalarField& s, const ScalarField& f, const EosParams& eos);
};

struct Subsolution {
  double radius;
  double u0;            // central value found by shooting
  double threshold;     // t* with G(t*) = 0
  ScalarField field;    // radial profile on the grid, 0 off the ball
  double min_residual;  // min over ball nodes of the discrete inequality
};

/// G(t) = A1 t^{q+1}/(q+1) - A2 t.
double subsolution_energy(double t, double a1, double a2, double q);

/// Radial shooting for u'' + (2/r) u' + A1 u^q - A2 = 0, u(0) = u0, u'(0) = 0.
/// Returns the first zero of u, or nothing when u turns upward first.
std::optional<double> shooting_radius(double u0, double a1, double a2, double q, double r_limit);

/// Shoots on u0 so the first zero falls on the ball radius, samples the profile
/// and verifies the discrete subsolution inequality at every ball node.
/// Throws HypothesisViolation when x . grad s > 0 on the ball and
/// ConvergenceError when no u0 reaches the radius.
Subsolution build_subsolution(const MonotoneConfig& config, const EosParams& eos,
                              const ScalarField& s, const ScalarField& f);

/// Truncated power: t^q for t >= c, cubic Hermite c^q((3-q)x^2 + (q-2)x^3),
/// x = t/c, on [0, c], 0 below.
double truncated_power(double t, double c, double q);
double truncated_power_slope(double t, double c, double q);

struct Supersolution {
  ScalarField field;  // u + C on the ball, C elsewhere
  double c;           // max of the subsolution
  double m;           // max |f| over the ball
  std::size_t sweeps;
  double max_residual;  // max of the discrete supersolution inequality
};

/// Picard iteration on -div(e^s grad u) = K e^{-s} g(u + C) + M over the ball.
/// Throws ConvergenceError when the increment shrinks by < 1% for 20 sweeps.
Supersolution build_supersolution(const Subsolution& sub, const ScalarField& s, const ScalarField& f,
                                  const EosParams& eos, double tol = 1e-10);

struct MonotoneReport {
  explicit MonotoneReport(ScalarField initial) : solution(std::move(initial)) {}

  std::size_t iterations = 0;
  std::vector<double> residual_history;
  std::vector<double> increment_history;
  double bracket_gap = 0.0;  // max(super - sub) over the ball
  double final_residual = 0.0;
  double shift = 0.0;
  /// Derivative bound q K e^{-s} t^{q-1} at the smallest positive subsolution value.
  double shift_bound = 0.0;
  bool converged = false;
  bool positive = false;
  ScalarField solution;
};

/// Optional per-sweep observer: (iteration, residual, increment).
using SweepObserver = std::function<void(std::size_t, double, double)>;

/// Monotone iteration from the subsolution. Every sweep asserts that iterates
/// do not decrease and stay below the supersolution.
/// Throws ConvergenceError when monotonicity breaks (shift too small) or
/// max_iters is reached, InternalError when the bracket is left.
MonotoneReport monotone_solve(const ScalarField& sub, const ScalarField& super, const StarDomain& ball,
                              const ScalarField& s, const ScalarField& f, const EosParams& eos,
                              const MonotoneConfig& config, const SweepObserver& observer = {});

/// max over domain nodes of |div(e^s grad w) + K e^{-s} w^q - lambda f|.
double semilinear_residual(const ScalarField& w, const StarDomain& domain, const ScalarField& s,
                           const ScalarField& f, const EosParams& eos, double lambda = 1.0);

}  // namespace rotstar
