#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "rotstar/eos.hpp"
#include "rotstar/grid.hpp"

namespace rotstar {

/// Ball of radius R inside a grid, R = (nr - 3) hr so the ball boundary lies
/// on nodes and two spare layers remain for the outer edge.
GridSpec ball_grid(std::size_t nr, double radius);

/// Grid with spacing h (in both directions) holding a ball of the given radius.
GridSpec ball_grid_with_spacing(double h, double radius);

struct VariationalConfig {
  double ball_radius = 1.0;
  double target_p = 1.0;
  double step0 = 1.0;
  std::size_t max_iters = 20000;
  /// Stop once the projected gradient, max |tangential gradient| / (V |lambda| max f)
  /// over free nodes, falls below this.
  double grad_tol = 1e-4;
  double constraint_tol = 1e-10;
};

/// The two terms of the energy, accumulated separately:
/// kinetic   T = int e^s |grad w|^2 / 2,
/// potential U = K/(q+1) int e^{-s} w^{q+1},   E = T - U.
struct EnergyParts {
  double kinetic = 0.0;
  double potential = 0.0;
  double total() const { return kinetic - potential; }
};

/// Discrete energy on control volumes. The kinetic term is the face sum whose
/// gradient is exactly -V div(e^s grad w) with the flux-form operator.
/// Throws DomainError for negative w or w nonzero off the ball.
EnergyParts energy_parts(const ScalarField& w, const ScalarField& s, const EosParams& eos,
                         const StarDomain& ball);
double energy(const ScalarField& w, const ScalarField& s, const EosParams& eos, const StarDomain& ball);

/// N(w) = int f w over the ball (control volumes).
double constraint(const ScalarField& w, const ScalarField& f, const StarDomain& ball);

struct VariationalReport {
  explicit VariationalReport(ScalarField initial) : solution(std::move(initial)) {}

  std::vector<double> energy_history;
  std::vector<double> constraint_history;
  std::size_t iterations = 0;
  double target_p = 0.0;
  double final_energy = 0.0;
  double kinetic = 0.0;
  double potential = 0.0;
  double lambda = 0.0;
  double el_residual = 0.0;
  double positive_set_fraction = 0.0;
  double constraint_value = 0.0;
  bool converged = false;
  ScalarField solution;
};

/// Observer called after every accepted step: (iteration, energy, N, step).
using DescentObserver = std::function<void(std::size_t, double, double, double)>;

/// Projected descent with an H^1 (stiffness + mass) preconditioner: step,
/// clamp at 0, rescale to N = P, Armijo backtracking. Starts from the z-even
/// radial bump (1 - |x|^2/R^2)_+ scaled to N = P unless `initial` is given.
///
/// Throws DomainError unless 1 < q < 3, HypothesisViolation unless f > 0 on the
/// ball, and StagnationError (carrying the partial report) after 50 failed
/// backtracking halvings.
VariationalReport minimize(const VariationalConfig& config, const ScalarField& s, const ScalarField& f,
                           const EosParams& eos, const std::optional<ScalarField>& initial = std::nullopt,
                           const DescentObserver& observer = {});

class StagnationError : public ConvergenceError {
 public:
  StagnationError(const std::string& what, VariationalReport partial)
      : ConvergenceError(what), report(std::move(partial)) {}
  VariationalReport report;
};

/// lambda = -(int e^s |grad w|^2 - K int e^{-s} w^{q+1}) / N(w).
/// Throws DegenerateError when N(w) = 0.
double multiplier(const ScalarField& w, const ScalarField& s, const ScalarField& f, const EosParams& eos,
                  const StarDomain& ball);

/// max over {w > 1e-6 max w} of |div(e^s grad w) + K e^{-s} w^q - lambda f| / (|lambda| max f).
/// Throws DegenerateError on an empty positive set.
double el_residual(const ScalarField& w, double lambda, const ScalarField& s, const ScalarField& f,
                   const EosParams& eos, const StarDomain& ball);

/// 1 - l1^{q+1} - l2^{q+1} >= 2 l1 l2 for l1 + l2 = 1, l1, l2 in [0, 1], q > 1.
/// Throws DomainError when the preconditions fail.
bool elementary_inequality_check(double lambda1, double lambda2, double q);

/// The radial bump (1 - |x|^2/R^2)_+ on the grid.
ScalarField radial_bump(const GridSpec& grid, double radius);

/// Smallest theta = 2^k with E(theta w0) < 0 for the unit-N bump w0; returns
/// P = N(theta w0).
double auto_target_p(const GridSpec& grid, double radius, const ScalarField& s, const ScalarField& f,
                     const EosParams& eos);

struct ContinuationStage {
  double radius;
  VariationalReport report;
  /// Share of N(w) = int f w carried outside the ball of half the radius.
  double tail_fraction;
  /// Max |w_k - w_0| on the first stage's ball, relative to max w_0.
  double first_ball_difference;
};

/// Solves on growing balls with the same spacing and the same P. Entropy and
/// forcing are given as functions of (r, z) since every stage has its own grid.
std::vector<ContinuationStage> domain_continuation(
    double spacing, const std::vector<double>& radii, double target_p,
    const std::function<double(double, double)>& entropy, const std::function<double(double, double)>& forcing,
    const EosParams& eos, const VariationalConfig& base, const DescentObserver& observer = {});

}  // namespace rotstar
