#include "rotstar/lane_emden.hpp"

#include <array>
#include <cmath>

namespace rotstar {

namespace {

// State: theta, theta', int theta^n xi^2.
using State = std::array<double, 3>;

State rhs(double xi, const State& y, double n) {
  const double t = std::max(y[0], 0.0);
  const double tn = n == 0.0 ? 1.0 : std::pow(t, n);
  return {y[1], -tn - 2.0 * y[1] / xi, tn * xi * xi};
}

State rk4(double xi, const State& y, double h, double n) {
  auto add = [](const State& a, const State& b, double s) {
    return State{a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]};
  };
  const State k1 = rhs(xi, y, n);
  const State k2 = rhs(xi + 0.5 * h, add(y, k1, 0.5 * h), n);
  const State k3 = rhs(xi + 0.5 * h, add(y, k2, 0.5 * h), n);
  const State k4 = rhs(xi + h, add(y, k3, h), n);
  State out;
  for (int c = 0; c < 3; ++c) out[c] = y[c] + h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
  return out;
}

}  // namespace

double PolytropeSolution::theta_at(double x) const {
  if (x <= 0.0) return 1.0;
  if (x >= xi1) return 0.0;
  // Samples are uniform except for the last partial step.
  const double h = xi[1] - xi[0];
  std::size_t k = std::min(static_cast<std::size_t>(x / h), xi.size() - 2);
  while (k + 1 < xi.size() - 1 && xi[k + 1] < x) ++k;
  while (k > 0 && xi[k] > x) --k;
  const double x0 = xi[k], x1 = xi[k + 1];
  const double d = x1 - x0;
  const double t = (x - x0) / d;
  const double h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
  const double h10 = t * (1.0 - t) * (1.0 - t);
  const double h01 = t * t * (3.0 - 2.0 * t);
  const double h11 = t * t * (t - 1.0);
  return h00 * theta[k] + h10 * d * dtheta[k] + h01 * theta[k + 1] + h11 * d * dtheta[k + 1];
}

PolytropeSolution lane_emden_solve(double n, double step) {
  if (!(n >= 0.0)) throw DomainError("lane_emden_solve: n must be >= 0");
  if (!(step > 0.0)) throw DomainError("lane_emden_solve: step must be positive");
  PolytropeSolution sol;
  sol.n = n;
  sol.xi.push_back(0.0);
  sol.theta.push_back(1.0);
  sol.dtheta.push_back(0.0);

  // Series start at xi = step.
  double xi = step;
  const double x2 = xi * xi;
  State y{1.0 - x2 / 6.0 + n * x2 * x2 / 120.0, -xi / 3.0 + n * x2 * xi / 30.0,
          x2 * xi / 3.0 - n * x2 * x2 * xi / 30.0};
  sol.xi.push_back(xi);
  sol.theta.push_back(y[0]);
  sol.dtheta.push_back(y[1]);

  const double xi_max = 50.0;
  while (xi < xi_max) {
    State next = rk4(xi, y, step, n);
    if (next[0] <= 0.0) {
      double lo = 0.0, hi = step;
      while (hi - lo > 1e-10 * std::max(1.0, xi)) {
        const double mid = 0.5 * (lo + hi);
        if (rk4(xi, y, mid, n)[0] > 0.0) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      const double last = 0.5 * (lo + hi);
      State end = rk4(xi, y, last, n);
      sol.xi1 = xi + last;
      sol.dtheta_at_xi1 = end[1];
      sol.mass_integral = end[2];
      sol.xi.push_back(sol.xi1);
      sol.theta.push_back(0.0);
      sol.dtheta.push_back(end[1]);
      return sol;
    }
    y = next;
    xi += step;
    sol.xi.push_back(xi);
    sol.theta.push_back(y[0]);
    sol.dtheta.push_back(y[1]);
  }
  throw ConvergenceError("lane_emden_solve: theta has no zero below xi = 50");
}

double compare_with_field(const PolytropeSolution& sol, const ScalarField& w, const EosParams& eos,
                          double entropy) {
  if (std::abs(sol.n - eos.q) > 1e-12 * std::max(1.0, eos.q)) {
    throw DomainError("compare_with_field: polytropic index differs from q");
  }
  const GridSpec& g = w.grid();
  const std::size_t jc = (g.nz() - 1) / 2;
  const double wc = w(0, jc);
  if (!(wc > 0.0)) throw DomainError("compare_with_field: central value must be positive");
  const double a = std::sqrt(eos.kconst * std::exp(-2.0 * entropy) * std::pow(wc, eos.q - 1.0));
  const double half = 0.5 * sol.xi1 / a;

  // Equatorial profile, linearly interpolated in r.
  auto equatorial = [&](double rad) {
    const double x = rad / g.hr();
    const std::size_t i = std::min(static_cast<std::size_t>(x), g.nr() - 2);
    const double t = x - static_cast<double>(i);
    return (1.0 - t) * w(i, jc) + t * w(i + 1, jc);
  };

  double spread = 0.0, worst = 0.0;
  for (std::size_t i = 0; i < g.nr(); ++i) {
    for (std::size_t j = 0; j < g.nz(); ++j) {
      const double rad = std::hypot(g.r(i), g.z(j));
      if (rad > half) continue;
      spread = std::max(spread, std::abs(w(i, j) - equatorial(rad)) / wc);
      const double want = wc * sol.theta_at(a * rad);
      worst = std::max(worst, std::abs(w(i, j) - want) / want);
    }
  }
  if (spread > 0.01) throw DomainError("compare_with_field: field is not spherical to 1%");
  return worst;
}

}  // namespace rotstar
