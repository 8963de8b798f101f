#include "rotstar/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rotstar {

namespace {

// Derivative along one grid line of n samples spaced h apart, evaluated at k.
template <class Get>
double line_derivative(Get get, std::size_t k, std::size_t n, double h) {
  if (k == 0) return (-3.0 * get(0) + 4.0 * get(1) - get(2)) / (2.0 * h);
  if (k == n - 1) return (3.0 * get(n - 1) - 4.0 * get(n - 2) + get(n - 3)) / (2.0 * h);
  return (get(k + 1) - get(k - 1)) / (2.0 * h);
}

}  // namespace

Gradient gradient_rz(const ScalarField& field) {
  const GridSpec& g = field.grid();
  const Parity rpar = field.parity() == Parity::even ? Parity::odd : Parity::even;
  Gradient out{ScalarField(g, rpar), ScalarField(g, field.parity())};
  const std::size_t nr = g.nr();
  const std::size_t nz = g.nz();

  for (std::size_t i = 0; i < nr; ++i) {
    for (std::size_t j = 0; j < nz; ++j) {
      double dr;
      if (i == 0) {
        dr = field.parity() == Parity::even ? 0.0 : field(1, j) / g.hr();
      } else {
        dr = line_derivative([&](std::size_t ii) { return field(ii, j); }, i, nr, g.hr());
      }
      out.dr(i, j) = dr;
      out.dz(i, j) = line_derivative([&](std::size_t jj) { return field(i, jj); }, j, nz, g.hz());
    }
  }
  return out;
}

ScalarField div_weighted_grad(const ScalarField& w, const ScalarField& weight) {
  require_same_grid(w, weight);
  for (double a : weight.values()) {
    if (!(a > 0.0)) throw DomainError("div_weighted_grad: weight must be positive");
  }
  const GridSpec& g = w.grid();
  const long nr = static_cast<long>(g.nr());
  const long nz = static_cast<long>(g.nz());
  const double hr = g.hr();
  const double hz = g.hz();

  // Ghost values beyond the outer edges by quadratic extrapolation.
  auto wv = [&](long i, long j) -> double {
    if (i >= nr) {
      long e = nr - 1;
      return 3.0 * w(e, j) - 3.0 * w(e - 1, j) + w(e - 2, j);
    }
    if (j < 0) return 3.0 * w(i, 0) - 3.0 * w(i, 1) + w(i, 2);
    if (j >= nz) {
      long e = nz - 1;
      return 3.0 * w(i, e) - 3.0 * w(i, e - 1) + w(i, e - 2);
    }
    return w(i, j);
  };
  auto av = [&](long i, long j) -> double {
    i = std::min(i, nr - 1);
    j = std::clamp(j, 0L, nz - 1);
    return weight(i, j);
  };

  ScalarField out(g, w.parity());
  for (long i = 0; i < nr; ++i) {
    const double r = g.r(i);
    for (long j = 0; j < nz; ++j) {
      const double c = w(i, j);
      double radial;
      if (i == 0) {
        const double a = 0.5 * (av(0, j) + av(1, j));
        radial = 4.0 * a * (wv(1, j) - c) / (hr * hr);
      } else {
        const double ap = 0.5 * (av(i, j) + av(i + 1, j));
        const double am = 0.5 * (av(i, j) + av(i - 1, j));
        const double rp = r + 0.5 * hr;
        const double rm = r - 0.5 * hr;
        radial = (rp * ap * (wv(i + 1, j) - c) + rm * am * (wv(i - 1, j) - c)) / (r * hr * hr);
      }
      const double ap = 0.5 * (av(i, j) + av(i, j + 1));
      const double am = 0.5 * (av(i, j) + av(i, j - 1));
      // Two-term sum, so mirrored nodes produce identical results.
      const double axial = (ap * (wv(i, j + 1) - c) + am * (wv(i, j - 1) - c)) / (hz * hz);
      out(i, j) = radial + axial;
    }
  }
  return out;
}

double node_volume(const GridSpec& grid, std::size_t i, std::size_t j, Quadrature rule) {
  const double two_pi = 2.0 * std::numbers::pi;
  double wz = grid.hz();
  if (j == 0 || j == grid.nz() - 1) wz *= 0.5;
  if (i == 0) {
    if (rule == Quadrature::trapezoid) return 0.0;
    return two_pi * grid.hr() * grid.hr() / 8.0 * wz;
  }
  double wr = grid.r(i) * grid.hr();
  if (i == grid.nr() - 1) wr *= 0.5;
  return two_pi * wr * wz;
}

std::vector<double> node_volumes(const GridSpec& grid, Quadrature rule) {
  std::vector<double> v(grid.size());
  for (std::size_t i = 0; i < grid.nr(); ++i)
    for (std::size_t j = 0; j < grid.nz(); ++j) v[grid.index(i, j)] = node_volume(grid, i, j, rule);
  return v;
}

double integrate_axisym(const ScalarField& field, const StarDomain* mask, Quadrature rule) {
  const GridSpec& g = field.grid();
  if (mask != nullptr && !(mask->grid() == g)) {
    throw GridMismatchError("integrate_axisym: mask grid differs from field grid");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < g.nr(); ++i) {
    for (std::size_t j = 0; j < g.nz(); ++j) {
      if (mask != nullptr && !mask->contains(i, j)) continue;
      sum += field(i, j) * node_volume(g, i, j, rule);
    }
  }
  return sum;
}

MaskedField curl_theta_residual(const ScalarField& p, const ScalarField& rho,
                                const ScalarField& omega2) {
  require_same_grid(p, rho);
  require_same_grid(p, omega2);
  const GridSpec& g = p.grid();
  Gradient gp = gradient_rz(p);
  Gradient gr = gradient_rz(rho);
  Gradient go = gradient_rz(omega2);
  MaskedField out{ScalarField(g), std::vector<unsigned char>(g.size(), 0)};
  for (std::size_t i = 0; i < g.nr(); ++i) {
    for (std::size_t j = 0; j < g.nz(); ++j) {
      const std::size_t k = g.index(i, j);
      const double d = rho[k];
      if (!(d > 0.0)) continue;
      out.valid[k] = 1;
      out.values[k] = (gp.dz[k] * gr.dr[k] - gp.dr[k] * gr.dz[k]) / (d * d) - g.r(i) * go.dz[k];
    }
  }
  return out;
}

}  // namespace rotstar
