#include "rotstar/gravity.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "rotstar/parallel.hpp"

namespace rotstar {

namespace {

constexpr double kPi = std::numbers::pi;

double agm_k(double kprime) {
  double a = 1.0;
  double b = kprime;
  for (int it = 0; it < 64 && std::abs(a - b) > 1e-15 * a; ++it) {
    const double an = 0.5 * (a + b);
    b = std::sqrt(a * b);
    a = an;
  }
  return kPi / (a + b);
}

// Gauss-Legendre rule on [0, 1].
template <std::size_t N>
struct GaussRule {
  std::array<double, N> x{};
  std::array<double, N> w{};
  GaussRule() {
    for (std::size_t k = 0; k < N; ++k) {
      double t = std::cos(kPi * (static_cast<double>(k) + 0.75) / (static_cast<double>(N) + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = t;
        for (std::size_t n = 2; n <= N; ++n) {
          double p2 = ((2.0 * n - 1.0) * t * p1 - (n - 1.0) * p0) / static_cast<double>(n);
          p0 = p1;
          p1 = p2;
        }
        dp = static_cast<double>(N) * (t * p1 - p0) / (t * t - 1.0);
        double dt = p1 / dp;
        t -= dt;
        if (std::abs(dt) < 1e-16) break;
      }
      x[k] = 0.5 * (1.0 - t);
      w[k] = 1.0 / ((1.0 - t * t) * dp * dp);
    }
  }
};

// int over [r0, r1] x [-hz/2, hz/2] of rs * ring_kernel(r, rs, zs) for a
// target (r, 0) inside the rectangle: four triangles with apex at the
// target, each mapped to the unit square; u = v^2 tames the log singularity.
double self_cell_weight(double r, double r0, double r1, double hz) {
  static const GaussRule<24> rule;
  const double z0 = -0.5 * hz, z1 = 0.5 * hz;
  const std::array<std::array<double, 2>, 4> corners{{{r0, z0}, {r1, z0}, {r1, z1}, {r0, z1}}};
  double total = 0.0;
  for (std::size_t e = 0; e < 4; ++e) {
    const auto& A = corners[e];
    const auto& B = corners[(e + 1) % 4];
    const double ax = A[0] - r, az = A[1];
    const double bx = B[0] - r, bz = B[1];
    const double jac = std::abs(ax * bz - az * bx);
    if (jac == 0.0) continue;
    double acc = 0.0;
    for (std::size_t a = 0; a < rule.x.size(); ++a) {
      const double t = rule.x[a];
      const double ex = ax + t * (bx - ax);
      const double ez = az + t * (bz - az);
      for (std::size_t b = 0; b < rule.x.size(); ++b) {
        const double v = rule.x[b];
        const double u = v * v;
        const double rs = r + u * ex;
        const double zs = u * ez;
        // u du = 2 v^3 dv
        acc += rule.w[a] * rule.w[b] * 2.0 * v * v * v * rs * ring_kernel(r, rs, zs);
      }
    }
    total += jac * acc;
  }
  return total;
}

// int over [r0, r1] x [z0, z1] of rs * ring_kernel(r, rs, zs) for a target
// (r, 0) outside the (closed) rectangle.
template <std::size_t N>
double cell_weight(double r, double r0, double r1, double z0, double z1) {
  static const GaussRule<N> rule;
  double acc = 0.0;
  for (std::size_t a = 0; a < rule.x.size(); ++a) {
    const double rs = r0 + rule.x[a] * (r1 - r0);
    for (std::size_t b = 0; b < rule.x.size(); ++b) {
      const double zs = z0 + rule.x[b] * (z1 - z0);
      acc += rule.w[a] * rule.w[b] * rs * ring_kernel(r, rs, zs);
    }
  }
  return acc * (r1 - r0) * (z1 - z0);
}

// Sources within this many cells of the target are integrated over their cell.
constexpr std::size_t kNearField = 2;

}  // namespace

double complete_elliptic_k(double m) {
  if (!(m >= 0.0) || !(m < 1.0)) throw DomainError("complete_elliptic_k: need 0 <= m < 1");
  return agm_k(std::sqrt(1.0 - m));
}

double elliptic_k_from_complement(double kprime) {
  if (!(kprime > 0.0) || kprime > 1.0) throw DomainError("elliptic_k_from_complement: need 0 < k' <= 1");
  return agm_k(kprime);
}

double ring_kernel(double r, double rs, double dz) {
  const double dsum = std::sqrt((r + rs) * (r + rs) + dz * dz);
  const double ddiff = std::sqrt((r - rs) * (r - rs) + dz * dz);
  if (!(ddiff > 0.0)) throw DomainError("ring_kernel: coincident ring");
  return 4.0 * agm_k(ddiff / dsum) / dsum;
}

PotentialResult potential_axisym(const ScalarField& rho) {
  const GridSpec& g = rho.grid();
  const std::size_t nr = g.nr();
  const std::size_t nz = g.nz();
  const double hr = g.hr();
  const double hz = g.hz();

  // Support bookkeeping per source column.
  std::vector<std::size_t> jlo(nr, nz), jhi(nr, 0);
  bool z_even = true;
  for (std::size_t i = 0; i < nr; ++i) {
    for (std::size_t j = 0; j < nz; ++j) {
      const double d = rho(i, j);
      if (!std::isfinite(d) || d < 0.0) throw DomainError("potential_axisym: rho must be finite and >= 0");
      if (d != rho(i, g.mirror_j(j))) z_even = false;
      if (d == 0.0) continue;
      if (i + 2 >= nr || j < 2 || j + 2 >= nz) {
        throw SupportViolation("potential_axisym: density touches the two outer node layers");
      }
      jlo[i] = std::min(jlo[i], j);
      jhi[i] = std::max(jhi[i], j);
    }
  }

  std::vector<double> area(nr);
  for (std::size_t i = 0; i < nr; ++i) area[i] = (i == 0 ? hr * hr / 8.0 : g.r(i) * hr) * hz;

  double mass = 0.0;
  for (std::size_t i = 0; i < nr; ++i)
    for (std::size_t j = 0; j < nz; ++j) mass += 2.0 * kPi * area[i] * rho(i, j);

  ScalarField pot(g);
  // With z-even data only the lower half (plus the equator) is summed and then mirrored.
  const std::size_t jtargets = z_even ? (nz + 1) / 2 : nz;
  parallel_for(nr, [&](std::size_t i) {
    const double r = g.r(i);
    auto cell_lo = [&](std::size_t c) { return c == 0 ? 0.0 : g.r(c) - 0.5 * hr; };
    std::vector<double> kern(nz);
    std::vector<double> col(jtargets, 0.0);
    for (std::size_t is = 0; is < nr; ++is) {
      if (jlo[is] > jhi[is]) continue;
      const double rs = g.r(is);
      for (std::size_t d = 0; d < nz; ++d) {
        const bool near = (is > i ? is - i : i - is) <= kNearField && d <= kNearField;
        if (is == i && d == 0) {
          kern[d] = self_cell_weight(r, cell_lo(i), r + 0.5 * hr, hz);
        } else if (near) {
          const double zc = static_cast<double>(d) * hz;
          kern[d] = cell_weight<16>(r, cell_lo(is), rs + 0.5 * hr, zc - 0.5 * hz, zc + 0.5 * hz);
        } else {
          const double zc = static_cast<double>(d) * hz;
          kern[d] = cell_weight<2>(r, cell_lo(is), rs + 0.5 * hr, zc - 0.5 * hz, zc + 0.5 * hz);
        }
      }
      for (std::size_t j = 0; j < jtargets; ++j) {
        double acc = 0.0;
        for (std::size_t js = jlo[is]; js <= jhi[is]; ++js) {
          const std::size_t d = j > js ? j - js : js - j;
          acc += rho(is, js) * kern[d];
        }
        col[j] += acc;
      }
    }
    for (std::size_t j = 0; j < jtargets; ++j) {
      pot(i, j) = col[j];
      if (z_even) pot(i, g.mirror_j(j)) = col[j];
    }
  });

  Gradient grad = gradient_rz(pot);
  return {std::move(pot), std::move(grad), mass};
}

double poisson_residual(const PotentialResult& result, const ScalarField& rho) {
  require_same_grid(result.potential, rho);
  const GridSpec& g = rho.grid();
  ScalarField lap = div_weighted_grad(result.potential, ScalarField::constant(g, 1.0));
  const double scale = 4.0 * kPi * std::max(rho.max(), 1e-300);
  const long nr = static_cast<long>(g.nr());
  const long nz = static_cast<long>(g.nz());
  const long layers = 3;
  double worst = 0.0;
  for (long i = 0; i + layers < nr; ++i) {
    for (long j = layers; j + layers < nz; ++j) {
      const bool inside = rho(i, j) > 0.0;
      bool uniform = true;
      for (long di = -layers; di <= layers && uniform; ++di) {
        const long ii = std::labs(i + di);
        for (long dj = -layers; dj <= layers; ++dj) {
          if ((rho(ii, j + dj) > 0.0) != inside) {
            uniform = false;
            break;
          }
        }
      }
      if (!uniform) continue;
      worst = std::max(worst, std::abs(lap(i, j) + 4.0 * kPi * rho(i, j)) / scale);
    }
  }
  return worst;
}

namespace {

// 5-point Gauss-Legendre on [lo, hi] split into `panels` pieces.
template <class Fn>
double gauss_panels(Fn fn, double lo, double hi, int panels) {
  static constexpr std::array<double, 5> x{-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                           0.9061798459386640};
  static constexpr std::array<double, 5> w{0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                           0.4786286704993665, 0.2369268850561891};
  if (!(hi > lo)) return 0.0;
  const double step = (hi - lo) / panels;
  double sum = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double mid = lo + (k + 0.5) * step;
    for (std::size_t q = 0; q < 5; ++q) sum += w[q] * fn(mid + 0.5 * step * x[q]);
  }
  return 0.5 * step * sum;
}

}  // namespace

PotentialResult potential_spherical(const GridSpec& grid, const std::function<double(double)>& rho, double radius) {
  if (!(radius > 0.0)) throw DomainError("potential_spherical: radius must be positive");
  const double four_pi = 4.0 * std::numbers::pi;
  constexpr int panels = 64;
  auto mass = [&](double s) {
    return four_pi * gauss_panels([&](double t) { return rho(t) * t * t; }, 0.0, std::min(s, radius), panels);
  };
  auto shell = [&](double s) {
    return four_pi * gauss_panels([&](double t) { return rho(t) * t; }, s, radius, panels);
  };
  PotentialResult out{ScalarField(grid), {ScalarField(grid, Parity::odd), ScalarField(grid)}, mass(radius)};
  parallel_for(grid.nr(), [&](std::size_t i) {
    for (std::size_t j = 0; j < grid.nz(); ++j) {
      const double r = grid.r(i), z = grid.z(j);
      const double s = std::hypot(r, z);
      if (s == 0.0) {
        out.potential(i, j) = shell(0.0);
        continue;
      }
      const double m = mass(s);
      out.potential(i, j) = m / s + shell(s);
      const double g = -m / (s * s * s);
      out.gradient.dr(i, j) = g * r;
      out.gradient.dz(i, j) = g * z;
    }
  });
  return out;
}

}  // namespace rotstar
