#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "rotstar/axifield.hpp"
#include "rotstar/grid.hpp"
#include "rotstar/operators.hpp"

using namespace rotstar;

namespace {

constexpr double kPi = std::numbers::pi;

double max_interior_error(const ScalarField& got, const std::function<double(double, double)>& want,
                          std::size_t margin = 1) {
  const GridSpec& g = got.grid();
  double m = 0.0;
  for (std::size_t i = 0; i + margin < g.nr(); ++i)
    for (std::size_t j = margin; j + margin < g.nz(); ++j)
      m = std::max(m, std::abs(got(i, j) - want(g.r(i), g.z(j))));
  return m;
}

}  // namespace

TEST_CASE("grid construction and symmetric z nodes") {
  GridSpec g(9, 17, 2.0, 1.5);
  CHECK(g.hr() == doctest::Approx(0.25));
  CHECK(g.hz() == doctest::Approx(3.0 / 16.0));
  CHECK(g.r(0) == 0.0);
  CHECK(g.z(8) == 0.0);
  for (std::size_t j = 0; j < g.nz(); ++j) CHECK(g.z(j) == -g.z(g.mirror_j(j)));
  CHECK_THROWS_AS(GridSpec(7, 17, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(GridSpec(9, 17, 0.0, 1.0), DomainError);
}

TEST_CASE("field algebra requires matching grids and odd fields vanish on the axis") {
  GridSpec a(9, 9, 1.0, 1.0), b(9, 9, 2.0, 1.0);
  ScalarField fa = ScalarField::constant(a, 1.0);
  ScalarField fb = ScalarField::constant(b, 1.0);
  CHECK_THROWS_AS(fa + fb, GridMismatchError);
  CHECK_THROWS_AS(fa.hadamard(fb), GridMismatchError);

  ScalarField odd = ScalarField::sample(a, [](double r, double) { return r + 1.0; }, Parity::odd);
  CHECK(odd(0, 3) == 0.0);
  CHECK_NOTHROW(odd.validate());
  odd(0, 3) = 1e-300;
  CHECK_THROWS_AS(odd.validate(), DomainError);

  ScalarField bad = fa;
  bad(2, 2) = std::nan("");
  CHECK_THROWS_AS(bad.validate(), DomainError);
  CHECK(odd.hadamard(odd).parity() == Parity::even);
}

TEST_CASE("gradient of constants and of r^2") {
  GridSpec g(17, 33, 2.0, 2.0);
  Gradient c = gradient_rz(ScalarField::constant(g, 3.5));
  CHECK(c.dr.max_abs() == 0.0);
  CHECK(c.dz.max_abs() == 0.0);

  Gradient q = gradient_rz(ScalarField::sample(g, [](double r, double) { return r * r; }));
  CHECK(q.dr.parity() == Parity::odd);
  for (std::size_t j = 0; j < g.nz(); ++j) CHECK(q.dr(0, j) == 0.0);
  // Second-order stencils differentiate quadratics exactly.
  CHECK(max_interior_error(q.dr, [](double r, double) { return 2.0 * r; }, 0) < 1e-12);
}

TEST_CASE("gradient of an odd field uses the reflected neighbour on the axis") {
  GridSpec g(17, 17, 1.0, 1.0);
  ScalarField f = ScalarField::sample(g, [](double r, double z) { return r * (1.0 + z); }, Parity::odd);
  Gradient d = gradient_rz(f);
  CHECK(d.dr.parity() == Parity::even);
  for (std::size_t j = 0; j < g.nz(); ++j) CHECK(d.dr(0, j) == doctest::Approx(1.0 + g.z(j)));
}

TEST_CASE("gradient of a clipped paraboloid matches symbolic derivatives inside the support") {
  GridSpec g(65, 129, 2.5, 1.5);
  auto f = [](double r, double z) { return std::max(0.0, 1.0 - r * r / 4.0 - z * z); };
  Gradient d = gradient_rz(ScalarField::sample(g, f));
  // Symbolic oracle, nodes whose stencil stays inside the support.
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < g.nr(); ++i)
    for (std::size_t j = 1; j + 1 < g.nz(); ++j) {
      const double r = g.r(i), z = g.z(j);
      const double rr = r + g.hr(), zz = std::abs(z) + g.hz();
      if (1.0 - rr * rr / 4.0 - zz * zz <= 0.0) continue;
      worst = std::max(worst, std::abs(d.dr(i, j) - (-r / 2.0)));
      worst = std::max(worst, std::abs(d.dz(i, j) - (-2.0 * z)));
    }
  const double curvature = 2.0;
  CHECK(worst <= 5.0 * std::pow(std::max(g.hr(), g.hz()), 2) * curvature);
}

TEST_CASE("gradient is linear and preserves parity rules") {
  GridSpec g(17, 25, 1.0, 1.0);
  ScalarField f = ScalarField::sample(g, [](double r, double z) { return std::cos(r) * std::exp(z); });
  ScalarField h = ScalarField::sample(g, [](double r, double z) { return r * r * z; });
  Gradient gf = gradient_rz(f), gh = gradient_rz(h);
  Gradient gs = gradient_rz(2.0 * f + (-3.0) * h);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double want_r = 2.0 * gf.dr[k] - 3.0 * gh.dr[k];
    const double want_z = 2.0 * gf.dz[k] - 3.0 * gh.dz[k];
    CHECK(std::abs(gs.dr[k] - want_r) <= 4e-16 * (std::abs(want_r) + 8.0 * gf.dr.max_abs()) + 1e-14);
    CHECK(std::abs(gs.dz[k] - want_z) <= 4e-16 * (std::abs(want_z) + 8.0 * gf.dz.max_abs()) + 1e-14);
  }
  CHECK(gf.dr.parity() == Parity::odd);
  CHECK(gf.dz.parity() == Parity::even);
}

TEST_CASE("gradient error converges at second order") {
  auto f = [](double r, double z) { return std::cos(1.3 * r) * std::sin(0.7 * z + 0.3); };
  auto fr = [](double r, double z) { return -1.3 * std::sin(1.3 * r) * std::sin(0.7 * z + 0.3); };
  auto err = [&](std::size_t n) {
    GridSpec g(n, 2 * n - 1, 2.0, 2.0);
    Gradient d = gradient_rz(ScalarField::sample(g, f));
    return max_interior_error(d.dr, fr, 1);
  };
  const double ratio = err(33) / err(65);
  CHECK(ratio >= 3.5);
  CHECK(ratio <= 4.5);
}

TEST_CASE("weighted divergence on polynomials") {
  GridSpec g(17, 33, 2.0, 2.0);
  ScalarField one = ScalarField::constant(g, 1.0);
  CHECK(div_weighted_grad(one, one).max_abs() < 1e-12);

  ScalarField w = ScalarField::sample(g, [](double r, double z) { return r * r + z * z; });
  ScalarField lap = div_weighted_grad(w, one);
  for (std::size_t k = 0; k < g.size(); ++k) CHECK(lap[k] == doctest::Approx(6.0).epsilon(1e-11));

  CHECK_THROWS_AS(div_weighted_grad(w, ScalarField::constant(g, 0.0)), DomainError);
}

TEST_CASE("weighted divergence with weight exp(-z^2) matches the symbolic expansion") {
  // d/dz(e^{-z^2} 2z) = e^{-z^2}(2 - 4 z^2); radial part of r^2 gives 4 e^{-z^2}.
  auto want = [](double, double z) { return std::exp(-z * z) * (6.0 - 4.0 * z * z); };
  auto err = [&](std::size_t n) {
    GridSpec g(n, 2 * n - 1, 2.0, 2.0);
    ScalarField w = ScalarField::sample(g, [](double r, double z) { return r * r + z * z; });
    ScalarField a = ScalarField::sample(g, [](double, double z) { return std::exp(-z * z); });
    return max_interior_error(div_weighted_grad(w, a), want, 1);
  };
  const double e1 = err(33), e2 = err(65);
  CHECK(e1 < 0.05);
  CHECK(e1 / e2 > 3.5);
}

TEST_CASE("integration of constants, the unit ball and an ellipsoid") {
  GridSpec g(41, 81, 2.0, 1.5);
  const double cyl = integrate_axisym(ScalarField::constant(g, 1.0));
  CHECK(cyl == doctest::Approx(kPi * 4.0 * 3.0).epsilon(1e-12));

  GridSpec fine(201, 401, 1.5, 1.5);
  ScalarField ball = ScalarField::sample(fine, [](double r, double z) { return r * r + z * z <= 1.0 ? 1.0 : 0.0; });
  CHECK(std::abs(integrate_axisym(ball) - 4.0 * kPi / 3.0) < 2.0 * fine.hr() * 4.0 * kPi);

  // Uniform ellipsoid: compare with the closed form (4 pi / 3) a b^2 in the
  // (r, z) = (a, b) axes; the oracle does not use the grid at all.
  auto ell = [](double r, double z) { return r * r / 1.44 + z * z / 0.64 <= 1.0 ? 1.0 : 0.0; };
  auto vol = [&](std::size_t n) {
    GridSpec gg(n, 2 * n - 1, 1.5, 1.5);
    return integrate_axisym(ScalarField::sample(gg, ell));
  };
  const double exact = 4.0 * kPi / 3.0 * 1.44 * 0.8;
  CHECK(std::abs(vol(401) - exact) / exact < 5e-3);
  CHECK(std::abs(vol(401) - exact) < std::abs(vol(51) - exact) + 1e-3);
}

TEST_CASE("masked integration counts only domain nodes") {
  GridSpec g(33, 65, 2.0, 2.0);
  StarDomain d = StarDomain::ball(g, 1.0);
  ScalarField one = ScalarField::constant(g, 1.0);
  const double v = integrate_axisym(one, &d);
  CHECK(std::abs(v - 4.0 * kPi / 3.0) < 0.3);
  for (std::size_t i = 0; i < g.nr(); ++i)
    for (std::size_t j = 0; j < g.nz(); ++j) CHECK(d.contains(i, j) == d.contains(i, g.mirror_j(j)));
}

TEST_CASE("discrete divergence theorem") {
  GridSpec g(33, 65, 3.0, 3.0);
  ScalarField w = ScalarField::sample(g, [](double r, double z) { return std::exp(-2.0 * (r * r + z * z)); });
  ScalarField a = ScalarField::sample(g, [](double r, double z) { return std::exp(-0.1 * r * r + 0.2 * z); });
  ScalarField div = div_weighted_grad(w, a);
  // Boundary flux through r = 3 and z = +-3 is ~1e-8 here; control volumes telescope exactly.
  const double scale = integrate_axisym(div.hadamard(div), nullptr, Quadrature::control_volume);
  const double cv = integrate_axisym(div, nullptr, Quadrature::control_volume);
  CHECK(std::abs(cv) < 1e-6 * std::sqrt(scale));
  const double tz = integrate_axisym(div);
  CHECK(std::abs(tz) < 0.05 * std::sqrt(scale));
}

TEST_CASE("curl residual vanishes for barotropic pairs and detects z-dependent rotation") {
  GridSpec g(65, 129, 1.5, 1.5);
  auto rho_fn = [](double r, double z) { return std::max(0.0, 1.0 - r * r - z * z); };
  ScalarField rho = ScalarField::sample(g, rho_fn);
  ScalarField p = rho.hadamard(rho);
  auto inside = [&](std::size_t i, std::size_t j) {
    const double r = g.r(i) + 2 * g.hr(), z = std::abs(g.z(j)) + 2 * g.hz();
    return r * r + z * z < 1.0;
  };

  MaskedField flat = curl_theta_residual(p, rho, ScalarField::constant(g, 0.3));
  CHECK(flat.max_abs_where(inside) < 1e-10);

  ScalarField o2 = ScalarField::sample(g, [](double, double z) { return z * z; });
  MaskedField tilted = curl_theta_residual(p, rho, o2);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.nr(); ++i)
    for (std::size_t j = 1; j + 1 < g.nz(); ++j)
      if (inside(i, j)) {
        worst = std::max(worst, std::abs(tilted.values(i, j) + 2.0 * g.r(i) * g.z(j)));
      }
  CHECK(worst < 1e-10);

  // Nodes outside the support carry no value.
  CHECK(tilted.valid[g.index(g.nr() - 1, 0)] == 0);
}

TEST_CASE("star domain from a field interpolates the zero level") {
  GridSpec g(33, 65, 2.0, 2.0);
  ScalarField f = ScalarField::sample(g, [](double r, double z) { return 1.0 - r * r - z * z; });
  StarDomain d = StarDomain::from_field(f);
  for (std::size_t i = 0; i < g.nr(); ++i) {
    const double r = g.r(i);
    const double want = r < 1.0 ? std::sqrt(1.0 - r * r) : 0.0;
    CHECK(std::abs(d.psi(i) - want) < 0.05);
  }
  CHECK(d.interior(0, 32, 3));
  CHECK_FALSE(d.interior(15, 32, 3));
}

TEST_CASE("AXIFIELD snapshots round-trip exactly") {
  GridSpec g(9, 11, 1.25, 0.75);
  ScalarField f = ScalarField::sample(g, [](double r, double z) { return std::sin(r + 3.0 * z) / 3.0; }, Parity::odd);
  std::stringstream ss;
  write_axifield(ss, f);
  const std::string text = ss.str();
  CHECK(text.rfind("AXIFIELD v1 nr=9 nz=11 rmax=1.25 zmin=-0.75 zmax=0.75 parity=odd\n", 0) == 0);
  ScalarField back = read_axifield(ss);
  CHECK(back.grid() == g);
  CHECK(back.parity() == Parity::odd);
  for (std::size_t k = 0; k < f.size(); ++k) CHECK(back[k] == f[k]);

  std::stringstream again;
  write_axifield(again, back);
  CHECK(again.str() == text);

  std::stringstream truncated("AXIFIELD v1 nr=9 nz=9 rmax=1 zmin=-1 zmax=1 parity=even\n1 2 3\n");
  CHECK_THROWS_AS(read_axifield(truncated), DomainError);
  std::stringstream junk("HELLO\n");
  CHECK_THROWS_AS(read_axifield(junk), DomainError);
}
