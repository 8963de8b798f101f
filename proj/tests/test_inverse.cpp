#include <cmath>
#include <numbers>

#include "doctest.h"
#include "rotstar/inverse.hpp"

using namespace rotstar;

namespace {

double sphere_rho(double s) { return s < 1.0 ? 1.0 - s * s : 0.0; }

}  // namespace

TEST_CASE("density rules") {
  DensitySpec e = DensitySpec::parse("ellipsoid:a=1.2,b=0.8,power=1");
  CHECK(e.kind() == DensitySpec::Kind::ellipsoid);
  CHECK(e.a() == 1.2);
  CHECK(e.b() == 0.8);
  CHECK(e.power() == 1.0);
  CHECK_THROWS_AS(DensitySpec::parse("ellipsoid:a=1.2"), DomainError);
  CHECK_THROWS_AS(DensitySpec::parse("ellipsoid:a=1.2,b=x"), DomainError);
  CHECK_THROWS_AS(DensitySpec::parse("ellipsoid:a=1.2,b=0.8,c=1"), DomainError);
  CHECK_THROWS_AS(DensitySpec::parse("torus:a=1"), DomainError);
  CHECK_THROWS_AS(DensitySpec::ellipsoid(-1.0, 1.0, 1.0), DomainError);
  GridSpec g = GridSpec::square(17, 2.0);
  ScalarField neg(g);
  neg(2, 2) = -1.0;
  CHECK_THROWS_AS(DensitySpec::gridded(neg), DomainError);
}

TEST_CASE("analytic derivatives agree with differences of the samples") {
  DensitySpec e = DensitySpec::ellipsoid(1.2, 0.8, 2.0);
  GridSpec g = inverse_grid(e, 129);
  DensityDerivatives exact = e.derivatives(g);
  DensityDerivatives num = DensitySpec::gridded(e.sample(g)).derivatives(g);
  StarDomain dom = e.domain(g);
  double err[5] = {0, 0, 0, 0, 0};
  for (std::size_t i = 0; i < g.nr(); ++i)
    for (std::size_t j = 0; j < g.nz(); ++j) {
      if (!dom.interior(i, j, 2)) continue;
      err[0] = std::max(err[0], std::abs(exact.r(i, j) - num.r(i, j)));
      err[1] = std::max(err[1], std::abs(exact.z(i, j) - num.z(i, j)));
      err[2] = std::max(err[2], std::abs(exact.rr(i, j) - num.rr(i, j)));
      err[3] = std::max(err[3], std::abs(exact.zz(i, j) - num.zz(i, j)));
      err[4] = std::max(err[4], std::abs(exact.rz(i, j) - num.rz(i, j)));
    }
  for (double e : err) CHECK(e < 5e-3);
}

TEST_CASE("oblate ellipsoid satisfies the hypotheses and closes the momentum equations") {
  DensitySpec spec = DensitySpec::ellipsoid(1.2, 0.8, 1.0);
  MomentumResidual mom[2];
  double curl[2];
  std::size_t k = 0;
  for (std::size_t nr : {65, 129}) {
    GridSpec g = inverse_grid(spec, nr);
    InverseResult res = run_inverse(spec, g);
    const HypothesisReport& h = res.hypotheses;
    for (const char* name : {"h1", "h2", "h3", "h4", "a", "a'", "a''"}) CHECK_MESSAGE(h.holds(name), name);
    CHECK(h.ha_equator == doctest::Approx(-2.0 / 0.64).epsilon(1e-12));
    CHECK(h.h4_min > 0.0);
    // rho_r = -2r/a^2 <= 0 on the strip, and |z rho_r / rho_z| = r b^2 / a^2 there
    CHECK(h.ha_prime_max < 0.0);
    CHECK(h.ha_dprime_bound <= 1.1 * 1.2 * 0.64 / 1.44 + 1e-12);
    CHECK(h.strip.r_equator == 1.2);
    const Omega2Result& om = res.omega2;
    CHECK(om.negative.empty());
    CHECK(om.min_value >= -1e-6 * om.max_value);
    CHECK(om.max_value > 0.0);
    CHECK(om.unresolved == 0);
    CHECK_FALSE(res.pressure.warning);
    if (nr == 129) CHECK(boundary_pressure_ratio(res.pressure.p, res.domain) <= 1e-3);
    mom[k] = res.momentum;
    curl[k] = res.curl;
    ++k;
    // p and Omega^2 are even in z
    for (std::size_t i = 0; i < g.nr(); ++i)
      for (std::size_t j = 0; j < g.nz(); ++j) {
        CHECK(res.pressure.p(i, j) == res.pressure.p(i, g.mirror_j(j)));
        CHECK(om.omega2.values(i, j) == om.omega2.values(i, g.mirror_j(j)));
      }
  }
  MESSAGE("momentum " << mom[0].radial << "," << mom[0].axial << " -> " << mom[1].radial << "," << mom[1].axial);
  MESSAGE("curl " << curl[0] << " -> " << curl[1]);
  CHECK(mom[1].radial <= 0.05);
  CHECK(mom[1].axial <= 0.05);
  CHECK(mom[1].radial <= mom[0].radial / 2.0);
  CHECK(mom[1].axial <= mom[0].axial / 2.0);
  CHECK(curl[1] <= 0.05);
  CHECK(curl[1] <= curl[0] / 1.5);
}

TEST_CASE("prolate ellipsoid violates the cross-gradient condition") {
  DensitySpec spec = DensitySpec::ellipsoid(0.8, 1.2, 1.0);
  GridSpec g = inverse_grid(spec, 65);
  InverseResult res = run_inverse(spec, g);
  CHECK_FALSE(res.hypotheses.holds("h3"));
  CHECK_FALSE(res.hypotheses.h3_violations.empty());
  CHECK(res.hypotheses.h3_min < 0.0);
  // the violation shows up as negative Omega^2
  CHECK_FALSE(res.omega2.negative.empty());
  CHECK(res.hypotheses.holds("h4"));
}

TEST_CASE("spherical density gives zero rotation") {
  DensitySpec spec = DensitySpec::ellipsoid(1.0, 1.0, 1.0);
  GridSpec g = inverse_grid(spec, 65);
  PotentialResult exact = potential_spherical(g, sphere_rho, 1.0);
  InverseResult res = run_inverse(spec, g, HypothesisMode::smooth, &exact);
  const double scale = 4.0 * std::numbers::pi / 3.0;
  CHECK(std::max(std::abs(res.omega2.min_value), std::abs(res.omega2.max_value)) <= 1e-12 * scale);
}

TEST_CASE("axis pressure of a spherical star against radial hydrostatics") {
  // p(s) = int_s^1 rho(t) M(t) / t^2 dt with M(t) = 4 pi (t^3/3 - t^5/5).
  DensitySpec spec = DensitySpec::ellipsoid(1.0, 1.0, 1.0);
  GridSpec g = inverse_grid(spec, 129);
  PotentialResult exact = potential_spherical(g, sphere_rho, 1.0);
  PressureResult pr = pressure_from_density(spec, g, exact);
  auto oracle = [](double s) {
    // antiderivative of (1 - t^2)(t/3 - t^3/5) 4 pi
    auto prim = [](double t) {
      return 4.0 * std::numbers::pi * (t * t / 6.0 - t * t * t * t / 20.0 - t * t * t * t / 12.0 + std::pow(t, 6) / 30.0);
    };
    return prim(1.0) - prim(s);
  };
  const double pmax = pr.p.max();
  CHECK(pmax == doctest::Approx(oracle(0.0)).epsilon(1e-3));
  double worst = 0.0;
  for (std::size_t j = 0; j < g.nz(); ++j) {
    const double s = std::abs(g.z(j));
    if (s < 1.0) worst = std::max(worst, std::abs(pr.p(0, j) - oracle(s)) / pmax);
  }
  CHECK(worst <= 1e-2);
}

TEST_CASE("zero density and injected inconsistencies") {
  GridSpec g = GridSpec::square(33, 2.0);
  DensitySpec zero = DensitySpec::gridded(ScalarField(g));
  PotentialResult pot = potential_axisym(ScalarField(g));
  PressureResult p0 = pressure_from_density(zero, g, pot);
  CHECK(p0.p.max_abs() == 0.0);

  DensitySpec spec = DensitySpec::ellipsoid(1.2, 0.8, 1.0);
  GridSpec gi = inverse_grid(spec, 65);
  InverseResult res = run_inverse(spec, gi);
  // axial residual is a pure quadrature error of the antiderivative
  CHECK(res.momentum.axial <= 1e-2);
  MaskedField bumped = res.omega2.omega2;
  for (std::size_t k = 0; k < bumped.values.size(); ++k) bumped.values[k] += 0.1;
  MomentumResidual m = momentum_residual(res.rho, res.pressure.p, bumped, res.potential, res.domain);
  double norm = 0.0, expect = 0.0;
  for (std::size_t i = 0; i < gi.nr(); ++i)
    for (std::size_t j = 0; j < gi.nz(); ++j) {
      if (res.domain.contains(i, j)) {
        norm = std::max(norm, res.rho(i, j) * std::hypot(res.potential.gradient.dr(i, j), res.potential.gradient.dz(i, j)));
      }
      if (res.domain.interior(i, j, 1)) expect = std::max(expect, 0.1 * res.rho(i, j) * gi.r(i));
    }
  CHECK(m.radial == doctest::Approx(expect / norm).epsilon(0.05));
  CHECK(m.axial == res.momentum.axial);
}

TEST_CASE("gridded density from samples and holder-mode constants") {
  DensitySpec e = DensitySpec::ellipsoid(1.2, 0.8, 1.0);
  GridSpec g = inverse_grid(e, 65);
  DensitySpec grid_spec = DensitySpec::gridded(e.sample(g));
  PotentialResult pot = potential_axisym(e.sample(g));
  HypothesisReport h = check_hypotheses(grid_spec, g, pot, HypothesisMode::holder);
  CHECK(h.h4_min > 0.0);
  CHECK(h.ha_equator < 0.0);
  CHECK(h.holds("h2"));
  CHECK(h.holds("a'"));
  CHECK(h.strip.r_equator == doctest::Approx(1.2).epsilon(1e-2));
  REQUIRE(h.h5.size() == 3);
  CHECK(h.h5[0].eps == 0.05);
  CHECK(h.h5[0].c >= h.h5[1].c);
  CHECK(h.h5[1].c >= h.h5[2].c);
  CHECK(h.holds("h5"));
  // the psi extracted from samples matches the analytic boundary
  StarDomain da = e.domain(g), dg = grid_spec.domain(g);
  for (std::size_t i = 0; i + 3 < g.nr(); ++i) {
    if (g.r(i) < 1.1) CHECK(std::abs(da.psi(i) - dg.psi(i)) <= g.hz());
  }
}
