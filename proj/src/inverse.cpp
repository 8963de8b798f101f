#include "rotstar/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>

#include "rotstar/axifield.hpp"
#include "rotstar/parallel.hpp"

namespace rotstar {

namespace {

// Last node index with z <= 0.
std::size_t lower_half_end(const GridSpec& g) { return g.nz() % 2 == 1 ? (g.nz() - 1) / 2 : g.nz() / 2 - 1; }

// Node closest to the equator.
std::size_t equator_row(const GridSpec& g) { return (g.nz() - 1) / 2; }

// Integrates g(j) along column i from the lower boundary -psi(r_i) up to every
// node with z <= 0, then mirrors. `boundary` is the integrand at z = -psi;
// when empty it is extrapolated linearly from the first two nodes inside.
template <class Integrand>
void column_integral(const StarDomain& dom, std::size_t i, Integrand g, std::optional<double> boundary,
                     ScalarField& out) {
  const GridSpec& grid = dom.grid();
  const std::size_t c = lower_half_end(grid);
  const double psi = dom.psi(i);
  std::size_t j0 = c + 1;
  for (std::size_t j = 0; j <= c; ++j) {
    if (dom.contains(i, j)) {
      j0 = j;
      break;
    }
  }
  for (std::size_t j = 0; j < grid.nz(); ++j) out(i, j) = 0.0;
  if (j0 > c) return;
  const double z0 = grid.z(j0);
  double gb;
  if (boundary) {
    gb = *boundary;
  } else if (j0 + 1 <= c && dom.contains(i, j0 + 1)) {
    const double g0 = g(j0), g1 = g(j0 + 1);
    gb = g0 + (g0 - g1) * (z0 + psi) / grid.hz();
  } else {
    gb = g(j0);
  }
  double acc = 0.5 * (z0 + psi) * (gb + g(j0));
  out(i, j0) = acc;
  double prev = g(j0);
  for (std::size_t j = j0 + 1; j <= c; ++j) {
    const double cur = g(j);
    acc += 0.5 * grid.hz() * (prev + cur);
    out(i, j) = acc;
    prev = cur;
  }
  for (std::size_t j = 0; j <= c; ++j) out(i, grid.mirror_j(j)) = out(i, j);
}

DensityDerivatives numeric_derivatives(const ScalarField& rho) {
  const GridSpec& g = rho.grid();
  Gradient d1 = gradient_rz(rho);
  Gradient d2 = gradient_rz(d1.dz);
  DensityDerivatives d{rho, d1.dr, d1.dz, ScalarField(g), ScalarField(g), d2.dr};
  const std::size_t nr = g.nr(), nz = g.nz();
  const double hr2 = g.hr() * g.hr(), hz2 = g.hz() * g.hz();
  for (std::size_t i = 0; i < nr; ++i)
    for (std::size_t j = 0; j < nz; ++j) {
      double rr;
      if (i == 0) rr = 2.0 * (rho(1, j) - rho(0, j)) / hr2;
      else if (i + 1 < nr) rr = (rho(i + 1, j) - 2.0 * rho(i, j) + rho(i - 1, j)) / hr2;
      else rr = (rho(i, j) - 2.0 * rho(i - 1, j) + rho(i - 2, j)) / hr2;
      d.rr(i, j) = rr;
      const std::size_t jc = std::clamp<std::size_t>(j, 1, nz - 2);
      d.zz(i, j) = (rho(i, jc + 1) - 2.0 * rho(i, jc) + rho(i, jc - 1)) / hz2;
    }
  return d;
}

double parse_value(const std::string& text, const std::string& rule) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw DomainError("bad number '" + text + "' in density rule '" + rule + "'");
  return v;
}

}  // namespace

DensitySpec DensitySpec::ellipsoid(double a, double b, double power, double rho_c) {
  if (!(a > 0.0) || !(b > 0.0) || !(power > 0.0) || !(rho_c > 0.0)) {
    throw DomainError("ellipsoid density needs a, b, power, rho_c > 0");
  }
  DensitySpec s;
  s.kind_ = Kind::ellipsoid;
  s.a_ = a;
  s.b_ = b;
  s.power_ = power;
  s.rho_c_ = rho_c;
  return s;
}

DensitySpec DensitySpec::gridded(ScalarField rho) {
  rho.validate();
  if (rho.min() < 0.0) throw DomainError("density must be >= 0");
  DensitySpec s;
  s.kind_ = Kind::gridded;
  s.field_ = std::move(rho);
  return s;
}

DensitySpec DensitySpec::parse(const std::string& rule) {
  const auto colon = rule.find(':');
  if (colon == std::string::npos) throw DomainError("density rule needs a kind: '" + rule + "'");
  const std::string kind = rule.substr(0, colon);
  const std::string arg = rule.substr(colon + 1);
  if (kind == "file") return gridded(read_axifield(std::filesystem::path(arg)));
  if (kind != "ellipsoid") throw DomainError("unknown density rule '" + kind + "'");
  std::map<std::string, double> kv{{"rho_c", 1.0}, {"power", 1.0}};
  std::stringstream ss(arg);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw DomainError("density parameter needs key=value: '" + item + "'");
    const std::string key = item.substr(0, eq);
    if (key != "a" && key != "b" && key != "power" && key != "rho_c") {
      throw DomainError("unknown density parameter '" + key + "'");
    }
    kv[key] = parse_value(item.substr(eq + 1), rule);
  }
  if (!kv.count("a") || !kv.count("b")) throw DomainError("ellipsoid density needs a and b");
  return ellipsoid(kv["a"], kv["b"], kv["power"], kv["rho_c"]);
}

std::string DensitySpec::describe() const {
  std::ostringstream os;
  if (kind_ == Kind::gridded) {
    os << "gridded(" << field_->grid().nr() << "x" << field_->grid().nz() << ")";
  } else {
    os << "ellipsoid:a=" << a_ << ",b=" << b_ << ",power=" << power_ << ",rho_c=" << rho_c_;
  }
  return os.str();
}

ScalarField DensitySpec::sample(const GridSpec& grid) const {
  if (kind_ == Kind::gridded) {
    if (!(field_->grid() == grid)) throw GridMismatchError("gridded density lives on another grid");
    return *field_;
  }
  const double a2 = a_ * a_, b2 = b_ * b_, p = power_, c = rho_c_;
  return ScalarField::sample(grid, [=](double r, double z) {
    const double m = 1.0 - r * r / a2 - z * z / b2;
    return m > 0.0 ? c * std::pow(m, p) : 0.0;
  });
}

DensityDerivatives DensitySpec::derivatives(const GridSpec& grid) const {
  if (kind_ == Kind::gridded) return numeric_derivatives(sample(grid));
  DensityDerivatives d{sample(grid), ScalarField(grid, Parity::odd), ScalarField(grid), ScalarField(grid),
                       ScalarField(grid), ScalarField(grid, Parity::odd)};
  const double a2 = a_ * a_, b2 = b_ * b_, p = power_, c = rho_c_;
  for (std::size_t i = 0; i < grid.nr(); ++i)
    for (std::size_t j = 0; j < grid.nz(); ++j) {
      const double r = grid.r(i), z = grid.z(j);
      const double m = 1.0 - r * r / a2 - z * z / b2;
      if (!(m > 0.0)) continue;
      const double m1 = c * p * std::pow(m, p - 1.0);
      const double m2 = c * p * (p - 1.0) * std::pow(m, p - 2.0);
      const double mr = -2.0 * r / a2, mz = -2.0 * z / b2;
      d.r(i, j) = m1 * mr;
      d.z(i, j) = m1 * mz;
      d.rr(i, j) = m2 * mr * mr - 2.0 * m1 / a2;
      d.zz(i, j) = m2 * mz * mz - 2.0 * m1 / b2;
      d.rz(i, j) = m2 * mr * mz;
    }
  return d;
}

StarDomain DensitySpec::domain(const GridSpec& grid) const {
  if (kind_ == Kind::gridded) return StarDomain::from_field(sample(grid), 0.0);
  std::vector<double> psi(grid.nr(), 0.0);
  for (std::size_t i = 0; i < grid.nr(); ++i) {
    const double x = grid.r(i) / a_;
    if (x < 1.0) psi[i] = b_ * std::sqrt(1.0 - x * x);
  }
  return {grid, std::move(psi)};
}

bool HypothesisReport::holds(const std::string& name) const {
  return std::find(verdict.begin(), verdict.end(), name) != verdict.end();
}

HypothesisReport check_hypotheses(const DensitySpec& spec, const GridSpec& grid, const PotentialResult& potential,
                                  HypothesisMode mode) {
  require_same_grid(potential.potential, ScalarField(grid));
  const DensityDerivatives d = spec.derivatives(grid);
  const StarDomain dom = spec.domain(grid);
  const ScalarField& rho = d.rho;
  const ScalarField& br = potential.gradient.dr;
  const ScalarField& bz = potential.gradient.dz;
  HypothesisReport rep;
  rep.mode = mode;

  // h1, h2
  rep.h1_min_inside = INFINITY;
  bool outside_zero = true;
  for (std::size_t i = 0; i < grid.nr(); ++i)
    for (std::size_t j = 0; j < grid.nz(); ++j) {
      if (dom.contains(i, j)) rep.h1_min_inside = std::min(rep.h1_min_inside, rho(i, j));
      else outside_zero = outside_zero && rho(i, j) == 0.0;
      rep.h2_asymmetry = std::max(rep.h2_asymmetry, std::abs(rho(i, j) - rho(i, grid.mirror_j(j))));
    }
  rep.h1 = rho.min() >= 0.0 && rep.h1_min_inside > 0.0 && std::isfinite(rep.h1_min_inside) && outside_zero;
  rep.h2 = rep.h2_asymmetry <= 1e-12 * std::max(rho.max_abs(), 1e-300);

  // h3, h4 below the equator
  rep.h3_min = INFINITY;
  rep.h4_min = INFINITY;
  for (std::size_t i = 0; i < grid.nr(); ++i)
    for (std::size_t j = 0; j < grid.nz(); ++j) {
      if (!dom.contains(i, j) || !(grid.z(j) < 0.0)) continue;
      const double h = d.r(i, j) * bz(i, j) - d.z(i, j) * br(i, j);
      rep.h3_min = std::min(rep.h3_min, h);
      rep.h3_scale = std::max(rep.h3_scale, std::abs(h));
      rep.h4_min = std::min(rep.h4_min, d.z(i, j));
    }
  const double h3_tol = 1e-6 * rep.h3_scale;
  for (std::size_t i = 0; i < grid.nr(); ++i)
    for (std::size_t j = 0; j < grid.nz(); ++j) {
      if (!dom.contains(i, j) || !(grid.z(j) < 0.0)) continue;
      const double h = d.r(i, j) * bz(i, j) - d.z(i, j) * br(i, j);
      if (h < -h3_tol) rep.h3_violations.emplace_back(i, j);
    }
  rep.h3 = std::isfinite(rep.h3_min) && rep.h3_violations.empty();
  rep.h4 = std::isfinite(rep.h4_min) && rep.h4_min > 0.0;

  // Equator strip: equatorial radius from the support, pole height psi(0).
  const std::size_t je = equator_row(grid);
  double r_eq = 0.0;
  if (spec.kind() == DensitySpec::Kind::ellipsoid) {
    r_eq = spec.a();
  } else {
    for (std::size_t i = 0; i + 1 < grid.nr(); ++i) {
      if (rho(i, je) > 0.0 && !(rho(i + 1, je) > 0.0)) {
        r_eq = grid.r(i) + grid.hr() * rho(i, je) / (rho(i, je) - rho(i + 1, je));
      }
    }
  }
  rep.strip = {r_eq, 0.1 * r_eq, 0.1 * dom.psi(0)};
  auto in_strip = [&](std::size_t i, std::size_t j) {
    return dom.contains(i, j) && std::abs(grid.z(j)) < rep.strip.z_half_width &&
           std::abs(grid.r(i) - r_eq) < rep.strip.r_half_width;
  };

  rep.ha_equator = -INFINITY;
  rep.ha_prime_max = -INFINITY;
  double rmax_abs = 0.0;
  for (std::size_t i = 0; i < grid.nr(); ++i)
    for (std::size_t j = 0; j < grid.nz(); ++j) rmax_abs = std::max(rmax_abs, std::abs(d.r(i, j)));
  for (std::size_t i = 0; i < grid.nr(); ++i)
    for (std::size_t j = 0; j < grid.nz(); ++j) {
      if (!in_strip(i, j)) continue;
      if (j == je) rep.ha_equator = std::max(rep.ha_equator, d.zz(i, j));
      rep.ha_prime_max = std::max(rep.ha_prime_max, d.r(i, j));
      if (std::abs(grid.z(j)) > 0.5 * grid.hz()) {
        const double ratio = d.z(i, j) != 0.0 ? std::abs(grid.z(j) * d.r(i, j) / d.z(i, j)) : INFINITY;
        rep.ha_dprime_bound = std::max(rep.ha_dprime_bound, ratio);
      }
      if (mode == HypothesisMode::holder) {
        const double zz = d.zz(i, j);
        const double ratio = zz != 0.0 ? std::max(std::abs(d.rz(i, j) / zz), std::abs(d.r(i, j) / zz)) : INFINITY;
        rep.ha_ratio_bound = std::max(rep.ha_ratio_bound, ratio);
      }
    }
  rep.ha = std::isfinite(rep.ha_equator) && rep.ha_equator < 0.0;
  rep.ha_prime = std::isfinite(rep.ha_prime_max) && rep.ha_prime_max <= 1e-9 * rmax_abs;
  rep.ha_dprime = std::isfinite(rep.ha_prime_max) && rep.ha_dprime_bound < kRatioBound;

  if (mode == HypothesisMode::holder) {
    rep.ha_ratio = std::isfinite(rep.ha_prime_max) && rep.ha_ratio_bound < kRatioBound;
    rep.h5_ok = true;
    for (double eps : {0.05, 0.1, 0.2}) {
      double c = 0.0;
      for (std::size_t i = 0; i < grid.nr(); ++i)
        for (std::size_t j = 0; j < grid.nz(); ++j) {
          if (!dom.contains(i, j) || std::abs(grid.z(j)) < eps) continue;
          const double top = std::max({std::abs(d.r(i, j)), std::abs(d.rr(i, j)), std::abs(d.rz(i, j))});
          const double bottom = std::abs(d.z(i, j));
          c = std::max(c, bottom > 0.0 ? top / bottom : (top > 0.0 ? INFINITY : 0.0));
        }
      rep.h5.push_back({eps, c});
      rep.h5_ok = rep.h5_ok && c < kRatioBound;
    }
  }

  auto mark = [&](bool ok, const char* name) {
    if (ok) rep.verdict.emplace_back(name);
  };
  mark(rep.h1, "h1");
  mark(rep.h2, "h2");
  mark(rep.h3, "h3");
  mark(rep.h4, "h4");
  mark(mode == HypothesisMode::holder ? rep.ha_ratio : rep.ha, "a");
  mark(rep.ha_prime, "a'");
  mark(rep.ha_dprime, "a''");
  if (mode == HypothesisMode::holder) mark(rep.h5_ok, "h5");
  return rep;
}

PressureResult pressure_from_density(const DensitySpec& spec, const GridSpec& grid, const PotentialResult& potential) {
  require_same_grid(potential.potential, ScalarField(grid));
  const DensityDerivatives d = spec.derivatives(grid);
  const StarDomain dom = spec.domain(grid);
  const ScalarField& bz = potential.gradient.dz;
  PressureResult out{ScalarField(grid), false};
  for (std::size_t i = 0; i < grid.nr(); ++i)
    for (std::size_t j = 0; j < grid.nz(); ++j)
      if (dom.contains(i, j) && grid.z(j) < 0.0 && !(d.z(i, j) > 0.0)) out.warning = true;
  parallel_for(grid.nr(), [&](std::size_t i) {
    column_integral(dom, i, [&](std::size_t j) { return d.rho(i, j) * bz(i, j); }, 0.0, out.p);
  });
  return out;
}

Omega2Result omega2_from_density(const DensitySpec& spec, const GridSpec& grid, const PotentialResult& potential) {
  require_same_grid(potential.potential, ScalarField(grid));
  const DensityDerivatives d = spec.derivatives(grid);
  const StarDomain dom = spec.domain(grid);
  const ScalarField& br = potential.gradient.dr;
  const ScalarField& bz = potential.gradient.dz;
  const ScalarField& rho = d.rho;

  ScalarField big_f(grid, Parity::odd);
  parallel_for(grid.nr(), [&](std::size_t i) {
    column_integral(dom, i, [&](std::size_t j) { return d.r(i, j) * bz(i, j) - d.z(i, j) * br(i, j); },
                    std::nullopt, big_f);
  });

  const double floor = 1e-9 * rho.max();
  auto usable = [&](std::size_t i, std::size_t j) { return dom.contains(i, j) && rho(i, j) >= floor; };
  Omega2Result out{MaskedField{ScalarField(grid), std::vector<unsigned char>(grid.size(), 0)}, {}, 0.0, 0.0, 0};
  ScalarField& om = out.omega2.values;
  auto set = [&](std::size_t i, std::size_t j, double ratio) {
    om(i, j) = ratio / rho(i, j);
    out.omega2.valid[grid.index(i, j)] = 1;
  };
  const double h = grid.hr();
  for (std::size_t j = 0; j < grid.nz(); ++j) {
    for (std::size_t i = 2; i < grid.nr(); ++i) {
      if (usable(i, j)) set(i, j, big_f(i, j) / grid.r(i));
    }
    // Near the axis F / r comes from the odd expansion F = c1 r + c3 r^3.
    const bool u0 = usable(0, j), u1 = grid.nr() > 1 && usable(1, j);
    if (!u0 && !u1) continue;
    if (usable(2, j) && usable(3, j)) {
      const double f2 = big_f(2, j), f3 = big_f(3, j);
      const double c1 = (27.0 * f2 - 8.0 * f3) / (30.0 * h);
      const double c3 = (f2 - 2.0 * h * c1) / (8.0 * h * h * h);
      if (u0) set(0, j, c1);
      if (u1) set(1, j, c1 + c3 * h * h);
    } else if (u1 && usable(2, j)) {
      const double f1 = big_f(1, j), f2 = big_f(2, j);
      if (u0) set(0, j, (8.0 * f1 - f2) / (6.0 * h));
      set(1, j, f1 / h);
    } else if (u1) {
      if (u0) set(0, j, big_f(1, j) / h);
      set(1, j, big_f(1, j) / h);
    } else {
      ++out.unresolved;
    }
  }

  out.min_value = INFINITY;
  out.max_value = -INFINITY;
  for (std::size_t i = 0; i < grid.nr(); ++i)
    for (std::size_t j = 0; j < grid.nz(); ++j) {
      if (!out.omega2.valid[grid.index(i, j)]) continue;
      out.min_value = std::min(out.min_value, om(i, j));
      out.max_value = std::max(out.max_value, om(i, j));
    }
  if (!std::isfinite(out.min_value)) out.min_value = out.max_value = 0.0;
  const double tol = 1e-6 * std::max(out.max_value, 0.0);
  for (std::size_t i = 0; i < grid.nr(); ++i)
    for (std::size_t j = 0; j < grid.nz(); ++j)
      if (out.omega2.valid[grid.index(i, j)] && om(i, j) < -tol) out.negative.emplace_back(i, j);
  return out;
}

MomentumResidual momentum_residual(const ScalarField& rho, const ScalarField& p, const MaskedField& omega2,
                                   const PotentialResult& potential, const StarDomain& domain) {
  require_same_grid(rho, p);
  require_same_grid(rho, omega2.values);
  require_same_grid(rho, potential.potential);
  const GridSpec& g = rho.grid();
  const Gradient gp = gradient_rz(p);
  const ScalarField& br = potential.gradient.dr;
  const ScalarField& bz = potential.gradient.dz;
  double norm = 0.0;
  for (std::size_t i = 0; i < g.nr(); ++i)
    for (std::size_t j = 0; j < g.nz(); ++j)
      if (domain.contains(i, j)) norm = std::max(norm, rho(i, j) * std::hypot(br(i, j), bz(i, j)));
  MomentumResidual out;
  if (!(norm > 0.0)) return out;
  for (std::size_t i = 0; i < g.nr(); ++i)
    for (std::size_t j = 0; j < g.nz(); ++j) {
      if (!domain.interior(i, j, 1) || !omega2.valid[g.index(i, j)]) continue;
      const double d = rho(i, j);
      out.radial = std::max(out.radial, std::abs(gp.dr(i, j) - d * br(i, j) - d * g.r(i) * omega2.values(i, j)));
      out.axial = std::max(out.axial, std::abs(gp.dz(i, j) - d * bz(i, j)));
    }
  out.radial /= norm;
  out.axial /= norm;
  return out;
}

double curl_closure(const ScalarField& p, const ScalarField& rho, const MaskedField& omega2,
                    const StarDomain& domain) {
  const GridSpec& g = rho.grid();
  MaskedField c = curl_theta_residual(p, rho, omega2.values);
  const Gradient gp = gradient_rz(p);
  const Gradient gr = gradient_rz(rho);
  const double floor = 0.05 * rho.max();
  auto keep = [&](std::size_t i, std::size_t j) {
    if (!domain.interior(i, j, 2) || rho(i, j) < floor) return false;
    // the Omega^2 z-derivative needs valid neighbours
    for (std::size_t jj = j - 1; jj <= j + 1; ++jj)
      if (!omega2.valid[g.index(i, jj)]) return false;
    return true;
  };
  double scale = 0.0;
  for (std::size_t i = 0; i < g.nr(); ++i)
    for (std::size_t j = 1; j + 1 < g.nz(); ++j) {
      if (!keep(i, j)) continue;
      const double d = rho(i, j);
      scale = std::max(scale, std::abs(gp.dz(i, j) * gr.dr(i, j)) / (d * d));
    }
  const double worst = c.max_abs_where([&](std::size_t i, std::size_t j) { return j > 0 && j + 1 < g.nz() && keep(i, j); });
  return scale > 0.0 ? worst / scale : worst;
}

GridSpec inverse_grid(const DensitySpec& spec, std::size_t nr) {
  if (spec.kind() == DensitySpec::Kind::gridded) return spec.field()->grid();
  return GridSpec::square(nr, 1.25 * std::max(spec.a(), spec.b()));
}

double boundary_pressure_ratio(const ScalarField& p, const StarDomain& domain) {
  const GridSpec& g = p.grid();
  const double top = p.max();
  if (!(top > 0.0)) return 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < g.nr(); ++i)
    for (std::size_t j = 0; j < g.nz(); ++j) {
      if (!domain.contains(i, j)) continue;
      const bool edge = (i + 1 >= g.nr() || !domain.contains(i + 1, j)) || (i > 0 && !domain.contains(i - 1, j)) ||
                        j == 0 || !domain.contains(i, j - 1) || j + 1 >= g.nz() || !domain.contains(i, j + 1);
      if (edge) worst = std::max(worst, std::abs(p(i, j)));
    }
  return worst / top;
}

InverseResult run_inverse(const DensitySpec& spec, const GridSpec& grid, HypothesisMode mode,
                          const PotentialResult* potential) {
  ScalarField rho = spec.sample(grid);
  StarDomain dom = spec.domain(grid);
  PotentialResult pot = potential ? *potential : potential_axisym(rho);
  HypothesisReport hyp = check_hypotheses(spec, grid, pot, mode);
  PressureResult pres = pressure_from_density(spec, grid, pot);
  Omega2Result om = omega2_from_density(spec, grid, pot);
  MomentumResidual mom = momentum_residual(rho, pres.p, om.omega2, pot, dom);
  const double curl = curl_closure(pres.p, rho, om.omega2, dom);
  return {std::move(rho), std::move(dom), std::move(pot), std::move(hyp), std::move(pres), std::move(om), mom, curl};
}

}  // namespace rotstar
