#include "rotstar/monotone.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <cmath>
#include <sstream>

#include "ball_system.hpp"
#include "rotstar/operators.hpp"

namespace rotstar {

namespace {

struct RadialProfile {
  std::vector<double> r, u, du;
  std::optional<double> zero;
  bool turned = false;  // u' reached 0 while u > 0

  double at(double x) const {
    if (x <= 0.0) return u.front();
    const double h = r[1] - r[0];
    std::size_t k = std::min(static_cast<std::size_t>(x / h), r.size() - 2);
    while (k + 2 < r.size() && r[k + 1] < x) ++k;
    while (k > 0 && r[k] > x) --k;
    const double d = r[k + 1] - r[k];
    const double t = (x - r[k]) / d;
    const double h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
    const double h10 = t * (1.0 - t) * (1.0 - t);
    const double h01 = t * t * (3.0 - 2.0 * t);
    const double h11 = t * t * (t - 1.0);
    return h00 * u[k] + h10 * d * du[k] + h01 * u[k + 1] + h11 * d * du[k + 1];
  }
};

// u'' + (2/r) u' + a1 u_+^q - a2 = 0 by RK4 with n steps up to r_limit.
RadialProfile shoot(double u0, double a1, double a2, double q, double r_limit, bool keep) {
  const std::size_t n = 40000;
  const double h = r_limit / static_cast<double>(n);
  auto acc = [&](double r, double u, double du) {
    return a2 - a1 * std::pow(std::max(u, 0.0), q) - 2.0 * du / r;
  };
  RadialProfile p;
  const double c = a2 - a1 * std::pow(u0, q);
  double r = h, u = u0 + c * h * h / 6.0, du = c * h / 3.0;
  if (keep) {
    p.r = {0.0, r};
    p.u = {u0, u};
    p.du = {0.0, du};
  }
  auto step = [&](double r0, double u0_, double v0, double hh, double& u1, double& v1) {
    const double k1u = v0, k1v = acc(r0, u0_, v0);
    const double k2u = v0 + 0.5 * hh * k1v, k2v = acc(r0 + 0.5 * hh, u0_ + 0.5 * hh * k1u, k2u);
    const double k3u = v0 + 0.5 * hh * k2v, k3v = acc(r0 + 0.5 * hh, u0_ + 0.5 * hh * k2u, k3u);
    const double k4u = v0 + hh * k3v, k4v = acc(r0 + hh, u0_ + hh * k3u, k4u);
    u1 = u0_ + hh / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    v1 = v0 + hh / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  };
  for (std::size_t k = 1; k < n; ++k) {
    double un, vn;
    step(r, u, du, h, un, vn);
    if (un <= 0.0) {
      double lo = 0.0, hi = h;
      for (int it = 0; it < 200 && hi - lo > 1e-15 * r; ++it) {
        const double mid = 0.5 * (lo + hi);
        double um, vm;
        step(r, u, du, mid, um, vm);
        (um > 0.0 ? lo : hi) = mid;
      }
      double ue, ve;
      step(r, u, du, hi, ue, ve);
      p.zero = r + hi;
      if (keep) {
        p.r.push_back(r + hi);
        p.u.push_back(0.0);
        p.du.push_back(ve);
      }
      return p;
    }
    if (vn >= 0.0) {
      p.turned = true;
      return p;
    }
    r += h;
    u = un;
    du = vn;
    if (keep) {
      p.r.push_back(r);
      p.u.push_back(u);
      p.du.push_back(du);
    }
  }
  return p;
}

using CG = Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper>;

Eigen::VectorXd cg_solve(CG& cg, const Eigen::VectorXd& rhs, const char* what) {
  Eigen::VectorXd x = cg.solve(rhs);
  if (cg.info() != Eigen::Success) {
    throw ConvergenceError(std::string(what) + ": conjugate gradients did not reach 1e-10");
  }
  return x;
}

ScalarField exp_field(const ScalarField& s, double sign) {
  ScalarField out(s.grid());
  for (std::size_t k = 0; k < s.size(); ++k) out[k] = std::exp(sign * s[k]);
  return out;
}

}  // namespace

MonotoneConfig MonotoneConfig::from_fields(const ScalarField& s, const ScalarField& f,
                                           const EosParams& eos) {
  require_same_grid(s, f);
  double kmin = INFINITY, fmax = -INFINITY;
  for (std::size_t k = 0; k < s.size(); ++k) {
    kmin = std::min(kmin, eos.kconst * std::exp(-2.0 * s[k]));
    fmax = std::max(fmax, std::exp(-s[k]) * f[k]);
  }
  MonotoneConfig c;
  c.a1 = 0.95 * kmin;
  c.a2 = std::max(1.1 * fmax, 0.0) + 0.01 * c.a1;
  return c;
}

double subsolution_energy(double t, double a1, double a2, double q) {
  return a1 * std::pow(t, q + 1.0) / (q + 1.0) - a2 * t;
}

std::optional<double> shooting_radius(double u0, double a1, double a2, double q, double r_limit) {
  return shoot(u0, a1, a2, q, r_limit, false).zero;
}

Subsolution build_subsolution(const MonotoneConfig& config, const EosParams& eos, const ScalarField& s,
                              const ScalarField& f) {
  require_same_grid(s, f);
  const double q = eos.q;
  if (!(q > 0.0 && q < 1.0)) throw DomainError("build_subsolution: needs 0 < q < 1");
  if (!(config.a1 > 0.0) || !(config.a2 > 0.0)) throw DomainError("build_subsolution: A1, A2 must be > 0");
  const GridSpec& g = s.grid();
  const double extent = std::min(g.rmax(), g.zmax());
  const double h = std::max(g.hr(), g.hz());
  double radius = config.ball_radius_hint.value_or(0.8 * extent);
  radius = std::round(radius / g.hr()) * g.hr();
  if (!(radius > 4.0 * h) || radius > extent - 2.0 * h) {
    throw DomainError("build_subsolution: ball radius must fit inside the grid with two spare layers");
  }
  StarDomain ball = StarDomain::ball(g, radius);

  // The radial argument needs x . grad s <= 0 on the ball.
  Gradient gs = gradient_rz(s);
  const double slack = 1e-12 * (1.0 + s.max_abs()) * radius;
  for (std::size_t i = 0; i < g.nr(); ++i)
    for (std::size_t j = 0; j < g.nz(); ++j) {
      if (!ball.contains(i, j)) continue;
      if (g.r(i) * gs.dr(i, j) + g.z(j) * gs.dz(i, j) > slack) {
        std::ostringstream os;
        os << "entropy violates x . grad s <= 0 at (r, z) = (" << g.r(i) << ", " << g.z(j) << ")";
        throw HypothesisViolation(os.str());
      }
    }

  const double a1 = config.a1, a2 = config.a2;
  const double tstar = std::pow((q + 1.0) * a2 / a1, 1.0 / q);
  const double limit = 2.0 * radius;
  // Still falling at the limit counts as reaching the ball radius.
  auto reaches = [&](double u0) {
    RadialProfile p = shoot(u0, a1, a2, q, limit, false);
    if (p.zero) return *p.zero >= radius;
    return !p.turned;
  };
  // Scan down from a huge central value; the first-zero radius grows with u0
  // on the upper branch, so the bracket sits where reachability switches.
  double hi = 0.0, lo = 0.0;
  bool found = false;
  for (int k = 160; k >= 0; --k) {
    const double u0 = tstar * (1.0 + 1e-6) * std::pow(2.0, 0.5 * k);
    if (!reaches(u0)) {
      lo = u0;
      hi = tstar * (1.0 + 1e-6) * std::pow(2.0, 0.5 * (k + 1));
      found = k < 160;
      break;
    }
  }
  if (!found) throw ConvergenceError("build_subsolution: no central value places the first zero on the ball");
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (reaches(mid) ? hi : lo) = mid;
  }
  RadialProfile prof = shoot(hi, a1, a2, q, limit, true);
  if (!prof.zero) throw ConvergenceError("build_subsolution: shooting lost the zero crossing");

  ScalarField u(g);
  for (std::size_t i = 0; i < g.nr(); ++i)
    for (std::size_t j = 0; j < g.nz(); ++j) {
      if (!ball.contains(i, j)) continue;
      // Stretch the profile so its zero sits exactly on the ball radius.
      const double x = std::hypot(g.r(i), g.z(j)) * (*prof.zero / radius);
      u(i, j) = std::max(prof.at(x), 0.0);
    }

  ScalarField res = div_weighted_grad(u, exp_field(s, 1.0));
  double min_res = INFINITY;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!ball.contains(k)) continue;
    res[k] += eos.kconst * std::exp(-s[k]) * std::pow(u[k], q) - f[k];
    min_res = std::min(min_res, res[k]);
  }
  if (min_res < -1e-9 * (1.0 + a2 + a1 * std::pow(hi, q))) {
    std::ostringstream os;
    os << "build_subsolution: discrete subsolution inequality fails (min residual " << min_res
       << "); refine the grid";
    throw ConvergenceError(os.str());
  }
  return {radius, hi, tstar, std::move(u), min_res};
}

double truncated_power(double t, double c, double q) {
  if (t >= c) return std::pow(t, q);
  if (t <= 0.0) return 0.0;
  const double x = t / c;
  return std::pow(c, q) * x * x * ((3.0 - q) + (q - 2.0) * x);
}

double truncated_power_slope(double t, double c, double q) {
  if (t >= c) return q * std::pow(t, q - 1.0);
  if (t <= 0.0) return 0.0;
  const double x = t / c;
  return std::pow(c, q - 1.0) * x * (2.0 * (3.0 - q) + 3.0 * (q - 2.0) * x);
}

Supersolution build_supersolution(const Subsolution& sub, const ScalarField& s, const ScalarField& f,
                                  const EosParams& eos, double tol) {
  require_same_grid(sub.field, s);
  require_same_grid(sub.field, f);
  const GridSpec& g = s.grid();
  StarDomain ball = StarDomain::ball(g, sub.radius);
  detail::BallSystem sys = detail::assemble_ball_system(ball, exp_field(s, 1.0));
  const auto n = static_cast<Eigen::Index>(sys.nodes.size());

  const double c = sub.field.max();
  double m = 0.0;
  for (std::size_t k : sys.nodes) m = std::max(m, std::abs(f[k]));

  CG cg;
  cg.setTolerance(1e-10);
  cg.compute(sys.stiffness);

  Eigen::VectorXd u = Eigen::VectorXd::Zero(n), rhs(n);
  double prev = INFINITY;
  int slow = 0;
  std::size_t sweeps = 0;
  for (;; ++sweeps) {
    if (sweeps > 10000) throw ConvergenceError("build_supersolution: Picard iteration did not settle");
    for (Eigen::Index a = 0; a < n; ++a) {
      const std::size_t k = sys.nodes[static_cast<std::size_t>(a)];
      rhs[a] = sys.volume[static_cast<std::size_t>(a)] *
               (eos.kconst * std::exp(-s[k]) * truncated_power(u[a] + c, c, eos.q) + m);
    }
    Eigen::VectorXd next = cg_solve(cg, rhs, "build_supersolution");
    const double change = (next - u).lpNorm<Eigen::Infinity>();
    u = std::move(next);
    if (change <= tol * std::max(1.0, u.lpNorm<Eigen::Infinity>())) break;
    slow = change > 0.99 * prev ? slow + 1 : 0;
    if (slow >= 20) throw ConvergenceError("build_supersolution: Picard stagnation (< 1% reduction for 20 sweeps)");
    prev = change;
  }

  ScalarField bar = ScalarField::constant(g, c);
  for (Eigen::Index a = 0; a < n; ++a) bar[sys.nodes[static_cast<std::size_t>(a)]] = u[a] + c;

  ScalarField res = div_weighted_grad(bar, exp_field(s, 1.0));
  double worst = -INFINITY;
  for (std::size_t k : sys.nodes) {
    const double v = res[k] + eos.kconst * std::exp(-s[k]) * std::pow(bar[k], eos.q) - f[k];
    worst = std::max(worst, v);
    if (bar[k] < sub.field[k]) throw InternalError("build_supersolution: supersolution below subsolution");
  }
  const double scale = 1.0 + m + eos.kconst * std::pow(bar.max(), eos.q) * std::exp(-s.min());
  if (worst > 1e-6 * scale) {
    throw ConvergenceError("build_supersolution: discrete supersolution inequality fails");
  }
  return {std::move(bar), c, m, sweeps + 1, worst};
}

double semilinear_residual(const ScalarField& w, const StarDomain& domain, const ScalarField& s,
                           const ScalarField& f, const EosParams& eos, double lambda) {
  ScalarField lw = div_weighted_grad(w, exp_field(s, 1.0));
  double worst = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (!domain.contains(k)) continue;
    const double v = lw[k] + eos.kconst * std::exp(-s[k]) * std::pow(std::max(w[k], 0.0), eos.q) - lambda * f[k];
    worst = std::max(worst, std::abs(v));
  }
  return worst;
}

MonotoneReport monotone_solve(const ScalarField& sub, const ScalarField& super, const StarDomain& ball,
                              const ScalarField& s, const ScalarField& f, const EosParams& eos,
                              const MonotoneConfig& config, const SweepObserver& observer) {
  require_same_grid(sub, super);
  require_same_grid(sub, s);
  require_same_grid(sub, f);
  if (!(config.shift >= 0.0)) throw DomainError("monotone_solve: shift must be >= 0");
  const GridSpec& g = sub.grid();
  detail::BallSystem sys = detail::assemble_ball_system(ball, exp_field(s, 1.0));
  const auto n = static_cast<Eigen::Index>(sys.nodes.size());

  MonotoneReport rep{ScalarField(g)};
  rep.shift = config.shift;
  double tmin = INFINITY;
  for (std::size_t k : sys.nodes) {
    if (sub[k] > super[k]) throw DomainError("monotone_solve: subsolution exceeds supersolution");
    rep.bracket_gap = std::max(rep.bracket_gap, super[k] - sub[k]);
    if (sub[k] > 0.0) tmin = std::min(tmin, sub[k]);
  }
  const double emax = std::exp(-s.min());
  rep.shift_bound = std::isfinite(tmin) ? eos.q * eos.kconst * emax * std::pow(tmin, eos.q - 1.0) : 0.0;

  // w_k outside the ball is 0.
  ScalarField w(g);
  sys.scatter(sys.gather(sub), w);
  auto finish = [&](bool converged) {
    rep.converged = converged;
    rep.final_residual = rep.residual_history.back();
    rep.positive = true;
    for (std::size_t k : sys.nodes) rep.positive = rep.positive && w[k] > 0.0;
    rep.solution = w;
    return rep;
  };

  if (rep.bracket_gap == 0.0) {
    rep.residual_history.push_back(semilinear_residual(w, ball, s, f, eos));
    return finish(true);
  }

  Eigen::SparseMatrix<double> op = sys.stiffness;
  if (config.shift > 0.0) {
    for (Eigen::Index a = 0; a < n; ++a) op.coeffRef(a, a) += config.shift * sys.volume[static_cast<std::size_t>(a)];
  }
  CG cg;
  cg.setTolerance(1e-10);
  cg.compute(op);

  const Eigen::VectorXd sup = sys.gather(super);
  const double bracket_slack = 1e-10 * std::max(1.0, sup.lpNorm<Eigen::Infinity>());
  Eigen::VectorXd wv = sys.gather(w), rhs(n);
  double last_increment = INFINITY;
  for (std::size_t it = 0;; ++it) {
    // R_k = L w_k + K e^{-s} w_k^q - f on the ball, L w = -(A w) / V.
    Eigen::VectorXd aw = sys.stiffness * wv;
    double res = 0.0;
    for (Eigen::Index a = 0; a < n; ++a) {
      const std::size_t k = sys.nodes[static_cast<std::size_t>(a)];
      const double vol = sys.volume[static_cast<std::size_t>(a)];
      const double r = -aw[a] / vol + eos.kconst * std::exp(-s[k]) * std::pow(std::max(wv[a], 0.0), eos.q) - f[k];
      res = std::max(res, std::abs(r));
      rhs[a] = vol * r;
    }
    rep.residual_history.push_back(res);
    rep.iterations = it;
    if (last_increment <= config.tol && res <= 10.0 * config.tol) break;
    if (it >= config.max_iters) {
      sys.scatter(wv, w);
      std::ostringstream os;
      os << "monotone_solve: no convergence in " << config.max_iters << " sweeps (residual " << res << ")";
      throw ConvergenceError(os.str());
    }

    Eigen::VectorXd delta = cg_solve(cg, rhs, "monotone_solve");
    const double floor = -1e-10 * std::max(1.0, wv.lpNorm<Eigen::Infinity>());
    if (delta.minCoeff() < floor) {
      std::ostringstream os;
      os << "monotone_solve: iterate decreased by " << -delta.minCoeff() << "; shift too small, try "
         << rep.shift_bound;
      throw ConvergenceError(os.str());
    }
    wv += delta;
    for (Eigen::Index a = 0; a < n; ++a) {
      if (wv[a] > sup[a] + bracket_slack) throw InternalError("monotone_solve: iterate left the bracket");
    }
    last_increment = delta.lpNorm<Eigen::Infinity>();
    rep.increment_history.push_back(last_increment);
    if (observer) observer(it, res, last_increment);
  }
  sys.scatter(wv, w);
  return finish(true);
}

}  // namespace rotstar
