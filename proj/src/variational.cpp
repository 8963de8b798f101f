#include "rotstar/variational.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <sstream>

#include "ball_system.hpp"
#include "rotstar/operators.hpp"

namespace rotstar {

namespace {

ScalarField exp_field(const ScalarField& s, double sign) {
  ScalarField out(s.grid());
  for (std::size_t k = 0; k < s.size(); ++k) out[k] = std::exp(sign * s[k]);
  return out;
}

void check_support(const ScalarField& w, const StarDomain& ball) {
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (w[k] < 0.0) throw DomainError("energy: w must be >= 0");
    if (w[k] != 0.0 && !ball.contains(k)) throw DomainError("energy: w must vanish off the ball");
  }
}

}  // namespace

GridSpec ball_grid(std::size_t nr, double radius) {
  if (nr < 8) throw DomainError("ball_grid: need at least 8 radial nodes");
  const double h = radius / static_cast<double>(nr - 3);
  const double extent = static_cast<double>(nr - 1) * h;
  return {nr, 2 * nr - 1, extent, extent};
}

GridSpec ball_grid_with_spacing(double h, double radius) {
  if (!(h > 0.0) || !(radius > 0.0)) throw DomainError("ball_grid_with_spacing: need h, R > 0");
  const auto cells = static_cast<std::size_t>(std::llround(radius / h));
  const std::size_t nr = std::max<std::size_t>(cells + 3, 8);
  const double extent = static_cast<double>(nr - 1) * h;
  return {nr, 2 * nr - 1, extent, extent};
}

EnergyParts energy_parts(const ScalarField& w, const ScalarField& s, const EosParams& eos,
                         const StarDomain& ball) {
  require_same_grid(w, s);
  check_support(w, ball);
  const GridSpec& g = w.grid();
  const double two_pi = 2.0 * std::numbers::pi;
  const double hr = g.hr(), hz = g.hz();
  ScalarField a = exp_field(s, 1.0);

  EnergyParts e;
  for (std::size_t i = 0; i < g.nr(); ++i) {
    const double ring = i == 0 ? two_pi * hr * hr / 8.0 : two_pi * g.r(i) * hr;
    for (std::size_t j = 0; j < g.nz(); ++j) {
      const std::size_t k = g.index(i, j);
      if (i + 1 < g.nr()) {
        const std::size_t kb = g.index(i + 1, j);
        const double d = w[kb] - w[k];
        if (d != 0.0) {
          const double c = two_pi * (g.r(i) + 0.5 * hr) * hz * 0.5 * (a[k] + a[kb]) / hr;
          e.kinetic += 0.5 * c * d * d;
        }
      }
      if (j + 1 < g.nz()) {
        const std::size_t kb = g.index(i, j + 1);
        const double d = w[kb] - w[k];
        if (d != 0.0) {
          const double c = ring * 0.5 * (a[k] + a[kb]) / hz;
          e.kinetic += 0.5 * c * d * d;
        }
      }
      if (w[k] > 0.0) {
        e.potential += node_volume(g, i, j, Quadrature::control_volume) * eos.kconst * std::exp(-s[k]) *
                       std::pow(w[k], eos.q + 1.0) / (eos.q + 1.0);
      }
    }
  }
  return e;
}

double energy(const ScalarField& w, const ScalarField& s, const EosParams& eos, const StarDomain& ball) {
  return energy_parts(w, s, eos, ball).total();
}

double constraint(const ScalarField& w, const ScalarField& f, const StarDomain& ball) {
  require_same_grid(w, f);
  const GridSpec& g = w.grid();
  double n = 0.0;
  for (std::size_t i = 0; i < g.nr(); ++i)
    for (std::size_t j = 0; j < g.nz(); ++j) {
      if (!ball.contains(i, j)) continue;
      const std::size_t k = g.index(i, j);
      n += node_volume(g, i, j, Quadrature::control_volume) * f[k] * w[k];
    }
  return n;
}

double multiplier(const ScalarField& w, const ScalarField& s, const ScalarField& f, const EosParams& eos,
                  const StarDomain& ball) {
  const double n = constraint(w, f, ball);
  if (n == 0.0) throw DegenerateError("multiplier: N(w) = 0");
  const EnergyParts e = energy_parts(w, s, eos, ball);
  return -(2.0 * e.kinetic - (eos.q + 1.0) * e.potential) / n;
}

double el_residual(const ScalarField& w, double lambda, const ScalarField& s, const ScalarField& f,
                   const EosParams& eos, const StarDomain& ball) {
  require_same_grid(w, s);
  require_same_grid(w, f);
  const double wmax = w.max();
  if (!(wmax > 0.0)) throw DegenerateError("el_residual: empty positive set");
  ScalarField lw = div_weighted_grad(w, exp_field(s, 1.0));
  double fmax = 0.0, worst = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (!ball.contains(k)) continue;
    fmax = std::max(fmax, std::abs(f[k]));
    if (!(w[k] > 1e-6 * wmax)) continue;
    const double v = lw[k] + eos.kconst * std::exp(-s[k]) * std::pow(w[k], eos.q) - lambda * f[k];
    worst = std::max(worst, std::abs(v));
  }
  const double scale = std::abs(lambda) * fmax;
  if (!(scale > 0.0)) throw DegenerateError("el_residual: lambda * max f vanishes");
  return worst / scale;
}

bool elementary_inequality_check(double lambda1, double lambda2, double q) {
  if (!(lambda1 >= 0.0 && lambda1 <= 1.0 && lambda2 >= 0.0 && lambda2 <= 1.0)) {
    throw DomainError("elementary_inequality_check: lambdas must lie in [0, 1]");
  }
  if (std::abs(lambda1 + lambda2 - 1.0) > 1e-12) throw DomainError("elementary_inequality_check: lambdas must sum to 1");
  if (!(q > 1.0)) throw DomainError("elementary_inequality_check: q must exceed 1");
  const double lhs = 1.0 - std::pow(lambda1, q + 1.0) - std::pow(lambda2, q + 1.0);
  return lhs >= 2.0 * lambda1 * lambda2 - 1e-14;
}

ScalarField radial_bump(const GridSpec& grid, double radius) {
  return ScalarField::sample(grid, [radius](double r, double z) {
    return std::max(0.0, 1.0 - (r * r + z * z) / (radius * radius));
  });
}

double auto_target_p(const GridSpec& grid, double radius, const ScalarField& s, const ScalarField& f,
                     const EosParams& eos) {
  StarDomain ball = StarDomain::ball(grid, radius);
  ScalarField w0 = radial_bump(grid, radius);
  for (std::size_t k = 0; k < w0.size(); ++k)
    if (!ball.contains(k)) w0[k] = 0.0;
  const double n0 = constraint(w0, f, ball);
  if (!(n0 > 0.0)) throw DegenerateError("auto_target_p: bump has N <= 0");
  w0 *= 1.0 / n0;
  const EnergyParts e = energy_parts(w0, s, eos, ball);
  // E(theta w0) = theta^2 T - theta^{q+1} U
  double theta = 1.0;
  for (int k = 0; k < 400; ++k, theta *= 2.0) {
    if (theta * theta * e.kinetic - std::pow(theta, eos.q + 1.0) * e.potential < 0.0) return theta;
  }
  throw ConvergenceError("auto_target_p: energy stays nonnegative");
}

VariationalReport minimize(const VariationalConfig& config, const ScalarField& s, const ScalarField& f,
                           const EosParams& eos, const std::optional<ScalarField>& initial,
                           const DescentObserver& observer) {
  require_same_grid(s, f);
  if (!(eos.q > 1.0 && eos.q < 3.0)) throw DomainError("minimize: needs 1 < q < 3");
  if (!(config.target_p > 0.0)) throw DomainError("minimize: P must be positive");
  const GridSpec& g = s.grid();
  const double radius = config.ball_radius;
  StarDomain ball = StarDomain::ball(g, radius);
  detail::BallSystem sys = detail::assemble_ball_system(ball, exp_field(s, 1.0));
  const auto n = static_cast<Eigen::Index>(sys.nodes.size());
  const double p = config.target_p;
  const double q = eos.q;

  Eigen::VectorXd vol(n), fv(n), kv(n);
  double fmin = INFINITY, fmax = 0.0;
  for (Eigen::Index a = 0; a < n; ++a) {
    const std::size_t k = sys.nodes[static_cast<std::size_t>(a)];
    vol[a] = sys.volume[static_cast<std::size_t>(a)];
    fv[a] = f[k];
    kv[a] = eos.kconst * std::exp(-s[k]);
    fmin = std::min(fmin, f[k]);
    fmax = std::max(fmax, f[k]);
  }
  if (!(fmin > 0.0)) throw HypothesisViolation("minimize: forcing must satisfy f >= c > 0 on the ball");

  auto n_of = [&](const Eigen::VectorXd& w) { return vol.cwiseProduct(fv).dot(w); };
  auto parts = [&](const Eigen::VectorXd& w) {
    EnergyParts e;
    e.kinetic = 0.5 * w.dot(sys.stiffness * w);
    for (Eigen::Index a = 0; a < n; ++a) {
      if (w[a] > 0.0) e.potential += vol[a] * kv[a] * std::pow(w[a], q + 1.0) / (q + 1.0);
    }
    return e;
  };
  auto project = [&](Eigen::VectorXd w) -> std::optional<Eigen::VectorXd> {
    w = w.cwiseMax(0.0);
    const double nw = n_of(w);
    if (!(nw > 0.0)) return std::nullopt;
    w *= p / nw;
    return w;
  };

  Eigen::VectorXd w(n);
  {
    ScalarField start = initial ? *initial : radial_bump(g, radius);
    require_same_grid(start, s);
    w = sys.gather(start);
  }
  auto projected = project(w);
  if (!projected) throw DegenerateError("minimize: initial iterate has N <= 0");
  w = *projected;

  Eigen::SparseMatrix<double> h = sys.stiffness;
  for (Eigen::Index a = 0; a < n; ++a) h.coeffRef(a, a) += vol[a] / (radius * radius);
  const Eigen::VectorXd normal = vol.cwiseProduct(fv);

  // Two-metric projection: the Sobolev metric acts on the free nodes only,
  // nodes pinned at zero by the sign condition stay put. The factorization
  // is rebuilt only when the pinned set changes.
  std::vector<unsigned char> pinned, cached;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> precond;
  std::vector<Eigen::Index> free_nodes;
  Eigen::VectorXd hnormal;
  double nhn = 0.0;
  auto refactor = [&]() {
    free_nodes.clear();
    std::vector<Eigen::Index> slot(static_cast<std::size_t>(n), -1);
    for (Eigen::Index a = 0; a < n; ++a) {
      if (pinned[static_cast<std::size_t>(a)]) continue;
      slot[static_cast<std::size_t>(a)] = static_cast<Eigen::Index>(free_nodes.size());
      free_nodes.push_back(a);
    }
    const auto m = static_cast<Eigen::Index>(free_nodes.size());
    std::vector<Eigen::Triplet<double>> trips;
    for (Eigen::Index c = 0; c < h.outerSize(); ++c)
      for (Eigen::SparseMatrix<double>::InnerIterator itr(h, c); itr; ++itr) {
        const Eigen::Index r0 = slot[static_cast<std::size_t>(itr.row())];
        const Eigen::Index c0 = slot[static_cast<std::size_t>(itr.col())];
        if (r0 >= 0 && c0 >= 0) trips.emplace_back(r0, c0, itr.value());
      }
    Eigen::SparseMatrix<double> hf(m, m);
    hf.setFromTriplets(trips.begin(), trips.end());
    precond.compute(hf);
    if (precond.info() != Eigen::Success) throw InternalError("minimize: preconditioner factorization failed");
    Eigen::VectorXd nf(m);
    for (Eigen::Index b = 0; b < m; ++b) nf[b] = normal[free_nodes[static_cast<std::size_t>(b)]];
    hnormal = precond.solve(nf);
    nhn = nf.dot(hnormal);
    cached = pinned;
  };

  VariationalReport rep{ScalarField(g)};
  rep.target_p = p;
  auto fill = [&](const Eigen::VectorXd& wv, const EnergyParts& e, double lambda, double el) {
    ScalarField out(g);
    sys.scatter(wv, out);
    rep.solution = std::move(out);
    rep.final_energy = e.total();
    rep.kinetic = e.kinetic;
    rep.potential = e.potential;
    rep.lambda = lambda;
    rep.el_residual = el;
    rep.constraint_value = n_of(wv);
    const double wmax = wv.maxCoeff();
    Eigen::Index pos = 0;
    for (Eigen::Index a = 0; a < n; ++a) pos += wv[a] > 1e-6 * wmax ? 1 : 0;
    rep.positive_set_fraction = static_cast<double>(pos) / static_cast<double>(n);
  };

  EnergyParts e = parts(w);
  rep.energy_history.push_back(e.total());
  rep.constraint_history.push_back(n_of(w));
  double eta = config.step0;
  for (std::size_t it = 0;; ++it) {
    const Eigen::VectorXd aw = sys.stiffness * w;
    Eigen::VectorXd grad = aw;
    for (Eigen::Index a = 0; a < n; ++a) grad[a] -= vol[a] * kv[a] * std::pow(w[a], q);
    const double nw = n_of(w);
    const double lambda = -(2.0 * e.kinetic - (q + 1.0) * e.potential) / nw;
    // Euler-Lagrange defect on the positive set, and the projected gradient
    // (the same defect, plus zero nodes the descent would lift), in units of lambda f.
    const double wmax = w.maxCoeff();
    double el = 0.0, pg = 0.0;
    for (Eigen::Index a = 0; a < n; ++a) {
      const double defect = -grad[a] / vol[a] - lambda * fv[a];
      if (w[a] > 0.0) pg = std::max(pg, std::abs(defect));
      else pg = std::max(pg, defect);
      if (w[a] > 1e-6 * wmax) el = std::max(el, std::abs(defect));
    }
    const double unit = std::max(std::abs(lambda) * fmax, 1e-300);
    el /= unit;
    pg /= unit;
    rep.iterations = it;
    if (pg <= config.grad_tol) {
      fill(w, e, lambda, el);
      rep.converged = true;
      return rep;
    }
    if (it >= config.max_iters) {
      fill(w, e, lambda, el);
      return rep;
    }

    // Multiplier estimate -lambda for the tangential gradient sign test.
    pinned.assign(static_cast<std::size_t>(n), 0);
    for (Eigen::Index a = 0; a < n; ++a) {
      pinned[static_cast<std::size_t>(a)] = w[a] == 0.0 && grad[a] + lambda * normal[a] > 0.0 ? 1 : 0;
    }
    if (pinned != cached) refactor();
    const auto m = static_cast<Eigen::Index>(free_nodes.size());
    Eigen::VectorXd gf(m);
    for (Eigen::Index b = 0; b < m; ++b) gf[b] = grad[free_nodes[static_cast<std::size_t>(b)]];
    Eigen::VectorXd df = precond.solve(gf);
    Eigen::VectorXd nf(m);
    for (Eigen::Index b = 0; b < m; ++b) nf[b] = normal[free_nodes[static_cast<std::size_t>(b)]];
    df -= (nf.dot(df) / nhn) * hnormal;
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(n);
    for (Eigen::Index b = 0; b < m; ++b) dir[free_nodes[static_cast<std::size_t>(b)]] = df[b];
    int fails = 0;
    for (;;) {
      auto trial = project(w - eta * dir);
      if (trial) {
        const double slope = grad.dot(*trial - w);
        const EnergyParts et = parts(*trial);
        if (slope < 0.0 && et.total() <= e.total() + 1e-4 * slope) {
          w = std::move(*trial);
          e = et;
          break;
        }
      }
      eta *= 0.5;
      if (++fails >= 50) {
        fill(w, e, lambda, el);
        std::ostringstream os;
        os << "minimize: line search failed 50 times at iteration " << it << " (EL residual " << el << ")";
        throw StagnationError(os.str(), rep);
      }
    }
    rep.energy_history.push_back(e.total());
    rep.constraint_history.push_back(n_of(w));
    if (observer) observer(it, e.total(), rep.constraint_history.back(), eta);
    eta = std::min(2.0 * eta, 1e8);
  }
}

std::vector<ContinuationStage> domain_continuation(
    double spacing, const std::vector<double>& radii, double target_p,
    const std::function<double(double, double)>& entropy, const std::function<double(double, double)>& forcing,
    const EosParams& eos, const VariationalConfig& base, const DescentObserver& observer) {
  std::vector<ContinuationStage> out;
  std::optional<ScalarField> previous;
  for (double radius : radii) {
    GridSpec g = ball_grid_with_spacing(spacing, radius);
    const double snapped = static_cast<double>(g.nr() - 3) * spacing;
    ScalarField s = ScalarField::sample(g, entropy);
    ScalarField f = ScalarField::sample(g, forcing);
    std::optional<ScalarField> start;
    if (previous) {
      // Same spacing and centred z nodes: the old grid embeds node for node.
      const GridSpec& pg = previous->grid();
      ScalarField emb(g);
      const std::size_t off = (g.nz() - pg.nz()) / 2;
      for (std::size_t i = 0; i < pg.nr(); ++i)
        for (std::size_t j = 0; j < pg.nz(); ++j) emb(i, j + off) = (*previous)(i, j);
      start = std::move(emb);
    }
    VariationalConfig cfg = base;
    cfg.ball_radius = snapped;
    cfg.target_p = target_p;
    VariationalReport rep = minimize(cfg, s, f, eos, start, observer);

    StarDomain ball = StarDomain::ball(g, snapped);
    double tail = 0.0;
    for (std::size_t i = 0; i < g.nr(); ++i)
      for (std::size_t j = 0; j < g.nz(); ++j) {
        if (!ball.contains(i, j)) continue;
        if (std::hypot(g.r(i), g.z(j)) < 0.5 * snapped) continue;
        tail += node_volume(g, i, j, Quadrature::control_volume) * f(i, j) * rep.solution(i, j);
      }
    tail /= rep.constraint_value;

    double diff = 0.0;
    if (!out.empty()) {
      const ScalarField& w0 = out.front().report.solution;
      const GridSpec& g0 = w0.grid();
      const std::size_t off = (g.nz() - g0.nz()) / 2;
      for (std::size_t i = 0; i < g0.nr(); ++i)
        for (std::size_t j = 0; j < g0.nz(); ++j)
          diff = std::max(diff, std::abs(rep.solution(i, j + off) - w0(i, j)));
      diff /= std::max(w0.max(), 1e-300);
    }
    previous = rep.solution;
    out.push_back({snapped, std::move(rep), tail, diff});
  }
  return out;
}

}  // namespace rotstar
