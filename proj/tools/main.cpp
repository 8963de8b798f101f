#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "config.hpp"
#include "json.hpp"
#include "rotstar/axifield.hpp"
#include "rotstar/eos.hpp"
#include "rotstar/gravity.hpp"
#include "rotstar/inverse.hpp"
#include "rotstar/lane_emden.hpp"
#include "rotstar/monotone.hpp"
#include "rotstar/rotation.hpp"
#include "rotstar/variational.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace rotstar;
using rotstar::cli::Config;
using rotstar::cli::ConfigError;

namespace {

constexpr int kOk = 0;
constexpr int kMalformed = 1;
constexpr int kHypothesis = 2;
constexpr int kConvergence = 3;

// ---------------------------------------------------------------------------
// Entropy rules: constant:<v>, quadratic:<c> (s = c (r^2 + z^2)), file:<path>.
// The values are physical entropies; solvers get alpha * s.

struct EntropyRule {
  std::function<double(double, double)> fn;
  std::optional<ScalarField> samples;

  static EntropyRule parse(const std::string& rule) {
    const auto colon = rule.find(':');
    if (colon == std::string::npos) throw ConfigError("entropy rule needs a kind: '" + rule + "'");
    const std::string kind = rule.substr(0, colon), arg = rule.substr(colon + 1);
    EntropyRule e;
    if (kind == "file") {
      e.samples = read_axifield(fs::path(arg));
      return e;
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(arg, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != arg.size() || !std::isfinite(v)) throw ConfigError("bad number in entropy rule '" + rule + "'");
    if (kind == "constant") {
      e.fn = [v](double, double) { return v; };
    } else if (kind == "quadratic") {
      e.fn = [v](double r, double z) { return v * (r * r + z * z); };
    } else {
      throw ConfigError("unknown entropy rule '" + kind + "'");
    }
    return e;
  }

  ScalarField sample(const GridSpec& g) const {
    if (samples) {
      if (!(samples->grid() == g)) throw ConfigError("entropy file lives on another grid");
      return *samples;
    }
    return ScalarField::sample(g, fn);
  }
};

// ---------------------------------------------------------------------------
// Output helpers.

class Report {
 public:
  explicit Report(const fs::path& path) : out_(path) {
    if (!out_) throw ConfigError("cannot write " + path.string());
  }
  void line(const json& j) { out_ << j.dump() << '\n' << std::flush; }

 private:
  std::ofstream out_;
};

json header(const Config& cfg) {
  return {{"type", "config"}, {"seed", cfg.integer("run.seed")}, {"config", cfg.to_json()}};
}

json summary(const Config& cfg) {
  return {{"type", "summary"},
          {"command", cfg.str("run.command")},
          {"seed", cfg.integer("run.seed")},
          {"config", cfg.to_json()}};
}

json grid_json(const GridSpec& g) {
  return {{"nr", g.nr()}, {"nz", g.nz()}, {"rmax", g.rmax()}, {"zmax", g.zmax()}};
}

// Equator row and axis column of each field, one CSV with a header row.
void write_profiles(const fs::path& path, const std::vector<std::pair<std::string, const ScalarField*>>& fields) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  const GridSpec& g = fields.front().second->grid();
  out << "profile,coord";
  for (const auto& f : fields) out << ',' << f.first;
  out << '\n' << std::setprecision(17);
  std::size_t jeq = 0;
  for (std::size_t j = 1; j < g.nz(); ++j)
    if (std::abs(g.z(j)) < std::abs(g.z(jeq))) jeq = j;
  for (std::size_t i = 0; i < g.nr(); ++i) {
    out << "equator," << g.r(i);
    for (const auto& f : fields) out << ',' << (*f.second)(i, jeq);
    out << '\n';
  }
  for (std::size_t j = 0; j < g.nz(); ++j) {
    out << "axis," << g.z(j);
    for (const auto& f : fields) out << ',' << (*f.second)(0, j);
    out << '\n';
  }
}

std::size_t positive_nodes(const ScalarField& w) {
  const double floor = 1e-6 * w.max();
  std::size_t n = 0;
  for (double v : w.values())
    if (v > floor) ++n;
  return n;
}

EosParams checked_eos(const Config& cfg, Regime want) {
  const double gamma = cfg.number("eos.gamma");
  EosParams eos = derived_constants(gamma);
  if (eos.regime != want) {
    throw ConfigError("gamma = " + cfg.str("eos.gamma") + " is in the " + to_string(eos.regime) +
                      " regime; '" + cfg.str("run.command") + "' needs the " + to_string(want) + " regime");
  }
  return eos;
}

std::size_t grid_nodes(const Config& cfg) {
  const long nr = cfg.integer("grid.nr");
  if (nr < 9) throw ConfigError("grid.nr must be at least 9");
  return static_cast<std::size_t>(nr);
}

// ---------------------------------------------------------------------------
// Commands.

void defaults_monotone(Config& c) {
  c.set_default("entropy.rule", "quadratic:-0.1");
  c.set_default("rotation.rule", "rigid-squared:0.05");
  c.set_default("grid.nr", "65");
  c.set_default("grid.extent", "2");
  c.set_default("ball.radius", "auto");
  c.set_default("tolerances.tol", "1e-8");
  c.set_default("tolerances.max_iters", "20000");
}

int solve_monotone(const Config& cfg, const fs::path& dir) {
  const EosParams eos = checked_eos(cfg, Regime::monotone);
  const GridSpec g = GridSpec::square(grid_nodes(cfg), cfg.number("grid.extent"));
  const ScalarField s_phys = EntropyRule::parse(cfg.str("entropy.rule")).sample(g);
  const ScalarField s = effective_entropy(s_phys, eos);
  const RotationProfile rot = RotationProfile::parse(cfg.str("rotation.rule"));
  const ScalarField f = rot.forcing(g);

  MonotoneConfig mc = MonotoneConfig::from_fields(s, f, eos);
  mc.tol = cfg.number("tolerances.tol");
  mc.max_iters = static_cast<std::size_t>(cfg.integer("tolerances.max_iters"));
  if (cfg.str("ball.radius") != "auto") mc.ball_radius_hint = cfg.number("ball.radius");

  Report rep(dir / "report.jsonl");
  rep.line(header(cfg));
  const Subsolution sub = build_subsolution(mc, eos, s, f);
  const Supersolution sup = build_supersolution(sub, s, f, eos);
  const StarDomain ball = StarDomain::ball(g, sub.radius);
  MonotoneReport mr = monotone_solve(sub.field, sup.field, ball, s, f, eos, mc,
                                     [&](std::size_t k, double res, double inc) {
                                       rep.line({{"type", "iteration"}, {"iteration", k}, {"residual", res}, {"increment", inc}});
                                     });
  const ScalarField rho = w_to_rho(mr.solution, s_phys, eos);
  write_axifield(dir / "solution.axifield", mr.solution);
  write_axifield(dir / "density.axifield", rho);
  write_profiles(dir / "profiles.csv", {{"w", &mr.solution}, {"rho", &rho}});

  json sm = summary(cfg);
  sm["grid"] = grid_json(g);
  sm["ball_radius"] = sub.radius;
  sm["a1"] = mc.a1;
  sm["a2"] = mc.a2;
  sm["shift"] = mr.shift;
  sm["shift_bound"] = mr.shift_bound;
  sm["iterations"] = mr.iterations;
  sm["final_residual"] = mr.final_residual;
  sm["bracket_gap"] = mr.bracket_gap;
  sm["positive"] = mr.positive;
  sm["converged"] = mr.converged;
  rep.line(sm);
  std::cout << "solve-monotone: radius " << sub.radius << ", " << mr.iterations << " sweeps, residual "
            << mr.final_residual << (mr.converged ? "" : " (not converged)") << '\n';
  return mr.converged ? kOk : kConvergence;
}

void defaults_variational(Config& c) {
  c.set_default("entropy.rule", "constant:0");
  c.set_default("rotation.rule", "rigid-squared:1");
  c.set_default("grid.nr", "65");
  c.set_default("ball.radius", "4");
  c.set_default("variational.p", "auto");
  c.set_default("tolerances.grad_tol", "1e-4");
  c.set_default("tolerances.max_iters", "20000");
}

VariationalConfig variational_config(const Config& cfg, double radius) {
  VariationalConfig vc;
  vc.ball_radius = radius;
  vc.grad_tol = cfg.number("tolerances.grad_tol");
  vc.max_iters = static_cast<std::size_t>(cfg.integer("tolerances.max_iters"));
  return vc;
}

json variational_json(const VariationalReport& r) {
  return {{"target_p", r.target_p},
          {"energy", r.final_energy},
          {"kinetic", r.kinetic},
          {"potential", r.potential},
          {"lambda", r.lambda},
          {"el_residual", r.el_residual},
          {"constraint", r.constraint_value},
          {"positive_set_fraction", r.positive_set_fraction},
          {"support_nodes", positive_nodes(r.solution)},
          {"iterations", r.iterations},
          {"converged", r.converged}};
}

int solve_variational(const Config& cfg, const fs::path& dir) {
  const EosParams eos = checked_eos(cfg, Regime::variational);
  const double radius = cfg.number("ball.radius");
  const GridSpec g = ball_grid(grid_nodes(cfg), radius);
  const ScalarField s_phys = EntropyRule::parse(cfg.str("entropy.rule")).sample(g);
  const ScalarField s = effective_entropy(s_phys, eos);
  const RotationProfile rot = RotationProfile::parse(cfg.str("rotation.rule"));
  const ScalarField f = rot.forcing(g);

  VariationalConfig vc = variational_config(cfg, radius);
  const bool auto_p = cfg.str("variational.p") == "auto";
  vc.target_p = auto_p ? auto_target_p(g, radius, s, f, eos) : cfg.number("variational.p");

  Report rep(dir / "report.jsonl");
  rep.line(header(cfg));
  std::optional<VariationalReport> result;
  try {
    result = minimize(vc, s, f, eos, std::nullopt, [&](std::size_t k, double e, double n, double step) {
      rep.line({{"type", "iteration"}, {"iteration", k}, {"energy", e}, {"constraint", n}, {"step", step}});
    });
  } catch (const StagnationError& err) {
    std::cerr << "solve-variational: " << err.what() << '\n';
    result = err.report;
  }
  const VariationalReport& vr = *result;
  const ScalarField rho = w_to_rho(vr.solution, s_phys, eos);
  write_axifield(dir / "solution.axifield", vr.solution);
  write_axifield(dir / "density.axifield", rho);
  write_profiles(dir / "profiles.csv", {{"w", &vr.solution}, {"rho", &rho}});

  json sm = summary(cfg);
  sm["grid"] = grid_json(g);
  sm["auto_p"] = auto_p;
  const json vj = variational_json(vr);
  for (const auto& [k, v] : vj.items()) sm[k] = v;
  rep.line(sm);
  std::cout << "solve-variational: P " << vr.target_p << ", energy " << vr.final_energy << ", lambda " << vr.lambda
            << ", support " << positive_nodes(vr.solution) << " nodes" << (vr.converged ? "" : " (not converged)")
            << '\n';
  if (!vr.converged) return kConvergence;
  // lambda > 0 is what "P large enough" buys; report the opposite as a failed hypothesis.
  return vr.lambda > 0.0 ? kOk : kHypothesis;
}

void defaults_continuation(Config& c) {
  defaults_variational(c);
  if (!c.has("variational.radii")) {
    const double r = c.number("ball.radius");
    std::ostringstream os;
    os << std::setprecision(17) << r << ',' << 2 * r << ',' << 4 * r;
    c.set("variational.radii", os.str());
  }
}

int continuation(const Config& cfg, const fs::path& dir) {
  const EosParams eos = checked_eos(cfg, Regime::variational);
  const std::vector<double> radii = cfg.numbers("variational.radii");
  if (radii.empty()) throw ConfigError("variational.radii is empty");
  const EntropyRule ent = EntropyRule::parse(cfg.str("entropy.rule"));
  if (ent.samples) throw ConfigError("continuation needs an entropy rule, not a file");
  const RotationProfile rot = RotationProfile::parse(cfg.str("rotation.rule"));
  if (rot.kind() == RotationProfile::Kind::sampled) throw ConfigError("continuation needs a rotation rule, not a file");

  const GridSpec g0 = ball_grid(grid_nodes(cfg), radii.front());
  const double spacing = g0.hr();
  const double alpha = eos.alpha;
  auto entropy = [&](double r, double z) { return alpha * ent.fn(r, z); };
  auto forcing = [&](double r, double) { return rot.forcing_at(r); };
  double target = 0.0;
  if (cfg.str("variational.p") == "auto") {
    const ScalarField s0 = ScalarField::sample(g0, entropy);
    target = auto_target_p(g0, radii.front(), s0, rot.forcing(g0), eos);
  } else {
    target = cfg.number("variational.p");
  }

  Report rep(dir / "report.jsonl");
  rep.line(header(cfg));
  std::size_t stage = 0, previous = 0;
  std::vector<ContinuationStage> stages =
      domain_continuation(spacing, radii, target, entropy, forcing, eos, variational_config(cfg, radii.front()),
                          [&](std::size_t k, double e, double n, double step) {
                            if (k < previous) ++stage;
                            previous = k;
                            rep.line({{"type", "iteration"}, {"stage", stage}, {"iteration", k}, {"energy", e},
                                      {"constraint", n}, {"step", step}});
                          });
  json sm = summary(cfg);
  sm["spacing"] = spacing;
  sm["target_p"] = target;
  json arr = json::array();
  bool converged = true;
  for (std::size_t k = 0; k < stages.size(); ++k) {
    const ContinuationStage& st = stages[k];
    write_axifield(dir / ("stage_" + std::to_string(k) + ".axifield"), st.report.solution);
    json sj = variational_json(st.report);
    sj["radius"] = st.radius;
    sj["grid"] = grid_json(st.report.solution.grid());
    sj["tail_fraction"] = st.tail_fraction;
    sj["first_ball_difference"] = st.first_ball_difference;
    arr.push_back(sj);
    converged = converged && st.report.converged;
  }
  sm["stages"] = arr;
  if (stages.size() >= 2) {
    const double e1 = stages[stages.size() - 2].report.final_energy, e2 = stages.back().report.final_energy;
    sm["energy_drift"] = std::abs(e2 - e1) / std::abs(e1);
  }
  sm["converged"] = converged;
  rep.line(sm);
  const VariationalReport& last = stages.back().report;
  write_profiles(dir / "profiles.csv", {{"w", &last.solution}});
  std::cout << "continuation: " << stages.size() << " stages, tail fraction " << stages.back().tail_fraction << '\n';
  return converged ? kOk : kConvergence;
}

void defaults_inverse(Config& c) {
  c.set_default("inverse.mode", "smooth");
  c.set_default("grid.nr", "65");
}

json hypotheses_json(const HypothesisReport& h) {
  json j = {{"mode", h.mode == HypothesisMode::holder ? "holder" : "smooth"},
            {"verdict", h.verdict},
            {"h1", {{"holds", h.h1}, {"min_inside", h.h1_min_inside}}},
            {"h2", {{"holds", h.h2}, {"asymmetry", h.h2_asymmetry}}},
            {"h3", {{"holds", h.h3}, {"min", h.h3_min}, {"scale", h.h3_scale}, {"violations", h.h3_violations.size()}}},
            {"h4", {{"holds", h.h4}, {"min", h.h4_min}}},
            {"a", {{"holds", h.ha}, {"rho_zz_equator_max", h.ha_equator}}},
            {"a'", {{"holds", h.ha_prime}, {"rho_r_max", h.ha_prime_max}}},
            {"a''", {{"holds", h.ha_dprime}, {"bound", h.ha_dprime_bound}}},
            {"strip",
             {{"r_equator", h.strip.r_equator}, {"r_half_width", h.strip.r_half_width},
              {"z_half_width", h.strip.z_half_width}}}};
  if (h.mode == HypothesisMode::holder) {
    j["a_ratio"] = {{"holds", h.ha_ratio}, {"bound", h.ha_ratio_bound}};
    json h5 = json::array();
    for (const HolderStrip& s : h.h5) h5.push_back({{"eps", s.eps}, {"c", s.c}});
    j["h5"] = {{"holds", h.h5_ok}, {"strips", h5}};
  }
  json viol = json::array();
  for (std::size_t k = 0; k < std::min<std::size_t>(h.h3_violations.size(), 50); ++k)
    viol.push_back({h.h3_violations[k].first, h.h3_violations[k].second});
  j["h3"]["first_violations"] = viol;
  return j;
}

ScalarField masked_values(const MaskedField& m) {
  ScalarField out = m.values;
  for (std::size_t k = 0; k < out.size(); ++k)
    if (!m.valid[k]) out[k] = 0.0;
  return out;
}

int inverse(const Config& cfg, const fs::path& dir) {
  const std::string mode_name = cfg.str("inverse.mode");
  HypothesisMode mode;
  if (mode_name == "smooth") {
    mode = HypothesisMode::smooth;
  } else if (mode_name == "holder") {
    mode = HypothesisMode::holder;
  } else {
    throw ConfigError("inverse.mode must be smooth or holder, not '" + mode_name + "'");
  }
  const DensitySpec spec = DensitySpec::parse(cfg.str("inverse.density"));
  const GridSpec g = inverse_grid(spec, grid_nodes(cfg));

  Report rep(dir / "report.jsonl");
  rep.line(header(cfg));
  const InverseResult res = run_inverse(spec, g, mode);
  const ScalarField om = masked_values(res.omega2.omega2);
  write_axifield(dir / "density.axifield", res.rho);
  write_axifield(dir / "pressure.axifield", res.pressure.p);
  write_axifield(dir / "omega2.axifield", om);
  write_profiles(dir / "profiles.csv", {{"rho", &res.rho}, {"p", &res.pressure.p}, {"omega2", &om}});

  json hyp = hypotheses_json(res.hypotheses);
  hyp["config"] = cfg.to_json();
  hyp["seed"] = cfg.integer("run.seed");
  {
    std::ofstream out(dir / "hypotheses.json");
    out << hyp.dump(2) << '\n';
  }
  json sm = summary(cfg);
  sm["grid"] = grid_json(g);
  sm["density"] = spec.describe();
  sm["verdict"] = res.hypotheses.verdict;
  sm["omega2_min"] = res.omega2.min_value;
  sm["omega2_max"] = res.omega2.max_value;
  sm["omega2_negative_nodes"] = res.omega2.negative.size();
  sm["omega2_unresolved"] = res.omega2.unresolved;
  sm["pressure_warning"] = res.pressure.warning;
  sm["boundary_pressure_ratio"] = boundary_pressure_ratio(res.pressure.p, res.domain);
  sm["momentum_radial"] = res.momentum.radial;
  sm["momentum_axial"] = res.momentum.axial;
  sm["curl"] = res.curl;
  rep.line(sm);

  const std::vector<std::string> needed = mode == HypothesisMode::holder
                                              ? std::vector<std::string>{"h1", "h2", "h3", "h4", "a", "a'", "a''", "h5"}
                                              : std::vector<std::string>{"h1", "h2", "h3", "h4", "a", "a'", "a''"};
  std::vector<std::string> missing;
  for (const auto& n : needed)
    if (!res.hypotheses.holds(n)) missing.push_back(n);
  std::cout << "inverse: verdict";
  for (const auto& v : res.hypotheses.verdict) std::cout << ' ' << v;
  if (!missing.empty()) {
    std::cout << "; fails";
    for (const auto& v : missing) std::cout << ' ' << v;
  }
  std::cout << '\n';
  return missing.empty() ? kOk : kHypothesis;
}

void defaults_gravity(Config& c) {
  c.set_default("grid.nr", "129");
  c.set_default("grid.extent", "2");
}

int gravity_test(const Config& cfg, const fs::path& dir) {
  const GridSpec g = GridSpec::square(grid_nodes(cfg), cfg.number("grid.extent"));
  const ScalarField rho = ScalarField::sample(g, [](double r, double z) { return r * r + z * z <= 1.0 ? 1.0 : 0.0; });
  const PotentialResult pot = potential_axisym(rho);
  const double pi = std::acos(-1.0);
  std::ofstream csv(dir / "gravity.csv");
  csv << "r,z,potential,closed_form,rel_error\n" << std::setprecision(17);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.nr(); ++i)
    for (std::size_t j = 0; j < g.nz(); ++j) {
      const double s = std::hypot(g.r(i), g.z(j));
      const double exact = s <= 1.0 ? 2.0 * pi * (1.0 - s * s / 3.0) : 4.0 * pi / (3.0 * s);
      const double err = std::abs(pot.potential(i, j) - exact) / exact;
      worst = std::max(worst, err);
      csv << g.r(i) << ',' << g.z(j) << ',' << pot.potential(i, j) << ',' << exact << ',' << err << '\n';
    }
  Report rep(dir / "report.jsonl");
  rep.line(header(cfg));
  json sm = summary(cfg);
  sm["grid"] = grid_json(g);
  sm["source_mass"] = pot.source_mass;
  sm["max_rel_error"] = worst;
  sm["poisson_residual"] = poisson_residual(pot, rho);
  rep.line(sm);
  std::cout << "gravity-test: max relative error " << worst << '\n';
  return kOk;
}

int lane_emden(const Config& cfg, const fs::path& dir) {
  const PolytropeSolution sol = lane_emden_solve(cfg.number("lane_emden.n"));
  std::ofstream csv(dir / "lane_emden.csv");
  csv << "xi,theta\n" << std::setprecision(17);
  for (std::size_t k = 0; k < sol.xi.size(); ++k) csv << sol.xi[k] << ',' << sol.theta[k] << '\n';
  json out = {{"n", sol.n},
              {"xi1", sol.xi1},
              {"slope", sol.dtheta_at_xi1},
              {"mass_integral", sol.mass_integral},
              {"seed", cfg.integer("run.seed")},
              {"config", cfg.to_json()}};
  std::ofstream(dir / "lane_emden.json") << out.dump(2) << '\n';
  Report rep(dir / "report.jsonl");
  rep.line(header(cfg));
  json sm = summary(cfg);
  sm["xi1"] = sol.xi1;
  sm["slope"] = sol.dtheta_at_xi1;
  rep.line(sm);
  std::cout << std::setprecision(12) << "lane-emden: xi1 " << sol.xi1 << ", slope " << sol.dtheta_at_xi1 << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// verify: re-derives every applicable identity from the stored artifacts.

struct Check {
  std::string name;
  double value;
  double limit;
  bool pass;
};

class CheckTable {
 public:
  void add(const std::string& name, double value, double limit) { rows_.push_back({name, value, limit, value <= limit}); }
  void add_bool(const std::string& name, bool ok) { rows_.push_back({name, ok ? 0.0 : 1.0, 0.0, ok}); }
  bool all() const {
    for (const auto& r : rows_)
      if (!r.pass) return false;
    return !rows_.empty();
  }
  void print(std::ostream& os) const {
    os << std::left << std::setw(28) << "check" << std::setw(16) << "value" << std::setw(12) << "limit" << "result\n";
    for (const auto& r : rows_) {
      os << std::left << std::setw(28) << r.name << std::setw(16) << r.value << std::setw(12) << r.limit
         << (r.pass ? "PASS" : "FAIL") << '\n';
    }
  }

 private:
  std::vector<Check> rows_;
};

json read_summary(const fs::path& dir) {
  std::ifstream in(dir / "report.jsonl");
  if (!in) throw ConfigError((dir / "report.jsonl").string() + ": missing report");
  std::string line, last;
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  json j;
  try {
    j = json::parse(last);
  } catch (const json::exception& e) {
    throw ConfigError((dir / "report.jsonl").string() + ": unreadable summary: " + e.what());
  }
  if (!j.contains("type") || j["type"] != "summary" || !j.contains("config"))
    throw ConfigError((dir / "report.jsonl").string() + ": last line is not a summary");
  return j;
}

ScalarField load_field(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError(path.string() + ": missing artifact");
  return read_axifield(path);
}

double max_rel_diff(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a, b);
  const double scale = std::max(a.max_abs(), b.max_abs());
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return scale > 0.0 ? d / scale : d;
}

double z_asymmetry(const ScalarField& w) {
  const GridSpec& g = w.grid();
  double d = 0.0;
  for (std::size_t i = 0; i < g.nr(); ++i)
    for (std::size_t j = 0; j < g.nz(); ++j) d = std::max(d, std::abs(w(i, j) - w(i, g.mirror_j(j))));
  return d;
}

// Random sweep of 1 - l1^{q+1} - l2^{q+1} >= 2 l1 l2 with the recorded seed.
std::size_t inequality_violations(double q, unsigned long seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t bad = 0;
  for (int k = 0; k < 10000; ++k) {
    const double l1 = u(gen);
    if (!elementary_inequality_check(l1, 1.0 - l1, q)) ++bad;
  }
  return bad;
}

// Relative defect of E(theta w) = theta^2 T - theta^{q+1} U.
double homogeneity_defect(const ScalarField& w, const ScalarField& s, const EosParams& eos, const StarDomain& ball) {
  const EnergyParts base = energy_parts(w, s, eos, ball);
  double worst = 0.0;
  for (double theta : {0.5, 2.0, 3.0}) {
    const double e = energy(theta * w, s, eos, ball);
    const double pred = theta * theta * base.kinetic - std::pow(theta, eos.q + 1.0) * base.potential;
    const double scale = theta * theta * base.kinetic + std::pow(theta, eos.q + 1.0) * base.potential;
    worst = std::max(worst, std::abs(e - pred) / scale);
  }
  return worst;
}

void verify_ball_solution(const Config& cfg, const json& sm, const fs::path& dir, CheckTable& t, bool monotone) {
  const EosParams eos = derived_constants(cfg.number("eos.gamma"));
  const ScalarField w = load_field(dir / "solution.axifield");
  const ScalarField rho_file = load_field(dir / "density.axifield");
  const GridSpec& g = w.grid();
  const ScalarField s_phys = EntropyRule::parse(cfg.str("entropy.rule")).sample(g);
  const ScalarField s = effective_entropy(s_phys, eos);
  const RotationProfile rot = RotationProfile::parse(cfg.str("rotation.rule"));
  const ScalarField f = rot.forcing(g);
  const double radius = monotone ? sm.at("ball_radius").get<double>() : cfg.number("ball.radius");
  const StarDomain ball = StarDomain::ball(g, radius);

  t.add("density consistency", max_rel_diff(w_to_rho(w, s_phys, eos), rho_file), 1e-12);
  bool zero_outside = true, nonneg = true;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (!ball.contains(k) && w[k] != 0.0) zero_outside = false;
    if (w[k] < 0.0) nonneg = false;
  }
  t.add_bool("zero off the ball", zero_outside);
  t.add_bool("nonnegative", nonneg);
  t.add("z-evenness", z_asymmetry(w), 1e-10 * w.max_abs());
  if (monotone) {
    bool positive = true;
    for (std::size_t k = 0; k < w.size(); ++k)
      if (ball.contains(k) && !(w[k] > 0.0)) positive = false;
    t.add_bool("positive on the ball", positive);
    const double tol = cfg.number("tolerances.tol");
    t.add("equation residual", semilinear_residual(w, ball, s, f, eos), std::max(10.0 * tol, 1e-6));
  } else {
    const double p = sm.at("target_p").get<double>();
    t.add("constraint N(w) = P", std::abs(constraint(w, f, ball) - p) / p, 1e-8);
    const double lambda = multiplier(w, s, f, eos, ball);
    t.add_bool("lambda > 0", lambda > 0.0);
    t.add("Euler-Lagrange residual", el_residual(w, lambda, s, f, eos, ball), 0.05);
  }
  t.add("scaling identity", homogeneity_defect(w, s, eos, ball), 1e-12);
  t.add("poisson residual", poisson_residual(potential_axisym(rho_file), rho_file), 0.05);
  if (!monotone) {
    t.add("inequality violations", static_cast<double>(inequality_violations(eos.q, cfg.integer("run.seed"))), 0.0);
  }
}

void verify_inverse(const Config& cfg, const fs::path& dir, CheckTable& t) {
  const ScalarField rho = load_field(dir / "density.axifield");
  const ScalarField p = load_field(dir / "pressure.axifield");
  const ScalarField om = load_field(dir / "omega2.axifield");
  const GridSpec& g = rho.grid();
  const DensitySpec spec = DensitySpec::parse(cfg.str("inverse.density"));
  t.add("density consistency", max_rel_diff(spec.sample(g), rho), 1e-12);
  const StarDomain dom = spec.domain(g);
  const PotentialResult pot = potential_axisym(rho);
  MaskedField omega2{om, std::vector<unsigned char>(g.size(), 0)};
  const double floor = 1e-9 * rho.max();
  for (std::size_t k = 0; k < g.size(); ++k) omega2.valid[k] = rho[k] >= floor && rho[k] > 0.0;
  const MomentumResidual m = momentum_residual(rho, p, omega2, pot, dom);
  t.add("momentum radial", m.radial, 0.05);
  t.add("momentum axial", m.axial, 0.05);
  t.add("curl identity", curl_closure(p, rho, omega2, dom), 0.05);
  t.add("boundary pressure", boundary_pressure_ratio(p, dom), 1e-2);
  t.add("z-evenness", std::max(z_asymmetry(p), z_asymmetry(om)), 1e-12 * std::max(p.max_abs(), om.max_abs()));
  t.add("poisson residual", poisson_residual(pot, rho), 0.05);
}

int verify(const Config& cfg) {
  const fs::path dir = cfg.str("verify.dir");
  if (!fs::is_directory(dir)) throw ConfigError(dir.string() + ": not a directory");
  const json sm = read_summary(dir);
  const Config stored = Config::from_json(sm["config"]);
  const std::string command = stored.str("run.command");
  CheckTable t;
  if (command == "solve-monotone" || command == "solve-variational") {
    verify_ball_solution(stored, sm, dir, t, command == "solve-monotone");
  } else if (command == "inverse") {
    verify_inverse(stored, dir, t);
  } else {
    throw ConfigError(dir.string() + ": nothing to verify for '" + command + "' output");
  }
  t.print(std::cout);
  const bool ok = t.all();
  std::cout << (ok ? "verify: all checks pass" : "verify: some checks FAIL") << '\n';
  return ok ? kOk : kHypothesis;
}

// ---------------------------------------------------------------------------

struct Flag {
  std::string key;
  std::string value;
  CLI::App* owner = nullptr;
  CLI::Option* option = nullptr;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Axisymmetric rotating-star equilibria: forward solvers, inverse construction and checks"};
  app.require_subcommand(1);
  std::vector<std::unique_ptr<Flag>> flags;
  std::string config_path;

  auto flag = [&](CLI::App* sub, const std::string& name, const std::string& key, const std::string& help) {
    auto f = std::make_unique<Flag>();
    f->key = key;
    f->owner = sub;
    f->option = sub->add_option(name, f->value, help);
    flags.push_back(std::move(f));
  };
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "sectioned key = value file; flags override it");
    flag(sub, "--out", "run.output_dir", "output directory");
    flag(sub, "--seed", "run.seed", "seed for randomized sweeps");
  };
  auto solver = [&](CLI::App* sub) {
    common(sub);
    flag(sub, "--gamma", "eos.gamma", "adiabatic index");
    flag(sub, "--entropy", "entropy.rule", "constant:<v>, quadratic:<c> or file:<path>");
    flag(sub, "--omega2", "rotation.rule", "constant:<v>, rigid-squared:<v>, rational:<a>,<b> or file:<path>");
    flag(sub, "--nr", "grid.nr", "radial nodes");
  };

  CLI::App* mono = app.add_subcommand("solve-monotone", "sub/supersolution iteration, gamma > 2");
  solver(mono);
  flag(mono, "--extent", "grid.extent", "grid half-width");
  flag(mono, "--radius", "ball.radius", "ball radius or auto");
  flag(mono, "--tol", "tolerances.tol", "residual tolerance");
  flag(mono, "--max-iters", "tolerances.max_iters", "sweep limit");

  CLI::App* var = app.add_subcommand("solve-variational", "constrained minimization, 4/3 < gamma < 2");
  CLI::App* cont = app.add_subcommand("continuation", "variational solves on growing balls");
  for (CLI::App* sub : {var, cont}) {
    solver(sub);
    flag(sub, "--radius", "ball.radius", "ball radius (first radius for continuation)");
    flag(sub, "--p", "variational.p", "constraint value or auto");
    flag(sub, "--grad-tol", "tolerances.grad_tol", "projected gradient tolerance");
    flag(sub, "--max-iters", "tolerances.max_iters", "descent step limit");
  }
  flag(cont, "--radii", "variational.radii", "comma-separated radii");

  CLI::App* inv = app.add_subcommand("inverse", "pressure and Omega^2 from a prescribed density");
  common(inv);
  flag(inv, "--density", "inverse.density", "ellipsoid:a=..,b=..,power=.. or file:<path>");
  flag(inv, "--mode", "inverse.mode", "smooth or holder");
  flag(inv, "--nr", "grid.nr", "radial nodes");

  CLI::App* grav = app.add_subcommand("gravity-test", "uniform-ball potential against the shell theorem");
  common(grav);
  flag(grav, "--nr", "grid.nr", "radial nodes");
  flag(grav, "--extent", "grid.extent", "grid half-width");

  CLI::App* le = app.add_subcommand("lane-emden", "Lane-Emden polytrope");
  common(le);
  flag(le, "--n", "lane_emden.n", "polytropic index");

  CLI::App* ver = app.add_subcommand("verify", "re-check the identities of stored artifacts");
  ver->add_option("--config", config_path, "sectioned key = value file");
  flag(ver, "--dir", "verify.dir", "directory with a previous run");
  flag(ver, "--seed", "run.seed", "unused; kept for symmetry");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kMalformed;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string command = chosen->get_name();
  try {
    Config cfg = config_path.empty() ? Config{} : Config::load(config_path);
    cfg.set("run.command", command);
    for (const auto& f : flags)
      if (f->option->count() > 0 && f->owner == chosen) cfg.set(f->key, f->value);
    cfg.set_default("run.seed", "0");
    (void)cfg.integer("run.seed");
    if (command == "verify") return verify(cfg);

    cfg.set_default("run.output_dir", "rotstar-out");
    if (command == "solve-monotone") defaults_monotone(cfg);
    if (command == "solve-variational") defaults_variational(cfg);
    if (command == "continuation") defaults_continuation(cfg);
    if (command == "inverse") defaults_inverse(cfg);
    if (command == "gravity-test") defaults_gravity(cfg);

    const fs::path dir = cfg.str("run.output_dir");
    fs::create_directories(dir);
    if (command == "solve-monotone") return solve_monotone(cfg, dir);
    if (command == "solve-variational") return solve_variational(cfg, dir);
    if (command == "continuation") return continuation(cfg, dir);
    if (command == "inverse") return inverse(cfg, dir);
    if (command == "gravity-test") return gravity_test(cfg, dir);
    return lane_emden(cfg, dir);
  } catch (const ConfigError& e) {
    std::cerr << "rotstar: " << e.what() << '\n';
    return kMalformed;
  } catch (const HypothesisViolation& e) {
    std::cerr << "rotstar: hypothesis violated: " << e.what() << '\n';
    return kHypothesis;
  } catch (const ConvergenceError& e) {
    std::cerr << "rotstar: no convergence: " << e.what() << '\n';
    return kConvergence;
  } catch (const InternalError& e) {
    std::cerr << "rotstar: internal check failed: " << e.what() << '\n';
    return kConvergence;
  } catch (const std::exception& e) {
    std::cerr << "rotstar: " << e.what() << '\n';
    return kMalformed;
  }
}
