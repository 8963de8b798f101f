#include "rotstar/rotation.hpp"

#include <cmath>
#include <sstream>

#include "rotstar/axifield.hpp"

namespace rotstar {

namespace {

double parse_number(const std::string& text, const std::string& rule) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw DomainError("bad number in rotation rule '" + rule + "'");
  }
  if (used != text.size() || !std::isfinite(v)) {
    throw DomainError("bad number in rotation rule '" + rule + "'");
  }
  return v;
}

}  // namespace

RotationProfile RotationProfile::constant(double omega2) {
  if (!(omega2 >= 0.0) || !std::isfinite(omega2)) throw DomainError("Omega^2 must be >= 0");
  RotationProfile p;
  p.kind_ = Kind::constant;
  p.a_ = omega2;
  return p;
}

RotationProfile RotationProfile::rational(double a, double b) {
  if (!(a >= 0.0) || !(b >= 0.0)) throw DomainError("rational rule needs a >= 0 and b >= 0");
  RotationProfile p;
  p.kind_ = Kind::radial_rule;
  p.a_ = a;
  p.b_ = b;
  return p;
}

RotationProfile RotationProfile::sampled(ScalarField omega2) {
  omega2.validate();
  if (omega2.min() < 0.0) throw DomainError("sampled Omega^2 must be >= 0");
  RotationProfile p;
  p.kind_ = Kind::sampled;
  p.samples_ = std::move(omega2);
  return p;
}

RotationProfile RotationProfile::parse(const std::string& rule) {
  const auto colon = rule.find(':');
  if (colon == std::string::npos) throw DomainError("rotation rule needs a kind: '" + rule + "'");
  const std::string kind = rule.substr(0, colon);
  const std::string arg = rule.substr(colon + 1);
  if (kind == "constant") {
    double omega = parse_number(arg, rule);
    return constant(omega * omega);
  }
  if (kind == "rigid-squared") return constant(parse_number(arg, rule));
  if (kind == "rational") {
    const auto comma = arg.find(',');
    if (comma == std::string::npos) throw DomainError("rational rule needs 'a,b'");
    return rational(parse_number(arg.substr(0, comma), rule),
                    parse_number(arg.substr(comma + 1), rule));
  }
  if (kind == "file") return sampled(read_axifield(std::filesystem::path(arg)));
  throw DomainError("unknown rotation rule '" + kind + "'");
}

bool RotationProfile::z_independent() const {
  if (kind_ != Kind::sampled) return true;
  const ScalarField& o = *samples_;
  const GridSpec& g = o.grid();
  const double tol = 1e-12 * std::max(1.0, o.max_abs());
  for (std::size_t i = 0; i < g.nr(); ++i)
    for (std::size_t j = 1; j < g.nz(); ++j)
      if (std::abs(o(i, j) - o(i, 0)) > tol) return false;
  return true;
}

ScalarField RotationProfile::omega2(const GridSpec& grid) const {
  if (kind_ == Kind::sampled) {
    if (!(samples_->grid() == grid)) throw GridMismatchError("sampled Omega^2 lives on another grid");
    return *samples_;
  }
  const double a = a_, b = b_;
  if (kind_ == Kind::constant) return ScalarField::constant(grid, a);
  return ScalarField::sample(grid, [a, b](double r, double) { return a / (1.0 + b * r * r); });
}

const ScalarField& RotationProfile::forcing(const GridSpec& grid) const {
  if (forcing_ && forcing_->grid() == grid) return *forcing_;
  switch (kind_) {
    case Kind::constant:
    case Kind::radial_rule:
      forcing_ = ScalarField::sample(grid, [this](double r, double) { return forcing_at(r); });
      break;
    case Kind::sampled: {
      ScalarField o = omega2(grid);
      ScalarField dr = gradient_rz(o).dr;
      ScalarField f(grid);
      for (std::size_t i = 0; i < grid.nr(); ++i)
        for (std::size_t j = 0; j < grid.nz(); ++j) f(i, j) = 2.0 * o(i, j) + grid.r(i) * dr(i, j);
      forcing_ = std::move(f);
      break;
    }
  }
  return *forcing_;
}

double RotationProfile::forcing_at(double r) const {
  if (kind_ == Kind::sampled) throw DomainError("forcing_at needs a rotation rule, not samples");
  if (kind_ == Kind::constant) return 2.0 * a_;
  const double d = 1.0 + b_ * r * r;
  return 2.0 * a_ / (d * d);
}

double RotationProfile::centrifugal_potential(double r) const {
  if (!z_independent()) throw HypothesisViolation("J(r) needs a z-independent Omega^2");
  switch (kind_) {
    case Kind::constant:
      return 0.5 * a_ * r * r;
    case Kind::radial_rule:
      if (b_ == 0.0) return 0.5 * a_ * r * r;
      return a_ / (2.0 * b_) * std::log1p(b_ * r * r);
    case Kind::sampled:
      break;
  }
  // Trapezoid along the first row, linear inside the last partial cell.
  const ScalarField& o = *samples_;
  const GridSpec& g = o.grid();
  const double h = g.hr();
  double acc = 0.0;
  std::size_t i = 0;
  for (; i + 1 < g.nr() && g.r(i + 1) <= r; ++i) {
    acc += 0.5 * h * (g.r(i) * o(i, 0) + g.r(i + 1) * o(i + 1, 0));
  }
  if (i + 1 < g.nr() && r > g.r(i)) {
    const double t = (r - g.r(i)) / h;
    const double ri = g.r(i), rv = r;
    const double fi = ri * o(i, 0);
    const double fr = rv * ((1.0 - t) * o(i, 0) + t * o(i + 1, 0));
    acc += 0.5 * (rv - ri) * (fi + fr);
  }
  return acc;
}

std::string RotationProfile::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::constant: os << "rigid-squared:" << a_; break;
    case Kind::radial_rule: os << "rational:" << a_ << ',' << b_; break;
    case Kind::sampled: os << "sampled"; break;
  }
  return os.str();
}

ScalarField forcing_from_rotation(const RotationProfile& profile, const GridSpec& grid) {
  return profile.forcing(grid);
}

MaskedField curl_theta_residual(const ScalarField& p, const ScalarField& rho,
                                const RotationProfile& profile) {
  return curl_theta_residual(p, rho, profile.omega2(p.grid()));
}

double bernoulli_residual(const ScalarField& rho, const ScalarField& potential,
                          const RotationProfile& profile, const EosParams& eos,
                          const StarDomain& domain, double entropy) {
  require_same_grid(rho, potential);
  if (!profile.z_independent()) {
    throw HypothesisViolation("Bernoulli relation needs Omega^2 independent of z");
  }
  const GridSpec& g = rho.grid();
  const double g1 = eos.gamma - 1.0;
  const double pref = eos.gamma / g1 * std::exp(entropy);
  std::vector<double> vals;
  for (std::size_t i = 0; i < g.nr(); ++i) {
    const double jr = profile.centrifugal_potential(g.r(i));
    for (std::size_t j = 0; j < g.nz(); ++j) {
      if (!domain.contains(i, j)) continue;
      const double d = rho(i, j);
      if (!(d > 0.0)) throw DomainError("bernoulli_residual: rho must be positive on the domain");
      const double v = pref * std::pow(d, g1) - potential(i, j) - jr;
      vals.push_back(v);
    }
  }
  if (vals.empty()) throw DegenerateError("bernoulli_residual: empty domain");
  const double n = static_cast<double>(vals.size());
  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : vals) var += (v - mean) * (v - mean);
  return std::sqrt(var / n);
}

}  // namespace rotstar
