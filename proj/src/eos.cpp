#include "rotstar/eos.hpp"

#include <cmath>
#include <numbers>

namespace rotstar {

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::monotone: return "monotone";
    case Regime::variational: return "variational";
    case Regime::unsupported: break;
  }
  return "unsupported";
}

EosParams derived_constants(double gamma) {
  if (!(gamma > 1.0) || !std::isfinite(gamma)) throw DomainError("gamma must exceed 1");
  EosParams e{};
  e.gamma = gamma;
  e.q = 1.0 / (gamma - 1.0);
  e.alpha = 1.0 / gamma;
  e.kconst = 4.0 * std::numbers::pi * std::pow((gamma - 1.0) / gamma, e.q);
  if (e.q > 0.0 && e.q < 1.0) {
    e.regime = Regime::monotone;
  } else if (e.q > 1.0 && e.q < 3.0) {
    e.regime = Regime::variational;
  } else {
    e.regime = Regime::unsupported;
  }
  return e;
}

namespace {

template <class Fn>
ScalarField pointwise(const ScalarField& a, const ScalarField& s, const char* what, Fn fn) {
  require_same_grid(a, s);
  ScalarField out(a.grid(), Parity::even);
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] < 0.0) throw DomainError(std::string(what) + ": negative input");
    out[k] = fn(a[k], s[k]);
  }
  return out;
}

}  // namespace

ScalarField rho_to_w(const ScalarField& rho, const ScalarField& s, const EosParams& eos) {
  const double g = eos.gamma;
  return pointwise(rho, s, "rho_to_w", [g](double d, double sv) {
    if (d == 0.0) return 0.0;
    return g / (g - 1.0) * std::exp((g - 1.0) / g * sv) * std::pow(d, g - 1.0);
  });
}

ScalarField w_to_rho(const ScalarField& w, const ScalarField& s, const EosParams& eos) {
  const double g = eos.gamma;
  return pointwise(w, s, "w_to_rho", [g, &eos](double wv, double sv) {
    if (wv == 0.0) return 0.0;
    return std::pow((g - 1.0) / g * std::exp(-(g - 1.0) / g * sv) * wv, eos.q);
  });
}

ScalarField pressure_from_state(const ScalarField& rho, const ScalarField& s, const EosParams& eos) {
  const double g = eos.gamma;
  return pointwise(rho, s, "pressure_from_state", [g](double d, double sv) {
    if (d == 0.0) return 0.0;
    return std::exp(sv) * std::pow(d, g);
  });
}

ScalarField effective_entropy(const ScalarField& s, const EosParams& eos) {
  ScalarField out = s;
  out *= eos.alpha;
  return out;
}

ScalarField physical_entropy(const ScalarField& s_eff, const EosParams& eos) {
  ScalarField out = s_eff;
  out *= eos.gamma;
  return out;
}

}  // namespace rotstar
