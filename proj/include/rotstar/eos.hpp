#pragma once

#include <string>

#include "rotstar/grid.hpp"

namespace rotstar {

/// Which existence argument covers a given adiabatic index.
enum class Regime {
  monotone,     // 0 < q < 1, gamma > 2
  variational,  // 1 < q < 3, 4/3 < gamma < 2
  unsupported,
};

std::string to_string(Regime regime);

/// Polytropic law p = e^s rho^gamma with G = 1.
struct EosParams {
  double gamma;
  double q;       // 1 / (gamma - 1)
  double alpha;   // 1 / gamma
  double kconst;  // 4 pi ((gamma - 1) / gamma)^q
  Regime regime;
};

/// Throws DomainError for gamma <= 1.
EosParams derived_constants(double gamma);

/// w = gamma/(gamma-1) e^{(gamma-1)s/gamma} rho^{gamma-1}; s is the physical entropy.
ScalarField rho_to_w(const ScalarField& rho, const ScalarField& s, const EosParams& eos);
/// Inverse of rho_to_w.
ScalarField w_to_rho(const ScalarField& w, const ScalarField& s, const EosParams& eos);
/// p = e^s rho^gamma.
ScalarField pressure_from_state(const ScalarField& rho, const ScalarField& s, const EosParams& eos);

/// alpha * s, the entropy the solvers work with once alpha is absorbed.
ScalarField effective_entropy(const ScalarField& s, const EosParams& eos);
/// Physical entropy s_eff / alpha.
ScalarField physical_entropy(const ScalarField& s_eff, const EosParams& eos);

}  // namespace rotstar
