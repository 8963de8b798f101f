#include "ball_system.hpp"

#include <numbers>

namespace rotstar::detail {

BallSystem assemble_ball_system(const StarDomain& domain, const ScalarField& weight) {
  const GridSpec& g = domain.grid();
  if (!(weight.grid() == g)) throw GridMismatchError("assemble_ball_system: weight grid differs");
  for (double a : weight.values()) {
    if (!(a > 0.0)) throw DomainError("assemble_ball_system: weight must be positive");
  }
  const double two_pi = 2.0 * std::numbers::pi;
  const double hr = g.hr(), hz = g.hz();

  BallSystem sys{g, {}, std::vector<long>(g.size(), -1), {}, {}};
  for (std::size_t i = 0; i < g.nr(); ++i)
    for (std::size_t j = 0; j < g.nz(); ++j) {
      if (!domain.contains(i, j)) continue;
      if (i + 2 >= g.nr() || j < 2 || j + 2 >= g.nz()) {
        throw SupportViolation("solver domain reaches the outer two node layers");
      }
      sys.unknown[g.index(i, j)] = static_cast<long>(sys.nodes.size());
      sys.nodes.push_back(g.index(i, j));
      sys.volume.push_back(node_volume(g, i, j, Quadrature::control_volume));
    }

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(sys.nodes.size() * 5);
  std::vector<double> diag(sys.nodes.size(), 0.0);
  auto face = [&](std::size_t ka, std::size_t kb, double c) {
    const long ua = sys.unknown[ka], ub = sys.unknown[kb];
    if (ua >= 0) diag[static_cast<std::size_t>(ua)] += c;
    if (ub >= 0) diag[static_cast<std::size_t>(ub)] += c;
    if (ua >= 0 && ub >= 0) {
      trip.emplace_back(ua, ub, -c);
      trip.emplace_back(ub, ua, -c);
    }
  };
  for (std::size_t i = 0; i + 1 < g.nr(); ++i) {
    const double rface = g.r(i) + 0.5 * hr;
    for (std::size_t j = 0; j < g.nz(); ++j) {
      const std::size_t ka = g.index(i, j), kb = g.index(i + 1, j);
      if (sys.unknown[ka] < 0 && sys.unknown[kb] < 0) continue;
      const double a = 0.5 * (weight[ka] + weight[kb]);
      face(ka, kb, two_pi * rface * hz * a / hr);
    }
  }
  for (std::size_t i = 0; i < g.nr(); ++i) {
    const double ring = i == 0 ? two_pi * hr * hr / 8.0 : two_pi * g.r(i) * hr;
    for (std::size_t j = 0; j + 1 < g.nz(); ++j) {
      const std::size_t ka = g.index(i, j), kb = g.index(i, j + 1);
      if (sys.unknown[ka] < 0 && sys.unknown[kb] < 0) continue;
      const double a = 0.5 * (weight[ka] + weight[kb]);
      face(ka, kb, ring * a / hz);
    }
  }
  for (std::size_t n = 0; n < diag.size(); ++n) trip.emplace_back(n, n, diag[n]);
  const auto size = static_cast<Eigen::Index>(sys.nodes.size());
  sys.stiffness.resize(size, size);
  sys.stiffness.setFromTriplets(trip.begin(), trip.end());
  return sys;
}

}  // namespace rotstar::detail
