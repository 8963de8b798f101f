#pragma once

// Sparse form of the flux-form operator restricted to the nodes of a domain,
// with zero Dirichlet data outside. Shared by the two solvers.

#include <Eigen/Sparse>
#include <vector>

#include "rotstar/grid.hpp"
#include "rotstar/operators.hpp"

namespace rotstar::detail {

struct BallSystem {
  GridSpec grid;
  std::vector<std::size_t> nodes;  // grid index of each unknown
  std::vector<long> unknown;       // grid index -> unknown, -1 outside
  std::vector<double> volume;      // control volume of each unknown
  // -V L on the unknowns; symmetric positive definite.
  Eigen::SparseMatrix<double> stiffness;

  Eigen::VectorXd gather(const ScalarField& f) const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t n = 0; n < nodes.size(); ++n) v[static_cast<Eigen::Index>(n)] = f[nodes[n]];
    return v;
  }
  // Writes v into f at the unknowns; other nodes are left alone.
  void scatter(const Eigen::VectorXd& v, ScalarField& f) const {
    for (std::size_t n = 0; n < nodes.size(); ++n) f[nodes[n]] = v[static_cast<Eigen::Index>(n)];
  }
};

BallSystem assemble_ball_system(const StarDomain& domain, const ScalarField& weight);

}  // namespace rotstar::detail
