#include "rotstar/grid.hpp"

#include <algorithm>
#include <cmath>

namespace rotstar {

GridSpec::GridSpec(std::size_t nr, std::size_t nz, double rmax, double zmax)
    : nr_(nr), nz_(nz), rmax_(rmax), zmax_(zmax) {
  if (nr < 8 || nz < 8) {
    throw DomainError("grid needs at least 8 nodes per direction");
  }
  if (!(rmax > 0.0) || !(zmax > 0.0) || !std::isfinite(rmax) || !std::isfinite(zmax)) {
    throw DomainError("grid extents must be positive and finite");
  }
  hr_ = rmax / static_cast<double>(nr - 1);
  hz_ = 2.0 * zmax / static_cast<double>(nz - 1);
}

std::string to_string(Parity parity) { return parity == Parity::even ? "even" : "odd"; }

Parity parse_parity(const std::string& text) {
  if (text == "even") return Parity::even;
  if (text == "odd") return Parity::odd;
  throw DomainError("unknown parity '" + text + "'");
}

ScalarField::ScalarField(GridSpec grid, Parity parity)
    : grid_(grid), values_(grid.size(), 0.0), parity_(parity) {}

ScalarField::ScalarField(GridSpec grid, std::vector<double> values, Parity parity)
    : grid_(grid), values_(std::move(values)), parity_(parity) {
  if (values_.size() != grid_.size()) {
    throw GridMismatchError("value count does not match grid size");
  }
}

ScalarField ScalarField::sample(const GridSpec& grid,
                                const std::function<double(double, double)>& fn, Parity parity) {
  ScalarField out(grid, parity);
  for (std::size_t i = 0; i < grid.nr(); ++i) {
    for (std::size_t j = 0; j < grid.nz(); ++j) {
      out(i, j) = fn(grid.r(i), grid.z(j));
    }
  }
  if (parity == Parity::odd) {
    for (std::size_t j = 0; j < grid.nz(); ++j) out(0, j) = 0.0;
  }
  return out;
}

double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }
double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }

double ScalarField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

void ScalarField::validate() const {
  for (double v : values_) {
    if (!std::isfinite(v)) throw DomainError("field contains a non-finite value");
  }
  if (parity_ == Parity::odd) {
    for (std::size_t j = 0; j < grid_.nz(); ++j) {
      if ((*this)(0, j) != 0.0) throw DomainError("odd field must vanish on the axis");
    }
  }
}

void require_same_grid(const ScalarField& a, const ScalarField& b) {
  if (!(a.grid() == b.grid())) throw GridMismatchError("fields live on different grids");
}

ScalarField& ScalarField::operator+=(const ScalarField& other) {
  require_same_grid(*this, other);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& other) {
  require_same_grid(*this, other);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
  return *this;
}

ScalarField& ScalarField::operator*=(double factor) {
  for (double& v : values_) v *= factor;
  return *this;
}

ScalarField ScalarField::hadamard(const ScalarField& other) const {
  require_same_grid(*this, other);
  Parity p = parity_ == other.parity_ ? Parity::even : Parity::odd;
  ScalarField out(grid_, p);
  for (std::size_t k = 0; k < values_.size(); ++k) out.values_[k] = values_[k] * other.values_[k];
  return out;
}

StarDomain::StarDomain(GridSpec grid, std::vector<double> boundary)
    : grid_(grid), boundary_(std::move(boundary)), mask_(grid.size(), 0) {
  if (boundary_.size() != grid_.nr()) {
    throw GridMismatchError("boundary needs one height per radial node");
  }
  for (double& psi : boundary_) {
    if (!std::isfinite(psi) || psi < 0.0) throw DomainError("boundary heights must be >= 0");
  }
  for (std::size_t i = 0; i < grid_.nr(); ++i) {
    for (std::size_t j = 0; j < grid_.nz(); ++j) {
      mask_[grid_.index(i, j)] = std::abs(grid_.z(j)) < boundary_[i] ? 1 : 0;
    }
  }
}

StarDomain StarDomain::from_field(const ScalarField& field, double threshold) {
  const GridSpec& g = field.grid();
  std::vector<double> psi(g.nr(), 0.0);
  for (std::size_t i = 0; i < g.nr(); ++i) {
    // First node from the bottom above the threshold; the crossing lies
    // between it and the node below.
    std::size_t first = g.nz();
    for (std::size_t j = 0; j < g.nz(); ++j) {
      if (field(i, j) > threshold) {
        first = j;
        break;
      }
    }
    if (first == g.nz()) continue;
    double zf = std::abs(g.z(first));
    if (first == 0) {
      psi[i] = zf;
      continue;
    }
    double above = field(i, first) - threshold;
    double below = field(i, first - 1) - threshold;
    double frac = above / (above - below);  // in (0, 1]
    psi[i] = zf + frac * g.hz();
  }
  return {g, std::move(psi)};
}

StarDomain StarDomain::ball(const GridSpec& grid, double radius) {
  std::vector<double> psi(grid.nr(), 0.0);
  for (std::size_t i = 0; i < grid.nr(); ++i) {
    double r = grid.r(i);
    if (r < radius) psi[i] = std::sqrt(radius * radius - r * r);
  }
  return {grid, std::move(psi)};
}

std::size_t StarDomain::count() const {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), 1));
}

bool StarDomain::interior(std::size_t i, std::size_t j, std::size_t layers) const {
  const auto n = static_cast<long>(layers);
  const auto nr = static_cast<long>(grid_.nr());
  const auto nz = static_cast<long>(grid_.nz());
  for (long di = -n; di <= n; ++di) {
    long ii = std::labs(static_cast<long>(i) + di);
    if (ii >= nr) return false;
    for (long dj = -n; dj <= n; ++dj) {
      long jj = static_cast<long>(j) + dj;
      if (jj < 0 || jj >= nz) return false;
      if (!contains(static_cast<std::size_t>(ii), static_cast<std::size_t>(jj))) return false;
    }
  }
  return true;
}

}  // namespace rotstar
