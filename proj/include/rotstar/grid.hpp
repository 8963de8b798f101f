#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rotstar/errors.hpp"

namespace rotstar {

/// Uniform tensor grid on the meridional half-plane r >= 0.
///
/// Radial nodes start at the axis, r_i = i * hr. Axial nodes are placed
/// symmetrically about the equator, z_j = (j - (nz - 1) / 2) * hz, so that
/// mirrored nodes carry bit-identical |z|.
class GridSpec {
 public:
  GridSpec(std::size_t nr, std::size_t nz, double rmax, double zmax);

  /// Square-cell grid on [0, extent] x [-extent, extent] with 2n - 1 axial
  /// nodes for n radial nodes.
  static GridSpec square(std::size_t nr, double extent) { return {nr, 2 * nr - 1, extent, extent}; }

  std::size_t nr() const { return nr_; }
  std::size_t nz() const { return nz_; }
  std::size_t size() const { return nr_ * nz_; }
  double rmax() const { return rmax_; }
  double zmin() const { return -zmax_; }
  double zmax() const { return zmax_; }
  double hr() const { return hr_; }
  double hz() const { return hz_; }

  double r(std::size_t i) const { return static_cast<double>(i) * hr_; }
  double z(std::size_t j) const {
    return (static_cast<double>(j) - 0.5 * static_cast<double>(nz_ - 1)) * hz_;
  }
  /// Row-major index, z varies fastest.
  std::size_t index(std::size_t i, std::size_t j) const { return i * nz_ + j; }
  /// Index of the node mirrored through the equator.
  std::size_t mirror_j(std::size_t j) const { return nz_ - 1 - j; }

  bool operator==(const GridSpec& other) const = default;

 private:
  std::size_t nr_;
  std::size_t nz_;
  double rmax_;
  double zmax_;
  double hr_;
  double hz_;
};

/// Behaviour of a field under the reflection r -> -r.
enum class Parity { even, odd };

std::string to_string(Parity parity);
Parity parse_parity(const std::string& text);

/// Axisymmetric scalar sampled on a GridSpec.
class ScalarField {
 public:
  explicit ScalarField(GridSpec grid, Parity parity = Parity::even);
  ScalarField(GridSpec grid, std::vector<double> values, Parity parity = Parity::even);

  /// Samples fn(r, z) at every node.
  static ScalarField sample(const GridSpec& grid, const std::function<double(double, double)>& fn,
                            Parity parity = Parity::even);
  static ScalarField constant(const GridSpec& grid, double value) {
    return {grid, std::vector<double>(grid.size(), value), Parity::even};
  }

  const GridSpec& grid() const { return grid_; }
  Parity parity() const { return parity_; }
  std::size_t size() const { return values_.size(); }

  double operator()(std::size_t i, std::size_t j) const { return values_[grid_.index(i, j)]; }
  double& operator()(std::size_t i, std::size_t j) { return values_[grid_.index(i, j)]; }
  double operator[](std::size_t k) const { return values_[k]; }
  double& operator[](std::size_t k) { return values_[k]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  double max() const;
  double min() const;
  double max_abs() const;

  /// Throws DomainError on NaN/Inf, or on a nonzero axis value of an odd field.
  void validate() const;

  ScalarField& operator+=(const ScalarField& other);
  ScalarField& operator-=(const ScalarField& other);
  ScalarField& operator*=(double factor);

  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(ScalarField a, double factor) { return a *= factor; }
  friend ScalarField operator*(double factor, ScalarField a) { return a *= factor; }

  /// Pointwise product; parity multiplies like signs.
  ScalarField hadamard(const ScalarField& other) const;

 private:
  GridSpec grid_;
  std::vector<double> values_;
  Parity parity_;
};

void require_same_grid(const ScalarField& a, const ScalarField& b);

/// Support region {|z| < psi(r)} of a star.
class StarDomain {
 public:
  /// Builds the mask from sampled boundary heights psi(r_i), one per radial node.
  StarDomain(GridSpec grid, std::vector<double> boundary);

  /// Domain of the positivity set of a z-even field; psi is located per
  /// column by linear interpolation of the zero level set.
  static StarDomain from_field(const ScalarField& field, double threshold = 0.0);
  /// Ball of the given radius centred at the origin.
  static StarDomain ball(const GridSpec& grid, double radius);

  const GridSpec& grid() const { return grid_; }
  std::span<const double> boundary() const { return boundary_; }
  double psi(std::size_t i) const { return boundary_[i]; }
  bool contains(std::size_t i, std::size_t j) const { return mask_[grid_.index(i, j)] != 0; }
  bool contains(std::size_t k) const { return mask_[k] != 0; }
  std::size_t count() const;

  /// True when node (i, j) is in the domain and so are all nodes within
  /// `layers` steps in r and z (radial neighbours below the axis are mirrored).
  bool interior(std::size_t i, std::size_t j, std::size_t layers) const;

 private:
  GridSpec grid_;
  std::vector<double> boundary_;
  std::vector<unsigned char> mask_;
};

}  // namespace rotstar
