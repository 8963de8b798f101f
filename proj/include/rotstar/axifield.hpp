#pragma once

#include <filesystem>
#include <iosfwd>

#include "rotstar/grid.hpp"

namespace rotstar {

/// Writes the AXIFIELD v1 snapshot: one header line
///   AXIFIELD v1 nr=<int> nz=<int> rmax=<float> zmin=<float> zmax=<float> parity=<even|odd>
/// followed by nr*nz values in row-major order (z fastest), 17 significant digits.
void write_axifield(std::ostream& out, const ScalarField& field);
void write_axifield(const std::filesystem::path& path, const ScalarField& field);

/// Parses an AXIFIELD v1 snapshot. Throws DomainError on malformed input.
ScalarField read_axifield(std::istream& in);
ScalarField read_axifield(const std::filesystem::path& path);

}  // namespace rotstar
