#include "rotstar/axifield.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace rotstar {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string header_value(const std::string& token, const std::string& key) {
  const std::string prefix = key + "=";
  if (token.rfind(prefix, 0) != 0) throw DomainError("AXIFIELD header: expected '" + key + "='");
  return token.substr(prefix.size());
}

double parse_double(const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw DomainError("AXIFIELD: bad number '" + text + "'");
  }
  if (used != text.size()) throw DomainError("AXIFIELD: bad number '" + text + "'");
  return v;
}

}  // namespace

void write_axifield(std::ostream& out, const ScalarField& field) {
  const GridSpec& g = field.grid();
  out << "AXIFIELD v1 nr=" << g.nr() << " nz=" << g.nz() << " rmax=" << format_double(g.rmax())
      << " zmin=" << format_double(g.zmin()) << " zmax=" << format_double(g.zmax())
      << " parity=" << to_string(field.parity()) << '\n';
  for (std::size_t i = 0; i < g.nr(); ++i) {
    for (std::size_t j = 0; j < g.nz(); ++j) {
      if (j) out << ' ';
      out << format_double(field(i, j));
    }
    out << '\n';
  }
}

void write_axifield(const std::filesystem::path& path, const ScalarField& field) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  write_axifield(out, field);
}

ScalarField read_axifield(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DomainError("AXIFIELD: empty input");
  std::istringstream hs(line);
  std::string magic, version, tnr, tnz, trmax, tzmin, tzmax, tpar;
  hs >> magic >> version >> tnr >> tnz >> trmax >> tzmin >> tzmax >> tpar;
  if (magic != "AXIFIELD" || version != "v1") throw DomainError("AXIFIELD: bad magic/version");
  const auto nr = static_cast<std::size_t>(std::stoul(header_value(tnr, "nr")));
  const auto nz = static_cast<std::size_t>(std::stoul(header_value(tnz, "nz")));
  const double rmax = parse_double(header_value(trmax, "rmax"));
  const double zmin = parse_double(header_value(tzmin, "zmin"));
  const double zmax = parse_double(header_value(tzmax, "zmax"));
  const Parity parity = parse_parity(header_value(tpar, "parity"));
  if (zmin != -zmax) throw DomainError("AXIFIELD: z range must be symmetric");

  GridSpec grid(nr, nz, rmax, zmax);
  std::vector<double> values;
  values.reserve(grid.size());
  std::string tok;
  while (in >> tok) values.push_back(parse_double(tok));
  if (values.size() != grid.size()) {
    throw DomainError("AXIFIELD: expected " + std::to_string(grid.size()) + " values, got " +
                      std::to_string(values.size()));
  }
  ScalarField field(grid, std::move(values), parity);
  field.validate();
  return field;
}

ScalarField read_axifield(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return read_axifield(in);
}

}  // namespace rotstar
