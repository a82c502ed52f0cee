#pragma once

#include "wdl/grid/grid.hpp"

#include <iosfwd>
#include <string>

namespace wdl::grid {

// Plain CSV: header "x,y,value" (scalar, one row per node) or "x,y,vx,vy"
// (vector, one row per cell center); rows in row-major order, x fastest;
// numbers printed with 17 significant digits.
//
// Binary dump, little-endian throughout:
//   bytes 0-3   magic "WDL1"
//   uint32      kind: 0 = nodal scalar field, 1 = cell-centered vector field
//   uint32      cells per axis
//   uint32      components per sample (1 or 2)
//   float64     extent R of the square [-R, R]^2
//   float64[]   samples row-major, x fastest, components interleaved

void write_csv(std::ostream& os, const ScalarField& u);
void write_csv(std::ostream& os, const VectorField& F);
void write_csv(const std::string& path, const ScalarField& u);
void write_csv(const std::string& path, const VectorField& F);

/// Reads a scalar CSV written by write_csv; the grid is inferred from the
/// coordinates. Throws InvalidArgument on malformed input.
ScalarField read_scalar_csv(std::istream& is);
ScalarField read_scalar_csv(const std::string& path);

void write_binary(std::ostream& os, const ScalarField& u);
void write_binary(std::ostream& os, const VectorField& F);
void write_binary(const std::string& path, const ScalarField& u);

ScalarField read_scalar_binary(std::istream& is);
VectorField read_vector_binary(std::istream& is);
ScalarField read_scalar_binary(const std::string& path);

/// Dispatches on the extension: ".csv" or ".wdl"/".bin".
ScalarField read_scalar_field(const std::string& path);

} // namespace wdl::grid
