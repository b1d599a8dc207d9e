#pragma once

#include <string>
#include <vector>

#include "dynquant/atoms.hpp"
#include "dynquant/grid.hpp"
#include "dynquant/sdot.hpp"

namespace dynquant {

// Density CSV: ny lines of nx comma-separated decimals, row j = y-index j,
// x increasing within a line, no header.  Values round-trip exactly (%.17g).
void write_density_csv(const std::string& path, const Density& d);
Density read_density_csv(const std::string& path, const Grid& grid);

// 1D density CSV: a single line of values.
void write_density1d_csv(const std::string& path, const std::vector<double>& values);
std::vector<double> read_density1d_csv(const std::string& path);

// Atoms CSV, header "id,x,y,a,alive,psi,bx,by".  Dead atoms keep their last
// position, a = 0, alive = 0, and empty psi/bx/by fields.
void write_atoms_csv(const std::string& path, const AtomSet& atoms, const Tessellation* tess);
AtomSet read_atoms_csv(const std::string& path);

std::string format_double(double v);  // shortest-exact decimal text

}  // namespace dynquant
